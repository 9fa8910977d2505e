use std::cmp::Ordering;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::subspace::Frame;

use super::fiber::find_fiber_point;

/// Absolute slack of the point-in-polygon test.
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

/// Projection of `[−1, 1]^m` onto a two-dimensional frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope2D<T: Real> {
    /// Boundary vertices in counter-clockwise order.
    pub vertices: Vec<[T; 2]>,
    generators: Vec<[T; 2]>,
}

fn cross<T: Real>(a: [T; 2], b: [T; 2]) -> T {
    a[0] * b[1] - a[1] * b[0]
}

impl<T: Real> Zonotope2D<T> {
    /// Builds the zonotope from the rows of a frame basis.
    pub fn from_generators(rows: &[[T; 2]]) -> Self {
        let zero_tol = T::tolerance(1e-14);
        let mut gens: Vec<([T; 2], T)> = rows
            .iter()
            .filter(|g| g[0].abs().max(g[1].abs()) > zero_tol)
            .map(|&g| {
                let g = if g[1] < T::zero() || (g[1] == T::zero() && g[0] < T::zero()) {
                    [-g[0], -g[1]]
                } else {
                    g
                };
                (g, g[1].atan2(g[0]))
            })
            .collect();
        gens.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal));

        let angle_tol = T::tolerance(1e-12);
        let mut merged: Vec<([T; 2], T)> = Vec::with_capacity(gens.len());
        for (g, angle) in gens {
            match merged.last_mut() {
                Some((m, a)) if (angle - *a).abs() <= angle_tol => {
                    m[0] += g[0];
                    m[1] += g[1];
                }
                _ => merged.push((g, angle)),
            }
        }
        // Parallel generators at angles 0 and π both orient to angle 0 already.
        let generators: Vec<[T; 2]> = merged.into_iter().map(|(g, _)| g).collect();

        let two = T::lit(2.0);
        let mut v = [T::zero(), T::zero()];
        for g in &generators {
            v[0] -= g[0];
            v[1] -= g[1];
        }
        let mut vertices = vec![v];
        if !generators.is_empty() {
            for sign in [T::one(), -T::one()] {
                for g in &generators {
                    v[0] += sign * two * g[0];
                    v[1] += sign * two * g[1];
                    vertices.push(v);
                }
            }
            vertices.pop();
        }
        Self {
            vertices,
            generators,
        }
    }

    /// Generators after orientation and merging of parallel columns.
    pub fn generators(&self) -> &[[T; 2]] {
        &self.generators
    }

    /// `max_v vᵀd`, equal to `Σ_j |g_jᵀd|`.
    pub fn support(&self, d: [T; 2]) -> T {
        self.vertices
            .iter()
            .map(|v| v[0] * d[0] + v[1] * d[1])
            .fold(T::lit(f64::NEG_INFINITY), |a, b| a.max(b))
    }

    pub fn contains(&self, y: [T; 2]) -> bool {
        self.contains_with_slack(y, T::lit(MEMBERSHIP_SLACK))
    }

    pub fn contains_with_slack(&self, y: [T; 2], slack: T) -> bool {
        match self.vertices.len() {
            1 => {
                let v = self.vertices[0];
                (y[0] - v[0]).hypot(y[1] - v[1]) <= slack
            }
            2 => {
                let (a, b) = (self.vertices[0], self.vertices[1]);
                let e = [b[0] - a[0], b[1] - a[1]];
                let w = [y[0] - a[0], y[1] - a[1]];
                let len2 = e[0] * e[0] + e[1] * e[1];
                let s = ((w[0] * e[0] + w[1] * e[1]) / len2)
                    .max(T::zero())
                    .min(T::one());
                (w[0] - s * e[0]).hypot(w[1] - s * e[1]) <= slack
            }
            n => (0..n).all(|i| {
                let a = self.vertices[i];
                let b = self.vertices[(i + 1) % n];
                let e = [b[0] - a[0], b[1] - a[1]];
                let w = [y[0] - a[0], y[1] - a[1]];
                cross(e, w) >= -slack * e[0].hypot(e[1])
            }),
        }
    }
}

/// Zonotope of a rank-2 frame.
pub fn project_domain_2d<T: Real>(frame: &Frame<T>) -> Result<Zonotope2D<T>> {
    if frame.rank() != 2 {
        return Err(Error::Argument(format!(
            "projected polygon needs a rank-2 frame, got rank {}",
            frame.rank()
        )));
    }
    let u = frame.basis();
    let rows: Vec<[T; 2]> = (0..u.nrows()).map(|i| [u[(i, 0)], u[(i, 1)]]).collect();
    Ok(Zonotope2D::from_generators(&rows))
}

/// Image `Uᵀ[−1, 1]^m` of the scaled box in active coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum ProjectedDomain<T: Real> {
    /// `r = 1`: `|y| ≤ Σ|u_i|`.
    Interval {
        half_width: T,
    },
    Polygon(Zonotope2D<T>),
    /// `r ≥ 3`: membership decided by searching for a feasible preimage.
    Fiber(Frame<T>),
}

impl<T: Real> ProjectedDomain<T> {
    pub fn for_frame(frame: &Frame<T>) -> Self {
        match frame.rank() {
            1 => Self::Interval {
                half_width: frame
                    .basis()
                    .column(0)
                    .iter()
                    .map(|v| v.abs())
                    .fold(T::zero(), |a, b| a + b),
            },
            2 => Self::Polygon(project_domain_2d(frame).expect("rank checked")),
            _ => Self::Fiber(frame.clone()),
        }
    }

    pub fn contains(&self, y: &DVector<T>) -> bool {
        match self {
            Self::Interval { half_width } => {
                y.len() == 1 && y[0].abs() <= *half_width + T::lit(MEMBERSHIP_SLACK)
            }
            Self::Polygon(z) => y.len() == 2 && z.contains([y[0], y[1]]),
            Self::Fiber(frame) => y.len() == frame.rank() && find_fiber_point(frame, y).is_ok(),
        }
    }
}
