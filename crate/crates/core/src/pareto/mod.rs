//! Pareto tracing over active coordinates.
//!
//! Objectives are maximized throughout. For `t ∈ [0, 1]` the scalarization is
//! `J_t = (1 − t) S_W + t S_L`; its stationary points form the trace, which
//! starts at the Wi-Fi maximizer (`t = 0`) and ends at the LAA maximizer.

mod fiber;
mod front;
mod zonotope;

pub use fiber::{evaluate_trace_objectives, find_fiber_point, sample_inactive_fiber, FrontRow};
pub use front::{non_dominated, non_dominated_brute_force, FrontSample};
pub use zonotope::{project_domain_2d, ProjectedDomain, Zonotope2D, MEMBERSHIP_SLACK};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::spd_solve;
use crate::scalar::Real;
use crate::subspace::{Frame, QuadraticSurrogate};

/// Hessian condition estimate above which continuation aborts.
pub const MAX_CONDITION: f64 = 1e12;

/// Twice-differentiable profile `S(y)` over active coordinates.
pub trait SmoothProfile<T: Real>: Sync {
    fn value(&self, y: &DVector<T>) -> T;
    fn gradient(&self, y: &DVector<T>) -> DVector<T>;
    fn hessian(&self, y: &DVector<T>) -> DMatrix<T>;
}

impl<T: Real> SmoothProfile<T> for QuadraticSurrogate<T> {
    fn value(&self, y: &DVector<T>) -> T {
        QuadraticSurrogate::value(self, y)
    }
    fn gradient(&self, y: &DVector<T>) -> DVector<T> {
        QuadraticSurrogate::gradient(self, y)
    }
    fn hessian(&self, _y: &DVector<T>) -> DMatrix<T> {
        QuadraticSurrogate::hessian(self)
    }
}

/// Surrogate of `−J_t`: `t·L + (1 − t)·W` coefficient-wise.
pub fn scalarize<T: Real>(
    laa: &QuadraticSurrogate<T>,
    wifi: &QuadraticSurrogate<T>,
    t: T,
) -> QuadraticSurrogate<T> {
    let u = T::one() - t;
    QuadraticSurrogate {
        q: &laa.q * t + &wifi.q * u,
        a: &laa.a * t + &wifi.a * u,
        c: laa.c * t + wifi.c * u,
        convexified: laa.convexified || wifi.convexified,
    }
}

/// `n + 1` equally spaced points `0, 1/n, …, 1`.
pub fn uniform_grid<T: Real>(n: usize) -> Vec<T> {
    let nn = T::from_usize_lossy(n.max(1));
    (0..=n.max(1))
        .map(|i| T::from_usize_lossy(i) / nn)
        .collect()
}

fn check_grid<T: Real>(ts: &[T]) -> Result<()> {
    let ok = ts.len() >= 2
        && ts[0] == T::zero()
        && ts[ts.len() - 1] == T::one()
        && ts.windows(2).all(|w| w[1] > w[0]);
    if ok {
        Ok(())
    } else {
        Err(Error::Argument(
            "trace grid must be strictly increasing from 0 to 1".into(),
        ))
    }
}

/// Closed-form stationary point of `J_t` for convex quadratics:
/// `y(t) = ½ [tQ_L + (1−t)Q_W]⁻¹ [(t−1) a_W − t a_L]`.
pub fn quadratic_trace_point<T: Real>(
    laa: &QuadraticSurrogate<T>,
    wifi: &QuadraticSurrogate<T>,
    t: T,
) -> Result<DVector<T>> {
    let combined = scalarize(laa, wifi, t);
    let rhs = (&wifi.a * (t - T::one()) - &laa.a * t) * T::lit(0.5);
    spd_solve(&combined.q, &rhs)
        .filter(|s| s.condition <= T::lit(MAX_CONDITION))
        .map(|s| s.x)
        .ok_or(Error::SingularScalarization {
            t: t.to_f64_lossy(),
        })
}

/// Points of a trace in active coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePath<T: Real> {
    pub ts: Vec<T>,
    pub ys: Vec<DVector<T>>,
}

/// Trace points with preimages, domain flags, and surrogate values.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoTrace<T: Real> {
    pub ts: Vec<T>,
    pub ys: Vec<DVector<T>>,
    /// Minimum-norm preimages `U y` in scaled coordinates.
    pub thetas: Vec<DVector<T>>,
    pub in_domain: Vec<bool>,
    pub s_l: Vec<T>,
    pub s_w: Vec<T>,
}

impl<T: Real> ParetoTrace<T> {
    pub fn from_path<L, W>(
        path: TracePath<T>,
        frame: &Frame<T>,
        domain: &ProjectedDomain<T>,
        laa: &L,
        wifi: &W,
    ) -> Self
    where
        L: SmoothProfile<T> + ?Sized,
        W: SmoothProfile<T> + ?Sized,
    {
        let thetas = path.ys.iter().map(|y| frame.basis() * y).collect();
        let in_domain = path.ys.iter().map(|y| domain.contains(y)).collect();
        let s_l = path.ys.iter().map(|y| laa.value(y)).collect();
        let s_w = path.ys.iter().map(|y| wifi.value(y)).collect();
        Self {
            ts: path.ts,
            ys: path.ys,
            thetas,
            in_domain,
            s_l,
            s_w,
        }
    }

    pub fn len(&self) -> usize {
        self.ts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ts.is_empty()
    }
}

/// Closed-form trace of two convex quadratic surrogates on a grid `ts`.
pub fn quadratic_path<T: Real>(
    laa: &QuadraticSurrogate<T>,
    wifi: &QuadraticSurrogate<T>,
    ts: &[T],
) -> Result<TracePath<T>> {
    check_grid(ts)?;
    if laa.dim() != wifi.dim() {
        return Err(Error::Argument(
            "surrogates have different dimensions".into(),
        ));
    }
    let ys = ts
        .iter()
        .map(|&t| quadratic_trace_point(laa, wifi, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(TracePath {
        ts: ts.to_vec(),
        ys,
    })
}

/// [`quadratic_path`] decorated with preimages and domain membership for `frame`.
pub fn quadratic_trace<T: Real>(
    laa: &QuadraticSurrogate<T>,
    wifi: &QuadraticSurrogate<T>,
    ts: &[T],
    frame: &Frame<T>,
) -> Result<ParetoTrace<T>> {
    let path = quadratic_path(laa, wifi, ts)?;
    let domain = ProjectedDomain::for_frame(frame);
    Ok(ParetoTrace::from_path(path, frame, &domain, laa, wifi))
}

/// `ẏ` from `∇²J_t(y) ẏ = ∇S_W(y) − ∇S_L(y)`.
fn trace_velocity<T: Real, L, W>(laa: &L, wifi: &W, t: T, y: &DVector<T>) -> Result<DVector<T>>
where
    L: SmoothProfile<T> + ?Sized,
    W: SmoothProfile<T> + ?Sized,
{
    let hess = wifi.hessian(y) * (T::one() - t) + laa.hessian(y) * t;
    let rhs = wifi.gradient(y) - laa.gradient(y);
    // ∇²J_t is negative definite along a Pareto-optimal path; factor its negation.
    let neg = -hess;
    let fail = |condition: f64| Error::ContinuationFailure {
        t: t.to_f64_lossy(),
        condition,
    };
    let solved = spd_solve(&neg, &rhs).ok_or_else(|| fail(f64::INFINITY))?;
    if solved.condition > T::lit(MAX_CONDITION) {
        return Err(fail(solved.condition.to_f64_lossy()));
    }
    Ok(-solved.x)
}

/// Integrates the trace ODE from `t = 0` to `1` with `steps` classical RK4 steps.
///
/// `y0` must be stationary for `J_0 = S_W`.
pub fn ode_trace<T: Real, L, W>(
    laa: &L,
    wifi: &W,
    y0: &DVector<T>,
    steps: usize,
) -> Result<TracePath<T>>
where
    L: SmoothProfile<T> + ?Sized,
    W: SmoothProfile<T> + ?Sized,
{
    if steps == 0 {
        return Err(Error::Argument("ODE trace needs at least one step".into()));
    }
    let g0 = wifi.gradient(y0).norm();
    if !(g0 < T::tolerance(1e-8)) {
        return Err(Error::Argument(format!(
            "initial point is not stationary for J_0 (gradient norm {g0})"
        )));
    }
    let ts: Vec<T> = uniform_grid(steps);
    let h = T::one() / T::from_usize_lossy(steps);
    let half = h * T::lit(0.5);
    let sixth = h / T::lit(6.0);
    let two = T::lit(2.0);
    let mut ys = Vec::with_capacity(steps + 1);
    let mut y = y0.clone();
    ys.push(y.clone());
    for &t in &ts[..steps] {
        let k1 = trace_velocity(laa, wifi, t, &y)?;
        let k2 = trace_velocity(laa, wifi, t + half, &(&y + &k1 * half))?;
        let k3 = trace_velocity(laa, wifi, t + half, &(&y + &k2 * half))?;
        let k4 = trace_velocity(laa, wifi, t + h, &(&y + &k3 * h))?;
        y += (k1 + k2 * two + k3 * two + k4) * sixth;
        ys.push(y.clone());
    }
    Ok(TracePath { ts, ys })
}

/// `∇J_t(y) = t ∇S_L(y) + (1 − t) ∇S_W(y)`.
pub fn scalarized_gradient<T: Real, L, W>(laa: &L, wifi: &W, t: T, y: &DVector<T>) -> DVector<T>
where
    L: SmoothProfile<T> + ?Sized,
    W: SmoothProfile<T> + ?Sized,
{
    laa.gradient(y) * t + wifi.gradient(y) * (T::one() - t)
}
