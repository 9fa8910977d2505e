//! Analytic objective pairs with planted structure, used as test oracles.
//!
//! Every objective acts on scaled coordinates `x ∈ [−1, 1]^m` and carries an
//! exact gradient. Planted frames and directions are drawn from a fixed seed,
//! so a given `(name, m)` always yields the same pair.

use std::f64::consts::FRAC_PI_8;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::objective::ScaledFn;
use crate::pareto::SmoothProfile;
use crate::scalar::Real;
use crate::subspace::{Frame, QuadraticSurrogate};

/// Seed of the planted frames and directions.
pub const PLANT_SEED: u64 = 0x5eed;

/// Names accepted by [`synthetic_pair`].
pub const CATALOG: [&str; 5] = ["ridge", "quadratic", "mirror", "quartic", "isotropic"];

/// Angle of the mirror pair's directions from the first two axes.
pub const MIRROR_ANGLE: f64 = FRAC_PI_8;

/// A pair of analytic objectives and what was planted in them.
pub struct SyntheticPair<T: Real> {
    pub name: String,
    pub dim: usize,
    pub laa: ScaledFn<T>,
    pub wifi: ScaledFn<T>,
    /// Active frame shared by both objectives, when they are exact ridges over one.
    pub shared_frame: Option<Frame<T>>,
    /// Ridge directions for the rank-1 pairs.
    pub directions: Option<(DVector<T>, DVector<T>)>,
    /// Planted profiles of the quadratic pair over `shared_frame` coordinates.
    pub quadratics: Option<(QuadraticSurrogate<T>, QuadraticSurrogate<T>)>,
    /// Planted profiles of the quartic pair over `shared_frame` coordinates.
    pub quartics: Option<(QuarticProfile<T>, QuarticProfile<T>)>,
}

/// `S(y) = −(ρ⁴ + ρ²)` with `ρ = ‖y − center‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarticProfile<T: Real> {
    pub center: DVector<T>,
}

impl<T: Real> QuarticProfile<T> {
    pub fn maximizer(&self) -> &DVector<T> {
        &self.center
    }
}

impl<T: Real> SmoothProfile<T> for QuarticProfile<T> {
    fn value(&self, y: &DVector<T>) -> T {
        let r2 = (y - &self.center).norm_squared();
        -(r2 * r2 + r2)
    }

    fn gradient(&self, y: &DVector<T>) -> DVector<T> {
        let d = y - &self.center;
        let r2 = d.norm_squared();
        d * -(T::lit(4.0) * r2 + T::lit(2.0))
    }

    fn hessian(&self, y: &DVector<T>) -> DMatrix<T> {
        let d = y - &self.center;
        let r2 = d.norm_squared();
        let n = d.len();
        -(DMatrix::identity(n, n) * (T::lit(4.0) * r2 + T::lit(2.0))
            + &d * d.transpose() * T::lit(8.0))
    }
}

fn gaussian_matrix<T: Real>(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<T> {
    DMatrix::from_fn(rows, cols, |_, _| T::lit(StandardNormal.sample(rng)))
}

/// Seeded orthonormal `m × r` frame.
pub fn planted_frame<T: Real>(m: usize, r: usize, seed: u64) -> Result<Frame<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Frame::orthonormalized(gaussian_matrix(m, r, &mut rng))
}

fn planted_direction<T: Real>(m: usize, rng: &mut ChaCha8Rng) -> DVector<T> {
    let v: DVector<T> = gaussian_matrix(m, 1, rng).column(0).into_owned();
    let n = v.norm();
    v / n
}

fn need_dim(name: &str, m: usize, min: usize) -> Result<()> {
    if m < min {
        return Err(Error::Argument(format!(
            "synthetic `{name}` needs m >= {min}, got {m}"
        )));
    }
    Ok(())
}

/// Ridge `h(wᵀx)` with `h(z) = sin(2z) + z²`.
fn ridge_fn<T: Real>(name: &str, w: DVector<T>) -> ScaledFn<T> {
    let wg = w.clone();
    let two = T::lit(2.0);
    ScaledFn::new(name, move |x: &DVector<T>| {
        let z = w.dot(x);
        (two * z).sin() + z * z
    })
    .with_gradient(move |x: &DVector<T>| {
        let z = wg.dot(x);
        &wg * (two * (two * z).cos() + two * z)
    })
}

/// Ridge `(wᵀx)²`.
fn mirror_fn<T: Real>(name: &str, w: DVector<T>) -> ScaledFn<T> {
    let wg = w.clone();
    ScaledFn::new(name, move |x: &DVector<T>| {
        let z = w.dot(x);
        z * z
    })
    .with_gradient(move |x: &DVector<T>| {
        let z = wg.dot(x);
        &wg * (T::lit(2.0) * z)
    })
}

/// `S(x) = −(yᵀQy + aᵀy + c)` with `y = Uᵀx`.
fn quadratic_fn<T: Real>(name: &str, u: DMatrix<T>, s: QuadraticSurrogate<T>) -> ScaledFn<T> {
    let (ug, sg) = (u.clone(), s.clone());
    ScaledFn::new(name, move |x: &DVector<T>| s.value(&(u.transpose() * x)))
        .with_gradient(move |x: &DVector<T>| &ug * sg.gradient(&(ug.transpose() * x)))
}

fn quartic_fn<T: Real>(name: &str, u: DMatrix<T>, p: QuarticProfile<T>) -> ScaledFn<T> {
    let (ug, pg) = (u.clone(), p.clone());
    ScaledFn::new(name, move |x: &DVector<T>| p.value(&(u.transpose() * x)))
        .with_gradient(move |x: &DVector<T>| &ug * pg.gradient(&(ug.transpose() * x)))
}

fn mat2<T: Real>(v: [f64; 4]) -> DMatrix<T> {
    DMatrix::from_row_slice(2, 2, &v.map(T::lit))
}

fn vec2<T: Real>(v: [f64; 2]) -> DVector<T> {
    DVector::from_row_slice(&v.map(T::lit))
}

/// Planted quadratic surrogates `(L, W)` in the `−S` convention.
pub fn planted_quadratics<T: Real>() -> (QuadraticSurrogate<T>, QuadraticSurrogate<T>) {
    let laa = QuadraticSurrogate::new(mat2([2.0, 0.3, 0.3, 1.0]), vec2([-0.8, 0.4]), T::lit(-1.0));
    let wifi =
        QuadraticSurrogate::new(mat2([1.0, -0.2, -0.2, 1.5]), vec2([0.6, 0.3]), T::lit(-0.5));
    (
        laa.expect("valid planted surrogate"),
        wifi.expect("valid planted surrogate"),
    )
}

/// Builds the named pair in dimension `m`.
pub fn synthetic_pair<T: Real>(name: &str, m: usize) -> Result<SyntheticPair<T>> {
    let mut pair = SyntheticPair {
        name: name.into(),
        dim: m,
        laa: ScaledFn::new("L", |_: &DVector<T>| T::zero()),
        wifi: ScaledFn::new("W", |_: &DVector<T>| T::zero()),
        shared_frame: None,
        directions: None,
        quadratics: None,
        quartics: None,
    };
    match name {
        "ridge" => {
            need_dim(name, m, 1)?;
            let mut rng = ChaCha8Rng::seed_from_u64(PLANT_SEED);
            let w_l = planted_direction::<T>(m, &mut rng);
            let w_w = planted_direction::<T>(m, &mut rng);
            pair.laa = ridge_fn("L", w_l.clone());
            pair.wifi = ridge_fn("W", w_w.clone());
            pair.directions = Some((w_l, w_w));
        }
        "mirror" => {
            need_dim(name, m, 2)?;
            let (s, c) = MIRROR_ANGLE.sin_cos();
            let mut w_l = DVector::zeros(m);
            let mut w_w = DVector::zeros(m);
            w_l[0] = T::lit(s);
            w_l[1] = T::lit(c);
            w_w[0] = T::lit(c);
            w_w[1] = T::lit(s);
            pair.laa = mirror_fn("L", w_l.clone());
            pair.wifi = mirror_fn("W", w_w.clone());
            pair.directions = Some((w_l, w_w));
        }
        "quadratic" => {
            need_dim(name, m, 2)?;
            let frame = planted_frame::<T>(m, 2, PLANT_SEED)?;
            let (l, w) = planted_quadratics::<T>();
            pair.laa = quadratic_fn("L", frame.basis().clone(), l.clone());
            pair.wifi = quadratic_fn("W", frame.basis().clone(), w.clone());
            pair.shared_frame = Some(frame);
            pair.quadratics = Some((l, w));
        }
        "quartic" => {
            need_dim(name, m, 2)?;
            let frame = planted_frame::<T>(m, 2, PLANT_SEED)?;
            let l = QuarticProfile {
                center: vec2([0.3, -0.2]),
            };
            let w = QuarticProfile {
                center: vec2([-0.25, 0.35]),
            };
            pair.laa = quartic_fn("L", frame.basis().clone(), l.clone());
            pair.wifi = quartic_fn("W", frame.basis().clone(), w.clone());
            pair.shared_frame = Some(frame);
            pair.quartics = Some((l, w));
        }
        "isotropic" => {
            need_dim(name, m, 1)?;
            let half = T::lit(0.5);
            let iso = |n: &str| {
                ScaledFn::new(n, move |x: &DVector<T>| x.norm_squared() * half)
                    .with_gradient(|x: &DVector<T>| x.clone())
            };
            pair.laa = iso("L");
            pair.wifi = iso("W");
        }
        _ => {
            return Err(Error::Argument(format!(
                "unknown synthetic objective `{name}`; expected one of {}",
                CATALOG.join(", ")
            )))
        }
    }
    Ok(pair)
}

/// Appends to `points` a copy with the first two coordinates swapped.
///
/// The swap exchanges the two mirror directions, so mixing statistics on the
/// augmented sample are symmetric about `s = 1/2`.
pub fn mirror_augmented<T: Real>(points: &DMatrix<T>) -> DMatrix<T> {
    let (n, m) = points.shape();
    let mut out = DMatrix::zeros(2 * n, m);
    out.rows_mut(0, n).copy_from(points);
    let mut swapped = points.clone();
    if m >= 2 {
        swapped.swap_columns(0, 1);
    }
    out.rows_mut(n, n).copy_from(&swapped);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradients::fd_gradient;
    use crate::objective::{GradientObjective, ScaledObjective};

    #[test]
    fn catalog_builds_in_17_dims() {
        for name in CATALOG {
            let pair = synthetic_pair::<f64>(name, 17).unwrap();
            assert_eq!(pair.laa.name(), "L");
            assert_eq!(pair.wifi.name(), "W");
        }
        assert!(synthetic_pair::<f64>("nope", 3).is_err());
        assert!(synthetic_pair::<f64>("quadratic", 1).is_err());
    }

    #[test]
    fn gradients_match_finite_differences() {
        let x = DVector::from_fn(5, |i, _| 0.1 * i as f64 - 0.15);
        for name in CATALOG {
            let pair = synthetic_pair::<f64>(name, 5).unwrap();
            for obj in [&pair.laa, &pair.wifi] {
                let fd = fd_gradient(obj, &x, 1e-6).unwrap();
                let g = obj.gradient(&x);
                assert!((fd - g).amax() < 1e-4, "{name}");
            }
        }
    }

    #[test]
    fn quartic_profile_derivatives() {
        let p = QuarticProfile::<f64> {
            center: DVector::from_vec(vec![0.3, -0.2]),
        };
        let y = DVector::from_vec(vec![-0.1, 0.4]);
        let h = 1e-6;
        for i in 0..2 {
            let mut yp = y.clone();
            yp[i] += h;
            let slope = (p.value(&yp) - p.value(&y)) / h;
            assert!((slope - p.gradient(&y)[i]).abs() < 1e-4);
            let dg = (p.gradient(&yp) - p.gradient(&y)) / h;
            assert!((dg - p.hessian(&y).column(i)).amax() < 1e-4);
        }
        assert_eq!(p.gradient(&p.center).amax(), 0.0);
    }

    #[test]
    fn mirror_augmentation_swaps() {
        let p = DMatrix::from_row_slice(1, 3, &[0.1, 0.2, 0.3]);
        let a = mirror_augmented(&p);
        assert_eq!(
            a.row(1).iter().copied().collect::<Vec<_>>(),
            vec![0.2, 0.1, 0.3]
        );
    }
}
