//! Subspace geodesics on the Grassmannian and the maximin-`R²` mixing search.

use nalgebra::{DMatrix, DVector, SVD};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::orthonormalize;
use crate::scalar::Real;
use crate::subspace::{fit_ridge, Frame};

/// Principal angles between two equal-rank subspaces, ascending, in `[0, π/2]`.
///
/// Cosines come from the singular values of `AᵀB` (clamped to `[0, 1]`),
/// sines from those of `(I − AAᵀ)B`; pairing the two through `atan2` keeps
/// small angles accurate where `acos` alone loses half the digits.
pub fn principal_angles<T: Real>(a: &Frame<T>, b: &Frame<T>) -> DVector<T> {
    assert_eq!(
        a.ambient_dim(),
        b.ambient_dim(),
        "principal angles: ambient mismatch"
    );
    assert_eq!(a.rank(), b.rank(), "principal angles: rank mismatch");
    let r = a.rank();
    let cross = a.basis().transpose() * b.basis();
    let cos = SVD::new(cross, false, false).singular_values;
    let resid = b.basis() - a.basis() * (a.basis().transpose() * b.basis());
    let sin = SVD::new(resid, false, false).singular_values;
    DVector::from_fn(r, |i, _| {
        let c = cos[i].clamp(T::zero(), T::one());
        let s = sin[r - 1 - i].clamp(T::zero(), T::one());
        s.atan2(c)
    })
}

/// Geodesic distance: `ℓ₂` norm of the principal angles.
pub fn subspace_distance<T: Real>(a: &Frame<T>, b: &Frame<T>) -> T {
    principal_angles(a, b).norm()
}

/// Minimizing geodesic `s ↦ [U(s)]` from `[W0]` (`s = 0`) to `[W1]` (`s = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicPath<T: Real> {
    start: Frame<T>,
    end: Frame<T>,
    start_rotated: DMatrix<T>,
    direction: DMatrix<T>,
    angles: DVector<T>,
}

/// Builds the geodesic between two frames of equal shape.
///
/// With `K = (I − W0W0ᵀ) W1 (W0ᵀW1)⁻¹ = U Σ Vᵀ` and `Θ = atan Σ`, the path is
/// `U(s) = W0 V cos(sΘ) + U sin(sΘ)`, re-orthonormalized on evaluation.
pub fn geodesic<T: Real>(start: &Frame<T>, end: &Frame<T>) -> Result<GeodesicPath<T>> {
    if start.ambient_dim() != end.ambient_dim() || start.rank() != end.rank() {
        return Err(Error::Argument(format!(
            "geodesic endpoints differ in shape: {}x{} vs {}x{}",
            start.ambient_dim(),
            start.rank(),
            end.ambient_dim(),
            end.rank()
        )));
    }
    let w0 = start.basis();
    let w1 = end.basis();
    let overlap = w0.transpose() * w1;
    let smallest_cos = SVD::new(overlap.clone(), false, false)
        .singular_values
        .min();
    if smallest_cos <= T::tolerance(1e-12) {
        return Err(Error::OrthogonalSubspaces);
    }
    let residual = w1 - w0 * &overlap;
    let k_t = overlap
        .transpose()
        .lu()
        .solve(&residual.transpose())
        .ok_or(Error::OrthogonalSubspaces)?;
    let svd = SVD::new(k_t.transpose(), true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vt").transpose();
    let angles = svd.singular_values.map(|s| s.atan());
    Ok(GeodesicPath {
        start: start.clone(),
        end: end.clone(),
        start_rotated: w0 * v,
        direction: u,
        angles,
    })
}

impl<T: Real> GeodesicPath<T> {
    pub fn start(&self) -> &Frame<T> {
        &self.start
    }

    pub fn end(&self) -> &Frame<T> {
        &self.end
    }

    /// Principal angles between the endpoints, descending.
    pub fn angles(&self) -> &DVector<T> {
        &self.angles
    }

    pub fn length(&self) -> T {
        self.angles.norm()
    }

    pub fn evaluate(&self, s: T) -> Frame<T> {
        let r = self.angles.len();
        let cos = DMatrix::from_diagonal(&self.angles.map(|a| (a * s).cos()));
        let sin = DMatrix::from_diagonal(&self.angles.map(|a| (a * s).sin()));
        let raw = &self.start_rotated * cos + self.direction.columns(0, r) * sin;
        Frame::new(orthonormalize(raw)).expect("orthonormalized geodesic point")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixOptions {
    pub degree: usize,
    /// Number of grid intervals `K` on `[0, 1]`.
    pub grid: usize,
    /// Golden-section stops once the bracket is shorter than this.
    pub tolerance: f64,
    pub exec: Execution,
}

impl Default for MixOptions {
    fn default() -> Self {
        Self {
            degree: 2,
            grid: 100,
            tolerance: 1e-4,
            exec: Execution::Sequential,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixPoint<T: Real> {
    pub s: T,
    pub r2_l: T,
    pub r2_w: T,
}

impl<T: Real> MixPoint<T> {
    pub fn criterion(&self) -> T {
        self.r2_l.min(self.r2_w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixResult<T: Real> {
    pub s_star: T,
    pub frame: Frame<T>,
    pub r2_l: T,
    pub r2_w: T,
    /// Every evaluated point: the grid in order, then the refinement steps.
    pub trace: Vec<MixPoint<T>>,
}

/// `(R²_L(s), R²_W(s))` of ridge fits on the coordinates `U(s)ᵀ x`.
pub fn mix_criterion<T: Real>(
    path: &GeodesicPath<T>,
    points: &DMatrix<T>,
    values_l: &DVector<T>,
    values_w: &DVector<T>,
    degree: usize,
    s: T,
) -> Result<MixPoint<T>> {
    let frame = path.evaluate(s);
    let wrap = |e: Error| Error::Mixing {
        s: s.to_f64_lossy(),
        source: Box::new(e),
    };
    let r2_l = fit_ridge(points, values_l, &frame, degree)
        .map_err(wrap)?
        .r_squared;
    let r2_w = fit_ridge(points, values_w, &frame, degree)
        .map_err(wrap)?
        .r_squared;
    Ok(MixPoint { s, r2_l, r2_w })
}

/// Maximizes `min(R²_L(s), R²_W(s))` over `s ∈ [0, 1]`.
///
/// A uniform grid `{0, 1/K, …, 1}` locates the best cell; golden-section
/// search then refines inside the two neighbouring cells. The returned
/// `s*` is the best point among all evaluations (lowest `s` on ties), so no
/// evaluated point beats it. Unimodality is not assumed beyond that bracket.
pub fn mix_subspaces<T: Real>(
    path: &GeodesicPath<T>,
    points: &DMatrix<T>,
    values_l: &DVector<T>,
    values_w: &DVector<T>,
    options: MixOptions,
) -> Result<MixResult<T>> {
    let k = options.grid;
    if k < 2 {
        return Err(Error::Argument(format!(
            "mixing grid needs K >= 2, got {k}"
        )));
    }
    if !(options.tolerance > 0.0) {
        return Err(Error::Argument(
            "refinement tolerance must be positive".into(),
        ));
    }
    let eval = |s: T| mix_criterion(path, points, values_l, values_w, options.degree, s);
    let kk = T::from_usize_lossy(k);
    let mut trace = options
        .exec
        .map(k + 1, |i| eval(T::from_usize_lossy(i) / kk))?;

    let best_grid = argmax(&trace);
    let mut lo = T::from_usize_lossy(best_grid.saturating_sub(1)) / kk;
    let mut hi = T::from_usize_lossy((best_grid + 1).min(k)) / kk;
    let ratio = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let tol = T::lit(options.tolerance);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = eval(x1)?;
    let mut f2 = eval(x2)?;
    trace.push(f1);
    trace.push(f2);
    while hi - lo >= tol {
        if f1.criterion() >= f2.criterion() {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = eval(x1)?;
            trace.push(f1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = eval(x2)?;
            trace.push(f2);
        }
    }

    let best = trace[argmax(&trace)];
    Ok(MixResult {
        s_star: best.s,
        frame: path.evaluate(best.s),
        r2_l: best.r2_l,
        r2_w: best.r2_w,
        trace,
    })
}

fn argmax<T: Real>(points: &[MixPoint<T>]) -> usize {
    let mut best = 0;
    for (i, p) in points.iter().enumerate().skip(1) {
        let (c, b) = (p.criterion(), points[best].criterion());
        if c > b || (c == b && p.s < points[best].s) {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

    fn line(angle: f64) -> Frame<f64> {
        Frame::new(DMatrix::from_column_slice(
            2,
            1,
            &[angle.cos(), angle.sin()],
        ))
        .unwrap()
    }

    #[test]
    fn distance_basics() {
        let e1 = line(0.0);
        let e2 = line(FRAC_PI_2);
        assert_eq!(subspace_distance(&e1, &e1), 0.0);
        assert_relative_eq!(subspace_distance(&e1, &e2), FRAC_PI_2, epsilon = 1e-15);
        assert_relative_eq!(subspace_distance(&e1, &line(0.3)), 0.3, epsilon = 1e-15);
        assert_relative_eq!(
            subspace_distance(&e1, &line(1e-9)),
            1e-9,
            max_relative = 1e-6
        );
    }

    #[test]
    fn identical_spans_have_zero_angles() {
        let w0 = Frame::orthonormalized(DMatrix::from_fn(5, 2, |i, j| {
            (i * 3 + j) as f64 % 4.0 - 1.5
        }))
        .unwrap();
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let w1 = Frame::new(w0.basis() * rot).unwrap();
        let path = geodesic(&w0, &w1).unwrap();
        assert!(path.angles().amax() < 1e-12);
        for s in [0.0, 0.3, 1.0] {
            assert!(subspace_distance(&path.evaluate(s), &w0) < 1e-8);
        }
    }

    #[test]
    fn planar_geodesic_is_rotation() {
        let path = geodesic(&line(0.0), &line(FRAC_PI_3)).unwrap();
        for s in [0.0, 0.2, 0.5, 0.9, 1.0] {
            let u = path.evaluate(s);
            let want = DVector::from_vec(vec![(s * FRAC_PI_3).cos(), (s * FRAC_PI_3).sin()]);
            let got = u.basis().column(0).into_owned();
            let sign = got.dot(&want).signum();
            assert_relative_eq!(got * sign, want, epsilon = 1e-10);
        }
    }

    #[test]
    fn orthogonal_endpoints_are_rejected() {
        assert_eq!(
            geodesic(&line(0.0), &line(FRAC_PI_2)),
            Err(Error::OrthogonalSubspaces)
        );
        let a = Frame::<f64>::coordinate(3, 1).unwrap();
        let b = Frame::<f64>::coordinate(3, 2).unwrap();
        assert!(geodesic(&a, &b).is_err());
    }

    #[test]
    fn grid_too_small() {
        let path = geodesic(&line(0.0), &line(0.5)).unwrap();
        let pts = DMatrix::from_fn(10, 2, |i, j| (i + j) as f64 / 10.0);
        let v = DVector::zeros(10);
        let opts = MixOptions {
            grid: 1,
            ..Default::default()
        };
        assert!(mix_subspaces(&path, &pts, &v, &v, opts).is_err());
    }
}
