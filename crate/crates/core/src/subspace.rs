//! Frames, rank selection, active-coordinate projection, and polynomial ridge fits.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{lstsq_pivoted, orthonormalize, spd_solve, symmetric_eigen_desc};
use crate::scalar::Real;

/// An `m × r` basis with orthonormal columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame<T: Real> {
    basis: DMatrix<T>,
}

impl<T: Real> Frame<T> {
    /// Validates `basisᵀ basis = I` (to `1e-10` in `f64`).
    pub fn new(basis: DMatrix<T>) -> Result<Self> {
        let (m, r) = basis.shape();
        if r == 0 || r > m {
            return Err(Error::Argument(format!(
                "frame must be m x r with 1 <= r <= m, got {m} x {r}"
            )));
        }
        let gram = basis.transpose() * &basis;
        let err = (gram - DMatrix::identity(r, r)).amax();
        if !(err <= T::tolerance(1e-10)) {
            return Err(Error::Argument(format!(
                "frame columns are not orthonormal (error {err})"
            )));
        }
        Ok(Self { basis })
    }

    /// Orthonormal basis for the column span of `m`.
    pub fn orthonormalized(m: DMatrix<T>) -> Result<Self> {
        Self::new(orthonormalize(m))
    }

    /// The first `r` standard basis vectors of `R^m`.
    pub fn coordinate(m: usize, r: usize) -> Result<Self> {
        Self::new(DMatrix::identity(m, r))
    }

    pub fn basis(&self) -> &DMatrix<T> {
        &self.basis
    }

    pub fn into_basis(self) -> DMatrix<T> {
        self.basis
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis of the complement, `m × (m − r)`.
    pub fn complement(&self) -> DMatrix<T> {
        let (m, r) = self.basis.shape();
        if r == m {
            return DMatrix::zeros(m, 0);
        }
        let proj = DMatrix::identity(m, m) - &self.basis * self.basis.transpose();
        let (_, vecs) = symmetric_eigen_desc(&proj);
        vecs.columns(0, m - r).into_owned()
    }
}

/// Largest log-gap rank selection; `overriding` wins when given.
///
/// Eigenvalues at rounding level (`≤ m·ε·λ₁`, including tiny negatives) are
/// floored at that level, and never below `1e-300`, before taking logs.
pub fn select_rank<T: Real>(eigenvalues: &DVector<T>, overriding: Option<usize>) -> Result<usize> {
    let m = eigenvalues.len();
    if let Some(r) = overriding {
        if r == 0 || r > m.max(1) {
            return Err(Error::Argument(format!(
                "rank override {r} outside 1..={m}"
            )));
        }
        return Ok(r);
    }
    if m == 0 || eigenvalues.iter().all(|&l| l <= T::zero()) {
        return Err(Error::DegenerateSpectrum);
    }
    if m == 1 {
        return Ok(1);
    }
    let lead = eigenvalues[0].to_f64_lossy();
    let floor = (m as f64 * f64::EPSILON * lead).max(1e-300);
    let logs: Vec<f64> = eigenvalues
        .iter()
        .map(|l| l.to_f64_lossy().max(floor).ln())
        .collect();
    let mut best = 1;
    let mut best_gap = f64::NEG_INFINITY;
    for i in 0..m - 1 {
        let gap = logs[i] - logs[i + 1];
        if gap > best_gap {
            best_gap = gap;
            best = i + 1;
        }
    }
    Ok(best)
}

/// Active coordinates `basisᵀ x` for every row of `points` (`N × m → N × r`).
pub fn project<T: Real>(frame: &Frame<T>, points: &DMatrix<T>) -> DMatrix<T> {
    assert_eq!(
        points.ncols(),
        frame.ambient_dim(),
        "project: dimension mismatch"
    );
    points * frame.basis()
}

/// Exponent tuples of all monomials in `vars` variables with total degree `≤ degree`.
///
/// Graded lexicographic order: by total degree, then lexicographically
/// descending, e.g. `1, y1, y2, y1², y1 y2, y2²`.
pub fn monomial_exponents(vars: usize, degree: usize) -> Vec<Vec<u32>> {
    fn fill(rest: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if rest == 1 {
            prefix.push(total);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for e in (0..=total).rev() {
            prefix.push(e);
            fill(rest - 1, total - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree as u32 {
        fill(vars, d, &mut Vec::with_capacity(vars), &mut out);
    }
    out
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

/// Monomial design matrix over active coordinates (`N × r → N × p`).
pub fn design_matrix<T: Real>(coords: &DMatrix<T>, exponents: &[Vec<u32>]) -> DMatrix<T> {
    DMatrix::from_fn(coords.nrows(), exponents.len(), |i, k| {
        exponents[k]
            .iter()
            .enumerate()
            .fold(T::one(), |acc, (j, &e)| acc * coords[(i, j)].powi(e as i32))
    })
}

/// Coefficient of determination; `1` when the data have no variance and the fit is exact.
pub fn r_squared<T: Real>(values: &DVector<T>, fitted: &DVector<T>) -> T {
    let mean = values.mean();
    let ss_tot = values.map(|v| (v - mean) * (v - mean)).sum();
    let ss_res = (values - fitted).norm_squared();
    let n = T::from_usize_lossy(values.len().max(1));
    let noise = T::default_epsilon() * n * (mean * mean + T::one());
    if ss_tot <= noise {
        if ss_res <= noise {
            T::one()
        } else {
            T::zero()
        }
    } else {
        T::one() - ss_res / ss_tot
    }
}

/// Polynomial ridge profile `H(basisᵀ x)` with its in-sample `R²`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel<T: Real> {
    pub frame: Frame<T>,
    pub degree: usize,
    pub exponents: Vec<Vec<u32>>,
    pub coefficients: DVector<T>,
    pub r_squared: T,
}

impl<T: Real> RidgeModel<T> {
    pub fn predict_coords(&self, coords: &DMatrix<T>) -> DVector<T> {
        design_matrix(coords, &self.exponents) * &self.coefficients
    }

    /// Prediction at scaled points (`N × m`).
    pub fn predict(&self, points: &DMatrix<T>) -> DVector<T> {
        self.predict_coords(&project(&self.frame, points))
    }

    /// Coefficient of the monomial with the given exponents, zero if absent.
    pub fn coefficient(&self, exponents: &[u32]) -> T {
        self.exponents
            .iter()
            .position(|e| e.as_slice() == exponents)
            .map(|k| self.coefficients[k])
            .unwrap_or_else(T::zero)
    }
}

/// Least-squares polynomial fit of `values` over the active coordinates of `points`.
pub fn fit_ridge<T: Real>(
    points: &DMatrix<T>,
    values: &DVector<T>,
    frame: &Frame<T>,
    degree: usize,
) -> Result<RidgeModel<T>> {
    if degree == 0 {
        return Err(Error::Argument("ridge degree must be at least 1".into()));
    }
    if points.nrows() != values.len() {
        return Err(Error::Argument(format!(
            "{} points but {} values",
            points.nrows(),
            values.len()
        )));
    }
    let r = frame.rank();
    let needed = binomial(r + degree, degree);
    if points.nrows() < needed {
        return Err(Error::TooFewSamples {
            needed,
            got: points.nrows(),
        });
    }
    let exponents = monomial_exponents(r, degree);
    debug_assert_eq!(exponents.len(), needed);
    let coords = project(frame, points);
    let design = design_matrix(&coords, &exponents);
    let coefficients = lstsq_pivoted(&design, values)?;
    let fitted = &design * &coefficients;
    let r_squared = r_squared(values, &fitted);
    Ok(RidgeModel {
        frame: frame.clone(),
        degree,
        exponents,
        coefficients,
        r_squared,
    })
}

/// Convex quadratic in the `−S` convention: `−S(y) ≈ yᵀQy + aᵀy + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticSurrogate<T: Real> {
    pub q: DMatrix<T>,
    pub a: DVector<T>,
    pub c: T,
    /// Set when eigenvalues of `Q` were raised to the floor.
    pub convexified: bool,
}

impl<T: Real> QuadraticSurrogate<T> {
    pub fn new(q: DMatrix<T>, a: DVector<T>, c: T) -> Result<Self> {
        if !q.is_square() || q.nrows() != a.len() {
            return Err(Error::Argument("Q must be r x r and a an r-vector".into()));
        }
        let q = (&q + q.transpose()) * T::lit(0.5);
        Ok(Self {
            q,
            a,
            c,
            convexified: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    /// `yᵀQy + aᵀy + c`, i.e. `−S(y)`.
    pub fn neg_value(&self, y: &DVector<T>) -> T {
        (y.transpose() * &self.q * y)[0] + self.a.dot(y) + self.c
    }

    /// The surrogate objective `S(y)` (to be maximized).
    pub fn value(&self, y: &DVector<T>) -> T {
        -self.neg_value(y)
    }

    /// `∇S(y) = −(2Qy + a)`.
    pub fn gradient(&self, y: &DVector<T>) -> DVector<T> {
        -(&self.q * y * T::lit(2.0) + &self.a)
    }

    /// `∇²S = −2Q`.
    pub fn hessian(&self) -> DMatrix<T> {
        &self.q * T::lit(-2.0)
    }

    /// Unconstrained maximizer of `S`, `−½ Q⁻¹ a`.
    pub fn maximizer(&self) -> Result<DVector<T>> {
        let s = spd_solve(&self.q, &self.a).ok_or(Error::SingularScalarization { t: f64::NAN })?;
        Ok(s.x * T::lit(-0.5))
    }
}

/// Default convexity floor `1e-6 · max(1, λ_max(Q))`.
pub fn default_lambda_floor<T: Real>(q: &DMatrix<T>) -> T {
    let (vals, _) = symmetric_eigen_desc(q);
    T::lit(1e-6) * T::one().max(vals[0])
}

/// Reads `(Q, a, c)` off a degree-2 ridge model, flipping sign to `−S`.
///
/// Eigenvalues of `Q` below `lambda_floor` (default [`default_lambda_floor`])
/// are raised to it and the surrogate is flagged as convexified.
pub fn to_quadratic<T: Real>(
    model: &RidgeModel<T>,
    lambda_floor: Option<T>,
) -> Result<QuadraticSurrogate<T>> {
    if model.degree != 2 {
        return Err(Error::Argument(format!(
            "quadratic extraction needs a degree-2 model, got degree {}",
            model.degree
        )));
    }
    let r = model.frame.rank();
    let mut q = DMatrix::zeros(r, r);
    let mut a = DVector::zeros(r);
    let mut c = T::zero();
    for (e, &beta) in model.exponents.iter().zip(model.coefficients.iter()) {
        let nz: Vec<usize> = (0..r).filter(|&j| e[j] > 0).collect();
        match (nz.as_slice(), e.iter().sum::<u32>()) {
            ([], _) => c = -beta,
            ([i], 1) => a[*i] = -beta,
            ([i], 2) => q[(*i, *i)] = -beta,
            ([i, j], 2) => {
                q[(*i, *j)] = -beta * T::lit(0.5);
                q[(*j, *i)] = -beta * T::lit(0.5);
            }
            _ => unreachable!("degree-2 exponent {e:?}"),
        }
    }
    let mut surrogate = QuadraticSurrogate::new(q, a, c)?;
    let floor = lambda_floor.unwrap_or_else(|| default_lambda_floor(&surrogate.q));
    convexify(&mut surrogate, floor);
    Ok(surrogate)
}

/// Raises eigenvalues of `Q` below `floor` to `floor`.
pub fn convexify<T: Real>(surrogate: &mut QuadraticSurrogate<T>, floor: T) {
    let (vals, vecs) = symmetric_eigen_desc(&surrogate.q);
    if vals.iter().all(|&l| l >= floor) {
        return;
    }
    let clipped = vals.map(|l| l.max(floor));
    let q = &vecs * DMatrix::from_diagonal(&clipped) * vecs.transpose();
    surrogate.q = (&q + q.transpose()) * T::lit(0.5);
    surrogate.convexified = true;
}

/// Rows `(basisᵀ x_i, S(x_i))` for a shadow plot.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowTable<T: Real> {
    pub coords: DMatrix<T>,
    pub values: DVector<T>,
    /// False when `r > 2`.
    pub plottable: bool,
}

pub fn shadow_data<T: Real>(
    frame: &Frame<T>,
    points: &DMatrix<T>,
    values: &DVector<T>,
) -> ShadowTable<T> {
    ShadowTable {
        coords: project(frame, points),
        values: values.clone(),
        plottable: frame.rank() <= 2,
    }
}
