//! Forward-difference gradients in scaled coordinates and the Monte Carlo
//! estimate `C ≈ (1/N) Σ g_i g_iᵀ` of the averaged gradient outer product.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::symmetric_eigen_desc;
use crate::objective::{GradientObjective, ScaledObjective};
use crate::scalar::Real;
use crate::subspace::Frame;

/// Default forward-difference step in scaled coordinates.
pub const DEFAULT_STEP: f64 = 1e-6;

/// Produces `(S(x), ∇S(x))` at a scaled point.
pub trait GradientSampler<T: Real>: Sync {
    fn name(&self) -> &str;

    /// `sample` only labels errors.
    fn value_and_gradient(&self, x: &DVector<T>, sample: usize) -> Result<(T, DVector<T>)>;

    /// Objective evaluations consumed per call.
    fn evaluations_per_point(&self, dim: usize) -> usize;

    /// Step size, if the gradient is a difference quotient.
    fn step(&self) -> Option<T> {
        None
    }
}

/// Forward differences `(S(x + h e_j) − S(x)) / h`.
pub struct ForwardDifference<O> {
    objective: O,
    h: f64,
}

impl<O> ForwardDifference<O> {
    pub fn new(objective: O, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Argument(format!("step h must be positive, got {h}")));
        }
        Ok(Self { objective, h })
    }

    pub fn objective(&self) -> &O {
        &self.objective
    }
}

fn checked<T: Real>(v: T, name: &str, sample: usize, coordinate: Option<usize>) -> Result<T> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Evaluation {
            objective: name.to_string(),
            sample,
            coordinate,
        })
    }
}

impl<T: Real, O: ScaledObjective<T>> GradientSampler<T> for ForwardDifference<O> {
    fn name(&self) -> &str {
        self.objective.name()
    }

    fn value_and_gradient(&self, x: &DVector<T>, sample: usize) -> Result<(T, DVector<T>)> {
        let name = self.objective.name();
        let h = T::lit(self.h);
        let base = checked(self.objective.value(x)?, name, sample, None)?;
        let mut grad = DVector::zeros(x.len());
        let mut probe = x.clone();
        for j in 0..x.len() {
            probe[j] = x[j] + h;
            let shifted = checked(self.objective.value(&probe)?, name, sample, Some(j))?;
            grad[j] = checked((shifted - base) / h, name, sample, Some(j))?;
            probe[j] = x[j];
        }
        Ok((base, grad))
    }

    fn evaluations_per_point(&self, dim: usize) -> usize {
        dim + 1
    }

    fn step(&self) -> Option<T> {
        Some(T::lit(self.h))
    }
}

/// Exact gradients from a [`GradientObjective`], behind the same interface.
pub struct AnalyticGradient<O> {
    objective: O,
}

impl<O> AnalyticGradient<O> {
    pub fn new(objective: O) -> Self {
        Self { objective }
    }
}

impl<T: Real, O: GradientObjective<T>> GradientSampler<T> for AnalyticGradient<O> {
    fn name(&self) -> &str {
        self.objective.name()
    }

    fn value_and_gradient(&self, x: &DVector<T>, sample: usize) -> Result<(T, DVector<T>)> {
        let name = self.objective.name();
        let v = checked(self.objective.value(x)?, name, sample, None)?;
        let g = self.objective.gradient(x);
        if let Some(j) = g.iter().position(|c| !c.is_finite()) {
            return Err(Error::Evaluation {
                objective: name.to_string(),
                sample,
                coordinate: Some(j),
            });
        }
        Ok((v, g))
    }

    fn evaluations_per_point(&self, _dim: usize) -> usize {
        1
    }
}

/// Forward-difference gradient of a scaled objective at one point.
pub fn fd_gradient<T: Real, O: ScaledObjective<T>>(
    objective: &O,
    point: &DVector<T>,
    h: f64,
) -> Result<DVector<T>> {
    let fd = ForwardDifference::new(objective, h)?;
    Ok(fd.value_and_gradient(point, 0)?.1)
}

/// Gradient rows for every sample, with the base objective values.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet<T: Real> {
    /// `N × m`, row `i` is the gradient at sample `i`.
    pub grads: DMatrix<T>,
    pub values: DVector<T>,
    pub step: Option<T>,
    pub evaluations: usize,
}

/// Evaluates value and gradient at every row of `points` (scaled, `N × m`).
pub fn sample_gradients<T: Real, S: GradientSampler<T> + ?Sized>(
    sampler: &S,
    points: &DMatrix<T>,
    exec: Execution,
) -> Result<GradientSet<T>> {
    let (n, m) = points.shape();
    if n == 0 {
        return Err(Error::Argument("no samples to differentiate".into()));
    }
    let rows = exec.map(n, |i| {
        sampler.value_and_gradient(&points.row(i).transpose(), i)
    })?;
    let mut grads = DMatrix::zeros(n, m);
    let mut values = DVector::zeros(n);
    for (i, (v, g)) in rows.into_iter().enumerate() {
        values[i] = v;
        grads.set_row(i, &g.transpose());
    }
    Ok(GradientSet {
        grads,
        values,
        step: sampler.step(),
        evaluations: n * sampler.evaluations_per_point(m),
    })
}

/// Averaged gradient outer product and its ordered eigendecomposition.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralEstimate<T: Real> {
    pub c: DMatrix<T>,
    /// Descending.
    pub eigenvalues: DVector<T>,
    /// Columns are unit eigenvectors, sign-normalized (largest entry positive).
    pub eigenvectors: DMatrix<T>,
    pub samples: usize,
}

impl<T: Real> SpectralEstimate<T> {
    /// Builds `C = (1/N) Σ g_i g_iᵀ` from gradient rows.
    pub fn from_gradients(grads: &DMatrix<T>) -> Result<Self> {
        let n = grads.nrows();
        if n == 0 {
            return Err(Error::Argument("no gradient rows".into()));
        }
        let m = grads.ncols();
        let mut c = DMatrix::zeros(m, m);
        for row in grads.row_iter() {
            let g = row.transpose();
            c.ger(T::one(), &g, &g, T::one());
        }
        c /= T::from_usize_lossy(n);
        let c = (&c + c.transpose()) * T::lit(0.5);
        let (eigenvalues, eigenvectors) = symmetric_eigen_desc(&c);
        Ok(Self {
            c,
            eigenvalues,
            eigenvectors,
            samples: n,
        })
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    /// The leading `r` eigenvectors as a frame.
    pub fn frame(&self, r: usize) -> Result<Frame<T>> {
        if r == 0 || r > self.dim() {
            return Err(Error::Argument(format!(
                "rank {r} outside 1..={}",
                self.dim()
            )));
        }
        Frame::new(self.eigenvectors.columns(0, r).into_owned())
    }
}

/// Runs the gradient sampler over `points` and estimates `C`.
pub fn estimate_c<T: Real, S: GradientSampler<T> + ?Sized>(
    sampler: &S,
    points: &DMatrix<T>,
    exec: Execution,
) -> Result<(SpectralEstimate<T>, GradientSet<T>)> {
    let set = sample_gradients(sampler, points, exec)?;
    let est = SpectralEstimate::from_gradients(&set.grads)?;
    Ok((est, set))
}
