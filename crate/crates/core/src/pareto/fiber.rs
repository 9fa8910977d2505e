use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::objective::ScaledObjective;
use crate::scalar::Real;
use crate::subspace::Frame;

use super::ParetoTrace;

/// Rejection draws allowed per requested sample before falling back to hit-and-run.
pub const REJECTIONS_PER_SAMPLE: usize = 1000;

const PROJECTION_ITERATIONS: usize = 5000;
const SHRINK_SCHEDULE: [f64; 4] = [1e-2, 1e-4, 1e-8, 0.0];
const RESIDUAL_TOL: f64 = 1e-11;

fn max_abs<T: Real>(x: &DVector<T>) -> T {
    x.iter().fold(T::zero(), |a, v| a.max(v.abs()))
}

fn clamp_unit<T: Real>(x: &mut DVector<T>, bound: T) {
    for v in x.iter_mut() {
        *v = v.max(-bound).min(bound);
    }
}

fn check_y<T: Real>(frame: &Frame<T>, y: &DVector<T>) -> Result<()> {
    if y.len() != frame.rank() {
        return Err(Error::Argument(format!(
            "active point has {} coordinates, frame rank is {}",
            y.len(),
            frame.rank()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::Argument("active point is not finite".into()));
    }
    Ok(())
}

/// A point of the fiber `{x ∈ [−1, 1]^m : Uᵀx = y}`.
///
/// Starts from the minimum-norm preimage and runs Dykstra's alternating
/// projections between the affine fiber and a progressively less shrunk cube.
pub fn find_fiber_point<T: Real>(frame: &Frame<T>, y: &DVector<T>) -> Result<DVector<T>> {
    check_y(frame, y)?;
    let u = frame.basis();
    let base = u * y;
    if max_abs(&base) <= T::one() {
        return Ok(base);
    }
    let project_affine = |v: &DVector<T>| v - u * (u.transpose() * v - y);
    let accept = T::one() + T::lit(1e-13);
    for delta in SHRINK_SCHEDULE {
        let bound = T::one() - T::lit(delta);
        let mut x = base.clone();
        let mut p = DVector::zeros(x.len());
        let mut q = DVector::zeros(x.len());
        for _ in 0..PROJECTION_ITERATIONS {
            let mut b = &x + &p;
            clamp_unit(&mut b, bound);
            p = &x + &p - &b;
            let next = project_affine(&(&b + &q));
            q = &b + &q - &next;
            x = next;
            if max_abs(&x) <= accept {
                clamp_unit(&mut x, T::one());
                if (u.transpose() * &x - y).amax() <= T::lit(RESIDUAL_TOL) {
                    return Ok(x);
                }
            }
        }
    }
    Err(Error::InfeasibleFiber)
}

/// `k` points of the inactive fiber over `y`, uniformly distributed.
///
/// Inactive coordinates are drawn by rejection from their bounding box; after
/// `1000·k` rejected draws the remaining samples come from hit-and-run started
/// at a feasible point.
pub fn sample_inactive_fiber<T: Real>(
    frame: &Frame<T>,
    y: &DVector<T>,
    k: usize,
    seed: u64,
) -> Result<Vec<DVector<T>>> {
    check_y(frame, y)?;
    let u = frame.basis();
    let (m, r) = u.shape();
    if r == m {
        let mut x = u * y;
        if max_abs(&x) > T::one() + T::lit(MEMBERSHIP_TOL) {
            return Err(Error::InfeasibleFiber);
        }
        clamp_unit(&mut x, T::one());
        return Ok(vec![x; k]);
    }
    let base = u * y;
    let null = frame.complement();
    let d = m - r;
    let half: Vec<T> = (0..d)
        .map(|j| null.column(j).iter().fold(T::zero(), |a, v| a + v.abs()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(k);
    let mut z = vec![T::zero(); d];
    let mut draws = 0;
    while out.len() < k && draws < REJECTIONS_PER_SAMPLE * k {
        draws += 1;
        for (zj, hj) in z.iter_mut().zip(&half) {
            *zj = *hj * T::lit(rng.random_range(-1.0..=1.0));
        }
        let inside = (0..m).all(|i| {
            let xi = (0..d).fold(base[i], |a, j| a + null[(i, j)] * z[j]);
            xi.abs() <= T::one()
        });
        if inside {
            let zv = DVector::from_column_slice(&z);
            out.push(&base + &null * zv);
        }
    }
    if out.len() < k {
        let start = find_fiber_point(frame, y)?;
        hit_and_run(&null, start, k - out.len(), &mut rng, &mut out);
    }
    Ok(out)
}

const MEMBERSHIP_TOL: f64 = 1e-12;

fn hit_and_run<T: Real>(
    null: &DMatrix<T>,
    mut x: DVector<T>,
    count: usize,
    rng: &mut ChaCha8Rng,
    out: &mut Vec<DVector<T>>,
) {
    let d = null.ncols();
    let burn_in = 20 * d + 100;
    let thin = d.max(1);
    for _ in 0..burn_in {
        chord_step(null, &mut x, rng);
    }
    for _ in 0..count {
        for _ in 0..thin {
            chord_step(null, &mut x, rng);
        }
        out.push(x.clone());
    }
}

fn chord_step<T: Real>(null: &DMatrix<T>, x: &mut DVector<T>, rng: &mut ChaCha8Rng) {
    let tiny = T::lit(1e-300);
    let xi = DVector::from_fn(null.ncols(), |_, _| {
        T::lit(rng.sample::<f64, _>(StandardNormal))
    });
    let dir = null * xi;
    let norm = dir.norm();
    if norm <= tiny {
        return;
    }
    let dir = dir / norm;
    let (mut lo, mut hi) = (T::lit(f64::NEG_INFINITY), T::lit(f64::INFINITY));
    for (xi, di) in x.iter().zip(dir.iter()) {
        if di.abs() > tiny {
            let a = (-T::one() - *xi) / *di;
            let b = (T::one() - *xi) / *di;
            lo = lo.max(a.min(b));
            hi = hi.min(a.max(b));
        }
    }
    if hi <= lo {
        return;
    }
    let lambda = lo + (hi - lo) * T::lit(rng.random::<f64>());
    *x += dir * lambda;
    clamp_unit(x, T::one());
}

/// True-model values over the inactive fiber at one trace point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrontRow<T: Real> {
    pub t: T,
    pub s_l_mean: T,
    pub s_w_mean: T,
    pub s_l_min: T,
    pub s_l_max: T,
    pub s_w_min: T,
    pub s_w_max: T,
}

impl<T: Real> FrontRow<T> {
    pub fn spread_l(&self) -> T {
        self.s_l_max - self.s_l_min
    }

    pub fn spread_w(&self) -> T {
        self.s_w_max - self.s_w_min
    }
}

fn summarize<T: Real>(values: &[T]) -> (T, T, T) {
    let n = T::from_usize_lossy(values.len());
    let mean = values.iter().fold(T::zero(), |a, v| a + *v) / n;
    let min = values.iter().fold(values[0], |a, v| a.min(*v));
    let max = values.iter().fold(values[0], |a, v| a.max(*v));
    (mean, min, max)
}

/// Evaluates both objectives on `k` fiber samples at every in-domain trace point.
///
/// Trace point `i` samples its fiber with seed `seed + i`. Points flagged
/// outside the projected domain are skipped.
pub fn evaluate_trace_objectives<T, L, W>(
    trace: &ParetoTrace<T>,
    frame: &Frame<T>,
    laa: &L,
    wifi: &W,
    k: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<FrontRow<T>>>
where
    T: Real,
    L: ScaledObjective<T> + ?Sized,
    W: ScaledObjective<T> + ?Sized,
{
    if k == 0 {
        return Err(Error::Argument(
            "fiber sample count must be positive".into(),
        ));
    }
    let active: Vec<usize> = (0..trace.len()).filter(|&i| trace.in_domain[i]).collect();
    exec.map(active.len(), |j| {
        let i = active[j];
        let samples = sample_inactive_fiber(frame, &trace.ys[i], k, seed.wrapping_add(i as u64))?;
        let vl = samples
            .iter()
            .map(|x| laa.value(x))
            .collect::<Result<Vec<_>>>()?;
        let vw = samples
            .iter()
            .map(|x| wifi.value(x))
            .collect::<Result<Vec<_>>>()?;
        let (s_l_mean, s_l_min, s_l_max) = summarize(&vl);
        let (s_w_mean, s_w_min, s_w_max) = summarize(&vw);
        Ok(FrontRow {
            t: trace.ts[i],
            s_l_mean,
            s_w_mean,
            s_l_min,
            s_l_max,
            s_w_min,
            s_w_max,
        })
    })
}
