//! Objective-map abstractions shared by the gradient, mixing, and fiber code.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::DVector;

use crate::domain::{ParameterSpace, Scenario};
use crate::error::Result;
use crate::scalar::Real;

/// Clamp band used when binding a physical objective to the scaled cube.
///
/// Forward-difference points may leave the cube by at most the step `h`;
/// any step up to this value is evaluated at the clamped boundary point.
pub const FD_CLAMP: f64 = 1e-4;

/// A deterministic black-box map on original parameter units, conditioned on a scenario.
pub trait Objective<T: Real>: Send + Sync {
    fn name(&self) -> &str;
    fn evaluate(&self, theta: &DVector<T>, scenario: &Scenario) -> Result<T>;
}

/// A deterministic map on scaled coordinates `θ̃ ∈ [−1, 1]^m`.
pub trait ScaledObjective<T: Real>: Send + Sync {
    fn name(&self) -> &str;
    fn value(&self, x: &DVector<T>) -> Result<T>;
}

/// A scaled map with an exact gradient.
pub trait GradientObjective<T: Real>: ScaledObjective<T> {
    fn gradient(&self, x: &DVector<T>) -> DVector<T>;
}

impl<T: Real, O: ScaledObjective<T> + ?Sized> ScaledObjective<T> for &O {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn value(&self, x: &DVector<T>) -> Result<T> {
        (**self).value(x)
    }
}

impl<T: Real, O: ScaledObjective<T> + ?Sized> ScaledObjective<T> for Box<O> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn value(&self, x: &DVector<T>) -> Result<T> {
        (**self).value(x)
    }
}

impl<T: Real, O: GradientObjective<T> + ?Sized> GradientObjective<T> for &O {
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        (**self).gradient(x)
    }
}

impl<T: Real, O: GradientObjective<T> + ?Sized> GradientObjective<T> for Box<O> {
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        (**self).gradient(x)
    }
}

/// A physical [`Objective`] viewed through the scaler of a parameter space.
pub struct Bound<'a, T: Real, O: ?Sized> {
    objective: &'a O,
    space: &'a ParameterSpace<T>,
    scenario: &'a Scenario,
    clamp: T,
}

impl<'a, T: Real, O: Objective<T> + ?Sized> Bound<'a, T, O> {
    pub fn new(objective: &'a O, space: &'a ParameterSpace<T>, scenario: &'a Scenario) -> Self {
        Self {
            objective,
            space,
            scenario,
            clamp: T::lit(FD_CLAMP),
        }
    }

    pub fn with_clamp(mut self, clamp: T) -> Self {
        self.clamp = clamp;
        self
    }
}

impl<T: Real, O: Objective<T> + ?Sized> ScaledObjective<T> for Bound<'_, T, O> {
    fn name(&self) -> &str {
        self.objective.name()
    }
    fn value(&self, x: &DVector<T>) -> Result<T> {
        let theta = self.space.unscale_with_clamp(x, self.clamp)?;
        self.objective.evaluate(&theta, self.scenario)
    }
}

/// Wraps an objective and counts evaluations (thread-safe).
pub struct Counting<O> {
    inner: O,
    count: AtomicUsize,
}

impl<O> Counting<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            count: AtomicUsize::new(0),
        }
    }

    pub fn count(&self) -> usize {
        self.count.load(Ordering::Relaxed)
    }

    pub fn reset(&self) -> usize {
        self.count.swap(0, Ordering::Relaxed)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<T: Real, O: Objective<T>> Objective<T> for Counting<O> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn evaluate(&self, theta: &DVector<T>, scenario: &Scenario) -> Result<T> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(theta, scenario)
    }
}

impl<T: Real, O: ScaledObjective<T>> ScaledObjective<T> for Counting<O> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn value(&self, x: &DVector<T>) -> Result<T> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.value(x)
    }
}

impl<T: Real, O: GradientObjective<T>> GradientObjective<T> for Counting<O> {
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        self.inner.gradient(x)
    }
}

type ValueFn<T> = Box<dyn Fn(&DVector<T>) -> T + Send + Sync>;
type GradFn<T> = Box<dyn Fn(&DVector<T>) -> DVector<T> + Send + Sync>;

/// Closure-backed scaled objective, optionally with an exact gradient.
pub struct ScaledFn<T: Real> {
    name: String,
    value: ValueFn<T>,
    gradient: Option<GradFn<T>>,
}

impl<T: Real> ScaledFn<T> {
    pub fn new(
        name: impl Into<String>,
        value: impl Fn(&DVector<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            value: Box::new(value),
            gradient: None,
        }
    }

    pub fn with_gradient(
        mut self,
        gradient: impl Fn(&DVector<T>) -> DVector<T> + Send + Sync + 'static,
    ) -> Self {
        self.gradient = Some(Box::new(gradient));
        self
    }
}

impl<T: Real> ScaledObjective<T> for ScaledFn<T> {
    fn name(&self) -> &str {
        &self.name
    }
    fn value(&self, x: &DVector<T>) -> Result<T> {
        Ok((self.value)(x))
    }
}

impl<T: Real> GradientObjective<T> for ScaledFn<T> {
    /// # Panics
    /// If the closure was built without [`ScaledFn::with_gradient`].
    fn gradient(&self, x: &DVector<T>) -> DVector<T> {
        let g = self
            .gradient
            .as_ref()
            .unwrap_or_else(|| panic!("objective `{}` has no analytic gradient", self.name));
        g(x)
    }
}
