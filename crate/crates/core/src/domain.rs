//! Parameter box, fixed scenario, and the log-affine map onto `[-1, 1]^m`.
//!
//! A parameter `θ_i ∈ [lower_i, upper_i]` (all strictly positive) maps to
//! `θ̃_i = M_ii ln θ_i + b_i` with `M_ii = 2 / (ln upper_i − ln lower_i)` and
//! `b_i = −M_ii (ln lower_i + ln upper_i) / 2`, so the bounds land on `∓1`
//! and the geometric midpoint on `0`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default acceptance band outside the unit cube for [`ParameterSpace::unscale_from_unit`].
pub const UNSCALE_CLAMP: f64 = 1e-9;

/// Relative slack on the original-unit bounds check, absorbing `exp(ln θ)` rounding.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSpec {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub nominal: f64,
}

impl ParameterSpec {
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, nominal: f64) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            lower,
            upper,
            nominal,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let err = |message: String| Error::Domain {
            parameter: self.name.clone(),
            message,
        };
        if !(self.lower.is_finite() && self.upper.is_finite() && self.nominal.is_finite()) {
            return Err(err("bounds and nominal must be finite".into()));
        }
        if self.lower <= 0.0 {
            return Err(err(format!(
                "lower bound {} must be strictly positive for log scaling",
                self.lower
            )));
        }
        if self.upper <= self.lower {
            return Err(err(format!(
                "upper bound {} must exceed lower bound {}",
                self.upper, self.lower
            )));
        }
        if self.nominal < self.lower || self.nominal > self.upper {
            return Err(err(format!(
                "nominal {} outside [{}, {}]",
                self.nominal, self.lower, self.upper
            )));
        }
        Ok(())
    }
}

/// Fixed quantities conditioning both objectives.
///
/// Keys beginning with `n_` are counts and must be integers `≥ 1`; every other
/// entry is a dimension and must be strictly positive.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, f64>", into = "BTreeMap<String, f64>")]
pub struct Scenario {
    values: BTreeMap<String, f64>,
}

impl Scenario {
    pub fn new(values: BTreeMap<String, f64>) -> Result<Self> {
        for (name, &v) in &values {
            let bad = |message: &str| Error::Domain {
                parameter: name.clone(),
                message: message.into(),
            };
            if !v.is_finite() {
                return Err(bad("scenario value must be finite"));
            }
            if name.starts_with("n_") {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(bad("count must be an integer >= 1"));
                }
            } else if v <= 0.0 {
                return Err(bad("dimension must be > 0"));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }

    pub fn require(&self, name: &str) -> Result<f64> {
        self.get(name).ok_or_else(|| Error::Domain {
            parameter: name.into(),
            message: "missing from scenario".into(),
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.values.iter().map(|(k, &v)| (k.as_str(), v))
    }
}

impl TryFrom<BTreeMap<String, f64>> for Scenario {
    type Error = Error;
    fn try_from(values: BTreeMap<String, f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<Scenario> for BTreeMap<String, f64> {
    fn from(s: Scenario) -> Self {
        s.values
    }
}

/// Contents of a parameter-space definition file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceDefinition {
    pub parameters: Vec<ParameterSpec>,
    #[serde(default)]
    pub scenario: Scenario,
}

const TABLE1_JSON: &str = include_str!("../../../table1.json");

impl SpaceDefinition {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// The 17-parameter LAA/Wi-Fi coexistence box shipped as `table1.json`.
    pub fn table1() -> Self {
        Self::from_json(TABLE1_JSON).expect("bundled table1.json is valid")
    }

    pub fn space<T: Real>(&self) -> Result<ParameterSpace<T>> {
        ParameterSpace::new(self.parameters.clone())
    }
}

/// Ordered parameter box with its log-affine scaler.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSpace<T: Real> {
    specs: Vec<ParameterSpec>,
    scale: DVector<T>,
    offset: DVector<T>,
}

impl<T: Real> ParameterSpace<T> {
    pub fn new(specs: Vec<ParameterSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::Argument(
                "parameter space needs at least one parameter".into(),
            ));
        }
        for s in &specs {
            s.validate()?;
        }
        let m = specs.len();
        let mut scale = DVector::zeros(m);
        let mut offset = DVector::zeros(m);
        for (i, s) in specs.iter().enumerate() {
            let (lo, hi) = (T::lit(s.lower).ln(), T::lit(s.upper).ln());
            let mi = T::lit(2.0) / (hi - lo);
            scale[i] = mi;
            offset[i] = -mi * (lo + hi) / T::lit(2.0);
        }
        Ok(Self {
            specs,
            scale,
            offset,
        })
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    pub fn specs(&self) -> &[ParameterSpec] {
        &self.specs
    }

    /// Diagonal of `M`.
    pub fn scale_diagonal(&self) -> &DVector<T> {
        &self.scale
    }

    /// The offset `b`.
    pub fn offset(&self) -> &DVector<T> {
        &self.offset
    }

    pub fn lower(&self) -> DVector<T> {
        DVector::from_iterator(self.dim(), self.specs.iter().map(|s| T::lit(s.lower)))
    }

    pub fn upper(&self) -> DVector<T> {
        DVector::from_iterator(self.dim(), self.specs.iter().map(|s| T::lit(s.upper)))
    }

    pub fn nominal(&self) -> DVector<T> {
        DVector::from_iterator(self.dim(), self.specs.iter().map(|s| T::lit(s.nominal)))
    }

    fn check_len(&self, n: usize) -> Result<()> {
        if n != self.dim() {
            return Err(Error::Argument(format!(
                "expected a {}-vector, got length {n}",
                self.dim()
            )));
        }
        Ok(())
    }

    /// `θ ↦ M ln θ + b`.
    pub fn scale_to_unit(&self, theta: &DVector<T>) -> Result<DVector<T>> {
        self.check_len(theta.len())?;
        let slack = T::lit(BOUND_SLACK);
        let mut out = DVector::zeros(self.dim());
        for (i, s) in self.specs.iter().enumerate() {
            let v = theta[i];
            let (lo, hi) = (T::lit(s.lower), T::lit(s.upper));
            if !v.is_finite() || v <= T::zero() {
                return Err(Error::Domain {
                    parameter: s.name.clone(),
                    message: format!("value {v} is not strictly positive"),
                });
            }
            if v < lo * (T::one() - slack) || v > hi * (T::one() + slack) {
                return Err(Error::Domain {
                    parameter: s.name.clone(),
                    message: format!("value {v} outside [{}, {}]", s.lower, s.upper),
                });
            }
            out[i] = (self.scale[i] * v.ln() + self.offset[i]).clamp(-T::one(), T::one());
        }
        Ok(out)
    }

    /// `θ̃ ↦ exp(M⁻¹(θ̃ − b))`, accepting components within [`UNSCALE_CLAMP`] of the cube.
    pub fn unscale_from_unit(&self, unit: &DVector<T>) -> Result<DVector<T>> {
        self.unscale_with_clamp(unit, T::lit(UNSCALE_CLAMP))
    }

    /// Like [`Self::unscale_from_unit`] with a caller-chosen clamp band.
    ///
    /// Components in `[−1 − clamp, 1 + clamp]` are clamped onto the cube
    /// before mapping, so the result always lies inside the box.
    pub fn unscale_with_clamp(&self, unit: &DVector<T>, clamp: T) -> Result<DVector<T>> {
        self.check_len(unit.len())?;
        let limit = T::one() + clamp;
        let mut out = DVector::zeros(self.dim());
        for (i, s) in self.specs.iter().enumerate() {
            let v = unit[i];
            if !v.is_finite() {
                return Err(Error::Domain {
                    parameter: s.name.clone(),
                    message: "scaled value is not finite".into(),
                });
            }
            if v.abs() > limit {
                return Err(Error::Domain {
                    parameter: s.name.clone(),
                    message: format!("scaled value {v} outside [-1, 1] beyond clamp {clamp}"),
                });
            }
            let v = v.clamp(-T::one(), T::one());
            out[i] = ((v - self.offset[i]) / self.scale[i]).exp();
        }
        Ok(out)
    }

    /// `n` i.i.d. uniform points on `[−1, 1]^m`, deterministic per seed.
    pub fn sample_uniform(&self, n: usize, seed: u64) -> Result<SampleSet<T>> {
        if n == 0 {
            return Err(Error::Argument("sample count must be at least 1".into()));
        }
        SampleSet::from_scaled(self, uniform_cube(n, self.dim(), seed))
    }
}

/// `n × m` i.i.d. uniform draws on `[−1, 1]^m`, deterministic per seed.
///
/// Draws are taken row by row, so a prefix of a larger sample matches a smaller one.
pub fn uniform_cube<T: Real>(n: usize, m: usize, seed: u64) -> DMatrix<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = DMatrix::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            out[(i, j)] = T::lit(rng.random_range(-1.0..=1.0));
        }
    }
    out
}

/// Sample points in both coordinate systems plus objective values once known.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<T: Real> {
    pub scaled: DMatrix<T>,
    pub original: DMatrix<T>,
    pub values_l: Option<DVector<T>>,
    pub values_w: Option<DVector<T>>,
}

impl<T: Real> SampleSet<T> {
    pub fn from_scaled(space: &ParameterSpace<T>, scaled: DMatrix<T>) -> Result<Self> {
        if scaled.ncols() != space.dim() {
            return Err(Error::Argument(format!(
                "sample matrix has {} columns, space has {} parameters",
                scaled.ncols(),
                space.dim()
            )));
        }
        let mut original = DMatrix::zeros(scaled.nrows(), scaled.ncols());
        for i in 0..scaled.nrows() {
            let row = scaled.row(i).transpose();
            let theta = space.unscale_from_unit(&row)?;
            original.set_row(i, &theta.transpose());
        }
        Ok(Self {
            scaled,
            original,
            values_l: None,
            values_w: None,
        })
    }

    pub fn len(&self) -> usize {
        self.scaled.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.scaled.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.scaled.ncols()
    }

    pub fn point(&self, i: usize) -> DVector<T> {
        self.scaled.row(i).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table1() -> ParameterSpace<f64> {
        SpaceDefinition::table1().space().unwrap()
    }

    #[test]
    fn table1_has_seventeen_ordered_parameters() {
        let def = SpaceDefinition::table1();
        assert_eq!(def.parameters.len(), 17);
        assert_eq!(def.parameters[0].name, "cw_min_wifi");
        assert_eq!(def.parameters[16].name, "bandwidth_mhz");
        assert_eq!(def.parameters[2].lower, 1e-4);
        assert_eq!(def.scenario.require("n_laa_enodeb").unwrap(), 6.0);
        assert_eq!(def.scenario.require("height_m").unwrap(), 80.0);
    }

    #[test]
    fn bounds_map_to_cube_corners() {
        let s = table1();
        let lo = s.scale_to_unit(&s.lower()).unwrap();
        let hi = s.scale_to_unit(&s.upper()).unwrap();
        for i in 0..17 {
            assert_relative_eq!(lo[i], -1.0, epsilon = 1e-12);
            assert_relative_eq!(hi[i], 1.0, epsilon = 1e-12);
        }
        let back = s
            .unscale_from_unit(&DVector::from_element(17, 1.0))
            .unwrap();
        assert_relative_eq!(back, s.upper(), max_relative = 1e-13);
    }

    #[test]
    fn geometric_midpoint_maps_to_zero() {
        let s = table1();
        let mut theta = s.nominal();
        theta[0] = (8.0f64 * 1024.0).sqrt();
        assert_relative_eq!(theta[0], 90.50966799187809, epsilon = 1e-12);
        let v = s.scale_to_unit(&theta).unwrap();
        assert!(v[0].abs() < 1e-14);

        let mid = s.unscale_from_unit(&DVector::zeros(17)).unwrap();
        for (i, spec) in s.specs().iter().enumerate() {
            assert_relative_eq!(
                mid[i],
                (spec.lower * spec.upper).sqrt(),
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn nominal_column_scales_into_cube() {
        let s = table1();
        let v = s.scale_to_unit(&s.nominal()).unwrap();
        assert!(v.iter().all(|x| (-1.0..=1.0).contains(x)));
    }

    #[test]
    fn rejects_out_of_domain_values() {
        let s = table1();
        let mut theta = s.nominal();
        theta[4] = 25.0;
        match s.scale_to_unit(&theta) {
            Err(Error::Domain { parameter, .. }) => assert_eq!(parameter, "tx_distance_m"),
            other => panic!("unexpected {other:?}"),
        }
        theta[4] = -1.0;
        assert!(s.scale_to_unit(&theta).is_err());

        let mut v = DVector::zeros(17);
        v[3] = f64::NAN;
        assert!(s.unscale_from_unit(&v).is_err());
        v[3] = 1.0 + 1e-3;
        assert!(s.unscale_from_unit(&v).is_err());
        v[3] = 1.0 + 5e-10;
        let theta = s.unscale_from_unit(&v).unwrap();
        assert_relative_eq!(theta[3], 8.0, max_relative = 1e-13);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ParameterSpec::new("zero", 0.0, 1.0, 0.5).is_err());
        assert!(ParameterSpec::new("flipped", 2.0, 1.0, 1.5).is_err());
        assert!(ParameterSpec::new("nominal", 1.0, 2.0, 3.0).is_err());
        assert!(ParameterSpace::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn scenario_validation() {
        let mut map = BTreeMap::new();
        map.insert("n_ap".to_string(), 0.0);
        assert!(Scenario::new(map.clone()).is_err());
        map.insert("n_ap".to_string(), 2.5);
        assert!(Scenario::new(map.clone()).is_err());
        map.insert("n_ap".to_string(), 2.0);
        map.insert("width_m".to_string(), -3.0);
        assert!(Scenario::new(map).is_err());
        let err = serde_json::from_str::<SpaceDefinition>(
            r#"{"parameters": [{"name":"a","lower":1,"upper":2,"nominal":1.5}], "scenario": {"n_x": 0}}"#,
        );
        assert!(err.is_err());
    }

    #[test]
    fn sampling_shape_determinism_and_moments() {
        let s = table1();
        let a = s.sample_uniform(1000, 11).unwrap();
        let b = s.sample_uniform(1000, 11).unwrap();
        assert_eq!(a.scaled.shape(), (1000, 17));
        assert_eq!(a, b);
        assert!(a.scaled.iter().all(|x| (-1.0..=1.0).contains(x)));
        let bound = 3.0 / (1000f64).sqrt();
        for j in 0..17 {
            assert!(a.scaled.column(j).mean().abs() < bound);
        }
        assert!(s.sample_uniform(0, 1).is_err());
        assert_ne!(
            s.sample_uniform(10, 12).unwrap().scaled,
            a.scaled.rows(0, 10).into_owned()
        );
    }

    #[test]
    fn works_in_single_precision() {
        let s: ParameterSpace<f32> = SpaceDefinition::table1().space().unwrap();
        let v = s.scale_to_unit(&s.upper()).unwrap();
        assert!(v.iter().all(|x| (x - 1.0).abs() < 1e-5));
    }
}
