//! Demo LAA / Wi-Fi coexistence objectives.
//!
//! A deterministic stand-in model mapping the 17 box parameters to a pair of
//! per-user downlink throughputs in Mbit/s. It is smooth on the box and built
//! for exercising the pipeline; it is not a calibrated coexistence model.
//!
//! Per network `X` with contention window `W_X` and back-off stage `b_X`:
//!
//! * contention: two-class Bianchi fixed point over the access points of each
//!   network on one channel (`n_laa_enodeb / n_channels`, `n_wifi_ap / n_channels`);
//! * airtime: `η_X = n_X τ_X (1 − p_X) T_p / E[slot]`, with
//!   `E[slot] = (1 − P_tr) + P_tr (T_p + T_oh)` slots;
//! * link: serving distance `√(d_txrx² + Δh²)` over the LoS law, interferer
//!   distance `√(d_tx² + Δh²)` over the NLoS law, both plus `0.5·σ_shadow` dB;
//!   the interferer belongs to the other network and is active a fraction
//!   `1 − (1 − τ_other)^{n_other}` of slots;
//! * noise floor `−174 + 10 log₁₀(B·10⁶) + NF` dBm;
//! * throughput `S_X = n_channels · η_X · B · log₂(1 + SINR_X) / n_users,X`
//!   with `B` in MHz and `n_users` taken from `n_laa_ue` / `n_wifi_sta`.

use nalgebra::DVector;

use crate::domain::{ParameterSpace, Scenario, SpaceDefinition};
use crate::error::{Error, Result};
use crate::objective::Objective;
use crate::scalar::Real;

/// Payload duration in idle slots.
pub const PAYLOAD_SLOTS: f64 = 50.0;
/// Header and acknowledgement overhead in idle slots.
pub const OVERHEAD_SLOTS: f64 = 4.0;
/// Shadowing enters as this multiple of `σ_shadow`, in dB.
pub const SHADOW_PENALTY: f64 = 0.5;

const DAMPING: f64 = 0.5;
const FIXED_POINT_TOL: f64 = 1e-12;
const FIXED_POINT_CAP: usize = 10_000;

/// Parameter names in box order.
pub const PARAMETERS: [&str; 17] = [
    "cw_min_wifi",
    "cw_min_laa",
    "backoff_stage_wifi",
    "backoff_stage_laa",
    "tx_distance_m",
    "tx_rx_distance_m",
    "tx_height_m",
    "rx_height_m",
    "shadow_sigma_db",
    "k_los_db",
    "k_nlos_db",
    "alpha_los",
    "alpha_nlos",
    "antenna_gain_dbi",
    "noise_figure_db",
    "tx_power_dbm",
    "bandwidth_mhz",
];

/// `k + α log₁₀ d`.
pub fn path_loss_db(k: f64, alpha: f64, d: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::Domain {
            parameter: "distance".into(),
            message: format!("distance {d} must be strictly positive"),
        });
    }
    Ok(k + alpha * d.log10())
}

fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Contention parameters of one network.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacConfig {
    /// Minimum contention window.
    pub w: f64,
    /// Maximum back-off stage; non-integer values are allowed.
    pub b: f64,
    /// Contending nodes; zero means the network is absent.
    pub n: f64,
}

impl MacConfig {
    pub fn new(w: f64, b: f64, n: f64) -> Result<Self> {
        let cfg = Self { w, b, n };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        let bad = |parameter: &str, message: String| {
            Err(Error::Domain {
                parameter: parameter.into(),
                message,
            })
        };
        if !(self.w >= 1.0) || !self.w.is_finite() {
            return bad(
                "contention window",
                format!("{} must be at least 1", self.w),
            );
        }
        if !(self.b >= 0.0) || !self.b.is_finite() {
            return bad("back-off stage", format!("{} must be non-negative", self.b));
        }
        if !(self.n >= 0.0) || !self.n.is_finite() {
            return bad("node count", format!("{} must be non-negative", self.n));
        }
        Ok(())
    }
}

/// `(1 − x^b) / (1 − x)`, continuous at `x = 1`.
fn geometric_sum(x: f64, b: f64) -> f64 {
    let e = x - 1.0;
    if e.abs() < 1e-6 {
        b + 0.5 * b * (b - 1.0) * e
    } else {
        (1.0 - x.powf(b)) / (1.0 - x)
    }
}

/// Attempt probability for collision probability `p`:
/// `τ = 2(1 − 2p) / ((1 − 2p)(W + 1) + pW(1 − (2p)^b))`.
pub fn attempt_probability(cfg: &MacConfig, p: f64) -> f64 {
    2.0 / (cfg.w + 1.0 + p * cfg.w * geometric_sum(2.0 * p, cfg.b))
}

/// Solution of the two-class access fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccessProbabilities {
    pub tau_a: f64,
    pub tau_b: f64,
    pub p_a: f64,
    pub p_b: f64,
    pub iterations: usize,
    pub residual: f64,
}

fn collisions(a: &MacConfig, b: &MacConfig, tau_a: f64, tau_b: f64) -> (f64, f64) {
    let p = |own: &MacConfig, t_own: f64, t_other: f64, n_other: f64| {
        if own.n == 0.0 {
            0.0
        } else {
            1.0 - (1.0 - t_own).powf(own.n - 1.0) * (1.0 - t_other).powf(n_other)
        }
    };
    (p(a, tau_a, tau_b, b.n), p(b, tau_b, tau_a, a.n))
}

impl AccessProbabilities {
    /// Largest violation of the defining equations.
    pub fn check(&self, a: &MacConfig, b: &MacConfig) -> f64 {
        let tau = |cfg: &MacConfig, p: f64| {
            if cfg.n == 0.0 {
                0.0
            } else {
                attempt_probability(cfg, p)
            }
        };
        let (pa, pb) = collisions(a, b, self.tau_a, self.tau_b);
        [
            self.tau_a - tau(a, self.p_a),
            self.tau_b - tau(b, self.p_b),
            self.p_a - pa,
            self.p_b - pb,
        ]
        .iter()
        .fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Damped iteration of the two-class Bianchi map.
pub fn access_probability(a: &MacConfig, b: &MacConfig) -> Result<AccessProbabilities> {
    a.validate()?;
    b.validate()?;
    let tau = |cfg: &MacConfig, p: f64| {
        if cfg.n == 0.0 {
            0.0
        } else {
            attempt_probability(cfg, p)
        }
    };
    let (mut pa, mut pb) = (0.0, 0.0);
    let mut residual = f64::INFINITY;
    for iteration in 1..=FIXED_POINT_CAP {
        let (ta, tb) = (tau(a, pa), tau(b, pb));
        let (na, nb) = collisions(a, b, ta, tb);
        residual = (na - pa).abs().max((nb - pb).abs());
        pa = DAMPING * pa + (1.0 - DAMPING) * na;
        pb = DAMPING * pb + (1.0 - DAMPING) * nb;
        if residual < FIXED_POINT_TOL {
            let (tau_a, tau_b) = (tau(a, pa), tau(b, pb));
            let (p_a, p_b) = collisions(a, b, tau_a, tau_b);
            return Ok(AccessProbabilities {
                tau_a,
                tau_b,
                p_a,
                p_b,
                iterations: iteration,
                residual,
            });
        }
    }
    Err(Error::FixedPoint { residual })
}

/// Physical-layer parameters shared by both networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub antenna_gain_dbi: f64,
    pub noise_figure_db: f64,
    pub bandwidth_mhz: f64,
    pub k_los_db: f64,
    pub k_nlos_db: f64,
    pub alpha_los: f64,
    pub alpha_nlos: f64,
    pub tx_distance_m: f64,
    pub tx_rx_distance_m: f64,
    pub tx_height_m: f64,
    pub rx_height_m: f64,
    pub shadow_sigma_db: f64,
}

impl LinkBudget {
    fn distance(&self, horizontal: f64) -> f64 {
        horizontal.hypot(self.tx_height_m - self.rx_height_m)
    }

    /// Thermal noise plus receiver noise figure, in dBm.
    pub fn noise_floor_dbm(&self) -> f64 {
        -174.0 + 10.0 * (self.bandwidth_mhz * 1e6).log10() + self.noise_figure_db
    }

    pub fn serving_power_dbm(&self) -> Result<f64> {
        let loss = path_loss_db(
            self.k_los_db,
            self.alpha_los,
            self.distance(self.tx_rx_distance_m),
        )?;
        Ok(
            self.tx_power_dbm + self.antenna_gain_dbi
                - loss
                - SHADOW_PENALTY * self.shadow_sigma_db,
        )
    }

    pub fn interference_power_dbm(&self) -> Result<f64> {
        let loss = path_loss_db(
            self.k_nlos_db,
            self.alpha_nlos,
            self.distance(self.tx_distance_m),
        )?;
        Ok(
            self.tx_power_dbm + self.antenna_gain_dbi
                - loss
                - SHADOW_PENALTY * self.shadow_sigma_db,
        )
    }

    /// Linear SINR with the interferer active a fraction `activity` of the time.
    pub fn sinr(&self, activity: f64) -> Result<f64> {
        if !(self.bandwidth_mhz > 0.0) {
            return Err(Error::Domain {
                parameter: "bandwidth_mhz".into(),
                message: format!("{} must be strictly positive", self.bandwidth_mhz),
            });
        }
        let s = db_to_linear(self.serving_power_dbm()?);
        let i = db_to_linear(self.interference_power_dbm()?);
        let n = db_to_linear(self.noise_floor_dbm());
        Ok(s / (n + activity * i))
    }

    /// `B · log₂(1 + SINR)` with no interference, in Mbit/s.
    pub fn capacity_bound(&self) -> Result<f64> {
        Ok(self.bandwidth_mhz * (1.0 + self.sinr(0.0)?).log2())
    }
}

/// Which of the two networks an objective reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Network {
    Laa,
    Wifi,
}

impl Network {
    pub fn label(self) -> &'static str {
        match self {
            Network::Laa => "L",
            Network::Wifi => "W",
        }
    }
}

fn scenario_count(scenario: &Scenario, key: &str) -> Result<f64> {
    scenario.require(key)
}

/// Per-user throughputs `(S_L, S_W)` in Mbit/s at `theta` (original units, box order).
pub fn demo_throughputs(theta: &[f64], scenario: &Scenario) -> Result<(f64, f64)> {
    if theta.len() != PARAMETERS.len() {
        return Err(Error::Argument(format!(
            "demo model takes {} parameters, got {}",
            PARAMETERS.len(),
            theta.len()
        )));
    }
    for (name, v) in PARAMETERS.iter().zip(theta) {
        if !v.is_finite() {
            return Err(Error::Domain {
                parameter: (*name).into(),
                message: format!("value {v} is not finite"),
            });
        }
    }
    let channels = scenario_count(scenario, "n_channels")?;
    let n_laa = scenario_count(scenario, "n_laa_enodeb")? / channels;
    let n_wifi = scenario_count(scenario, "n_wifi_ap")? / channels;
    let users_laa = scenario_count(scenario, "n_laa_ue")?;
    let users_wifi = scenario_count(scenario, "n_wifi_sta")?;

    let wifi = MacConfig::new(theta[0], theta[2], n_wifi)?;
    let laa = MacConfig::new(theta[1], theta[3], n_laa)?;
    let link = LinkBudget {
        tx_distance_m: theta[4],
        tx_rx_distance_m: theta[5],
        tx_height_m: theta[6],
        rx_height_m: theta[7],
        shadow_sigma_db: theta[8],
        k_los_db: theta[9],
        k_nlos_db: theta[10],
        alpha_los: theta[11],
        alpha_nlos: theta[12],
        antenna_gain_dbi: theta[13],
        noise_figure_db: theta[14],
        tx_power_dbm: theta[15],
        bandwidth_mhz: theta[16],
    };
    let access = access_probability(&laa, &wifi)?;

    let p_tr = 1.0 - (1.0 - access.tau_a).powf(laa.n) * (1.0 - access.tau_b).powf(wifi.n);
    let slot = (1.0 - p_tr) + p_tr * (PAYLOAD_SLOTS + OVERHEAD_SLOTS);
    let airtime =
        |cfg: &MacConfig, tau: f64, p: f64| cfg.n * tau * (1.0 - p) * PAYLOAD_SLOTS / slot;
    let activity = |cfg: &MacConfig, tau: f64| 1.0 - (1.0 - tau).powf(cfg.n);

    let s_l = channels
        * airtime(&laa, access.tau_a, access.p_a)
        * link.bandwidth_mhz
        * (1.0 + link.sinr(activity(&wifi, access.tau_b))?).log2()
        / users_laa;
    let s_w = channels
        * airtime(&wifi, access.tau_b, access.p_b)
        * link.bandwidth_mhz
        * (1.0 + link.sinr(activity(&laa, access.tau_a))?).log2()
        / users_wifi;
    Ok((s_l, s_w))
}

/// One output of the demo model as an [`Objective`].
///
/// When built from a space definition the parameter box is enforced and the
/// parameters are located by name.
#[derive(Debug, Clone)]
pub struct DemoCoexistence {
    network: Network,
    name: String,
    box_check: Option<ParameterSpace<f64>>,
    order: [usize; 17],
}

impl DemoCoexistence {
    /// Unchecked objective over parameters in [`PARAMETERS`] order.
    pub fn new(network: Network) -> Self {
        Self {
            network,
            name: network.label().into(),
            box_check: None,
            order: std::array::from_fn(|i| i),
        }
    }

    /// Objective bound to a definition containing every name in [`PARAMETERS`].
    pub fn for_definition(network: Network, definition: &SpaceDefinition) -> Result<Self> {
        let mut order = [0usize; 17];
        for (slot, name) in order.iter_mut().zip(PARAMETERS) {
            *slot = definition
                .parameters
                .iter()
                .position(|p| p.name == name)
                .ok_or_else(|| Error::Domain {
                    parameter: name.into(),
                    message: "missing from the parameter space".into(),
                })?;
        }
        for key in [
            "n_channels",
            "n_laa_enodeb",
            "n_wifi_ap",
            "n_laa_ue",
            "n_wifi_sta",
        ] {
            definition.scenario.require(key)?;
        }
        Ok(Self {
            network,
            name: network.label().into(),
            box_check: Some(definition.space()?),
            order,
        })
    }

    /// Both objectives, LAA first.
    pub fn pair(definition: &SpaceDefinition) -> Result<(Self, Self)> {
        Ok((
            Self::for_definition(Network::Laa, definition)?,
            Self::for_definition(Network::Wifi, definition)?,
        ))
    }

    pub fn network(&self) -> Network {
        self.network
    }
}

impl<T: Real> Objective<T> for DemoCoexistence {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, theta: &DVector<T>, scenario: &Scenario) -> Result<T> {
        let theta64 = DVector::from_iterator(theta.len(), theta.iter().map(|v| v.to_f64_lossy()));
        if let Some(space) = &self.box_check {
            space.scale_to_unit(&theta64)?;
        } else if theta.len() != PARAMETERS.len() {
            return Err(Error::Argument(format!(
                "demo model takes {} parameters, got {}",
                PARAMETERS.len(),
                theta.len()
            )));
        }
        let ordered: Vec<f64> = self.order.iter().map(|&i| theta64[i]).collect();
        let (s_l, s_w) = demo_throughputs(&ordered, scenario)?;
        Ok(T::lit(match self.network {
            Network::Laa => s_l,
            Network::Wifi => s_w,
        }))
    }
}
