use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::CliError;

/// Environment variable consulted when no output directory is configured.
pub const OUT_ENV: &str = "PARETO_TRACE_OUT";
/// Output directory used when neither flag, file, nor environment set one.
pub const DEFAULT_OUT: &str = "out";

/// Active-subspace dimension: fixed, or chosen from the spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankChoice {
    Fixed(usize),
    Auto,
}

impl FromStr for RankChoice {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(RankChoice::Auto);
        }
        s.parse::<usize>()
            .map(RankChoice::Fixed)
            .map_err(|_| format!("rank must be a positive integer or `auto`, got `{s}`"))
    }
}

impl fmt::Display for RankChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RankChoice::Fixed(r) => write!(f, "{r}"),
            RankChoice::Auto => f.write_str("auto"),
        }
    }
}

impl Serialize for RankChoice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            RankChoice::Fixed(r) => s.serialize_u64(*r as u64),
            RankChoice::Auto => s.serialize_str("auto"),
        }
    }
}

impl<'de> Deserialize<'de> for RankChoice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(usize),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(r) => Ok(RankChoice::Fixed(r)),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Which objective pair a run uses.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObjectiveSet {
    DemoCoex,
    Synthetic(String),
}

impl FromStr for ObjectiveSet {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "demo-coex" {
            return Ok(ObjectiveSet::DemoCoex);
        }
        if let Some(name) = s.strip_prefix("synthetic:") {
            if pareto_trace::synthetic::CATALOG.contains(&name) {
                return Ok(ObjectiveSet::Synthetic(name.to_string()));
            }
            return Err(format!(
                "unknown synthetic objective `{name}`; available: {}",
                pareto_trace::synthetic::CATALOG.join(", ")
            ));
        }
        Err(format!(
            "unknown objective set `{s}`; use `demo-coex` or `synthetic:<name>`"
        ))
    }
}

/// Every pipeline setting. Config-file keys match the long flag names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "kebab-case")]
pub struct PipelineConfig {
    pub objectives: String,
    /// Parameter-space JSON; the built-in 17-parameter box when absent.
    pub space: Option<PathBuf>,
    pub n: usize,
    pub h: f64,
    pub seed: u64,
    pub degree: usize,
    pub rank: RankChoice,
    pub mix_grid: usize,
    pub trace_steps: usize,
    pub fiber_k: usize,
    pub threads: usize,
    pub out: Option<PathBuf>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            objectives: "demo-coex".into(),
            space: None,
            n: 1000,
            h: 1e-6,
            seed: 0,
            degree: 2,
            rank: RankChoice::Fixed(2),
            mix_grid: 100,
            trace_steps: 100,
            fiber_k: 25,
            threads: 1,
            out: None,
        }
    }
}

impl PipelineConfig {
    pub fn from_toml_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::load(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        self.objective_set().map_err(CliError::Config)?;
        if self.n < 1 {
            return bad("n must be at least 1".into());
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h must be positive, got {}", self.h));
        }
        if self.degree < 1 {
            return bad("degree must be at least 1".into());
        }
        if self.rank == RankChoice::Fixed(0) {
            return bad("rank must be at least 1".into());
        }
        if self.mix_grid < 2 {
            return bad(format!(
                "mix-grid must be at least 2, got {}",
                self.mix_grid
            ));
        }
        if self.trace_steps < 2 {
            return bad(format!(
                "trace-steps must be at least 2, got {}",
                self.trace_steps
            ));
        }
        if self.fiber_k < 1 {
            return bad("fiber-k must be at least 1".into());
        }
        Ok(())
    }

    pub fn objective_set(&self) -> Result<ObjectiveSet, String> {
        self.objectives.parse()
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }

    pub fn execution(&self) -> pareto_trace::Execution {
        pareto_trace::Execution::from_threads(self.threads)
    }
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// TOML file whose keys mirror these flags.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// `demo-coex` or `synthetic:<ridge|quadratic|mirror|quartic|isotropic>`.
    #[arg(long)]
    pub objectives: Option<String>,
    /// Parameter-space JSON (bounds, nominals, scenario).
    #[arg(long, value_name = "FILE")]
    pub space: Option<PathBuf>,
    /// Number of Monte Carlo samples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Forward-difference step in scaled coordinates.
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Polynomial degree of the mixing and reported ridge fits.
    #[arg(long)]
    pub degree: Option<usize>,
    /// Active-subspace dimension, or `auto`.
    #[arg(long)]
    pub rank: Option<RankChoice>,
    /// Grid intervals for the subspace mixing search.
    #[arg(long)]
    pub mix_grid: Option<usize>,
    /// Grid intervals of the Pareto trace on t in [0, 1].
    #[arg(long)]
    pub trace_steps: Option<usize>,
    /// Inactive-fiber samples per trace point.
    #[arg(long)]
    pub fiber_k: Option<usize>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Output directory (falls back to $PARETO_TRACE_OUT, then `out`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

impl ConfigArgs {
    /// Defaults, then the config file, then flags, then the environment for `out`.
    pub fn resolve(&self) -> Result<PipelineConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => PipelineConfig::from_toml_file(path)?,
            None => PipelineConfig::default(),
        };
        if let Some(v) = &self.objectives {
            cfg.objectives = v.clone();
        }
        if let Some(v) = &self.space {
            cfg.space = Some(v.clone());
        }
        macro_rules! take {
            ($($f:ident),*) => { $( if let Some(v) = self.$f { cfg.$f = v; } )* };
        }
        take!(
            n,
            h,
            seed,
            degree,
            rank,
            mix_grid,
            trace_steps,
            fiber_k,
            threads
        );
        if let Some(v) = &self.out {
            cfg.out = Some(v.clone());
        }
        if cfg.out.is_none() {
            cfg.out = std::env::var_os(OUT_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_parsing() {
        assert_eq!("auto".parse::<RankChoice>().unwrap(), RankChoice::Auto);
        assert_eq!("3".parse::<RankChoice>().unwrap(), RankChoice::Fixed(3));
        assert!("x".parse::<RankChoice>().is_err());
    }

    #[test]
    fn toml_keys_mirror_flags() {
        let cfg: PipelineConfig = toml::from_str(
            "objectives = \"synthetic:ridge\"\nmix-grid = 10\nrank = \"auto\"\nfiber-k = 3",
        )
        .unwrap();
        assert_eq!(cfg.mix_grid, 10);
        assert_eq!(cfg.rank, RankChoice::Auto);
        assert_eq!(cfg.fiber_k, 3);
        assert_eq!(cfg.n, 1000);
        assert!(toml::from_str::<PipelineConfig>("mixgrid = 3").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = PipelineConfig {
            rank: RankChoice::Auto,
            ..Default::default()
        };
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<PipelineConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("pt-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let file = dir.join("c.toml");
        std::fs::write(&file, "n = 50\nseed = 4\nout = \"a\"").unwrap();
        let args = ConfigArgs {
            config: Some(file),
            seed: Some(9),
            ..Default::default()
        };
        let cfg = args.resolve().unwrap();
        assert_eq!((cfg.n, cfg.seed), (50, 9));
        assert_eq!(cfg.out_dir(), PathBuf::from("a"));
        std::fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        for cfg in [
            PipelineConfig {
                n: 0,
                ..Default::default()
            },
            PipelineConfig {
                h: 0.0,
                ..Default::default()
            },
            PipelineConfig {
                mix_grid: 1,
                ..Default::default()
            },
            PipelineConfig {
                objectives: "synthetic:nope".into(),
                ..Default::default()
            },
        ] {
            assert_eq!(cfg.validate().unwrap_err().exit_code(), 2);
        }
    }
}
