//! Pipeline stages, their artifacts, and the single-shot run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use pareto_trace::coexistence::DemoCoexistence;
use pareto_trace::domain::{ParameterSpace, SampleSet, Scenario, SpaceDefinition};
use pareto_trace::gradients::{estimate_c, ForwardDifference, GradientSet, SpectralEstimate};
use pareto_trace::grassmann::{geodesic, mix_subspaces, MixOptions};
use pareto_trace::objective::{Bound, Counting, ScaledObjective};
use pareto_trace::pareto::{
    evaluate_trace_objectives, non_dominated, ode_trace, project_domain_2d, quadratic_trace,
    uniform_grid, FrontRow, FrontSample, ParetoTrace, Zonotope2D,
};
use pareto_trace::subspace::{
    fit_ridge, select_rank, shadow_data, to_quadratic, Frame, QuadraticSurrogate,
};
use pareto_trace::synthetic::synthetic_pair;

use crate::artifacts::{
    fmt_f64, gradients_file, read_json, ridge_file, shadow_file, spectrum_file, FileRecord,
    MixArtifact, MixSample, OutputDir, RidgeArtifact, SpectrumArtifact, Table, FRONT, MANIFEST,
    MIX, NONDOMINATED, SAMPLES, TRACE, ZONOTOPE,
};
use crate::config::{ObjectiveSet, PipelineConfig, RankChoice};
use crate::error::{CliError, StageExt};

pub const LABELS: [&str; 2] = ["L", "W"];
/// Golden-section stopping width of the mixing search.
pub const MIX_TOLERANCE: f64 = 1e-4;

type DynObjective = Box<dyn ScaledObjective<f64>>;

/// Physical demo objective owning its parameter box and scenario.
struct DemoScaled {
    objective: DemoCoexistence,
    space: ParameterSpace<f64>,
    scenario: Scenario,
}

impl ScaledObjective<f64> for DemoScaled {
    fn name(&self) -> &str {
        pareto_trace::objective::Objective::<f64>::name(&self.objective)
    }
    fn value(&self, x: &DVector<f64>) -> pareto_trace::Result<f64> {
        Bound::new(&self.objective, &self.space, &self.scenario).value(x)
    }
}

/// Parameter box plus the two counted objectives on scaled coordinates.
pub struct Problem {
    pub set: ObjectiveSet,
    pub definition: SpaceDefinition,
    pub space: ParameterSpace<f64>,
    pub laa: Counting<DynObjective>,
    pub wifi: Counting<DynObjective>,
}

impl Problem {
    pub fn new(cfg: &PipelineConfig) -> Result<Self, CliError> {
        let set = cfg.objective_set().map_err(CliError::Config)?;
        let definition = match &cfg.space {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| CliError::load(path, e))?;
                SpaceDefinition::from_json(&text)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
            }
            None => SpaceDefinition::table1(),
        };
        let config_err = |e: pareto_trace::Error| CliError::Config(e.to_string());
        let space = definition.space::<f64>().map_err(config_err)?;
        let (laa, wifi): (DynObjective, DynObjective) = match &set {
            ObjectiveSet::DemoCoex => {
                let (l, w) = DemoCoexistence::pair(&definition).map_err(config_err)?;
                let wrap = |objective| DemoScaled {
                    objective,
                    space: space.clone(),
                    scenario: definition.scenario.clone(),
                };
                (Box::new(wrap(l)), Box::new(wrap(w)))
            }
            ObjectiveSet::Synthetic(name) => {
                let pair = synthetic_pair::<f64>(name, space.dim()).map_err(config_err)?;
                (Box::new(pair.laa), Box::new(pair.wifi))
            }
        };
        Ok(Self {
            set,
            definition,
            space,
            laa: Counting::new(laa),
            wifi: Counting::new(wifi),
        })
    }

    pub fn objectives(&self) -> [&Counting<DynObjective>; 2] {
        [&self.laa, &self.wifi]
    }

    fn names(&self) -> Vec<String> {
        self.space.specs().iter().map(|s| s.name.clone()).collect()
    }

    pub fn note(&self) -> &'static str {
        match self.set {
            ObjectiveSet::DemoCoex => {
                "demo-coex is an illustrative stand-in throughput model; its values are not calibrated measurements"
            }
            ObjectiveSet::Synthetic(_) => "synthetic analytic oracle with planted structure",
        }
    }
}

fn samples_header(names: &[String]) -> Vec<String> {
    std::iter::once("index".to_string())
        .chain(names.iter().map(|n| format!("{n}_scaled")))
        .chain(names.iter().cloned())
        .collect()
}

fn gradients_header(names: &[String]) -> Vec<String> {
    ["index".to_string(), "value".to_string()]
        .into_iter()
        .chain(names.iter().map(|n| format!("d_{n}")))
        .collect()
}

fn y_names(r: usize) -> Vec<String> {
    (1..=r).map(|i| format!("y{i}")).collect()
}

fn trace_header(r: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain(y_names(r))
        .chain(["in_domain", "sL_surrogate", "sW_surrogate"].map(String::from))
        .collect()
}

fn front_header() -> Vec<String> {
    [
        "t", "sL_mean", "sW_mean", "sL_min", "sL_max", "sW_min", "sW_max",
    ]
    .map(String::from)
    .to_vec()
}

// ---------------------------------------------------------------- sample

pub fn draw_samples(cfg: &PipelineConfig, problem: &Problem) -> Result<SampleSet<f64>, CliError> {
    problem
        .space
        .sample_uniform(cfg.n, cfg.seed)
        .stage("sample")
}

/// Forward-difference gradients of both objectives at every sample, LAA first.
pub fn sample_gradients(
    cfg: &PipelineConfig,
    problem: &Problem,
    points: &DMatrix<f64>,
) -> Result<[GradientSet<f64>; 2], CliError> {
    let mut out = Vec::with_capacity(2);
    for (label, objective) in LABELS.iter().zip(problem.objectives()) {
        let before = objective.count();
        let fd = ForwardDifference::new(objective, cfg.h).stage("gradients")?;
        let (_, set) = estimate_c(&fd, points, cfg.execution()).stage("gradients")?;
        info!(
            "gradients {label}: {} evaluations",
            objective.count() - before
        );
        out.push(set);
    }
    Ok(out.try_into().expect("two objectives"))
}

pub fn write_samples(
    out: &mut OutputDir,
    problem: &Problem,
    samples: &SampleSet<f64>,
) -> Result<(), CliError> {
    let names = problem.names();
    let rows: Vec<Vec<String>> = (0..samples.len())
        .map(|i| {
            std::iter::once(i.to_string())
                .chain(samples.scaled.row(i).iter().map(|v| fmt_f64(*v)))
                .chain(samples.original.row(i).iter().map(|v| fmt_f64(*v)))
                .collect()
        })
        .collect();
    out.csv(SAMPLES, &samples_header(&names), &rows)
}

pub fn write_gradients(
    out: &mut OutputDir,
    problem: &Problem,
    label: &str,
    set: &GradientSet<f64>,
) -> Result<(), CliError> {
    let rows: Vec<Vec<String>> = (0..set.values.len())
        .map(|i| {
            [i.to_string(), fmt_f64(set.values[i])]
                .into_iter()
                .chain(set.grads.row(i).iter().map(|v| fmt_f64(*v)))
                .collect()
        })
        .collect();
    out.csv(
        &gradients_file(label),
        &gradients_header(&problem.names()),
        &rows,
    )
}

pub fn read_samples(path: &Path, problem: &Problem) -> Result<DMatrix<f64>, CliError> {
    let names = problem.names();
    let table = Table::read(path)?;
    table.expect_header(&samples_header(&names))?;
    let cols: Vec<String> = names.iter().map(|n| format!("{n}_scaled")).collect();
    table.f64_matrix(&cols)
}

/// `(values, gradient rows)` from a gradients file.
pub fn read_gradients(
    path: &Path,
    problem: &Problem,
) -> Result<(DVector<f64>, DMatrix<f64>), CliError> {
    let names = problem.names();
    let table = Table::read(path)?;
    table.expect_header(&gradients_header(&names))?;
    let cols: Vec<String> = names.iter().map(|n| format!("d_{n}")).collect();
    Ok((table.f64_column("value")?, table.f64_matrix(&cols)?))
}

// -------------------------------------------------------------- subspace

pub fn spectrum(
    cfg: &PipelineConfig,
    label: &str,
    grads: &DMatrix<f64>,
) -> Result<SpectrumArtifact, CliError> {
    let est = SpectralEstimate::from_gradients(grads).stage("subspace")?;
    let selected_rank = select_rank(&est.eigenvalues, None).stage("subspace")?;
    let mut art = SpectrumArtifact {
        objective: label.to_string(),
        n: est.samples,
        h: Some(cfg.h),
        seed: cfg.seed,
        selected_rank,
        eigenvalues: est.eigenvalues.iter().copied().collect(),
        eigenvectors: Vec::new(),
    };
    art.set_vectors(&est.eigenvectors);
    Ok(art)
}

// ------------------------------------------------------------------- mix

pub fn mixing_rank(cfg: &PipelineConfig, spectra: &[SpectrumArtifact; 2]) -> usize {
    match cfg.rank {
        RankChoice::Fixed(r) => r,
        RankChoice::Auto => spectra[0].selected_rank.max(spectra[1].selected_rank),
    }
}

/// Geodesic from the Wi-Fi frame (`s = 0`) to the LAA frame (`s = 1`) and the maximin search.
pub fn mix(
    cfg: &PipelineConfig,
    points: &DMatrix<f64>,
    values: [&DVector<f64>; 2],
    spectra: &[SpectrumArtifact; 2],
) -> Result<MixArtifact, CliError> {
    let m = points.ncols();
    let r = mixing_rank(cfg, spectra);
    if r > m {
        return Err(CliError::Config(format!(
            "rank {r} exceeds the {m} parameters"
        )));
    }
    let frame = |s: &SpectrumArtifact| s.frame(r, Path::new(&spectrum_file(&s.objective)));
    let (frame_l, frame_w) = (frame(&spectra[0])?, frame(&spectra[1])?);
    let path = geodesic(&frame_w, &frame_l).stage("mix")?;
    let options = MixOptions {
        degree: cfg.degree,
        grid: cfg.mix_grid,
        tolerance: MIX_TOLERANCE,
        exec: cfg.execution(),
    };
    let result = mix_subspaces(&path, points, values[0], values[1], options).stage("mix")?;
    info!(
        "mix: s* = {:.6}, R2_L = {:.4}, R2_W = {:.4}",
        result.s_star, result.r2_l, result.r2_w
    );
    let mut art = MixArtifact {
        s_star: result.s_star,
        r2_l: result.r2_l,
        r2_w: result.r2_w,
        frame: Vec::new(),
        rank: r,
        degree: cfg.degree,
        grid: cfg.mix_grid,
        tolerance: MIX_TOLERANCE,
        angles: path.angles().iter().copied().collect(),
        distance: path.length(),
        trace: result
            .trace
            .iter()
            .map(|p| MixSample {
                s: p.s,
                r2_l: p.r2_l,
                r2_w: p.r2_w,
            })
            .collect(),
    };
    art.set_frame(&result.frame);
    Ok(art)
}

/// Quadratic ridge fits of both objectives over the mixed frame.
pub struct Fits {
    pub ridges: [RidgeArtifact; 2],
    pub surrogates: [QuadraticSurrogate<f64>; 2],
    /// R² of the fits at the configured degree.
    pub r2_at_degree: [f64; 2],
}

pub fn fit(
    cfg: &PipelineConfig,
    points: &DMatrix<f64>,
    values: [&DVector<f64>; 2],
    frame: &Frame<f64>,
) -> Result<Fits, CliError> {
    let mut ridges = Vec::new();
    let mut surrogates = Vec::new();
    let mut r2 = [0.0; 2];
    for (k, label) in LABELS.iter().enumerate() {
        let model = fit_ridge(points, values[k], frame, 2).stage("fit")?;
        let surrogate = to_quadratic(&model, None).stage("fit")?;
        if surrogate.convexified {
            info!("fit {label}: quadratic convexified");
        }
        r2[k] = if cfg.degree == 2 {
            model.r_squared
        } else {
            fit_ridge(points, values[k], frame, cfg.degree)
                .stage("fit")?
                .r_squared
        };
        ridges.push(RidgeArtifact::new(label, frame, &model, &surrogate));
        surrogates.push(surrogate);
    }
    Ok(Fits {
        ridges: ridges.try_into().expect("two fits"),
        surrogates: surrogates.try_into().expect("two fits"),
        r2_at_degree: r2,
    })
}

pub fn write_mix(
    out: &mut OutputDir,
    art: &MixArtifact,
    fits: &Fits,
    points: &DMatrix<f64>,
    values: [&DVector<f64>; 2],
    frame: &Frame<f64>,
) -> Result<(), CliError> {
    out.json(MIX, art)?;
    for (k, label) in LABELS.iter().enumerate() {
        out.json(&ridge_file(label), &fits.ridges[k])?;
        let shadow = shadow_data(frame, points, values[k]);
        let header: Vec<String> = y_names(frame.rank())
            .into_iter()
            .chain(["value".to_string()])
            .collect();
        let rows: Vec<Vec<String>> = (0..shadow.values.len())
            .map(|i| {
                shadow
                    .coords
                    .row(i)
                    .iter()
                    .map(|v| fmt_f64(*v))
                    .chain([fmt_f64(shadow.values[i])])
                    .collect()
            })
            .collect();
        out.csv(&shadow_file(label), &header, &rows)?;
    }
    Ok(())
}

// ----------------------------------------------------------------- trace

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeReport {
    pub steps: usize,
    /// ℓ∞ distance between the RK4 and closed-form traces over the trace grid.
    pub max_deviation: Option<f64>,
    pub error: Option<String>,
}

pub struct TraceOutcome {
    pub trace: ParetoTrace<f64>,
    pub ode: OdeReport,
    pub zonotope: Option<Zonotope2D<f64>>,
}

/// Closed-form trace on `trace_steps` intervals, cross-checked by RK4 with twice as many steps.
pub fn trace(
    cfg: &PipelineConfig,
    surrogates: &[QuadraticSurrogate<f64>; 2],
    frame: &Frame<f64>,
) -> Result<TraceOutcome, CliError> {
    let ts = uniform_grid::<f64>(cfg.trace_steps);
    let [l, w] = surrogates;
    let trace = quadratic_trace(l, w, &ts, frame).stage("trace")?;
    let steps = 2 * cfg.trace_steps;
    let ode = match ode_trace(l, w, &trace.ys[0], steps) {
        Ok(path) => {
            let dev = trace
                .ys
                .iter()
                .enumerate()
                .map(|(k, y)| (y - &path.ys[2 * k]).amax())
                .fold(0.0, f64::max);
            OdeReport {
                steps,
                max_deviation: Some(dev),
                error: None,
            }
        }
        Err(e) => OdeReport {
            steps,
            max_deviation: None,
            error: Some(e.to_string()),
        },
    };
    info!(
        "trace: {} points, {} in domain, ODE deviation {:?}",
        trace.len(),
        trace.in_domain.iter().filter(|f| **f).count(),
        ode.max_deviation
    );
    let zonotope = if frame.rank() == 2 {
        Some(project_domain_2d(frame).stage("trace")?)
    } else {
        None
    };
    Ok(TraceOutcome {
        trace,
        ode,
        zonotope,
    })
}

pub fn write_trace(out: &mut OutputDir, outcome: &TraceOutcome) -> Result<(), CliError> {
    let t = &outcome.trace;
    let r = t.ys.first().map_or(0, |y| y.len());
    let rows: Vec<Vec<String>> = (0..t.len())
        .map(|i| {
            std::iter::once(fmt_f64(t.ts[i]))
                .chain(t.ys[i].iter().map(|v| fmt_f64(*v)))
                .chain([
                    u8::from(t.in_domain[i]).to_string(),
                    fmt_f64(t.s_l[i]),
                    fmt_f64(t.s_w[i]),
                ])
                .collect()
        })
        .collect();
    out.csv(TRACE, &trace_header(r), &rows)?;
    if let Some(z) = &outcome.zonotope {
        let rows: Vec<Vec<String>> = z
            .vertices
            .iter()
            .enumerate()
            .map(|(i, v)| vec![i.to_string(), fmt_f64(v[0]), fmt_f64(v[1])])
            .collect();
        out.csv(ZONOTOPE, &["vertex", "y1", "y2"].map(String::from), &rows)?;
    }
    Ok(())
}

/// Reads `trace.csv` back; preimages are recomputed from `frame`.
pub fn read_trace(path: &Path, frame: &Frame<f64>) -> Result<ParetoTrace<f64>, CliError> {
    let table = Table::read(path)?;
    let r = frame.rank();
    table.expect_header(&trace_header(r))?;
    let ts: Vec<f64> = table.f64_column("t")?.iter().copied().collect();
    let ym = table.f64_matrix(&y_names(r))?;
    let ys: Vec<DVector<f64>> = ym.row_iter().map(|row| row.transpose()).collect();
    let flag = table.column("in_domain")?;
    let in_domain = table
        .rows
        .iter()
        .enumerate()
        .map(|(i, row)| match row[flag].as_str() {
            "1" => Ok(true),
            "0" => Ok(false),
            other => Err(CliError::load(
                path,
                format!("row {}: in_domain `{other}` is not 0 or 1", i + 1),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ParetoTrace {
        thetas: ys.iter().map(|y| frame.basis() * y).collect(),
        s_l: table.f64_column("sL_surrogate")?.iter().copied().collect(),
        s_w: table.f64_column("sW_surrogate")?.iter().copied().collect(),
        ts,
        ys,
        in_domain,
    })
}

// ----------------------------------------------------------------- front

pub fn front(
    cfg: &PipelineConfig,
    problem: &Problem,
    trace: &ParetoTrace<f64>,
    frame: &Frame<f64>,
) -> Result<Vec<FrontRow<f64>>, CliError> {
    let rows = evaluate_trace_objectives(
        trace,
        frame,
        &problem.laa,
        &problem.wifi,
        cfg.fiber_k,
        cfg.seed,
        cfg.execution(),
    )
    .stage("front")?;
    info!(
        "front: {} trace points with {} fiber samples each",
        rows.len(),
        cfg.fiber_k
    );
    Ok(rows)
}

pub fn nondominated(values: [&DVector<f64>; 2]) -> FrontSample {
    let pts: Vec<(f64, f64)> = values[0]
        .iter()
        .zip(values[1].iter())
        .map(|(l, w)| (*l, *w))
        .collect();
    non_dominated(&pts)
}

pub fn write_front(
    out: &mut OutputDir,
    rows: &[FrontRow<f64>],
    nd: &FrontSample,
    values: [&DVector<f64>; 2],
) -> Result<(), CliError> {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [
                r.t, r.s_l_mean, r.s_w_mean, r.s_l_min, r.s_l_max, r.s_w_min, r.s_w_max,
            ]
            .iter()
            .map(|v| fmt_f64(*v))
            .collect()
        })
        .collect();
    out.csv(FRONT, &front_header(), &body)?;
    let nd_rows: Vec<Vec<String>> = nd
        .indices
        .iter()
        .map(|&i| vec![i.to_string(), fmt_f64(values[0][i]), fmt_f64(values[1][i])])
        .collect();
    out.csv(
        NONDOMINATED,
        &["index", "sL", "sW"].map(String::from),
        &nd_rows,
    )
}

// -------------------------------------------------------------- manifest

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvaluationCounts {
    pub gradient: usize,
    pub fiber: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSummary {
    pub eigenvalues: Vec<f64>,
    pub selected_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixSummary {
    pub s_star: f64,
    pub r2_l: f64,
    pub r2_w: f64,
    pub min_r2_start: f64,
    pub min_r2_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub r2_quadratic: f64,
    pub degree: usize,
    pub r2_at_degree: f64,
    pub convexified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontSummary {
    pub rows: usize,
    pub nondominated: usize,
    /// Largest per-point spread (max − min) over the fiber samples.
    pub max_spread_l: f64,
    pub max_spread_w: f64,
    /// Range of the fiber means along the trace.
    pub mean_range_l: f64,
    pub mean_range_w: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub status: String,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub note: String,
    pub config: PipelineConfig,
    pub wall_time_seconds: f64,
    pub evaluations: BTreeMap<String, EvaluationCounts>,
    pub spectra: BTreeMap<String, SpectrumSummary>,
    pub rank: Option<usize>,
    pub mix: Option<MixSummary>,
    pub fits: BTreeMap<String, FitSummary>,
    pub ode: Option<OdeReport>,
    pub trace_points: Option<usize>,
    pub trace_in_domain: Option<usize>,
    pub front: Option<FrontSummary>,
    pub files: Vec<FileRecord>,
}

impl Manifest {
    fn new(cfg: &PipelineConfig) -> Self {
        Self {
            tool: "pareto-trace".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: "running".into(),
            failed_stage: None,
            error: None,
            note: String::new(),
            config: cfg.clone(),
            wall_time_seconds: 0.0,
            evaluations: BTreeMap::new(),
            spectra: BTreeMap::new(),
            rank: None,
            mix: None,
            fits: BTreeMap::new(),
            ode: None,
            trace_points: None,
            trace_in_domain: None,
            front: None,
            files: Vec::new(),
        }
    }
}

fn range(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = values.fold(f64::INFINITY, f64::min);
    max - min
}

fn summarize_front(rows: &[FrontRow<f64>], nd: &FrontSample) -> FrontSummary {
    FrontSummary {
        rows: rows.len(),
        nondominated: nd.len(),
        max_spread_l: rows.iter().map(FrontRow::spread_l).fold(0.0, f64::max),
        max_spread_w: rows.iter().map(FrontRow::spread_w).fold(0.0, f64::max),
        mean_range_l: range(rows.iter().map(|r| r.s_l_mean)),
        mean_range_w: range(rows.iter().map(|r| r.s_w_mean)),
    }
}

fn run_stages(
    cfg: &PipelineConfig,
    out: &mut OutputDir,
    manifest: &mut Manifest,
    stage: &mut &'static str,
) -> Result<(), CliError> {
    *stage = "setup";
    let problem = Problem::new(cfg)?;
    manifest.note = problem.note().into();

    *stage = "sample";
    let samples = draw_samples(cfg, &problem)?;
    write_samples(out, &problem, &samples)?;
    let sets = sample_gradients(cfg, &problem, &samples.scaled)?;
    for (k, label) in LABELS.iter().enumerate() {
        write_gradients(out, &problem, label, &sets[k])?;
        manifest.evaluations.insert(
            label.to_string(),
            EvaluationCounts {
                gradient: problem.objectives()[k].count(),
                fiber: 0,
            },
        );
    }
    let values = [&sets[0].values, &sets[1].values];

    *stage = "subspace";
    let spectra = [
        spectrum(cfg, LABELS[0], &sets[0].grads)?,
        spectrum(cfg, LABELS[1], &sets[1].grads)?,
    ];
    for s in &spectra {
        out.json(&spectrum_file(&s.objective), s)?;
        manifest.spectra.insert(
            s.objective.clone(),
            SpectrumSummary {
                eigenvalues: s.eigenvalues.clone(),
                selected_rank: s.selected_rank,
            },
        );
    }

    *stage = "mix";
    let mix_art = mix(cfg, &samples.scaled, values, &spectra)?;
    let frame = mix_art.frame(Path::new(MIX))?;
    let fits = fit(cfg, &samples.scaled, values, &frame)?;
    write_mix(out, &mix_art, &fits, &samples.scaled, values, &frame)?;
    let (start, end) = mix_art.endpoints();
    manifest.rank = Some(mix_art.rank);
    manifest.mix = Some(MixSummary {
        s_star: mix_art.s_star,
        r2_l: mix_art.r2_l,
        r2_w: mix_art.r2_w,
        min_r2_start: start.r2_l.min(start.r2_w),
        min_r2_end: end.r2_l.min(end.r2_w),
    });
    for (k, label) in LABELS.iter().enumerate() {
        manifest.fits.insert(
            label.to_string(),
            FitSummary {
                r2_quadratic: fits.ridges[k].r_squared,
                degree: cfg.degree,
                r2_at_degree: fits.r2_at_degree[k],
                convexified: fits.ridges[k].convexified,
            },
        );
    }

    *stage = "trace";
    let outcome = trace(cfg, &fits.surrogates, &frame)?;
    write_trace(out, &outcome)?;
    manifest.ode = Some(outcome.ode.clone());
    manifest.trace_points = Some(outcome.trace.len());
    manifest.trace_in_domain = Some(outcome.trace.in_domain.iter().filter(|f| **f).count());

    *stage = "front";
    let before = [problem.laa.count(), problem.wifi.count()];
    let rows = front(cfg, &problem, &outcome.trace, &frame)?;
    let nd = nondominated(values);
    write_front(out, &rows, &nd, values)?;
    for (k, label) in LABELS.iter().enumerate() {
        if let Some(c) = manifest.evaluations.get_mut(*label) {
            c.fiber = problem.objectives()[k].count() - before[k];
        }
    }
    manifest.front = Some(summarize_front(&rows, &nd));
    Ok(())
}

/// Runs every stage into the configured output directory and writes `manifest.json`.
///
/// On failure the manifest is still written, naming the failed stage and
/// listing the files produced so far.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Manifest, CliError> {
    let started = Instant::now();
    let mut out = OutputDir::create(cfg.out_dir())?;
    let mut manifest = Manifest::new(cfg);
    let mut stage = "setup";
    let result = run_stages(cfg, &mut out, &mut manifest, &mut stage);
    manifest.wall_time_seconds = started.elapsed().as_secs_f64();
    match &result {
        Ok(()) => manifest.status = "ok".into(),
        Err(e) => {
            manifest.status = "failed".into();
            manifest.failed_stage = Some(stage.into());
            manifest.error = Some(e.to_string());
        }
    }
    manifest.files = out.written().to_vec();
    out.json(MANIFEST, &manifest)?;
    result.map(|()| manifest)
}

// ------------------------------------------------------- stage commands

/// `sample`: samples plus gradients of both objectives.
pub fn run_sample(cfg: &PipelineConfig) -> Result<Vec<FileRecord>, CliError> {
    let problem = Problem::new(cfg)?;
    let mut out = OutputDir::create(cfg.out_dir())?;
    let samples = draw_samples(cfg, &problem)?;
    write_samples(&mut out, &problem, &samples)?;
    let sets = sample_gradients(cfg, &problem, &samples.scaled)?;
    for (k, label) in LABELS.iter().enumerate() {
        write_gradients(&mut out, &problem, label, &sets[k])?;
    }
    Ok(out.written().to_vec())
}

fn label_of(path: &Path) -> Result<String, CliError> {
    path.file_stem()
        .and_then(|s| s.to_str())
        .and_then(|s| s.strip_prefix("gradients_"))
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .ok_or_else(|| CliError::load(path, "file name must look like gradients_<label>.csv"))
}

/// `subspace`: spectrum files from gradient files (both default files under `input` when none given).
pub fn run_subspace(
    cfg: &PipelineConfig,
    input: &Path,
    files: &[PathBuf],
) -> Result<Vec<FileRecord>, CliError> {
    let problem = Problem::new(cfg)?;
    let files: Vec<PathBuf> = if files.is_empty() {
        LABELS
            .iter()
            .map(|l| input.join(gradients_file(l)))
            .collect()
    } else {
        files.to_vec()
    };
    let mut out = OutputDir::create(cfg.out_dir())?;
    for path in &files {
        let label = label_of(path)?;
        let (_, grads) = read_gradients(path, &problem)?;
        out.json(&spectrum_file(&label), &spectrum(cfg, &label, &grads)?)?;
    }
    Ok(out.written().to_vec())
}

fn read_values(input: &Path, problem: &Problem) -> Result<[DVector<f64>; 2], CliError> {
    let l = read_gradients(&input.join(gradients_file(LABELS[0])), problem)?.0;
    let w = read_gradients(&input.join(gradients_file(LABELS[1])), problem)?.0;
    Ok([l, w])
}

/// `mix`: mixed frame, quadratic fits, and shadow tables.
pub fn run_mix(cfg: &PipelineConfig, input: &Path) -> Result<Vec<FileRecord>, CliError> {
    let problem = Problem::new(cfg)?;
    let points = read_samples(&input.join(SAMPLES), &problem)?;
    let values = read_values(input, &problem)?;
    let spectra: [SpectrumArtifact; 2] = [
        read_json(&input.join(spectrum_file(LABELS[0])))?,
        read_json(&input.join(spectrum_file(LABELS[1])))?,
    ];
    let values = [&values[0], &values[1]];
    let art = mix(cfg, &points, values, &spectra)?;
    let frame = art.frame(Path::new(MIX))?;
    let fits = fit(cfg, &points, values, &frame)?;
    let mut out = OutputDir::create(cfg.out_dir())?;
    write_mix(&mut out, &art, &fits, &points, values, &frame)?;
    Ok(out.written().to_vec())
}

fn read_frame(input: &Path) -> Result<Frame<f64>, CliError> {
    let path = input.join(MIX);
    read_json::<MixArtifact>(&path)?.frame(&path)
}

/// `trace`: closed-form trace and projected domain from the ridge files.
pub fn run_trace(
    cfg: &PipelineConfig,
    input: &Path,
) -> Result<(Vec<FileRecord>, OdeReport), CliError> {
    let frame = read_frame(input)?;
    let load = |label: &str| {
        let path = input.join(ridge_file(label));
        read_json::<RidgeArtifact>(&path)?.surrogate(&path)
    };
    let surrogates = [load(LABELS[0])?, load(LABELS[1])?];
    let outcome = trace(cfg, &surrogates, &frame)?;
    let mut out = OutputDir::create(cfg.out_dir())?;
    write_trace(&mut out, &outcome)?;
    Ok((out.written().to_vec(), outcome.ode))
}

/// `front`: fiber evaluation along a trace file and the sample non-dominated set.
pub fn run_front(
    cfg: &PipelineConfig,
    input: &Path,
    trace_file: Option<&Path>,
) -> Result<Vec<FileRecord>, CliError> {
    let problem = Problem::new(cfg)?;
    let frame = read_frame(input)?;
    let default_trace = input.join(TRACE);
    let trace = read_trace(trace_file.unwrap_or(&default_trace), &frame)?;
    let values = read_values(input, &problem)?;
    let rows = front(cfg, &problem, &trace, &frame)?;
    let nd = nondominated([&values[0], &values[1]]);
    let mut out = OutputDir::create(cfg.out_dir())?;
    write_front(&mut out, &rows, &nd, [&values[0], &values[1]])?;
    Ok(out.written().to_vec())
}
