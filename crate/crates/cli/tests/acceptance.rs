//! One PASS/FAIL line per acceptance criterion. Exits non-zero if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pareto_trace::domain::uniform_cube;
use pareto_trace::gradients::{estimate_c, AnalyticGradient, ForwardDifference};
use pareto_trace::grassmann::{geodesic, mix_subspaces, subspace_distance, MixOptions};
use pareto_trace::objective::ScaledObjective;
use pareto_trace::pareto::{
    evaluate_trace_objectives, non_dominated, non_dominated_brute_force, ode_trace,
    project_domain_2d, quadratic_trace, sample_inactive_fiber, scalarized_gradient, uniform_grid,
};
use pareto_trace::subspace::Frame;
use pareto_trace::synthetic::{mirror_augmented, planted_frame, synthetic_pair};
use pareto_trace::Execution;

use pareto_trace_cli::artifacts::{read_json, MixArtifact, Table};
use pareto_trace_cli::pipeline::read_trace;
use pareto_trace_cli::{run_pipeline, Manifest, PipelineConfig};

type Outcome = Result<String, String>;
type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn line_frame(v: &DVector<f64>) -> Frame<f64> {
    Frame::new(DMatrix::from_column_slice(v.len(), 1, v.as_slice())).unwrap()
}

/// `½ Q⁻¹ rhs` for a 2×2 `Q` via the adjugate.
fn half_solve_2x2(q: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let det = q[(0, 0)] * q[(1, 1)] - q[(0, 1)] * q[(1, 0)];
    DVector::from_vec(vec![
        0.5 * (q[(1, 1)] * rhs[0] - q[(0, 1)] * rhs[1]) / det,
        0.5 * (q[(0, 0)] * rhs[1] - q[(1, 0)] * rhs[0]) / det,
    ])
}

struct Demo {
    dir: PathBuf,
    manifest: Manifest,
    seconds: f64,
}

fn demo_run(dir: &Path) -> Result<Demo, String> {
    let table1 = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../table1.json");
    let cfg = PipelineConfig {
        space: Some(table1),
        out: Some(dir.to_path_buf()),
        ..PipelineConfig::default()
    };
    let started = Instant::now();
    let manifest = run_pipeline(&cfg).map_err(|e| e.to_string())?;
    Ok(Demo {
        dir: dir.to_path_buf(),
        manifest,
        seconds: started.elapsed().as_secs_f64(),
    })
}

fn evaluation_count(demo: &Demo) -> Outcome {
    let counts: Vec<usize> = ["L", "W"]
        .iter()
        .map(|l| demo.manifest.evaluations[*l].gradient)
        .collect();
    ensure(
        counts == [18000, 18000] && demo.seconds < 300.0,
        format!(
            "gradient evaluations L={} W={}, demo run {:.2} s",
            counts[0], counts[1], demo.seconds
        ),
    )
}

fn ridge_recovery() -> Outcome {
    let pair = synthetic_pair::<f64>("ridge", 17).unwrap();
    let planted = line_frame(&pair.directions.clone().unwrap().0);
    let points = uniform_cube(1000, 17, 11);
    let (exact, _) = estimate_c(
        &AnalyticGradient::new(&pair.laa),
        &points,
        Execution::Sequential,
    )
    .unwrap();
    let ratio = exact.eigenvalues[1] / exact.eigenvalues[0];
    let d_exact = subspace_distance(&exact.frame(1).unwrap(), &planted);
    let fd = ForwardDifference::new(&pair.laa, 1e-6).unwrap();
    let (approx, _) = estimate_c(&fd, &points, Execution::Sequential).unwrap();
    let d_fd = subspace_distance(&approx.frame(1).unwrap(), &planted);
    ensure(
        ratio < 1e-8 && d_exact < 1e-6 && d_fd < 1e-4,
        format!(
            "λ2/λ1 = {ratio:.2e}, distance analytic {d_exact:.2e}, forward difference {d_fd:.2e}"
        ),
    )
}

fn isotropic_spectrum() -> Outcome {
    let pair = synthetic_pair::<f64>("isotropic", 17).unwrap();
    let points = uniform_cube(20000, 17, 12);
    let (est, _) = estimate_c(
        &AnalyticGradient::new(&pair.laa),
        &points,
        Execution::Sequential,
    )
    .unwrap();
    let third = 1.0 / 3.0;
    let worst = est
        .eigenvalues
        .iter()
        .map(|l| (l - third).abs() / third)
        .fold(0.0, f64::max);
    ensure(
        worst < 0.1,
        format!("largest relative deviation from 1/3: {worst:.4}"),
    )
}

fn ode_equivalence() -> Outcome {
    let pair = synthetic_pair::<f64>("quadratic", 17).unwrap();
    let (l, w) = pair.quadratics.unwrap();
    let frame = pair.shared_frame.unwrap();
    let closed = quadratic_trace(&l, &w, &uniform_grid::<f64>(100), &frame).unwrap();
    let path = ode_trace(&l, &w, &w.maximizer().unwrap(), 200).map_err(|e| e.to_string())?;
    let worst = (0..=100)
        .map(|k| (&path.ys[2 * k] - &closed.ys[k]).amax())
        .fold(0.0, f64::max);
    ensure(
        worst < 1e-6,
        format!("ℓ∞ deviation over 101 points: {worst:.2e}"),
    )
}

fn trace_endpoints() -> Outcome {
    let pair = synthetic_pair::<f64>("quadratic", 17).unwrap();
    let (l, w) = pair.quadratics.unwrap();
    let frame = pair.shared_frame.unwrap();
    let trace = quadratic_trace(&l, &w, &uniform_grid::<f64>(100), &frame).unwrap();
    let e0 = (&trace.ys[0] - half_solve_2x2(&w.q, &(-&w.a))).amax();
    let e1 = (&trace.ys[100] - half_solve_2x2(&l.q, &(-&l.a))).amax();

    let eye =
        pareto_trace::QuadraticSurrogate64::new(DMatrix::identity(2, 2), DVector::zeros(2), 0.0)
            .unwrap();
    let shifted = pareto_trace::QuadraticSurrogate64::new(
        DMatrix::identity(2, 2),
        DVector::from_vec(vec![-2.0, 0.0]),
        0.0,
    )
    .unwrap();
    let line = quadratic_trace(
        &shifted,
        &eye,
        &uniform_grid::<f64>(10),
        &Frame::coordinate(2, 2).unwrap(),
    )
    .unwrap();
    let e_line = line
        .ts
        .iter()
        .zip(&line.ys)
        .map(|(t, y)| (y - DVector::from_vec(vec![*t, 0.0])).amax())
        .fold(0.0, f64::max);
    ensure(
        e0 < 1e-10 && e1 < 1e-10 && e_line < 1e-12,
        format!("endpoint errors {e0:.2e} / {e1:.2e}, straight-line example {e_line:.2e}"),
    )
}

fn kung_sweep() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut mismatches = 0;
    for instance in 0..100 {
        let pts: Vec<(f64, f64)> = (0..1000)
            .map(|_| {
                let (a, b): (f64, f64) = (rng.random(), rng.random());
                if instance % 2 == 0 {
                    (a, b)
                } else {
                    ((a * 30.0).floor(), (b * 30.0).floor())
                }
            })
            .collect();
        if non_dominated(&pts) != non_dominated_brute_force(&pts) {
            mismatches += 1;
        }
    }
    ensure(
        mismatches == 0,
        format!("{mismatches} of 100 instances differ from brute force"),
    )
}

fn geodesic_properties() -> Outcome {
    let a = planted_frame::<f64>(17, 2, 21).unwrap();
    let b = planted_frame::<f64>(17, 2, 22).unwrap();
    let path = geodesic(&a, &b).map_err(|e| e.to_string())?;
    let full = subspace_distance(&b, &a);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let (mut ortho, mut linear) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let s: f64 = rng.random();
        let u = path.evaluate(s);
        ortho = ortho.max((u.basis().transpose() * u.basis() - DMatrix::identity(2, 2)).amax());
        linear = linear.max((subspace_distance(&u, &a) - s * full).abs());
    }

    // Lines in the plane: the geodesic rotates the angle linearly.
    let (alpha, beta) = (0.3, 1.4);
    let dir = |phi: f64| DVector::from_vec(vec![phi.cos(), phi.sin()]);
    let planar = geodesic(&line_frame(&dir(alpha)), &line_frame(&dir(beta))).unwrap();
    let mut plane = 0.0f64;
    for k in 0..=20 {
        let s = k as f64 / 20.0;
        let u = planar.evaluate(s);
        let expected = dir(alpha + s * (beta - alpha));
        let p = u.basis() * u.basis().transpose();
        plane = plane.max((p - &expected * expected.transpose()).amax());
    }
    ensure(
        ortho < 1e-10 && linear < 1e-8 && plane < 1e-10,
        format!("orthonormality {ortho:.2e}, distance linearity {linear:.2e}, planar closed form {plane:.2e}"),
    )
}

fn mixing_maximin(demo: &Demo) -> Outcome {
    let pair = synthetic_pair::<f64>("mirror", 17).unwrap();
    let points = mirror_augmented(&uniform_cube(500, 17, 31));
    let values = |o: &dyn ScaledObjective<f64>| {
        DVector::from_iterator(
            points.nrows(),
            points.row_iter().map(|x| o.value(&x.transpose()).unwrap()),
        )
    };
    let (vl, vw) = (values(&pair.laa), values(&pair.wifi));
    let (el, _) = estimate_c(
        &AnalyticGradient::new(&pair.laa),
        &points,
        Execution::Sequential,
    )
    .unwrap();
    let (ew, _) = estimate_c(
        &AnalyticGradient::new(&pair.wifi),
        &points,
        Execution::Sequential,
    )
    .unwrap();
    let path = geodesic(&ew.frame(1).unwrap(), &el.frame(1).unwrap()).unwrap();
    let mirror = mix_subspaces(&path, &points, &vl, &vw, MixOptions::default())
        .map_err(|e| e.to_string())?;

    let mix = demo
        .manifest
        .mix
        .clone()
        .ok_or("demo run has no mixing summary")?;
    let at_star = mix.r2_l.min(mix.r2_w);
    let ends = mix.min_r2_start.max(mix.min_r2_end);
    ensure(
        (mirror.s_star - 0.5).abs() <= 0.01 && at_star >= ends && at_star >= 0.8,
        format!(
            "mirror s* = {:.4}; demo s* = {:.4}, min R² {at_star:.4} vs endpoints {:.4}/{:.4}",
            mirror.s_star, mix.s_star, mix.min_r2_start, mix.min_r2_end
        ),
    )
}

fn zonotope(demo: &Demo) -> Outcome {
    let mix_path = demo.dir.join("mix.json");
    let frames = [
        planted_frame::<f64>(17, 2, 41).unwrap(),
        read_json::<MixArtifact>(&mix_path)
            .map_err(|e| e.to_string())?
            .frame(&mix_path)
            .map_err(|e| e.to_string())?,
    ];
    let mut outside = 0;
    let mut support = 0.0f64;
    for (k, frame) in frames.iter().enumerate() {
        let z = project_domain_2d(frame).map_err(|e| e.to_string())?;
        let pts = uniform_cube::<f64>(10000, 17, 42 + k as u64) * frame.basis();
        outside += pts.row_iter().filter(|p| !z.contains([p[0], p[1]])).count();
        for i in 0..100 {
            let phi = i as f64 * std::f64::consts::TAU / 100.0;
            let d = [phi.cos(), phi.sin()];
            let expected: f64 = frame
                .basis()
                .row_iter()
                .map(|g| (g[0] * d[0] + g[1] * d[1]).abs())
                .sum();
            support = support.max((z.support(d) - expected).abs());
        }
    }
    ensure(
        outside == 0 && support < 1e-9,
        format!("{outside} of 20000 projected points outside, support error {support:.2e} over 200 directions"),
    )
}

fn fiber_contract(demo: &Demo) -> Outcome {
    let mix_path = demo.dir.join("mix.json");
    let frame = read_json::<MixArtifact>(&mix_path)
        .and_then(|a| a.frame(&mix_path))
        .map_err(|e| e.to_string())?;
    let trace = read_trace(&demo.dir.join("trace.csv"), &frame).map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut residual = 0.0f64;
    let mut excess = 0.0f64;
    for (i, y) in trace
        .ys
        .iter()
        .enumerate()
        .filter(|(i, _)| trace.in_domain[*i])
    {
        let pts = sample_inactive_fiber(&frame, y, 25, 50 + i as u64).map_err(|e| e.to_string())?;
        checked += pts.len();
        for p in pts {
            residual = residual.max((frame.basis().transpose() * &p - y).amax());
            excess = excess.max(p.amax() - 1.0);
        }
    }

    let pair = synthetic_pair::<f64>("quadratic", 17).unwrap();
    let (l, w) = pair.quadratics.clone().unwrap();
    let planted = pair.shared_frame.clone().unwrap();
    let exact = quadratic_trace(&l, &w, &uniform_grid::<f64>(100), &planted).unwrap();
    let rows = evaluate_trace_objectives(
        &exact,
        &planted,
        &pair.laa,
        &pair.wifi,
        25,
        51,
        Execution::Sequential,
    )
    .map_err(|e| e.to_string())?;
    let ridge_spread = rows
        .iter()
        .map(|r| r.spread_l().max(r.spread_w()))
        .fold(0.0, f64::max);

    let front = demo
        .manifest
        .front
        .clone()
        .ok_or("demo run has no front summary")?;
    let rows_written = Table::read(&demo.dir.join("front.csv"))
        .map_err(|e| e.to_string())?
        .rows
        .len();
    let demo_ok = front.rows > 1
        && front.max_spread_l < front.mean_range_l
        && front.max_spread_w < front.mean_range_w;
    ensure(
        checked > 0 && residual < 1e-10 && excess <= 0.0 && ridge_spread < 1e-10 && demo_ok,
        format!(
            "{checked} demo fiber samples: residual {residual:.2e}, cube excess {:.2e}; exact-ridge spread {ridge_spread:.2e}; \
             demo over {rows_written} trace points: spread L {:.3} < range {:.3}, spread W {:.3} < range {:.3}",
            excess.max(0.0),
            front.max_spread_l,
            front.mean_range_l,
            front.max_spread_w,
            front.mean_range_w
        ),
    )
}

fn stationarity() -> Outcome {
    let pair = synthetic_pair::<f64>("quadratic", 17).unwrap();
    let (l, w) = pair.quadratics.unwrap();
    let ts = uniform_grid::<f64>(100);
    let trace = quadratic_trace(&l, &w, &ts, &pair.shared_frame.unwrap()).unwrap();
    let worst = ts
        .iter()
        .zip(&trace.ys)
        .map(|(t, y)| scalarized_gradient(&l, &w, *t, y).norm())
        .fold(0.0, f64::max);
    ensure(
        worst < 1e-8,
        format!("max ‖∇J_t‖ over 101 points: {worst:.2e}"),
    )
}

fn main() -> ExitCode {
    std::panic::set_hook(Box::new(|_| {}));
    let dir = tempfile::tempdir().expect("temporary directory");
    let demo = demo_run(dir.path());
    let demo = &demo;

    let with_demo = |f: fn(&Demo) -> Outcome| -> Check {
        Box::new(move || {
            demo.as_ref()
                .map_err(|e| format!("demo run failed: {e}"))
                .and_then(f)
        })
    };
    let checks: Vec<(&str, Check)> = vec![
        ("evaluation count", with_demo(evaluation_count)),
        ("active-subspace recovery", Box::new(ridge_recovery)),
        ("isotropic spectrum", Box::new(isotropic_spectrum)),
        ("ODE vs closed-form trace", Box::new(ode_equivalence)),
        ("quadratic-trace endpoints", Box::new(trace_endpoints)),
        ("non-dominated sorting", Box::new(kung_sweep)),
        ("geodesic properties", Box::new(geodesic_properties)),
        ("mixing maximin", with_demo(mixing_maximin)),
        ("zonotope correctness", with_demo(zonotope)),
        ("fiber contract", with_demo(fiber_contract)),
        ("stationarity along trace", Box::new(stationarity)),
    ];

    let mut failed = 0;
    for (name, check) in &checks {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        checks.len() - failed,
        checks.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
