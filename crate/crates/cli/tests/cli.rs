use std::fs;
use std::path::Path;
use std::process::Command;

use sha2::{Digest, Sha256};

use pareto_trace_cli::artifacts::{read_json, MixArtifact, RidgeArtifact, SpectrumArtifact, Table};
use pareto_trace_cli::pipeline::{run_front, run_mix, run_sample, run_subspace, run_trace};
use pareto_trace_cli::{run_pipeline, Manifest, PipelineConfig, RankChoice};

fn quadratic_config(out: &Path) -> PipelineConfig {
    PipelineConfig {
        objectives: "synthetic:quadratic".into(),
        n: 200,
        seed: 7,
        out: Some(out.to_path_buf()),
        ..PipelineConfig::default()
    }
}

fn csv_names(dir: &Path) -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv"))
        .collect();
    names.sort();
    names
}

#[test]
fn quadratic_run_writes_every_file_with_digests() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quadratic_config(dir.path());
    let manifest = run_pipeline(&cfg).unwrap();
    assert_eq!(manifest.status, "ok");

    let mut names: Vec<&str> = manifest.files.iter().map(|f| f.name.as_str()).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "front.csv",
            "gradients_L.csv",
            "gradients_W.csv",
            "mix.json",
            "nondominated.csv",
            "ridge_L.json",
            "ridge_W.json",
            "samples.csv",
            "shadow_L.csv",
            "shadow_W.csv",
            "spectrum_L.json",
            "spectrum_W.json",
            "trace.csv",
            "zonotope.csv",
        ]
    );
    for f in &manifest.files {
        let bytes = fs::read(dir.path().join(&f.name)).unwrap();
        assert_eq!(bytes.len() as u64, f.bytes, "{}", f.name);
        assert_eq!(hex::encode(Sha256::digest(&bytes)), f.sha256, "{}", f.name);
    }

    let on_disk: Manifest = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(on_disk.files, manifest.files);
    assert_eq!(on_disk.config, cfg);

    let ode = manifest.ode.unwrap();
    assert_eq!(ode.steps, 2 * cfg.trace_steps);
    assert!(ode.max_deviation.unwrap() < 1e-6, "{ode:?}");
    assert_eq!(manifest.evaluations["L"].gradient, 200 * 18);
    assert_eq!(manifest.trace_points, Some(cfg.trace_steps + 1));
    for label in ["L", "W"] {
        assert_eq!(manifest.spectra[label].eigenvalues.len(), 17);
        assert!(manifest.fits[label].r2_quadratic > 1.0 - 1e-6);
        assert!(!manifest.fits[label].convexified);
    }
}

#[test]
fn artifacts_follow_the_plotting_interface() {
    let dir = tempfile::tempdir().unwrap();
    run_pipeline(&quadratic_config(dir.path())).unwrap();
    let d = dir.path();
    let header = |name: &str| Table::read(&d.join(name)).unwrap().header;
    let strs = |v: &[&str]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>();

    assert_eq!(
        header("trace.csv"),
        strs(&["t", "y1", "y2", "in_domain", "sL_surrogate", "sW_surrogate"])
    );
    assert_eq!(
        header("front.csv"),
        strs(&["t", "sL_mean", "sW_mean", "sL_min", "sL_max", "sW_min", "sW_max"])
    );
    assert_eq!(header("nondominated.csv"), strs(&["index", "sL", "sW"]));
    assert_eq!(header("zonotope.csv"), strs(&["vertex", "y1", "y2"]));
    assert_eq!(header("shadow_L.csv"), strs(&["y1", "y2", "value"]));
    assert_eq!(header("gradients_W.csv").len(), 2 + 17);
    assert_eq!(header("samples.csv").len(), 1 + 2 * 17);

    let trace = Table::read(&d.join("trace.csv")).unwrap();
    assert_eq!(trace.rows.len(), 101);
    let flag = trace.column("in_domain").unwrap();
    assert!(trace.rows.iter().all(|r| r[flag] == "1" || r[flag] == "0"));
    assert_eq!(
        Table::read(&d.join("shadow_W.csv")).unwrap().rows.len(),
        200
    );

    let spectrum: SpectrumArtifact = read_json(&d.join("spectrum_L.json")).unwrap();
    assert_eq!(
        (spectrum.n, spectrum.seed, spectrum.h),
        (200, 7, Some(1e-6))
    );
    assert_eq!(spectrum.eigenvectors.len(), 17);
    assert!(spectrum.eigenvectors.iter().all(|r| r.len() == 17));

    let mix: MixArtifact = read_json(&d.join("mix.json")).unwrap();
    assert_eq!(mix.frame.len(), 17);
    assert!(mix.frame.iter().all(|r| r.len() == 2));
    assert!(mix.trace.len() > mix.grid);
    let raw: serde_json::Value =
        serde_json::from_slice(&fs::read(d.join("mix.json")).unwrap()).unwrap();
    for key in ["s_star", "r2_L", "r2_W", "frame", "trace"] {
        assert!(raw.get(key).is_some(), "mix.json lacks {key}");
    }
    assert_eq!(raw["trace"][0].as_array().unwrap().len(), 3);

    let ridge: RidgeArtifact = read_json(&d.join("ridge_L.json")).unwrap();
    assert_eq!(ridge.frame, mix.frame);
    assert_eq!(ridge.coefficients.len(), 6);
    assert!(ridge.coefficients.iter().all(|c| c.exponents.len() == 2));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        run_pipeline(&quadratic_config(dir.path())).unwrap();
    }
    let names = csv_names(a.path());
    assert_eq!(names, csv_names(b.path()));
    assert!(names.len() >= 9);
    for n in names {
        assert_eq!(
            fs::read(a.path().join(&n)).unwrap(),
            fs::read(b.path().join(&n)).unwrap(),
            "{n}"
        );
    }
}

#[test]
fn stage_commands_reproduce_the_single_run() {
    let whole = tempfile::tempdir().unwrap();
    let staged = tempfile::tempdir().unwrap();
    let manifest = run_pipeline(&quadratic_config(whole.path())).unwrap();

    let cfg = quadratic_config(staged.path());
    let s = staged.path();
    run_sample(&cfg).unwrap();
    run_subspace(&cfg, s, &[]).unwrap();
    run_mix(&cfg, s).unwrap();
    let (_, ode) = run_trace(&cfg, s).unwrap();
    assert!(ode.max_deviation.unwrap() < 1e-6);
    run_front(&cfg, s, None).unwrap();

    for f in &manifest.files {
        let staged_bytes = fs::read(s.join(&f.name)).unwrap();
        assert_eq!(
            hex::encode(Sha256::digest(&staged_bytes)),
            f.sha256,
            "{}",
            f.name
        );
    }
}

#[test]
fn subspace_accepts_a_single_gradient_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quadratic_config(dir.path());
    run_sample(&cfg).unwrap();
    let out = dir.path().join("only");
    let cfg = PipelineConfig {
        out: Some(out.clone()),
        ..cfg
    };
    let written = run_subspace(&cfg, dir.path(), &[dir.path().join("gradients_L.csv")]).unwrap();
    assert_eq!(written.len(), 1);
    assert_eq!(written[0].name, "spectrum_L.json");
    assert!(run_subspace(&cfg, dir.path(), &[dir.path().join("samples.csv")]).is_err());
}

#[test]
fn mirror_pair_mixes_at_the_midpoint_with_rank_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = PipelineConfig {
        objectives: "synthetic:mirror".into(),
        n: 300,
        rank: RankChoice::Fixed(1),
        out: Some(dir.path().to_path_buf()),
        ..PipelineConfig::default()
    };
    let manifest = run_pipeline(&cfg).unwrap();
    assert_eq!(manifest.rank, Some(1));
    assert!(!dir.path().join("zonotope.csv").exists());
    assert_eq!(
        Table::read(&dir.path().join("trace.csv")).unwrap().header[1],
        "y1"
    );
}

fn trace_bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_trace"));
    cmd.env_remove("PARETO_TRACE_OUT").env("RUST_LOG", "error");
    cmd
}

#[test]
fn exit_codes_distinguish_config_and_numerical_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let ok = trace_bin()
        .args([
            "run",
            "--objectives",
            "synthetic:ridge",
            "--n",
            "50",
            "--rank",
            "1",
            "--out",
            out,
        ])
        .output()
        .unwrap();
    assert_eq!(
        ok.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&ok.stderr)
    );
    assert!(String::from_utf8_lossy(&ok.stdout).contains("  nondominated.csv"));

    let bad = trace_bin()
        .args(["run", "--objectives", "nope", "--out", out])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let toml = dir.path().join("bad.toml");
    fs::write(&toml, "mix-grid = 1\n").unwrap();
    let bad = trace_bin()
        .args(["run", "--config", toml.to_str().unwrap(), "--out", out])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));

    let numeric = trace_bin()
        .args(["run", "--n", "3", "--out", out])
        .output()
        .unwrap();
    assert_eq!(numeric.status.code(), Some(3));
    let manifest: Manifest = read_json(&dir.path().join("manifest.json")).unwrap();
    assert_eq!(manifest.status, "failed");
    assert_eq!(manifest.failed_stage.as_deref(), Some("mix"));
    assert!(manifest.files.iter().any(|f| f.name == "gradients_W.csv"));
}

#[test]
fn output_directory_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("from-env");
    let status = trace_bin()
        .current_dir(dir.path())
        .env("PARETO_TRACE_OUT", &target)
        .args(["sample", "--objectives", "synthetic:ridge", "--n", "10"])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(target.join("samples.csv").exists());
    assert!(!dir.path().join("out").exists());

    let flag = dir.path().join("from-flag");
    let status = trace_bin()
        .current_dir(dir.path())
        .env("PARETO_TRACE_OUT", &target)
        .args([
            "sample",
            "--objectives",
            "synthetic:ridge",
            "--n",
            "10",
            "--out",
        ])
        .arg(&flag)
        .status()
        .unwrap();
    assert!(status.success());
    assert!(flag.join("gradients_L.csv").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let toml = dir.path().join("run.toml");
    fs::write(
        &toml,
        "objectives = \"synthetic:ridge\"\nn = 40\nseed = 3\n",
    )
    .unwrap();
    let status = trace_bin()
        .current_dir(dir.path())
        .args([
            "sample",
            "--config",
            toml.to_str().unwrap(),
            "--n",
            "12",
            "--out",
            "o",
        ])
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(
        Table::read(&dir.path().join("o/samples.csv"))
            .unwrap()
            .rows
            .len(),
        12
    );
}
