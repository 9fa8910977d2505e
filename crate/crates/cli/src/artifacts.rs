//! On-disk formats of every pipeline artifact.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use pareto_trace::subspace::{Frame, QuadraticSurrogate, RidgeModel};

use crate::error::CliError;

pub const SAMPLES: &str = "samples.csv";
pub const MIX: &str = "mix.json";
pub const TRACE: &str = "trace.csv";
pub const FRONT: &str = "front.csv";
pub const NONDOMINATED: &str = "nondominated.csv";
pub const ZONOTOPE: &str = "zonotope.csv";
pub const MANIFEST: &str = "manifest.json";

pub fn gradients_file(label: &str) -> String {
    format!("gradients_{label}.csv")
}

pub fn spectrum_file(label: &str) -> String {
    format!("spectrum_{label}.json")
}

pub fn ridge_file(label: &str) -> String {
    format!("ridge_{label}.json")
}

pub fn shadow_file(label: &str) -> String {
    format!("shadow_{label}.csv")
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// A written file with its digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Output directory that remembers what was written to it.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<FileRecord>,
}

impl OutputDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self, CliError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| CliError::Write {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            written: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn written(&self) -> &[FileRecord] {
        &self.written
    }

    fn put(&mut self, name: &str, bytes: Vec<u8>) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, &bytes).map_err(|source| CliError::Write { path, source })?;
        let record = FileRecord {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        };
        self.written.retain(|r| r.name != name);
        self.written.push(record);
        Ok(())
    }

    pub fn csv(
        &mut self,
        name: &str,
        header: &[String],
        rows: &[Vec<String>],
    ) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| CliError::Write {
            path: self.root.join(name),
            source: std::io::Error::other(e),
        };
        w.write_record(header).map_err(fail)?;
        for row in rows {
            w.write_record(row).map_err(fail)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Write {
            path: self.root.join(name),
            source: e.into_error(),
        })?;
        self.put(name, bytes)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("artifact types serialize");
        bytes.push(b'\n');
        self.put(name, bytes)
    }
}

/// A CSV file held in memory with its header.
#[derive(Debug, Clone)]
pub struct Table {
    pub path: PathBuf,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let mut r = csv::Reader::from_path(path).map_err(|e| CliError::load(path, e))?;
        let header = r
            .headers()
            .map_err(|e| CliError::load(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<Vec<Vec<String>>, _>>()
            .map_err(|e| CliError::load(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            header,
            rows,
        })
    }

    /// Fails with the missing and unexpected columns unless the header is exactly `expected`.
    pub fn expect_header(&self, expected: &[String]) -> Result<(), CliError> {
        if self.header == expected {
            return Ok(());
        }
        let missing: Vec<&String> = expected
            .iter()
            .filter(|c| !self.header.contains(c))
            .collect();
        let extra: Vec<&String> = self
            .header
            .iter()
            .filter(|c| !expected.contains(c))
            .collect();
        Err(CliError::load(
            &self.path,
            format!("unexpected columns (missing {missing:?}, unexpected {extra:?}, expected order {expected:?})"),
        ))
    }

    pub fn column(&self, name: &str) -> Result<usize, CliError> {
        self.header.iter().position(|h| h == name).ok_or_else(|| {
            CliError::load(
                &self.path,
                format!("missing column `{name}`; found {:?}", self.header),
            )
        })
    }

    pub fn f64_at(&self, row: usize, col: usize) -> Result<f64, CliError> {
        let cell = &self.rows[row][col];
        cell.parse().map_err(|_| {
            CliError::load(
                &self.path,
                format!(
                    "row {} column `{}`: `{cell}` is not a number",
                    row + 1,
                    self.header[col]
                ),
            )
        })
    }

    pub fn f64_column(&self, name: &str) -> Result<DVector<f64>, CliError> {
        let c = self.column(name)?;
        let v = (0..self.rows.len())
            .map(|i| self.f64_at(i, c))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DVector::from_vec(v))
    }

    pub fn f64_matrix(&self, names: &[String]) -> Result<DMatrix<f64>, CliError> {
        let cols = names
            .iter()
            .map(|n| self.column(n))
            .collect::<Result<Vec<_>, _>>()?;
        let mut m = DMatrix::zeros(self.rows.len(), cols.len());
        for i in 0..self.rows.len() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self.f64_at(i, c)?;
            }
        }
        Ok(m)
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::load(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::load(path, e))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], path: &Path) -> Result<DMatrix<f64>, CliError> {
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::load(path, "matrix rows have different lengths"));
    }
    Ok(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
}

fn frame_from_rows(rows: &[Vec<f64>], path: &Path) -> Result<Frame<f64>, CliError> {
    Frame::new(matrix_from_rows(rows, path)?).map_err(|e| CliError::load(path, e))
}

/// `spectrum_<label>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArtifact {
    pub objective: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub h: Option<f64>,
    pub seed: u64,
    /// Largest-log-gap choice for this objective alone.
    pub selected_rank: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Row-major `m × m`; column `j` is the eigenvector of `eigenvalues[j]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

impl SpectrumArtifact {
    pub fn eigenvalues(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.eigenvalues)
    }

    pub fn frame(&self, r: usize, path: &Path) -> Result<Frame<f64>, CliError> {
        let w = matrix_from_rows(&self.eigenvectors, path)?;
        if r == 0 || r > w.ncols() {
            return Err(CliError::load(
                path,
                format!("rank {r} exceeds {} eigenvectors", w.ncols()),
            ));
        }
        Frame::new(w.columns(0, r).into_owned()).map_err(|e| CliError::load(path, e))
    }

    pub fn set_vectors(&mut self, vectors: &DMatrix<f64>) {
        self.eigenvectors = rows_of(vectors);
    }
}

/// One mixing-criterion evaluation, stored as `[s, r2_L, r2_W]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct MixSample {
    pub s: f64,
    pub r2_l: f64,
    pub r2_w: f64,
}

impl From<[f64; 3]> for MixSample {
    fn from([s, r2_l, r2_w]: [f64; 3]) -> Self {
        Self { s, r2_l, r2_w }
    }
}

impl From<MixSample> for [f64; 3] {
    fn from(p: MixSample) -> Self {
        [p.s, p.r2_l, p.r2_w]
    }
}

/// `mix.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixArtifact {
    pub s_star: f64,
    #[serde(rename = "r2_L")]
    pub r2_l: f64,
    #[serde(rename = "r2_W")]
    pub r2_w: f64,
    /// Row-major `m × r` basis of the mixed frame.
    pub frame: Vec<Vec<f64>>,
    /// Grid points in order, then refinement points.
    pub trace: Vec<MixSample>,
    pub rank: usize,
    pub degree: usize,
    pub grid: usize,
    pub tolerance: f64,
    /// Principal angles between the Wi-Fi (`s = 0`) and LAA (`s = 1`) frames.
    pub angles: Vec<f64>,
    pub distance: f64,
}

impl MixArtifact {
    pub fn frame(&self, path: &Path) -> Result<Frame<f64>, CliError> {
        frame_from_rows(&self.frame, path)
    }

    pub fn set_frame(&mut self, frame: &Frame<f64>) {
        self.frame = rows_of(frame.basis());
    }

    pub fn endpoints(&self) -> (MixSample, MixSample) {
        (self.trace[0], self.trace[self.grid])
    }
}

/// A monomial coefficient of a ridge fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub exponents: Vec<u32>,
    pub value: f64,
}

/// `ridge_<label>.json`: degree-2 fit over the mixed frame and its quadratic form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgeArtifact {
    pub objective: String,
    /// Row-major `m × r`.
    pub frame: Vec<Vec<f64>>,
    pub degree: usize,
    pub coefficients: Vec<Term>,
    pub r_squared: f64,
    /// `−S(y) ≈ yᵀQy + aᵀy + c`, rows of `Q`.
    pub q: Vec<Vec<f64>>,
    pub a: Vec<f64>,
    pub c: f64,
    pub convexified: bool,
}

impl RidgeArtifact {
    pub fn new(
        objective: &str,
        frame: &Frame<f64>,
        model: &RidgeModel<f64>,
        surrogate: &QuadraticSurrogate<f64>,
    ) -> Self {
        Self {
            objective: objective.to_string(),
            frame: rows_of(frame.basis()),
            degree: model.degree,
            coefficients: model
                .exponents
                .iter()
                .zip(model.coefficients.iter())
                .map(|(e, v)| Term {
                    exponents: e.clone(),
                    value: *v,
                })
                .collect(),
            r_squared: model.r_squared,
            q: rows_of(&surrogate.q),
            a: surrogate.a.iter().copied().collect(),
            c: surrogate.c,
            convexified: surrogate.convexified,
        }
    }

    pub fn frame(&self, path: &Path) -> Result<Frame<f64>, CliError> {
        frame_from_rows(&self.frame, path)
    }

    pub fn surrogate(&self, path: &Path) -> Result<QuadraticSurrogate<f64>, CliError> {
        let q = matrix_from_rows(&self.q, path)?;
        let mut s = QuadraticSurrogate::new(q, DVector::from_column_slice(&self.a), self.c)
            .map_err(|e| CliError::load(path, e))?;
        s.convexified = self.convexified;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for v in [
            0.1,
            -1.0 / 3.0,
            1e-300,
            6.02214076e23,
            f64::MIN_POSITIVE,
            0.0,
        ] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn csv_round_trip_and_schema_errors() {
        let dir = std::env::temp_dir().join(format!("pt-art-{}", std::process::id()));
        let mut out = OutputDir::create(&dir).unwrap();
        let header = vec!["a".to_string(), "b".to_string()];
        out.csv("t.csv", &header, &[vec![fmt_f64(0.1), fmt_f64(2.0)]])
            .unwrap();
        assert_eq!(out.written()[0].sha256.len(), 64);
        let t = Table::read(&dir.join("t.csv")).unwrap();
        assert_eq!(t.f64_column("a").unwrap()[0], 0.1);
        let err = t
            .expect_header(&["a".into(), "c".into()])
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("missing [\"c\"]") && err.contains("unexpected [\"b\"]"),
            "{err}"
        );
        assert!(t.column("zz").is_err());
        fs::remove_dir_all(dir).unwrap();
    }
}
