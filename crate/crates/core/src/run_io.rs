//! Run-bundle interchange format.
//!
//! A run bundle is one trained model's estimates plus provenance, laid out
//! as a directory so that external pipelines in any language can produce
//! them:
//!
//! ```text
//! <dir>/meta.json    required keys: model_name, dataset_id, K, V, N,
//!                    seed, hyperparams, vocab_sha256
//! <dir>/beta.mat     K x V topic-word matrix
//! <dir>/theta.mat    N x K document-topic matrix
//! ```
//!
//! Matrix files are 8-byte magic `TMRUNB01`, two little-endian u32 values
//! (rows, cols), then row-major little-endian IEEE-754 f64 values.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;
use crate::{Error, Result, Scalar};

pub const MATRIX_MAGIC: &[u8; 8] = b"TMRUNB01";

/// Writer-side normalization tolerance for simplex rows.
pub const WRITE_TOL: f64 = 1e-9;
/// Reader-side repair tolerance: rows off by at most this much are
/// renormalized, anything worse is rejected (unless unnormalized scores
/// are explicitly allowed).
pub const READ_TOL: f64 = 1e-6;

/// Hyperparameter value as stored in `meta.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Number(f64),
    Text(String),
}

impl HyperValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            HyperValue::Number(x) => Some(*x),
            HyperValue::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub model_name: String,
    pub dataset_id: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "V")]
    pub v: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub seed: u64,
    pub hyperparams: BTreeMap<String, HyperValue>,
    pub vocab_sha256: String,
}

/// One model run: topic-word estimates `b` (K x V), document-topic
/// estimates `theta` (N x K), and provenance.
///
/// `simplex` is false only for externally produced bundles ingested with
/// [`ReadOptions::allow_unnormalized`]; such estimates are usable wherever
/// only rankings or argmax matter.
#[derive(Debug, Clone, PartialEq)]
pub struct RunBundle<T> {
    pub b: Matrix<T>,
    pub theta: Matrix<T>,
    pub meta: RunMeta,
    pub simplex: bool,
}

impl<T: Scalar> RunBundle<T> {
    /// Build a validated, simplex-normalized bundle.
    pub fn new(b: Matrix<T>, theta: Matrix<T>, meta: RunMeta) -> Result<Self> {
        let bundle = Self {
            b,
            theta,
            meta,
            simplex: true,
        };
        bundle.validate(WRITE_TOL)?;
        Ok(bundle)
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        self.check_shapes()?;
        if self.simplex {
            self.b.validate_simplex("beta", tol)?;
            self.theta.validate_simplex("theta", tol)?;
        } else if !self.b.all_finite() || !self.theta.all_finite() {
            return Err(Error::InvalidArgument(
                "non-simplex bundle has non-finite entries".into(),
            ));
        }
        Ok(())
    }

    fn check_shapes(&self) -> Result<()> {
        if self.b.rows() != self.meta.k || self.b.cols() != self.meta.v {
            return Err(Error::ShapeMismatch {
                what: "beta vs meta".into(),
                expected: format!("{}x{} (meta K x V)", self.meta.k, self.meta.v),
                actual: format!("{}x{}", self.b.rows(), self.b.cols()),
            });
        }
        if self.theta.rows() != self.meta.n || self.theta.cols() != self.meta.k {
            return Err(Error::ShapeMismatch {
                what: "theta vs meta".into(),
                expected: format!("{}x{} (meta N x K)", self.meta.n, self.meta.k),
                actual: format!("{}x{}", self.theta.rows(), self.theta.cols()),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Accept matrices whose rows are not probability vectors, keeping the
    /// raw values as scores and flagging the bundle non-simplex.
    pub allow_unnormalized: bool,
}

pub fn write_matrix<T: Scalar>(path: &Path, m: &Matrix<T>) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    w.write_all(MATRIX_MAGIC).map_err(io_err)?;
    w.write_all(&(m.rows() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(m.cols() as u32).to_le_bytes()).map_err(io_err)?;
    for &v in m.as_slice() {
        let x = v.to_f64().ok_or_else(|| {
            Error::InvalidArgument("matrix value not representable as f64".into())
        })?;
        w.write_all(&x.to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_matrix<T: Scalar>(path: &Path) -> Result<Matrix<T>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 8];
    read_exact_or_eof(&mut r, &mut magic, path)?;
    if &magic != MATRIX_MAGIC {
        return Err(Error::NotARunBundle {
            path: path.to_path_buf(),
        });
    }
    let mut dim = [0u8; 4];
    read_exact_or_eof(&mut r, &mut dim, path)?;
    let rows = u32::from_le_bytes(dim) as usize;
    read_exact_or_eof(&mut r, &mut dim, path)?;
    let cols = u32::from_le_bytes(dim) as usize;

    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::InvalidArgument("matrix dimensions overflow".into()))?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        read_exact_or_eof(&mut r, &mut buf, path)?;
        let x = f64::from_le_bytes(buf);
        data.push(T::from_f64(x).ok_or_else(|| {
            Error::InvalidArgument("matrix value not representable in target scalar".into())
        })?);
    }
    let mut tail = [0u8; 1];
    if r.read(&mut tail).map_err(io_err)? != 0 {
        return Err(Error::ShapeMismatch {
            what: format!("{}: file size", path.display()),
            expected: format!("{} bytes", 16 + count * 8),
            actual: "trailing data".into(),
        });
    }
    Matrix::from_vec(rows, cols, data)
}

fn read_exact_or_eof(r: &mut impl Read, buf: &mut [u8], path: &Path) -> Result<()> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            Error::UnexpectedEof {
                path: path.to_path_buf(),
            }
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source: e,
            }
        }
    })
}

/// Write a bundle to `dir` (created if missing). Refuses bundles whose
/// rows are not on the probability simplex.
pub fn write_run<T: Scalar>(bundle: &RunBundle<T>, dir: &Path) -> Result<()> {
    if !bundle.simplex {
        return Err(Error::InvalidArgument(
            "refusing to write non-simplex bundle".into(),
        ));
    }
    bundle.validate(WRITE_TOL)?;
    std::fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;

    let meta_path = dir.join("meta.json");
    let file = File::create(&meta_path).map_err(|source| Error::Io {
        path: meta_path.clone(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &bundle.meta)
        .map_err(|e| Error::InvalidArgument(format!("meta.json: {e}")))?;
    w.write_all(b"\n").map_err(|source| Error::Io {
        path: meta_path,
        source,
    })?;

    write_matrix(&dir.join("beta.mat"), &bundle.b)?;
    write_matrix(&dir.join("theta.mat"), &bundle.theta)
}

pub fn read_run<T: Scalar>(dir: &Path) -> Result<RunBundle<T>> {
    read_run_with(dir, ReadOptions::default())
}

pub fn read_run_with<T: Scalar>(dir: &Path, opts: ReadOptions) -> Result<RunBundle<T>> {
    let meta_path = dir.join("meta.json");
    let file = File::open(&meta_path).map_err(|source| Error::Io {
        path: meta_path.clone(),
        source,
    })?;
    let meta: RunMeta = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| Error::MalformedLine {
            path: meta_path,
            line: e.line(),
            msg: e.to_string(),
        })?;

    let b = read_matrix::<T>(&dir.join("beta.mat"))?;
    let theta = read_matrix::<T>(&dir.join("theta.mat"))?;

    let mut bundle = RunBundle {
        b,
        theta,
        meta,
        simplex: true,
    };
    bundle.check_shapes()?;

    let b_ok = repair_rows(&mut bundle.b, "beta", opts.allow_unnormalized)?;
    let t_ok = repair_rows(&mut bundle.theta, "theta", opts.allow_unnormalized)?;
    bundle.simplex = b_ok && t_ok;
    bundle.validate(WRITE_TOL)?;
    Ok(bundle)
}

/// Bring rows back onto the simplex where possible.
///
/// Rows already within [`WRITE_TOL`] are left bit-for-bit untouched so
/// that write/read round-trips are the identity. Rows off by at most
/// [`READ_TOL`] are renormalized. Anything worse either fails or, with
/// `allow_scores`, leaves the matrix as raw scores (returns false).
fn repair_rows<T: Scalar>(m: &mut Matrix<T>, name: &'static str, allow_scores: bool) -> Result<bool> {
    if !m.all_finite() {
        return Err(Error::InvalidArgument(format!(
            "{name}.mat has non-finite entries"
        )));
    }
    let mut worst: Option<(usize, f64)> = None;
    for r in 0..m.rows() {
        if m.row(r).iter().any(|&v| v < T::zero()) {
            worst = Some((r, f64::NAN));
            break;
        }
        let sum = m.row_sum(r).to_f64().unwrap_or(f64::NAN);
        let off = (sum - 1.0).abs();
        if off > WRITE_TOL && worst.map_or(true, |(_, w)| off > w) {
            worst = Some((r, sum));
        }
    }
    match worst {
        None => Ok(true),
        Some((row, sum)) if !(sum.is_nan()) && (sum - 1.0).abs() <= READ_TOL => {
            for r in 0..m.rows() {
                let s = m.row_sum(r).to_f64().unwrap_or(1.0);
                if (s - 1.0).abs() > WRITE_TOL {
                    let s = T::from_f64(s).unwrap();
                    for v in m.row_mut(r) {
                        *v = *v / s;
                    }
                }
            }
            Ok(true)
        }
        Some((row, sum)) => {
            if allow_scores {
                Ok(false)
            } else if sum.is_nan() {
                Err(Error::InvalidEntry { matrix: name, row })
            } else {
                Err(Error::RowNotNormalized { matrix: name, row, sum })
            }
        }
    }
}

/// Shared experimental context of a run set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunContext {
    pub dataset_id: String,
    pub k: usize,
    pub v: usize,
    pub n: usize,
    pub vocab_sha256: String,
}

/// m runs over the same dataset, vocabulary, and topic count.
#[derive(Debug, Clone)]
pub struct RunSet<T> {
    pub runs: Vec<RunBundle<T>>,
    pub context: RunContext,
}

impl<T: Scalar> RunSet<T> {
    pub fn from_bundles(runs: Vec<RunBundle<T>>) -> Result<Self> {
        let first = runs.first().ok_or(Error::NoDocuments)?;
        let context = RunContext {
            dataset_id: first.meta.dataset_id.clone(),
            k: first.meta.k,
            v: first.meta.v,
            n: first.meta.n,
            vocab_sha256: first.meta.vocab_sha256.clone(),
        };
        let mut offenders = Vec::new();
        for (i, r) in runs.iter().enumerate() {
            let m = &r.meta;
            if m.k != context.k {
                offenders.push(format!("run {i}: K={} (expected {})", m.k, context.k));
            }
            if m.v != context.v {
                offenders.push(format!("run {i}: V={} (expected {})", m.v, context.v));
            }
            if m.n != context.n {
                offenders.push(format!("run {i}: N={} (expected {})", m.n, context.n));
            }
            if m.dataset_id != context.dataset_id {
                offenders.push(format!(
                    "run {i}: dataset_id={:?} (expected {:?})",
                    m.dataset_id, context.dataset_id
                ));
            }
            if m.vocab_sha256 != context.vocab_sha256 {
                offenders.push(format!("run {i}: vocabulary hash differs"));
            }
        }
        if !offenders.is_empty() {
            return Err(Error::ContextMismatch(offenders.join("; ")));
        }
        Ok(Self { runs, context })
    }

    pub fn m(&self) -> usize {
        self.runs.len()
    }
}

/// Load bundles from `dirs` and check they share one experimental context.
pub fn load_runset<T: Scalar>(dirs: &[PathBuf], opts: ReadOptions) -> Result<RunSet<T>> {
    if dirs.is_empty() {
        return Err(Error::InvalidArgument("no run directories given".into()));
    }
    let runs = dirs
        .iter()
        .map(|d| read_run_with(d, opts))
        .collect::<Result<Vec<_>>>()?;
    RunSet::from_bundles(runs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_bundle(seed: u64) -> RunBundle<f64> {
        let b = Matrix::from_rows(&[vec![0.7, 0.2, 0.1], vec![0.1, 0.3, 0.6]]).unwrap();
        let theta = Matrix::from_rows(&[
            vec![0.9, 0.1],
            vec![0.4, 0.6],
            vec![0.25, 0.75],
            vec![0.5, 0.5],
        ])
        .unwrap();
        let meta = RunMeta {
            model_name: "fixture".into(),
            dataset_id: "unit".into(),
            k: 2,
            v: 3,
            n: 4,
            seed,
            hyperparams: BTreeMap::from([("alpha".into(), HyperValue::Number(0.5))]),
            vocab_sha256: "ab".into(),
        };
        RunBundle::new(b, theta, meta).unwrap()
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle(7);
        write_run(&bundle, dir.path()).unwrap();
        let back: RunBundle<f64> = read_run(dir.path()).unwrap();
        assert_eq!(back, bundle);

        // payload files stable across rewrites
        let bytes1 = std::fs::read(dir.path().join("beta.mat")).unwrap();
        write_run(&bundle, dir.path()).unwrap();
        let bytes2 = std::fs::read(dir.path().join("beta.mat")).unwrap();
        assert_eq!(bytes1, bytes2);
    }

    #[test]
    fn refuses_unnormalized_write() {
        let mut bundle = small_bundle(1);
        bundle.b.set(0, 0, 0.6); // row now sums to 0.9
        let dir = tempfile::tempdir().unwrap();
        let err = write_run(&bundle, dir.path()).unwrap_err();
        assert!(err.to_string().contains("not normalized"), "{err}");
    }

    #[test]
    fn matrix_file_size_is_header_plus_payload() {
        let dir = tempfile::tempdir().unwrap();
        let m = Matrix::from_elem(3, 5, 0.2f64);
        let path = dir.path().join("x.mat");
        write_matrix(&path, &m).unwrap();
        let len = std::fs::metadata(&path).unwrap().len();
        assert_eq!(len, 16 + 3 * 5 * 8);
    }

    #[test]
    fn truncated_matrix_reports_eof() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle(3);
        write_run(&bundle, dir.path()).unwrap();
        let path = dir.path().join("beta.mat");
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        let err = read_run::<f64>(dir.path()).unwrap_err();
        assert!(matches!(err, Error::UnexpectedEof { .. }), "{err}");
    }

    #[test]
    fn bad_magic_is_not_a_run_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle(3);
        write_run(&bundle, dir.path()).unwrap();
        let path = dir.path().join("beta.mat");
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[0] = b'X';
        std::fs::write(&path, &bytes).unwrap();
        let err = read_run::<f64>(dir.path()).unwrap_err();
        assert!(matches!(err, Error::NotARunBundle { .. }), "{err}");
    }

    #[test]
    fn shape_mismatch_names_both_sides() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle(3);
        write_run(&bundle, dir.path()).unwrap();
        // overwrite beta with a 2x2 matrix; meta says 2x3
        let m = Matrix::from_rows(&[vec![0.5f64, 0.5], vec![0.5, 0.5]]).unwrap();
        write_matrix(&dir.path().join("beta.mat"), &m).unwrap();
        let err = read_run::<f64>(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3") && msg.contains("2x2"), "{msg}");
    }

    #[test]
    fn slightly_off_rows_are_renormalized() {
        let dir = tempfile::tempdir().unwrap();
        let mut bundle = small_bundle(3);
        bundle.b.set(0, 0, 0.7 + 4e-7);
        write_matrix(&dir.path().join("beta.mat"), &bundle.b).unwrap();
        write_matrix(&dir.path().join("theta.mat"), &bundle.theta).unwrap();
        let meta_file = File::create(dir.path().join("meta.json")).unwrap();
        serde_json::to_writer(meta_file, &bundle.meta).unwrap();

        let back: RunBundle<f64> = read_run(dir.path()).unwrap();
        assert!(back.simplex);
        assert!((back.b.row_sum(0) - 1.0).abs() <= WRITE_TOL);
    }

    #[test]
    fn unnormalized_scores_need_explicit_opt_in() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = small_bundle(3);
        // product-of-experts style raw scores
        let scores =
            Matrix::from_rows(&[vec![3.0, 1.5, 0.2], vec![-0.5, 2.0, 4.0]]).unwrap();
        write_matrix(&dir.path().join("beta.mat"), &scores).unwrap();
        write_matrix(&dir.path().join("theta.mat"), &bundle.theta).unwrap();
        let meta_file = File::create(dir.path().join("meta.json")).unwrap();
        serde_json::to_writer(meta_file, &bundle.meta).unwrap();

        let err = read_run::<f64>(dir.path()).unwrap_err();
        assert!(matches!(err, Error::InvalidEntry { .. } | Error::RowNotNormalized { .. }), "{err}");

        let back: RunBundle<f64> = read_run_with(
            dir.path(),
            ReadOptions {
                allow_unnormalized: true,
            },
        )
        .unwrap();
        assert!(!back.simplex);
        // raw scores preserved for ranking-only consumers
        assert_eq!(back.b.get(0, 0), 3.0);
        assert_eq!(back.b.get(1, 0), -0.5);
    }

    #[test]
    fn runset_requires_consistent_context() {
        let a = small_bundle(1);
        let mut b = small_bundle(2);
        b.meta.k = 3;
        let err = RunSet::from_bundles(vec![a.clone(), b]).unwrap_err();
        assert!(err.to_string().contains("K=3"), "{err}");

        let mut c = small_bundle(2);
        c.meta.vocab_sha256 = "cd".into();
        let err = RunSet::from_bundles(vec![a.clone(), c]).unwrap_err();
        assert!(err.to_string().contains("vocabulary hash"), "{err}");

        let ok = RunSet::from_bundles(vec![a.clone(), small_bundle(9)]).unwrap();
        assert_eq!(ok.m(), 2);
    }
}
