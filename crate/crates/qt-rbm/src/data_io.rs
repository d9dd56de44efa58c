//! Dataset loading, splitting and synthetic generators.
//!
//! Dataset files are plain text, one sample per line, comma-separated 0/1
//! values, no header. Loaders reject anything outside {0, 1}; there is no
//! silent binarization.

use std::path::Path;

use rand::Rng;

use crate::error::{QtError, Result};
use crate::model::{RbmParamsQt, RbmParamsStd};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone)]
pub struct BinaryDataset {
    pub name: String,
    pub n_cols: usize,
    pub rows: Vec<Vec<u8>>,
    pub split: Option<SplitTag>,
}

impl BinaryDataset {
    pub fn new(name: impl Into<String>, n_cols: usize, rows: Vec<Vec<u8>>) -> Result<Self> {
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(QtError::Data(format!(
                    "row {} has {} entries, expected {n_cols}",
                    r + 1,
                    row.len()
                )));
            }
            if let Some(c) = row.iter().position(|&x| x > 1) {
                return Err(QtError::Data(format!(
                    "non-binary value {} at row {}, column {}",
                    row[c],
                    r + 1,
                    c + 1
                )));
            }
        }
        Ok(Self { name: name.into(), n_cols, rows, split: None })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.rows[i]
    }

    /// Per-column mean of the entries.
    pub fn column_means(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_cols];
        for row in &self.rows {
            for (s, &x) in sums.iter_mut().zip(row.iter()) {
                *s += x as f64;
            }
        }
        let n = self.n_rows().max(1) as f64;
        sums.iter_mut().for_each(|s| *s /= n);
        sums
    }
}

pub fn load_dataset(path: &Path) -> Result<BinaryDataset> {
    let text = std::fs::read_to_string(path).map_err(|e| QtError::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());

    let mut rows: Vec<Vec<u8>> = Vec::new();
    let mut n_cols = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            if lineno + 1 == text.lines().count() {
                continue; // tolerate a final blank line
            }
            return Err(QtError::Data(format!("{}: empty line {}", path.display(), lineno + 1)));
        }
        let mut row = Vec::new();
        for (col, tok) in line.split(',').enumerate() {
            match tok.trim() {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(QtError::Data(format!(
                        "{}: non-binary value {:?} at row {}, column {}",
                        path.display(),
                        other,
                        lineno + 1,
                        col + 1
                    )))
                }
            }
        }
        if rows.is_empty() {
            n_cols = row.len();
        } else if row.len() != n_cols {
            return Err(QtError::Data(format!(
                "{}: row {} has {} entries, expected {}",
                path.display(),
                lineno + 1,
                row.len(),
                n_cols
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(QtError::Data(format!("{}: file contains no samples", path.display())));
    }
    BinaryDataset::new(name, n_cols, rows)
}

pub fn save_dataset(data: &BinaryDataset, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(data.n_rows() * (2 * data.n_cols));
    for row in &data.rows {
        let line: Vec<&str> = row.iter().map(|&x| if x == 1 { "1" } else { "0" }).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| QtError::io(path, e))
}

/// Deterministic shuffled split. The first two fractions are floored, the
/// remainder goes to the test split; all three must end up non-empty.
pub fn split_dataset(
    data: &BinaryDataset,
    fractions: (f64, f64, f64),
    seed: u64,
) -> Result<(BinaryDataset, BinaryDataset, BinaryDataset)> {
    let (f0, f1, f2) = fractions;
    if f0 <= 0.0 || f1 <= 0.0 || f2 <= 0.0 || (f0 + f1 + f2 - 1.0).abs() > 1e-9 {
        return Err(QtError::Config(format!(
            "split fractions must be positive and sum to 1, got ({f0}, {f1}, {f2})"
        )));
    }
    let n = data.n_rows();
    let n_train = (f0 * n as f64).floor() as usize;
    let n_valid = (f1 * n as f64).floor() as usize;
    let n_test = n - n_train - n_valid;
    if n_train == 0 || n_valid == 0 || n_test == 0 {
        return Err(QtError::Data(format!(
            "dataset of {n} rows is too small for split ({f0}, {f1}, {f2})"
        )));
    }

    let mut indices: Vec<usize> = (0..n).collect();
    use rand::seq::SliceRandom;
    indices.shuffle(&mut rng::stream(seed, &[0x5150]));

    let take = |range: std::ops::Range<usize>, tag: SplitTag, suffix: &str| {
        let rows: Vec<Vec<u8>> = indices[range].iter().map(|&i| data.rows[i].clone()).collect();
        BinaryDataset {
            name: format!("{}-{suffix}", data.name),
            n_cols: data.n_cols,
            rows,
            split: Some(tag),
        }
    };
    Ok((
        take(0..n_train, SplitTag::Train, "train"),
        take(n_train..n_train + n_valid, SplitTag::Valid, "valid"),
        take(n_train + n_valid..n, SplitTag::Test, "test"),
    ))
}

/// Draw a random RBM and sample exactly from its visible marginal.
///
/// Couplings are uniform in `+-param_scale`; biases uniform in `+-0.5`
/// regardless of scale, so `param_scale = 0` yields independent
/// Bernoulli(sigmoid(b_v)) columns. Exact sampling enumerates the visible
/// marginal and requires `v_dim + h_dim <= 24`; larger models fall back
/// to a long-burn Gibbs chain and the dataset is flagged approximate in
/// its name.
pub fn generate_synthetic(
    v_dim: usize,
    h_dim: usize,
    param_scale: f64,
    n_samples: usize,
    seed: u64,
) -> Result<(BinaryDataset, RbmParamsStd)> {
    if v_dim == 0 || n_samples == 0 {
        return Err(QtError::Config("v_dim and n_samples must be positive".into()));
    }
    if !(param_scale.is_finite() && param_scale >= 0.0) {
        return Err(QtError::Config(format!("param_scale must be non-negative, got {param_scale}")));
    }
    let mut prng = rng::stream(seed, &[0x5e_ed]);
    let draw = |rng: &mut rand_chacha::ChaCha8Rng, s: f64| {
        if s == 0.0 {
            0.0
        } else {
            rng.random_range(-s..s)
        }
    };
    let w_std = ndarray::Array2::from_shape_fn((h_dim, v_dim), |_| draw(&mut prng, param_scale));
    let b_v = ndarray::Array1::from_shape_fn(v_dim, |_| draw(&mut prng, 0.5));
    let b_h = ndarray::Array1::from_shape_fn(h_dim, |_| draw(&mut prng, 0.5));
    let truth = RbmParamsStd::new(w_std, b_v, b_h)?;

    let mut sample_rng = rng::stream(seed, &[0xda_7a]);
    let (rows, exact) = if v_dim + h_dim <= crate::oracle::ENUM_LIMIT_BITS {
        let log_marginals = crate::oracle::visible_log_marginals(&RbmParamsQt::from_standard(&truth))?;
        let mut cdf = Vec::with_capacity(log_marginals.len());
        let mut acc = 0.0;
        for &lp in &log_marginals {
            acc += lp.exp();
            cdf.push(acc);
        }
        let rows = (0..n_samples)
            .map(|_| {
                let u: f64 = sample_rng.random::<f64>() * acc;
                let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
                (0..v_dim).map(|j| ((idx >> j) & 1) as u8).collect::<Vec<u8>>()
            })
            .collect();
        (rows, true)
    } else {
        // Approximate fallback: one long chain, heavy burn-in, thinned.
        let v0: Vec<u8> = (0..v_dim).map(|_| sample_rng.random_range(0..2u8)).collect();
        let mut chain = crate::baselines::GibbsChainState::new(
            v0,
            vec![0; h_dim],
            rng::stream(seed, &[0xc4_a1]),
        );
        for _ in 0..5000 {
            crate::baselines::gibbs_sweep(&truth, &mut chain);
        }
        let rows = (0..n_samples)
            .map(|_| {
                for _ in 0..10 {
                    crate::baselines::gibbs_sweep(&truth, &mut chain);
                }
                chain.v.clone()
            })
            .collect();
        (rows, false)
    };

    let name = if exact { "synthetic".to_string() } else { "synthetic-gibbs-approx".to_string() };
    Ok((BinaryDataset::new(name, v_dim, rows)?, truth))
}

/// Five visible variables `[a, b, z, d1, d2]`: `b` copies `a` with
/// probability 0.99, `z` agrees with `a` with probability 0.75, and the
/// distractors are fair coins. Single-output query training cannot learn
/// the a-z link from this data because `b` is always available to
/// predict `a`.
pub fn make_pl_failure_dataset(n_samples: usize, seed: u64) -> BinaryDataset {
    let mut r = rng::stream(seed, &[0x91f]);
    let rows = (0..n_samples)
        .map(|_| {
            let a: u8 = r.random_range(0..2);
            let b = if r.random::<f64>() < 0.99 { a } else { 1 - a };
            let z = if r.random::<f64>() < 0.75 { a } else { 1 - a };
            let d1: u8 = r.random_range(0..2);
            let d2: u8 = r.random_range(0..2);
            vec![a, b, z, d1, d2]
        })
        .collect();
    BinaryDataset::new("pl-failure", 5, rows).expect("generated rows are binary")
}
