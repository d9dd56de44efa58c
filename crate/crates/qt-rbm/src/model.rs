//! Binary RBM parameters in two equivalent parameterizations.
//!
//! The network-friendly form stores couplings `W` (H x V) and unary terms
//! `c_v`, `c_h` such that the joint score of a configuration is
//!
//! ```text
//! phi(v, h) = 2 h' W v + h' (c_h - W 1_V) + v' (c_v - W' 1_H)
//! ```
//!
//! with `p(v, h)` proportional to `exp(phi)`. Under this form the pairwise
//! term between any hidden/visible pair scores 0 when the two units agree
//! and `-w` when they disagree, which is what makes the message transfer
//! function of [`crate::qtnn`] vanish at zero weight or zero input.
//!
//! The standard form (`h' W_std v + b_h' h + b_v' v`) is what the Gibbs
//! sampler and PCD trainer operate on; the two are linked by an exact,
//! invertible linear map.

use std::path::Path;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::error::{QtError, Result};

/// Network parameterization plus an unconstrained temperature.
///
/// `T = exp(log_t)` stays strictly positive during unconstrained learning;
/// `log_t = 0` gives the sum-product regime. Values are immutable
/// snapshots: the optimizer replaces the whole struct on every step.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParamsQt {
    pub w: Array2<f64>,
    pub c_v: Array1<f64>,
    pub c_h: Array1<f64>,
    pub log_t: f64,
}

/// Standard RBM parameterization (no temperature).
#[derive(Debug, Clone, PartialEq)]
pub struct RbmParamsStd {
    pub w_std: Array2<f64>,
    pub b_v: Array1<f64>,
    pub b_h: Array1<f64>,
}

fn check_finite(name: &str, it: impl IntoIterator<Item = f64>) -> Result<()> {
    for x in it {
        if !x.is_finite() {
            return Err(QtError::Domain(format!("{name} contains a non-finite entry")));
        }
    }
    Ok(())
}

fn check_binary(name: &str, xs: &[u8]) -> Result<()> {
    if let Some(pos) = xs.iter().position(|&x| x > 1) {
        return Err(QtError::Domain(format!("{name}[{pos}] = {} is not binary", xs[pos])));
    }
    Ok(())
}

impl RbmParamsQt {
    pub fn new(w: Array2<f64>, c_v: Array1<f64>, c_h: Array1<f64>, log_t: f64) -> Result<Self> {
        let (h, v) = w.dim();
        if c_v.len() != v || c_h.len() != h {
            return Err(QtError::DimensionMismatch(format!(
                "W is {h}x{v} but c_v has length {} and c_h length {}",
                c_v.len(),
                c_h.len()
            )));
        }
        check_finite("w", w.iter().copied())?;
        check_finite("c_v", c_v.iter().copied())?;
        check_finite("c_h", c_h.iter().copied())?;
        check_finite("log_t", [log_t])?;
        Ok(Self { w, c_v, c_h, log_t })
    }

    /// Build from a row-major flat weight vector (`h_dim * v_dim`
    /// entries) and plain bias vectors.
    pub fn from_flat(
        v_dim: usize,
        h_dim: usize,
        w: Vec<f64>,
        c_v: Vec<f64>,
        c_h: Vec<f64>,
        log_t: f64,
    ) -> Result<Self> {
        let w = Array2::from_shape_vec((h_dim, v_dim), w)
            .map_err(|e| QtError::DimensionMismatch(e.to_string()))?;
        Self::new(w, Array1::from_vec(c_v), Array1::from_vec(c_h), log_t)
    }

    /// All-zero parameters (uniform model) at T = 1.
    pub fn zeros(v_dim: usize, h_dim: usize) -> Self {
        Self {
            w: Array2::zeros((h_dim, v_dim)),
            c_v: Array1::zeros(v_dim),
            c_h: Array1::zeros(h_dim),
            log_t: 0.0,
        }
    }

    pub fn v_dim(&self) -> usize {
        self.w.ncols()
    }

    pub fn h_dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn temperature(&self) -> f64 {
        self.log_t.exp()
    }

    /// Joint score `phi(v, h)`; `p(v, h)` is proportional to `exp(phi)`.
    pub fn energy(&self, v: &[u8], h: &[u8]) -> Result<f64> {
        if v.len() != self.v_dim() || h.len() != self.h_dim() {
            return Err(QtError::DimensionMismatch(format!(
                "energy: got v len {}, h len {}, expected {} and {}",
                v.len(),
                h.len(),
                self.v_dim(),
                self.h_dim()
            )));
        }
        check_binary("v", v)?;
        check_binary("h", h)?;

        let mut phi = 0.0;
        for (i, hi) in h.iter().enumerate() {
            if *hi == 1 {
                let row = self.w.row(i);
                let mut wv = 0.0;
                let mut row_sum = 0.0;
                for (j, &wij) in row.iter().enumerate() {
                    row_sum += wij;
                    if v[j] == 1 {
                        wv += wij;
                    }
                }
                phi += 2.0 * wv + self.c_h[i] - row_sum;
            }
        }
        for (j, vj) in v.iter().enumerate() {
            if *vj == 1 {
                let col_sum: f64 = self.w.column(j).sum();
                phi += self.c_v[j] - col_sum;
            }
        }
        Ok(phi)
    }

    /// Exact linear map from the standard parameterization; `T` is set
    /// to 1 (`log_t = 0`). The joint score is preserved for every (v, h).
    pub fn from_standard(std: &RbmParamsStd) -> Self {
        let w = std.w_std.mapv(|x| x / 2.0);
        let row_sums = w.sum_axis(ndarray::Axis(1));
        let col_sums = w.sum_axis(ndarray::Axis(0));
        Self {
            c_h: &std.b_h + &row_sums,
            c_v: &std.b_v + &col_sums,
            w,
            log_t: 0.0,
        }
    }

    /// Inverse of [`RbmParamsQt::from_standard`]; the temperature is dropped.
    pub fn to_standard(&self) -> RbmParamsStd {
        let row_sums = self.w.sum_axis(ndarray::Axis(1));
        let col_sums = self.w.sum_axis(ndarray::Axis(0));
        RbmParamsStd {
            w_std: self.w.mapv(|x| 2.0 * x),
            b_h: &self.c_h - &row_sums,
            b_v: &self.c_v - &col_sums,
        }
    }
}

impl RbmParamsStd {
    pub fn new(w_std: Array2<f64>, b_v: Array1<f64>, b_h: Array1<f64>) -> Result<Self> {
        let (h, v) = w_std.dim();
        if b_v.len() != v || b_h.len() != h {
            return Err(QtError::DimensionMismatch(format!(
                "W_std is {h}x{v} but b_v has length {} and b_h length {}",
                b_v.len(),
                b_h.len()
            )));
        }
        check_finite("w_std", w_std.iter().copied())?;
        check_finite("b_v", b_v.iter().copied())?;
        check_finite("b_h", b_h.iter().copied())?;
        Ok(Self { w_std, b_v, b_h })
    }

    pub fn v_dim(&self) -> usize {
        self.w_std.ncols()
    }

    pub fn h_dim(&self) -> usize {
        self.w_std.nrows()
    }

    /// Standard joint score `h' W_std v + b_h' h + b_v' v`.
    pub fn energy(&self, v: &[u8], h: &[u8]) -> Result<f64> {
        if v.len() != self.v_dim() || h.len() != self.h_dim() {
            return Err(QtError::DimensionMismatch("energy: shape mismatch".into()));
        }
        check_binary("v", v)?;
        check_binary("h", h)?;
        let mut phi = 0.0;
        for (i, hi) in h.iter().enumerate() {
            if *hi == 1 {
                phi += self.b_h[i];
                for (j, &wij) in self.w_std.row(i).iter().enumerate() {
                    if v[j] == 1 {
                        phi += wij;
                    }
                }
            }
        }
        for (j, vj) in v.iter().enumerate() {
            if *vj == 1 {
                phi += self.b_v[j];
            }
        }
        Ok(phi)
    }
}

/// Either parameterization, as stored in a checkpoint file.
#[derive(Debug, Clone)]
pub enum CheckpointParams {
    Qt(RbmParamsQt),
    Std(RbmParamsStd),
}

impl CheckpointParams {
    pub fn v_dim(&self) -> usize {
        match self {
            CheckpointParams::Qt(p) => p.v_dim(),
            CheckpointParams::Std(p) => p.v_dim(),
        }
    }

    pub fn h_dim(&self) -> usize {
        match self {
            CheckpointParams::Qt(p) => p.h_dim(),
            CheckpointParams::Std(p) => p.h_dim(),
        }
    }

    /// Network-form view: `Std` checkpoints are converted exactly (T = 1).
    pub fn as_qt(&self) -> RbmParamsQt {
        match self {
            CheckpointParams::Qt(p) => p.clone(),
            CheckpointParams::Std(p) => RbmParamsQt::from_standard(p),
        }
    }
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    v: usize,
    h: usize,
    w: Vec<Vec<f64>>,
    c_v: Vec<f64>,
    c_h: Vec<f64>,
    log_t: f64,
    parameterization: String,
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn rows_to_matrix(rows: &[Vec<f64>], h: usize, v: usize) -> Result<Array2<f64>> {
    if rows.len() != h || rows.iter().any(|r| r.len() != v) {
        return Err(QtError::Data(format!("checkpoint weight matrix is not {h}x{v}")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((h, v), flat)
        .map_err(|e| QtError::Data(format!("checkpoint weight matrix: {e}")))
}

pub fn save_checkpoint(params: &CheckpointParams, path: &Path) -> Result<()> {
    let file = match params {
        CheckpointParams::Qt(p) => CheckpointFile {
            version: CHECKPOINT_VERSION,
            v: p.v_dim(),
            h: p.h_dim(),
            w: matrix_to_rows(&p.w),
            c_v: p.c_v.to_vec(),
            c_h: p.c_h.to_vec(),
            log_t: p.log_t,
            parameterization: "qt".into(),
        },
        CheckpointParams::Std(p) => CheckpointFile {
            version: CHECKPOINT_VERSION,
            v: p.v_dim(),
            h: p.h_dim(),
            w: matrix_to_rows(&p.w_std),
            c_v: p.b_v.to_vec(),
            c_h: p.b_h.to_vec(),
            log_t: 0.0,
            parameterization: "std".into(),
        },
    };
    let mut text = serde_json::to_string_pretty(&file)
        .map_err(|e| QtError::Data(format!("checkpoint serialization: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| QtError::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointParams> {
    let text = std::fs::read_to_string(path).map_err(|e| QtError::io(path, e))?;
    let file: CheckpointFile = serde_json::from_str(&text)
        .map_err(|e| QtError::Data(format!("checkpoint parse error in {}: {e}", path.display())))?;
    if file.version != CHECKPOINT_VERSION {
        return Err(QtError::Data(format!(
            "unknown checkpoint version {} (supported: {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    let w = rows_to_matrix(&file.w, file.h, file.v)?;
    let c_v = Array1::from_vec(file.c_v);
    let c_h = Array1::from_vec(file.c_h);
    match file.parameterization.as_str() {
        "qt" => Ok(CheckpointParams::Qt(RbmParamsQt::new(w, c_v, c_h, file.log_t)?)),
        "std" => Ok(CheckpointParams::Std(RbmParamsStd::new(w, c_v, c_h)?)),
        other => Err(QtError::Data(format!("unknown parameterization {other:?}"))),
    }
}
