//! Maximum-likelihood baseline: persistent contrastive divergence on the
//! standard parameterization, block Gibbs sampling for its negative
//! phase, and conditional Gibbs inference for answering queries with the
//! learned model.

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::data_io::BinaryDataset;
use crate::error::{QtError, Result};
use crate::model::{RbmParamsQt, RbmParamsStd};
use crate::qtnn::{sigmoid, QueryMask, DEFAULT_CLAMP};
use crate::rng;

const TAG_CHAIN: u64 = 0x10;
const TAG_CHAIN_INIT: u64 = 0x11;
const TAG_COND: u64 = 0x12;

/// One persistent block-Gibbs chain with its own RNG stream.
#[derive(Debug, Clone)]
pub struct GibbsChainState {
    pub v: Vec<u8>,
    pub h: Vec<u8>,
    rng: ChaCha8Rng,
}

impl GibbsChainState {
    pub fn new(v: Vec<u8>, h: Vec<u8>, rng: ChaCha8Rng) -> Self {
        Self { v, h, rng }
    }
}

/// One full block update: sample every hidden unit from
/// `p(h_i = 1 | v) = sigmoid((W_std v)_i + b_h[i])`, then every visible
/// unit from `p(v_j = 1 | h) = sigmoid((W_std' h)_j + b_v[j])`.
pub fn gibbs_sweep(std: &RbmParamsStd, state: &mut GibbsChainState) {
    let (h_dim, v_dim) = std.w_std.dim();
    debug_assert_eq!(state.v.len(), v_dim);
    debug_assert_eq!(state.h.len(), h_dim);
    for i in 0..h_dim {
        let mut act = std.b_h[i];
        for (j, &w) in std.w_std.row(i).iter().enumerate() {
            if state.v[j] == 1 {
                act += w;
            }
        }
        state.h[i] = u8::from(state.rng.random::<f64>() < sigmoid(act));
    }
    for j in 0..v_dim {
        let mut act = std.b_v[j];
        for (i, &w) in std.w_std.column(j).iter().enumerate() {
            if state.h[i] == 1 {
                act += w;
            }
        }
        state.v[j] = u8::from(state.rng.random::<f64>() < sigmoid(act));
    }
}

#[derive(Debug, Clone)]
pub struct PcdConfig {
    pub epochs: usize,
    /// Fixed rate, or `None` to cross-validate `lr_grid` on validation
    /// NCE through the conditional-Gibbs backend.
    pub learning_rate: Option<f64>,
    pub lr_grid: Vec<f64>,
    /// 0 means one chain per batch slot.
    pub n_chains: usize,
    pub gibbs_steps_per_update: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Sampler settings for the cross-validation evaluations.
    pub cv_gibbs_samples: usize,
    pub cv_burn_in: usize,
}

impl Default for PcdConfig {
    fn default() -> Self {
        Self {
            epochs: 1000,
            learning_rate: None,
            lr_grid: vec![0.1, 0.05, 0.02, 0.01],
            n_chains: 0,
            gibbs_steps_per_update: 1,
            batch_size: 500,
            seed: 0,
            cv_gibbs_samples: 500,
            cv_burn_in: 100,
        }
    }
}

impl PcdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.gibbs_steps_per_update == 0 {
            return Err(QtError::Config("all PCD sizes must be positive".into()));
        }
        if let Some(lr) = self.learning_rate {
            // Zero is allowed: a no-op run is well-defined.
            if !(lr >= 0.0 && lr.is_finite()) {
                return Err(QtError::Config(format!("PCD learning rate {lr} must be non-negative")));
            }
        } else if self.lr_grid.is_empty() {
            return Err(QtError::Config("PCD learning-rate grid is empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default)]
pub struct PcdHistory {
    /// (epoch, mean squared reconstruction error of the positive phase).
    pub epochs: Vec<(usize, f64)>,
    pub chosen_lr: f64,
}

impl PcdHistory {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,recon_mse\n");
        for (e, r) in &self.epochs {
            out.push_str(&format!("{e},{r}\n"));
        }
        out
    }
}

/// Stochastic maximum-likelihood ascent with persistent chains.
///
/// Positive-phase hidden statistics are the exact conditionals
/// `sigmoid(W_std v + b_h)`; the negative phase advances `n_chains`
/// persistent chains by `gibbs_steps_per_update` sweeps per update. When
/// no learning rate is fixed, each grid candidate is trained and scored
/// on validation NCE with the conditional-Gibbs backend; the best model
/// is returned.
pub fn pcd_train(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    hidden_units: usize,
    cfg: &PcdConfig,
) -> Result<(RbmParamsStd, PcdHistory)> {
    cfg.validate()?;
    if hidden_units == 0 {
        return Err(QtError::Config("hidden_units must be positive".into()));
    }
    if train.n_rows() == 0 {
        return Err(QtError::Data("PCD training set is empty".into()));
    }

    if let Some(lr) = cfg.learning_rate {
        let mut result = pcd_fit(train, hidden_units, cfg, lr)?;
        result.1.chosen_lr = lr;
        return Ok(result);
    }

    // Cross-validate the rate on validation NCE via Gibbs inference.
    let dist = crate::training::QueryDistribution::Bernoulli { p: 0.5 };
    let cv_queries = crate::eval::generate_query_set(
        valid.n_rows(),
        valid.n_cols,
        &dist,
        rng::derive_seed(cfg.seed, &[0xcf]),
    );
    let mut best: Option<(RbmParamsStd, PcdHistory, f64)> = None;
    let mut last_err = None;
    for &lr in &cfg.lr_grid {
        // A rate that diverges is simply taken out of the running.
        let (params, mut history) = match pcd_fit(train, hidden_units, cfg, lr) {
            Ok(fit) => fit,
            Err(e @ QtError::Numerical(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        history.chosen_lr = lr;
        let backend = crate::eval::PcdGibbsBackend::new(
            params.clone(),
            cfg.cv_gibbs_samples,
            cfg.cv_burn_in,
            cfg.seed,
        );
        let nce = crate::eval::nce(&backend, valid, &cv_queries, cfg.seed)?.nce;
        if best.as_ref().is_none_or(|(_, _, b)| nce < *b) {
            best = Some((params, history, nce));
        }
    }
    match best {
        Some((params, history, _)) => Ok((params, history)),
        None => Err(last_err.expect("empty grid rejected by validate")),
    }
}

fn pcd_fit(
    train: &BinaryDataset,
    hidden_units: usize,
    cfg: &PcdConfig,
    lr: f64,
) -> Result<(RbmParamsStd, PcdHistory)> {
    let v_dim = train.n_cols;
    let n = train.n_rows();
    let n_chains = if cfg.n_chains == 0 { cfg.batch_size } else { cfg.n_chains };

    let mut init_rng = rng::stream(cfg.seed, &[TAG_CHAIN_INIT]);
    let mut w = Array2::from_shape_fn((hidden_units, v_dim), |_| init_rng.random_range(-0.01..0.01));
    let means = train.column_means();
    let mut b_v = Array1::from_iter(means.iter().map(|&m| crate::qtnn::logit(m).clamp(-3.0, 3.0)));
    let mut b_h = Array1::zeros(hidden_units);

    let mut chains: Vec<GibbsChainState> = (0..n_chains)
        .map(|c| {
            let row = train.row(init_rng.random_range(0..n)).to_vec();
            GibbsChainState::new(row, vec![0; hidden_units], rng::stream(cfg.seed, &[TAG_CHAIN, c as u64]))
        })
        .collect();

    let mut history = PcdHistory::default();
    for epoch in 1..=cfg.epochs {
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng::stream(cfg.seed, &[0x5f, epoch as u64]));

        let mut epoch_recon = 0.0;
        let mut epoch_terms = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let std_now = RbmParamsStd {
                w_std: w.clone(),
                b_v: b_v.clone(),
                b_h: b_h.clone(),
            };

            // Positive phase: exact h | v statistics over the batch.
            let mut pos_w = Array2::<f64>::zeros((hidden_units, v_dim));
            let mut pos_bv = Array1::<f64>::zeros(v_dim);
            let mut pos_bh = Array1::<f64>::zeros(hidden_units);
            for &row_idx in chunk {
                let v = train.row(row_idx);
                let mut h_prob = vec![0.0; hidden_units];
                for i in 0..hidden_units {
                    let mut act = b_h[i];
                    for (j, &wij) in w.row(i).iter().enumerate() {
                        if v[j] == 1 {
                            act += wij;
                        }
                    }
                    h_prob[i] = sigmoid(act);
                    pos_bh[i] += h_prob[i];
                }
                for (j, &vj) in v.iter().enumerate() {
                    if vj == 1 {
                        pos_bv[j] += 1.0;
                        for i in 0..hidden_units {
                            pos_w[(i, j)] += h_prob[i];
                        }
                    }
                }
                // Reconstruction error for monitoring.
                for j in 0..v_dim {
                    let mut act = b_v[j];
                    for i in 0..hidden_units {
                        act += w[(i, j)] * h_prob[i];
                    }
                    let d = v[j] as f64 - sigmoid(act);
                    epoch_recon += d * d;
                }
                epoch_terms += v_dim;
            }

            // Negative phase: advance the persistent chains.
            chains.par_iter_mut().for_each(|chain| {
                for _ in 0..cfg.gibbs_steps_per_update {
                    gibbs_sweep(&std_now, chain);
                }
            });
            let mut neg_w = Array2::<f64>::zeros((hidden_units, v_dim));
            let mut neg_bv = Array1::<f64>::zeros(v_dim);
            let mut neg_bh = Array1::<f64>::zeros(hidden_units);
            for chain in &chains {
                let mut h_prob = vec![0.0; hidden_units];
                for i in 0..hidden_units {
                    let mut act = b_h[i];
                    for (j, &wij) in w.row(i).iter().enumerate() {
                        if chain.v[j] == 1 {
                            act += wij;
                        }
                    }
                    h_prob[i] = sigmoid(act);
                    neg_bh[i] += h_prob[i];
                }
                for (j, &vj) in chain.v.iter().enumerate() {
                    if vj == 1 {
                        neg_bv[j] += 1.0;
                        for i in 0..hidden_units {
                            neg_w[(i, j)] += h_prob[i];
                        }
                    }
                }
            }

            let bs = chunk.len() as f64;
            let cs = n_chains as f64;
            for ((i, j), wij) in w.indexed_iter_mut() {
                *wij += lr * (pos_w[(i, j)] / bs - neg_w[(i, j)] / cs);
            }
            for j in 0..v_dim {
                b_v[j] += lr * (pos_bv[j] / bs - neg_bv[j] / cs);
            }
            for i in 0..hidden_units {
                b_h[i] += lr * (pos_bh[i] / bs - neg_bh[i] / cs);
            }
        }

        if w.iter().any(|x| !x.is_finite())
            || b_v.iter().any(|x| !x.is_finite())
            || b_h.iter().any(|x| !x.is_finite())
        {
            return Err(QtError::Numerical(format!(
                "PCD diverged at epoch {epoch} (non-finite parameters, lr = {lr})"
            )));
        }
        history.epochs.push((epoch, epoch_recon / epoch_terms.max(1) as f64));
    }

    Ok((RbmParamsStd { w_std: w, b_v, b_h }, history))
}

/// Estimate `p(v_j = 1 | inputs)` for the output variables by Gibbs
/// sampling with the inputs clamped: hidden units and output units are
/// updated, `burn_in` sweeps are discarded, and the retained sweeps are
/// averaged. Estimates are clamped into `[1e-3, 1 - 1e-3]` so a finite
/// cross-entropy is always defined.
pub fn gibbs_conditional_inference(
    std: &RbmParamsStd,
    v: &[u8],
    q: &QueryMask,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    const EPS: f64 = 1e-3;
    let (h_dim, v_dim) = std.w_std.dim();
    if v.len() != v_dim || q.len() != v_dim {
        return Err(QtError::DimensionMismatch(format!(
            "gibbs inference: sample/mask length {}/{} vs {v_dim} visible units",
            v.len(),
            q.len()
        )));
    }
    if n_samples == 0 {
        return Err(QtError::Config("n_samples must be positive".into()));
    }
    let outputs = q.output_indices();
    if outputs.is_empty() {
        return Ok(Vec::new());
    }

    let mut r = rng::stream(seed, &[TAG_COND]);
    let mut vw: Vec<u8> = (0..v_dim)
        .map(|j| if q.is_input(j) { v[j] } else { r.random_range(0..2) })
        .collect();
    let mut hw = vec![0u8; h_dim];

    let mut counts = vec![0u64; outputs.len()];
    for sweep in 0..burn_in + n_samples {
        for i in 0..h_dim {
            let mut act = std.b_h[i];
            for (j, &w) in std.w_std.row(i).iter().enumerate() {
                if vw[j] == 1 {
                    act += w;
                }
            }
            hw[i] = u8::from(r.random::<f64>() < sigmoid(act));
        }
        for &j in &outputs {
            let mut act = std.b_v[j];
            for (i, &w) in std.w_std.column(j).iter().enumerate() {
                if hw[i] == 1 {
                    act += w;
                }
            }
            vw[j] = u8::from(r.random::<f64>() < sigmoid(act));
        }
        if sweep >= burn_in {
            for (slot, &j) in counts.iter_mut().zip(outputs.iter()) {
                *slot += vw[j] as u64;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| (c as f64 / n_samples as f64).clamp(EPS, 1.0 - EPS))
        .collect())
}

/// Inference network view of a PCD-trained model: convert to the network
/// parameterization at T = 1 and run 10 message-passing layers.
pub fn pcd_to_bp_backend(std: &RbmParamsStd) -> crate::eval::QtnnBackend {
    crate::eval::QtnnBackend::new(RbmParamsQt::from_standard(std), 10, DEFAULT_CLAMP)
        .with_name("pcd-bp")
}
