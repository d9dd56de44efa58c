//! Stochastic training over random query masks.
//!
//! Each step draws a minibatch, one fresh query mask per sample, runs the
//! network forward and backward, averages the gradients and applies one
//! Adam update. Validation NCE on a fixed seeded query set drives early
//! stopping and best-checkpoint selection.
//!
//! All randomness flows through per-purpose RNG streams derived from
//! `(seed, epoch, batch, sample)`, and per-sample work is reduced in
//! index order, so results are bit-identical regardless of thread count.

use ndarray::{Array1, Array2};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::BinaryDataset;
use crate::error::{QtError, Result};
use crate::grad::{backward, ParamGradients};
use crate::model::RbmParamsQt;
use crate::qtnn::{encode_evidence, forward, masked_ce, logit, QueryMask};
use crate::rng;

// Stream tags.
const TAG_INIT: u64 = 1;
const TAG_SHUFFLE: u64 = 2;
const TAG_QUERY: u64 = 3;
const TAG_VALID_QUERIES: u64 = 4;

/// How query masks are drawn during training and evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum QueryDistribution {
    /// Each variable is an input with probability `p`; masks with zero
    /// outputs are resampled.
    Bernoulli { p: f64 },
    /// Exactly one uniformly chosen output per mask; the degenerate case
    /// that reduces training to pseudo-likelihood.
    SingleOutput,
}

impl QueryDistribution {
    /// Parse the CLI spelling: `bernoulli:<p>` or `pl`.
    pub fn parse(s: &str) -> Result<Self> {
        if s == "pl" {
            return Ok(Self::SingleOutput);
        }
        if let Some(p) = s.strip_prefix("bernoulli:") {
            let p: f64 = p
                .parse()
                .map_err(|_| QtError::Config(format!("bad query distribution {s:?}")))?;
            if !(p > 0.0 && p < 1.0) {
                return Err(QtError::Config(format!("bernoulli p must lie in (0, 1), got {p}")));
            }
            return Ok(Self::Bernoulli { p });
        }
        Err(QtError::Config(format!(
            "unknown query distribution {s:?} (expected bernoulli:<p> or pl)"
        )))
    }

    pub fn label(&self) -> String {
        match self {
            Self::Bernoulli { p } => format!("bernoulli:{p}"),
            Self::SingleOutput => "pl".into(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainConfig {
    pub hidden_units: usize,
    pub n_layers: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub seed: u64,
    pub clamp_l: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            hidden_units: 16,
            n_layers: 10,
            batch_size: 500,
            learning_rate: 1e-2,
            max_epochs: 100,
            patience: 10,
            seed: 0,
            clamp_l: crate::qtnn::DEFAULT_CLAMP,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_units == 0
            || self.n_layers == 0
            || self.batch_size == 0
            || self.max_epochs == 0
            || self.patience == 0
        {
            return Err(QtError::Config("all training sizes must be positive".into()));
        }
        if self.patience > self.max_epochs {
            return Err(QtError::Config(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(QtError::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if !(self.clamp_l > 0.0 && self.clamp_l.is_finite()) {
            return Err(QtError::Config(format!("clamp {} must be positive", self.clamp_l)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub valid_nce: f64,
    pub temperature: f64,
    /// Wall time of the epoch. Kept in memory for inspection only; the
    /// serialized history omits it so that re-runs are byte-identical.
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
}

impl TrainHistory {
    pub fn best_valid_nce(&self) -> Option<f64> {
        self.epochs.iter().map(|e| e.valid_nce).min_by(|a, b| a.total_cmp(b))
    }

    /// Deterministic CSV serialization (no wall time).
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,valid_nce,temperature\n");
        for e in &self.epochs {
            out.push_str(&format!("{},{},{},{}\n", e.epoch, e.train_loss, e.valid_nce, e.temperature));
        }
        out
    }
}

/// Draw one query mask. Bernoulli masks that would carry no loss
/// (all inputs) are resampled.
pub fn sample_query(v_dim: usize, dist: &QueryDistribution, rng: &mut impl Rng) -> QueryMask {
    match dist {
        QueryDistribution::Bernoulli { p } => loop {
            let bits: Vec<u8> = (0..v_dim).map(|_| u8::from(rng.random::<f64>() < *p)).collect();
            if bits.iter().any(|&b| b == 0) {
                return QueryMask::new(bits).expect("bits are binary");
            }
        },
        QueryDistribution::SingleOutput => {
            let out = rng.random_range(0..v_dim);
            let bits: Vec<u8> = (0..v_dim).map(|j| u8::from(j != out)).collect();
            QueryMask::new(bits).expect("bits are binary")
        }
    }
}

/// First and second moment estimates for every parameter coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m_w: Array2<f64>,
    pub v_w: Array2<f64>,
    pub m_cv: Array1<f64>,
    pub v_cv: Array1<f64>,
    pub m_ch: Array1<f64>,
    pub v_ch: Array1<f64>,
    pub m_lt: f64,
    pub v_lt: f64,
    pub step: u64,
}

impl AdamState {
    pub fn zeros(v_dim: usize, h_dim: usize) -> Self {
        Self {
            m_w: Array2::zeros((h_dim, v_dim)),
            v_w: Array2::zeros((h_dim, v_dim)),
            m_cv: Array1::zeros(v_dim),
            v_cv: Array1::zeros(v_dim),
            m_ch: Array1::zeros(h_dim),
            v_ch: Array1::zeros(h_dim),
            m_lt: 0.0,
            v_lt: 0.0,
            step: 0,
        }
    }
}

/// One bias-corrected Adam update over (W, c_v, c_h, log_t) jointly.
/// Parameters are immutable snapshots; a new struct is returned.
pub fn adam_step(
    params: &RbmParamsQt,
    grads: &ParamGradients,
    mut state: AdamState,
    cfg: &TrainConfig,
) -> (RbmParamsQt, AdamState) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps, lr) = (cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps, cfg.learning_rate);
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);

    let update = |theta: f64, g: f64, m: &mut f64, v: &mut f64| -> f64 {
        *m = b1 * *m + (1.0 - b1) * g;
        *v = b2 * *v + (1.0 - b2) * g * g;
        theta - lr * (*m / bc1) / ((*v / bc2).sqrt() + eps)
    };

    let mut w = params.w.clone();
    for ((i, j), x) in w.indexed_iter_mut() {
        *x = update(*x, grads.d_w[(i, j)], &mut state.m_w[(i, j)], &mut state.v_w[(i, j)]);
    }
    let mut c_v = params.c_v.clone();
    for (j, x) in c_v.iter_mut().enumerate() {
        *x = update(*x, grads.d_c_v[j], &mut state.m_cv[j], &mut state.v_cv[j]);
    }
    let mut c_h = params.c_h.clone();
    for (i, x) in c_h.iter_mut().enumerate() {
        *x = update(*x, grads.d_c_h[i], &mut state.m_ch[i], &mut state.v_ch[i]);
    }
    let log_t = update(params.log_t, grads.d_log_t, &mut state.m_lt, &mut state.v_lt);

    (RbmParamsQt { w, c_v, c_h, log_t }, state)
}

/// Marginal-matched initialization: tiny random couplings, visible biases
/// at the clamped logit of the training-set column means, zero hidden
/// biases, T = 1.
fn init_params(train: &BinaryDataset, cfg: &TrainConfig) -> RbmParamsQt {
    let mut r = rng::stream(cfg.seed, &[TAG_INIT]);
    let w = Array2::from_shape_fn((cfg.hidden_units, train.n_cols), |_| {
        r.random_range(-0.01..0.01)
    });
    let means = train.column_means();
    let c_v = Array1::from_iter(means.iter().map(|&m| logit(m).clamp(-3.0, 3.0)));
    RbmParamsQt { w, c_v, c_h: Array1::zeros(cfg.hidden_units), log_t: 0.0 }
}

/// Forward + loss + backward for one (sample, mask) pair.
fn sample_pass(
    params: &RbmParamsQt,
    row: &[u8],
    q: &QueryMask,
    cfg: &TrainConfig,
) -> Result<(f64, ParamGradients)> {
    let vf: Vec<f64> = row.iter().map(|&x| x as f64).collect();
    let u = encode_evidence(&vf, q, cfg.clamp_l)?.with_h_dim(cfg.hidden_units);
    let (beliefs, trace) = forward(params, &u, cfg.n_layers)?;
    let ce = masked_ce(row, &beliefs, q)?;
    let grads = backward(params, &trace, row, q)?;
    Ok((ce, grads))
}

/// Train the inference network by stochastic gradient descent over
/// samples and query masks. Returns the parameters of the epoch with the
/// best validation NCE, plus the per-epoch history. Deterministic given
/// the config seed.
pub fn train_qt(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    cfg: &TrainConfig,
    dist: &QueryDistribution,
) -> Result<(RbmParamsQt, TrainHistory)> {
    cfg.validate()?;
    if train.n_rows() == 0 || valid.n_rows() == 0 {
        return Err(QtError::Data("train and validation sets must be non-empty".into()));
    }
    if train.n_cols != valid.n_cols {
        return Err(QtError::Data(format!(
            "train has {} columns, validation {}",
            train.n_cols, valid.n_cols
        )));
    }
    let v_dim = train.n_cols;
    let n = train.n_rows();

    let valid_queries = crate::eval::generate_query_set(
        valid.n_rows(),
        v_dim,
        dist,
        rng::derive_seed(cfg.seed, &[TAG_VALID_QUERIES]),
    );

    let mut params = init_params(train, cfg);
    let mut adam = AdamState::zeros(v_dim, cfg.hidden_units);
    let mut history = TrainHistory::default();
    let mut best: Option<(RbmParamsQt, f64)> = None;
    let mut epochs_since_improve = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let t0 = std::time::Instant::now();
        let mut order: Vec<usize> = (0..n).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng::stream(cfg.seed, &[TAG_SHUFFLE, epoch as u64]));

        let mut epoch_ce = 0.0;
        for (batch_no, chunk) in order.chunks(cfg.batch_size).enumerate() {
            // One fresh mask per sample, from a per-sample stream.
            let masks: Vec<QueryMask> = (0..chunk.len())
                .map(|pos| {
                    let mut r = rng::stream(
                        cfg.seed,
                        &[TAG_QUERY, epoch as u64, batch_no as u64, pos as u64],
                    );
                    sample_query(v_dim, dist, &mut r)
                })
                .collect();

            let passes: Vec<Result<(f64, ParamGradients)>> = chunk
                .par_iter()
                .zip(masks.par_iter())
                .map(|(&row_idx, q)| sample_pass(&params, train.row(row_idx), q, cfg))
                .collect();

            let mut batch_ce = 0.0;
            let mut batch_grads = ParamGradients::zeros(v_dim, cfg.hidden_units);
            for pass in passes {
                let (ce, g) = pass?;
                batch_ce += ce;
                batch_grads.add_assign(&g);
            }
            let scale = 1.0 / chunk.len() as f64;
            batch_grads.scale(scale);
            if !(batch_ce * scale).is_finite() || !batch_grads.is_finite() {
                return Err(QtError::Numerical(format!(
                    "training diverged at epoch {epoch}, batch {batch_no} (non-finite loss or gradient)"
                )));
            }
            epoch_ce += batch_ce;
            let (next, next_adam) = adam_step(&params, &batch_grads, adam, cfg);
            params = next;
            adam = next_adam;
        }

        let backend = crate::eval::QtnnBackend::new(params.clone(), cfg.n_layers, cfg.clamp_l);
        let valid_nce =
            crate::eval::nce(&backend, valid, &valid_queries, cfg.seed)?.nce;
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: epoch_ce / n as f64,
            valid_nce,
            temperature: params.temperature(),
            wall_time_s: t0.elapsed().as_secs_f64(),
        });

        let improved = best.as_ref().is_none_or(|(_, b)| valid_nce < *b);
        if improved {
            best = Some((params.clone(), valid_nce));
            epochs_since_improve = 0;
        } else {
            epochs_since_improve += 1;
            if epochs_since_improve >= cfg.patience {
                break;
            }
        }
    }

    let (best_params, _) = best.expect("at least one epoch ran");
    Ok((best_params, history))
}

/// Validation-NCE grid used when no learning rate is given.
pub const DEFAULT_LR_GRID: [f64; 4] = [3e-2, 1e-2, 3e-3, 1e-3];

/// Train once per candidate learning rate and keep the best validation
/// NCE. Returns the winning rate alongside its model and history.
pub fn select_learning_rate(
    train: &BinaryDataset,
    valid: &BinaryDataset,
    base: &TrainConfig,
    dist: &QueryDistribution,
    grid: &[f64],
) -> Result<(f64, RbmParamsQt, TrainHistory)> {
    if grid.is_empty() {
        return Err(QtError::Config("learning-rate grid is empty".into()));
    }
    let mut best: Option<(f64, RbmParamsQt, TrainHistory, f64)> = None;
    for &lr in grid {
        let cfg = TrainConfig { learning_rate: lr, ..base.clone() };
        let (params, history) = train_qt(train, valid, &cfg, dist)?;
        let nce = history.best_valid_nce().unwrap_or(f64::INFINITY);
        if best.as_ref().is_none_or(|(_, _, _, b)| nce < *b) {
            best = Some((lr, params, history, nce));
        }
    }
    let (lr, params, history, _) = best.expect("grid is non-empty");
    Ok((lr, params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data_io::generate_synthetic;

    #[test]
    fn pl_mask_has_exactly_one_output() {
        let mut r = rng::stream(1, &[]);
        for _ in 0..50 {
            let q = sample_query(5, &QueryDistribution::SingleOutput, &mut r);
            assert_eq!(q.n_outputs(), 1);
            assert_eq!(q.len(), 5);
        }
    }

    #[test]
    fn bernoulli_mask_never_all_ones() {
        let mut r = rng::stream(2, &[]);
        // High p makes all-ones likely without the resampling rule.
        let dist = QueryDistribution::Bernoulli { p: 0.95 };
        for _ in 0..2000 {
            let q = sample_query(3, &dist, &mut r);
            assert!(!q.is_all_ones());
        }
    }

    #[test]
    fn bernoulli_mask_coordinate_means() {
        let mut r = rng::stream(3, &[]);
        let dist = QueryDistribution::Bernoulli { p: 0.5 };
        let v_dim = 20;
        let n = 100_000;
        let mut sums = vec![0usize; v_dim];
        for _ in 0..n {
            let q = sample_query(v_dim, &dist, &mut r);
            for (s, &b) in sums.iter_mut().zip(q.bits()) {
                *s += b as usize;
            }
        }
        for (j, s) in sums.iter().enumerate() {
            let mean = *s as f64 / n as f64;
            assert!((0.49..=0.51).contains(&mean), "coordinate {j}: mean {mean}");
        }
    }

    #[test]
    fn query_distribution_parsing() {
        assert_eq!(QueryDistribution::parse("pl").unwrap(), QueryDistribution::SingleOutput);
        assert_eq!(
            QueryDistribution::parse("bernoulli:0.3").unwrap(),
            QueryDistribution::Bernoulli { p: 0.3 }
        );
        assert!(QueryDistribution::parse("bernoulli:1.0").is_err());
        assert!(QueryDistribution::parse("uniform").is_err());
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let params = RbmParamsQt::zeros(3, 2);
        let grads = ParamGradients::zeros(3, 2);
        let cfg = TrainConfig::default();
        let (next, state) = adam_step(&params, &grads, AdamState::zeros(3, 2), &cfg);
        assert_eq!(next, params);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_first_step_is_signed_learning_rate() {
        let params = RbmParamsQt::zeros(2, 1);
        let mut grads = ParamGradients::zeros(2, 1);
        grads.d_w[(0, 0)] = 0.37;
        grads.d_c_v[1] = -2.1;
        let cfg = TrainConfig { learning_rate: 0.01, ..TrainConfig::default() };
        let (next, _) = adam_step(&params, &grads, AdamState::zeros(2, 1), &cfg);
        // First bias-corrected step is -lr * g / (|g| + eps') ~ -lr sign(g).
        assert!((next.w[(0, 0)] + 0.01).abs() < 1e-6);
        assert!((next.c_v[1] - 0.01).abs() < 1e-6);
        assert_eq!(next.c_v[0], 0.0);
    }

    #[test]
    fn adam_matches_hand_computed_trajectory() {
        // Single parameter theta with gradient g = theta (quadratic loss
        // theta^2 / 2), three steps recomputed longhand.
        let cfg = TrainConfig {
            learning_rate: 0.1,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            ..TrainConfig::default()
        };
        let mut params = RbmParamsQt::zeros(1, 1);
        params.c_v[0] = 1.0;
        let mut state = AdamState::zeros(1, 1);

        // Independent scalar recomputation of the recurrence.
        let (mut m, mut v, mut theta) = (0.0f64, 0.0f64, 1.0f64);
        for t in 1..=3 {
            let g = theta;
            m = 0.9 * m + 0.1 * g;
            v = 0.999 * v + 0.001 * g * g;
            let mhat = m / (1.0 - 0.9f64.powi(t));
            let vhat = v / (1.0 - 0.999f64.powi(t));
            theta -= 0.1 * mhat / (vhat.sqrt() + 1e-8);

            let mut grads = ParamGradients::zeros(1, 1);
            grads.d_c_v[0] = params.c_v[0];
            let (next, next_state) = adam_step(&params, &grads, state, &cfg);
            params = next;
            state = next_state;
            assert!(
                (params.c_v[0] - theta).abs() < 1e-12,
                "step {t}: {} vs {theta}",
                params.c_v[0]
            );
        }
    }

    #[test]
    fn frozen_batch_loss_decreases() {
        // Full-batch steps on a frozen minibatch and frozen masks with a
        // small rate must descend for the first few steps.
        let (data, _) = generate_synthetic(6, 3, 1.2, 32, 5).unwrap();
        let cfg = TrainConfig {
            hidden_units: 4,
            n_layers: 3,
            learning_rate: 5e-3,
            ..TrainConfig::default()
        };
        let mut r = rng::stream(9, &[]);
        let dist = QueryDistribution::Bernoulli { p: 0.5 };
        let masks: Vec<QueryMask> =
            (0..data.n_rows()).map(|_| sample_query(6, &dist, &mut r)).collect();

        let mut params = init_params(&data, &cfg);
        let mut adam = AdamState::zeros(6, 4);
        let batch_loss = |p: &RbmParamsQt| -> f64 {
            (0..data.n_rows())
                .map(|i| {
                    crate::grad::query_loss(p, data.row(i), &masks[i], cfg.n_layers, cfg.clamp_l)
                        .unwrap()
                })
                .sum::<f64>()
                / data.n_rows() as f64
        };

        let mut prev = batch_loss(&params);
        for _ in 0..5 {
            let mut grads = ParamGradients::zeros(6, 4);
            for i in 0..data.n_rows() {
                let (_, g) = sample_pass(&params, data.row(i), &masks[i], &cfg).unwrap();
                grads.add_assign(&g);
            }
            grads.scale(1.0 / data.n_rows() as f64);
            let (next, next_adam) = adam_step(&params, &grads, adam, &cfg);
            params = next;
            adam = next_adam;
            let loss = batch_loss(&params);
            assert!(loss < prev, "loss went {prev} -> {loss}");
            prev = loss;
        }
    }

    #[test]
    fn pl_mode_step_loss_is_single_variable_ce() {
        let (data, _) = generate_synthetic(5, 2, 1.0, 8, 3).unwrap();
        let cfg = TrainConfig { hidden_units: 3, n_layers: 3, ..TrainConfig::default() };
        let params = init_params(&data, &cfg);
        let mut r = rng::stream(4, &[]);
        for i in 0..data.n_rows() {
            let q = sample_query(5, &QueryDistribution::SingleOutput, &mut r);
            let (ce, _) = sample_pass(&params, data.row(i), &q, &cfg).unwrap();
            // Recompute the lone output's conditional cross-entropy.
            let j = q.output_indices()[0];
            let vf: Vec<f64> = data.row(i).iter().map(|&x| x as f64).collect();
            let u = encode_evidence(&vf, &q, cfg.clamp_l).unwrap().with_h_dim(3);
            let (beliefs, _) = forward(&params, &u, cfg.n_layers).unwrap();
            let p = beliefs.v_hat[j];
            let expect = if data.row(i)[j] == 1 { -p.ln() } else { -(-p).ln_1p() };
            assert!((ce - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn training_improves_over_uniform_and_is_deterministic() {
        let (data, _) = generate_synthetic(8, 4, 1.5, 700, 21).unwrap();
        let (train, valid, _) = crate::data_io::split_dataset(&data, (0.7, 0.15, 0.15), 1).unwrap();
        let cfg = TrainConfig {
            hidden_units: 4,
            n_layers: 5,
            batch_size: 100,
            learning_rate: 0.02,
            max_epochs: 12,
            patience: 12,
            seed: 5,
            ..TrainConfig::default()
        };
        let dist = QueryDistribution::Bernoulli { p: 0.5 };
        let (params, history) = train_qt(&train, &valid, &cfg, &dist).unwrap();
        let best = history.best_valid_nce().unwrap();
        assert!(best < 1.0, "validation NCE {best} not better than uniform");

        // Returned parameters achieve the minimum recorded validation NCE.
        let valid_queries = crate::eval::generate_query_set(
            valid.n_rows(),
            8,
            &dist,
            rng::derive_seed(cfg.seed, &[TAG_VALID_QUERIES]),
        );
        let backend = crate::eval::QtnnBackend::new(params.clone(), cfg.n_layers, cfg.clamp_l);
        let reported = crate::eval::nce(&backend, &valid, &valid_queries, cfg.seed).unwrap().nce;
        assert!((reported - best).abs() < 1e-12);

        // Same seed, same everything.
        let (params2, history2) = train_qt(&train, &valid, &cfg, &dist).unwrap();
        assert_eq!(params, params2);
        assert_eq!(history.epochs.len(), history2.epochs.len());
        for (a, b) in history.epochs.iter().zip(history2.epochs.iter()) {
            assert_eq!(a.train_loss, b.train_loss);
            assert_eq!(a.valid_nce, b.valid_nce);
        }
    }

    #[test]
    fn training_rejects_mismatched_columns() {
        let a = BinaryDataset::new("a", 3, vec![vec![0, 1, 0]]).unwrap();
        let b = BinaryDataset::new("b", 2, vec![vec![0, 1]]).unwrap();
        let cfg = TrainConfig::default();
        assert!(train_qt(&a, &b, &cfg, &QueryDistribution::Bernoulli { p: 0.5 }).is_err());
    }
}
