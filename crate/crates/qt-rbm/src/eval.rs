//! Normalized cross-entropy evaluation over paired (sample, query) sets.
//!
//! NCE is the aggregated cross-entropy of a backend's predictions over
//! the output dimensions, divided by the cross-entropy of the uniform
//! predictor on the same outputs (`total output dims * ln 2`). Values
//! below 1.0 beat the trivial model. Queries are paired one-to-one with
//! test samples and generated once from a seed, so evaluations are
//! reproducible.

use rayon::prelude::*;

use crate::baselines;
use crate::data_io::BinaryDataset;
use crate::error::{QtError, Result};
use crate::model::{RbmParamsQt, RbmParamsStd};
use crate::oracle;
use crate::qtnn::{encode_evidence, forward, QueryMask};
use crate::rng;
use crate::training::{sample_query, QueryDistribution};

/// Anything that maps `(v, q)` to per-output marginal probabilities
/// (ascending output index order).
pub trait InferenceBackend: Sync {
    fn name(&self) -> &str;
    fn output_marginals(&self, v: &[u8], q: &QueryMask) -> Result<Vec<f64>>;
}

/// Feed-forward inference through the unrolled network.
#[derive(Debug, Clone)]
pub struct QtnnBackend {
    params: RbmParamsQt,
    n_layers: usize,
    clamp_l: f64,
    label: String,
}

impl QtnnBackend {
    pub fn new(params: RbmParamsQt, n_layers: usize, clamp_l: f64) -> Self {
        Self { params, n_layers, clamp_l, label: "qtnn".into() }
    }

    pub fn with_name(mut self, name: &str) -> Self {
        self.label = name.into();
        self
    }

    pub fn params(&self) -> &RbmParamsQt {
        &self.params
    }
}

impl InferenceBackend for QtnnBackend {
    fn name(&self) -> &str {
        &self.label
    }

    fn output_marginals(&self, v: &[u8], q: &QueryMask) -> Result<Vec<f64>> {
        let vf: Vec<f64> = v.iter().map(|&x| x as f64).collect();
        let u = encode_evidence(&vf, q, self.clamp_l)?.with_h_dim(self.params.h_dim());
        let (beliefs, _) = forward(&self.params, &u, self.n_layers)?;
        Ok(q.output_indices().iter().map(|&j| beliefs.v_hat[j]).collect())
    }
}

/// Conditional Gibbs sampling in a standard-parameterization model. The
/// per-call sampler stream is derived from the base seed and the call's
/// `(v, q)` bytes, so results do not depend on evaluation order.
#[derive(Debug, Clone)]
pub struct PcdGibbsBackend {
    std: RbmParamsStd,
    n_samples: usize,
    burn_in: usize,
    seed: u64,
}

impl PcdGibbsBackend {
    pub fn new(std: RbmParamsStd, n_samples: usize, burn_in: usize, seed: u64) -> Self {
        Self { std, n_samples, burn_in, seed }
    }
}

impl InferenceBackend for PcdGibbsBackend {
    fn name(&self) -> &str {
        "pcd-gibbs"
    }

    fn output_marginals(&self, v: &[u8], q: &QueryMask) -> Result<Vec<f64>> {
        let call_seed = rng::hash_bytes(rng::hash_bytes(self.seed, v), q.bits());
        baselines::gibbs_conditional_inference(
            &self.std,
            v,
            q,
            self.n_samples,
            self.burn_in,
            call_seed,
        )
    }
}

/// Brute-force enumeration; the Bayes-optimal-under-the-model reference.
#[derive(Debug, Clone)]
pub struct ExactBackend {
    params: RbmParamsQt,
}

impl ExactBackend {
    pub fn new(params: RbmParamsQt) -> Self {
        Self { params }
    }
}

impl InferenceBackend for ExactBackend {
    fn name(&self) -> &str {
        "oracle"
    }

    fn output_marginals(&self, v: &[u8], q: &QueryMask) -> Result<Vec<f64>> {
        oracle::exact_conditional(&self.params, v, q)
    }
}

/// Predicts 0.5 everywhere; its NCE is 1 by construction.
#[derive(Debug, Clone, Default)]
pub struct UniformBackend;

impl InferenceBackend for UniformBackend {
    fn name(&self) -> &str {
        "uniform"
    }

    fn output_marginals(&self, _v: &[u8], q: &QueryMask) -> Result<Vec<f64>> {
        Ok(vec![0.5; q.n_outputs()])
    }
}

/// One reproducible mask per test sample; never all-ones.
pub fn generate_query_set(
    n_samples: usize,
    v_dim: usize,
    dist: &QueryDistribution,
    seed: u64,
) -> Vec<QueryMask> {
    let mut r = rng::stream(seed, &[0xe7a1]);
    (0..n_samples).map(|_| sample_query(v_dim, dist, &mut r)).collect()
}

#[derive(Debug, Clone)]
pub struct EvalReport {
    pub backend: String,
    pub dataset: String,
    pub query_seed: u64,
    pub per_sample_ce: Vec<f64>,
    pub total_output_dims: usize,
    pub nce: f64,
}

/// Run a backend over every (sample, query) pair and normalize the
/// aggregated cross-entropy by the uniform-model cross-entropy.
pub fn nce(
    backend: &dyn InferenceBackend,
    data: &BinaryDataset,
    queries: &[QueryMask],
    query_seed: u64,
) -> Result<EvalReport> {
    if data.n_rows() != queries.len() {
        return Err(QtError::DimensionMismatch(format!(
            "nce: {} samples vs {} queries",
            data.n_rows(),
            queries.len()
        )));
    }

    let per_sample: Vec<Result<(f64, usize)>> = (0..data.n_rows())
        .into_par_iter()
        .map(|i| {
            let row = data.row(i);
            let q = &queries[i];
            let probs = backend.output_marginals(row, q)?;
            let outputs = q.output_indices();
            if probs.len() != outputs.len() {
                return Err(QtError::DimensionMismatch(format!(
                    "backend returned {} marginals for {} outputs",
                    probs.len(),
                    outputs.len()
                )));
            }
            let mut ce = 0.0;
            for (&j, &p) in outputs.iter().zip(probs.iter()) {
                ce -= if row[j] == 1 { p.ln() } else { (-p).ln_1p() };
            }
            if !ce.is_finite() {
                return Err(QtError::Numerical(format!("non-finite cross-entropy {ce}")));
            }
            Ok((ce, outputs.len()))
        })
        .collect();

    let mut per_sample_ce = Vec::with_capacity(data.n_rows());
    let mut total_ce = 0.0;
    let mut total_out = 0usize;
    for (i, r) in per_sample.into_iter().enumerate() {
        let (ce, n_out) = r.map_err(|e| QtError::Eval { sample: i, source: Box::new(e) })?;
        per_sample_ce.push(ce);
        total_ce += ce;
        total_out += n_out;
    }
    if total_out == 0 {
        return Err(QtError::Data("query set has no output dimensions".into()));
    }
    Ok(EvalReport {
        backend: backend.name().into(),
        dataset: data.name.clone(),
        query_seed,
        per_sample_ce,
        total_output_dims: total_out,
        nce: total_ce / (total_out as f64 * std::f64::consts::LN_2),
    })
}

/// Evaluate several backends on the identical query set.
pub fn compare(
    backends: &[&dyn InferenceBackend],
    data: &BinaryDataset,
    queries: &[QueryMask],
    query_seed: u64,
) -> Result<Vec<EvalReport>> {
    backends.iter().map(|b| nce(*b, data, queries, query_seed)).collect()
}

/// CSV rendering: `backend,dataset,seed,nce` with six decimals.
pub fn reports_to_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from("backend,dataset,seed,nce\n");
    for r in reports {
        out.push_str(&format!("{},{},{},{:.6}\n", r.backend, r.dataset, r.query_seed, r.nce));
    }
    out
}
