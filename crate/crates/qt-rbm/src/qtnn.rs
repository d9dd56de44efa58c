//! The unrolled inference network.
//!
//! Evidence and a query mask are encoded into logit-space unary terms,
//! pushed through `N` identical parallel message-passing layers, and read
//! out as per-unit beliefs. The whole thing is a pure feed-forward
//! function of `(v, q, params, T)`:
//!
//! ```text
//! u_v     = clamp(logit(v), +-L) .* q          u_h = 0
//! M^(0)   = 0
//! M_hv[i,j] <- f_w( u_v[j] + c_v[j] + sum_k M_vh[j,k] - M_vh[j,i] )   w = W[i,j]
//! M_vh[j,i] <- f_w( u_h[i] + c_h[i] + sum_k M_hv[i,k] - M_hv[i,j] )   w = W[i,j]
//! v_hat   = sigmoid(u_v + c_v + M_vh^(N) 1)
//! h_hat   = sigmoid(u_h + c_h + M_hv^(N) 1)
//! ```
//!
//! Both message matrices of a layer are computed from the previous layer
//! (fully parallel update), the unary term is re-fed at every layer, and
//! the subtraction is the usual exclusion of the message that came from
//! the target unit.
//!
//! The transfer function `f_w(x; T)` is the two-state message update for
//! a pairwise factor scoring 0 on agreement and `-w` on disagreement,
//! evaluated at temperature `T`. It is computed as the max-product
//! message plus a softplus correction, which is exact and overflow-safe:
//! `T = 1` reproduces sum-product, `T = 0` max-product, and intermediate
//! temperatures interpolate. Zero weight or zero input yields exactly
//! zero output.

use ndarray::{Array1, Array2, Zip};

use crate::error::{QtError, Result};
use crate::model::RbmParamsQt;

/// Default logit-space magnitude for hard binary evidence.
pub const DEFAULT_CLAMP: f64 = 20.0;

/// Binary mask over the visible units: 1 = observed input, 0 = output to
/// be predicted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryMask(Vec<u8>);

impl QueryMask {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(QtError::Domain(format!("query mask entry {pos} is not binary")));
        }
        Ok(Self(bits))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.0
    }

    pub fn is_input(&self, j: usize) -> bool {
        self.0[j] == 1
    }

    pub fn is_all_ones(&self) -> bool {
        self.0.iter().all(|&b| b == 1)
    }

    pub fn output_indices(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .filter_map(|(j, &b)| (b == 0).then_some(j))
            .collect()
    }

    pub fn n_outputs(&self) -> usize {
        self.0.iter().filter(|&&b| b == 0).count()
    }
}

/// Logit-space evidence; zero entries encode a uniform belief.
#[derive(Debug, Clone, PartialEq)]
pub struct UnaryPotentials {
    pub u_v: Array1<f64>,
    pub u_h: Array1<f64>,
}

/// The two directed message matrices of one layer.
///
/// `m_hv[i, j]` is the message from visible unit `j` into hidden unit
/// `i`; `m_vh[j, i]` the reverse. Messages are bounded by the coupling
/// magnitude (`|f_w| <= |w| + T log 2`); the initial state is all zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageState {
    pub m_hv: Array2<f64>,
    pub m_vh: Array2<f64>,
}

impl MessageState {
    pub fn zeros(v_dim: usize, h_dim: usize) -> Self {
        Self {
            m_hv: Array2::zeros((h_dim, v_dim)),
            m_vh: Array2::zeros((v_dim, h_dim)),
        }
    }
}

/// Output beliefs: inferred probability of 1 for every unit. `h_hat` is
/// exposed for inspection but never enters the training loss.
#[derive(Debug, Clone)]
pub struct Beliefs {
    pub v_hat: Array1<f64>,
    pub h_hat: Array1<f64>,
}

/// Pre-activation inputs of one layer's transfer applications.
#[derive(Debug, Clone)]
pub struct LayerPreacts {
    /// Input to the transfer producing `m_hv[i, j]`; shape H x V.
    pub a_hv: Array2<f64>,
    /// Input to the transfer producing `m_vh[j, i]`; shape V x H.
    pub b_vh: Array2<f64>,
}

/// Everything the reverse pass needs to replay a forward evaluation:
/// the unary terms, the N+1 message states, the per-layer pre-activations
/// and the pre-sigmoid inputs of the output layer.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub u: UnaryPotentials,
    pub states: Vec<MessageState>,
    pub preacts: Vec<LayerPreacts>,
    pub s_v: Array1<f64>,
    pub s_h: Array1<f64>,
}

impl ForwardTrace {
    pub fn n_layers(&self) -> usize {
        self.preacts.len()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    p.ln() - (-p).ln_1p()
}

/// Sign with `sign(0) = 0`, as required for exact zero propagation
/// through the transfer function.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Encode evidence `v` under mask `q` as logit-space unary potentials.
///
/// Hard binary evidence maps to `+-clamp_l`; soft evidence (fractional
/// entries) passes through `logit` untouched while within the clamp.
/// Masked-out entries become exactly zero.
pub fn encode_evidence(v: &[f64], q: &QueryMask, clamp_l: f64) -> Result<UnaryPotentials> {
    if v.len() != q.len() {
        return Err(QtError::DimensionMismatch(format!(
            "evidence length {} vs mask length {}",
            v.len(),
            q.len()
        )));
    }
    if !(clamp_l.is_finite() && clamp_l > 0.0) {
        return Err(QtError::Config(format!("clamp_l must be finite and positive, got {clamp_l}")));
    }
    let mut u_v = Array1::zeros(v.len());
    for (j, &vj) in v.iter().enumerate() {
        if !(0.0..=1.0).contains(&vj) {
            return Err(QtError::Domain(format!("evidence v[{j}] = {vj} outside [0, 1]")));
        }
        if q.is_input(j) {
            u_v[j] = logit(vj).clamp(-clamp_l, clamp_l);
        }
    }
    Ok(UnaryPotentials { u_v, u_h: Array1::zeros(0) })
}

impl UnaryPotentials {
    /// Size the (all-zero) hidden unary block for a model with `h_dim`
    /// hidden units. [`encode_evidence`] cannot know the model, so this
    /// must be called before [`forward`].
    pub fn with_h_dim(mut self, h_dim: usize) -> Self {
        self.u_h = Array1::zeros(h_dim);
        self
    }
}

/// Temperature-scaled softplus `sp(x, t) = t ln(1 + exp(x / t))`,
/// evaluated in the overflow-safe form `max(x, 0) + t ln(1 + exp(-|x|/t))`.
pub fn softplus_t(x: f64, t: f64) -> f64 {
    debug_assert!(t > 0.0);
    x.max(0.0) + t * (-x.abs() / t).exp().ln_1p()
}

/// Max-product transfer: `sign(w) * clamp(x, -|w|, |w|)`.
pub fn transfer_mp(x: f64, w: f64) -> f64 {
    sgn(w) * x.clamp(-w.abs(), w.abs())
}

/// Temperature-interpolated message transfer function.
///
/// `t = 1` equals the sum-product message
/// `ln((e^x + e^-w) / (e^(x-w) + 1))`; `t = 0` dispatches to
/// [`transfer_mp`] (the closed-form limit). For all inputs,
/// `|f_w(x)| <= |w| + t ln 2`, and `f` vanishes exactly when either `x`
/// or `w` is zero.
pub fn transfer(x: f64, w: f64, t: f64) -> f64 {
    if t == 0.0 {
        return transfer_mp(x, w);
    }
    transfer_mp(x, w) + softplus_t(-(x + w).abs(), t) - softplus_t(-(x - w).abs(), t)
}

/// Partials of [`transfer`] with respect to input, weight and temperature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct TransferPartials {
    pub dx: f64,
    pub dw: f64,
    pub dt: f64,
}

/// Term-by-term derivatives of the transfer function.
///
/// Subgradient conventions at the kinks: the clamp derivative is 1 on the
/// open interval `|x| < |w|` and 0 outside and at the boundary;
/// `sign(0) = 0`. For `t > 0` these coincide with the smooth derivative
/// everywhere off the measure-zero manifold `|x| = |w|`.
pub(crate) fn transfer_partials(x: f64, w: f64, t: f64) -> TransferPartials {
    if t == 0.0 {
        let inside = if x.abs() < w.abs() { 1.0 } else { 0.0 };
        let outside = if x.abs() > w.abs() { 1.0 } else { 0.0 };
        return TransferPartials { dx: sgn(w) * inside, dw: sgn(x) * outside, dt: 0.0 };
    }
    let p = (x + w).abs();
    let m = (x - w).abs();
    let ep = (-p / t).exp();
    let em = (-m / t).exp();
    let sig_p = ep / (1.0 + ep); // sigmoid(-p / t)
    let sig_m = em / (1.0 + em);
    let inside = if x.abs() < w.abs() { 1.0 } else { 0.0 };
    let outside = if x.abs() > w.abs() { 1.0 } else { 0.0 };
    TransferPartials {
        dx: sgn(w) * inside - sgn(x + w) * sig_p + sgn(x - w) * sig_m,
        dw: sgn(x) * outside - sgn(x + w) * sig_p - sgn(x - w) * sig_m,
        dt: (ep.ln_1p() + (p / t) * sig_p) - (em.ln_1p() + (m / t) * sig_m),
    }
}

fn check_shapes(params: &RbmParamsQt, u: &UnaryPotentials, m: &MessageState) -> Result<()> {
    let (h, v) = params.w.dim();
    if u.u_v.len() != v || u.u_h.len() != h {
        return Err(QtError::DimensionMismatch(format!(
            "unary potentials ({}, {}) vs model ({v}, {h})",
            u.u_v.len(),
            u.u_h.len()
        )));
    }
    if m.m_hv.dim() != (h, v) || m.m_vh.dim() != (v, h) {
        return Err(QtError::DimensionMismatch("message state shape mismatch".into()));
    }
    Ok(())
}

fn layer_step(
    params: &RbmParamsQt,
    u: &UnaryPotentials,
    m: &MessageState,
) -> (MessageState, LayerPreacts) {
    let t = params.temperature();
    let sum_vh = m.m_vh.sum_axis(ndarray::Axis(1)); // incoming total per visible j
    let sum_hv = m.m_hv.sum_axis(ndarray::Axis(1)); // incoming total per hidden i

    let mut a_hv = Array2::zeros(m.m_hv.dim());
    let mut b_vh = Array2::zeros(m.m_vh.dim());
    for ((i, j), a) in a_hv.indexed_iter_mut() {
        *a = u.u_v[j] + params.c_v[j] + sum_vh[j] - m.m_vh[(j, i)];
    }
    for ((j, i), b) in b_vh.indexed_iter_mut() {
        *b = u.u_h[i] + params.c_h[i] + sum_hv[i] - m.m_hv[(i, j)];
    }

    let mut m_hv = Array2::zeros(m.m_hv.dim());
    Zip::from(&mut m_hv).and(&a_hv).and(&params.w).for_each(|out, &a, &w| {
        *out = transfer(a, w, t);
    });
    let mut m_vh = Array2::zeros(m.m_vh.dim());
    Zip::from(&mut m_vh).and(&b_vh).and(&params.w.t()).for_each(|out, &b, &w| {
        *out = transfer(b, w, t);
    });

    (MessageState { m_hv, m_vh }, LayerPreacts { a_hv, b_vh })
}

/// One fully parallel message-passing layer computed from the old state.
pub fn message_layer(
    params: &RbmParamsQt,
    u: &UnaryPotentials,
    m: &MessageState,
) -> Result<MessageState> {
    check_shapes(params, u, m)?;
    Ok(layer_step(params, u, m).0)
}

/// Run `n_layers` message-passing layers from the zero state and read out
/// beliefs. Deterministic and pure; the returned trace replays the whole
/// computation for the reverse pass.
pub fn forward(
    params: &RbmParamsQt,
    u: &UnaryPotentials,
    n_layers: usize,
) -> Result<(Beliefs, ForwardTrace)> {
    if n_layers == 0 {
        return Err(QtError::Config("n_layers must be at least 1".into()));
    }
    let state0 = MessageState::zeros(params.v_dim(), params.h_dim());
    check_shapes(params, u, &state0)?;

    let mut states = Vec::with_capacity(n_layers + 1);
    let mut preacts = Vec::with_capacity(n_layers);
    states.push(state0);
    for _ in 0..n_layers {
        let (next, pre) = layer_step(params, u, states.last().unwrap());
        states.push(next);
        preacts.push(pre);
    }

    let last = states.last().unwrap();
    let s_v = &u.u_v + &params.c_v + &last.m_vh.sum_axis(ndarray::Axis(1));
    let s_h = &u.u_h + &params.c_h + &last.m_hv.sum_axis(ndarray::Axis(1));
    let beliefs = Beliefs { v_hat: s_v.mapv(sigmoid), h_hat: s_h.mapv(sigmoid) };
    let trace = ForwardTrace { u: u.clone(), states, preacts, s_v, s_h };
    Ok((beliefs, trace))
}

/// Cross-entropy between the true sample and the estimated beliefs,
/// summed (not averaged) over the output dimensions of the query.
/// Natural log.
pub fn masked_ce(v: &[u8], beliefs: &Beliefs, q: &QueryMask) -> Result<f64> {
    if v.len() != q.len() || v.len() != beliefs.v_hat.len() {
        return Err(QtError::DimensionMismatch(format!(
            "masked_ce: v len {}, beliefs len {}, mask len {}",
            v.len(),
            beliefs.v_hat.len(),
            q.len()
        )));
    }
    let mut ce = 0.0;
    for (j, &vj) in v.iter().enumerate() {
        if q.is_input(j) {
            continue;
        }
        if vj > 1 {
            return Err(QtError::Domain(format!("sample entry v[{j}] = {vj} is not binary")));
        }
        let p = beliefs.v_hat[j];
        if !(p > 0.0 && p < 1.0) {
            return Err(QtError::Domain(format!("belief v_hat[{j}] = {p} outside (0, 1)")));
        }
        ce -= if vj == 1 { p.ln() } else { (-p).ln_1p() };
    }
    Ok(ce)
}
