//! Hierarchical cut selection policy.
//!
//! The higher level (`theta1`) encodes the pool with an LSTM and maps the last
//! hidden state to a Gaussian over a pre-squash value `K`; the ratio is
//! `k = 0.5 tanh(K) + 0.5`. The lower level (`theta2`) is a pointer network
//! that emits an ordered subset of `floor(N k)` cuts.
//!
//! Network inputs are the 13 cut features passed through `sign(x) ln(1 + |x|)`.

use std::path::Path;
use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::cuts::Cut;
use crate::error::{Error, Result};
use crate::features::{CutSelState, NUM_FEATURES};
use crate::nn::{Attention, Checkpoint, Grads, Lstm, Mlp, ParamId, ParamStore, Tape, Var};
use crate::select::CutSelector;

pub const HEM_HIDDEN: usize = 128;
/// `ln(1e-3)`.
pub const LOG_SIGMA_MIN: f64 = -6.907_755_278_982_137;
pub const LOG_SIGMA_MAX: f64 = 0.0;
/// Initial offset of the log-sigma output so that the clamp starts inactive.
const LOG_SIGMA_INIT: f64 = -0.5;
/// Keeps `k` strictly inside `(0, 1)` when `tanh` saturates.
const K_EPS: f64 = 1e-12;

pub const THETA1: &str = "theta1.";
pub const THETA2: &str = "theta2.";

#[derive(Debug, Clone, PartialEq)]
pub struct HemParams {
    pub store: ParamStore,
    pub hidden: usize,
    pub ratio_encoder: Lstm,
    pub ratio_head: Mlp,
    pub encoder: Lstm,
    pub decoder: Lstm,
    pub attention: Attention,
    /// First decoder input.
    pub start: ParamId,
}

/// One sampled (or greedy) decision of the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HemAction {
    pub k: f64,
    /// `K` with `k = 0.5 tanh(K) + 0.5`.
    pub pre_squash: f64,
    /// Selected pool positions in decode order.
    pub indices: Vec<usize>,
    pub logp_h: f64,
    pub logp_l: f64,
}

impl HemAction {
    pub fn empty() -> Self {
        HemAction {
            k: 0.0,
            pre_squash: 0.0,
            indices: Vec::new(),
            logp_h: 0.0,
            logp_l: 0.0,
        }
    }

    pub fn m(&self) -> usize {
        self.indices.len()
    }

    pub fn log_prob(&self) -> f64 {
        self.logp_h + self.logp_l
    }
}

/// Which parts of the hierarchy are active.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HemVariant {
    /// Ratio from the higher level, subset from the pointer network.
    Full,
    /// No higher level; the pointer network stops on an appended end token.
    NoHigher,
    /// No higher level; exactly `floor(N ratio)` cuts.
    FixedRatio(f64),
}

impl HemVariant {
    pub fn uses_theta1(&self) -> bool {
        matches!(self, HemVariant::Full)
    }
}

pub enum Mode<'r> {
    Sample(&'r mut dyn RngCore),
    Greedy,
}

enum Choice<'r, 'a> {
    Sample(&'r mut dyn RngCore),
    Greedy,
    Replay(&'a HemAction),
}

impl<'r> From<Mode<'r>> for Choice<'r, '_> {
    fn from(mode: Mode<'r>) -> Self {
        match mode {
            Mode::Sample(rng) => Choice::Sample(rng),
            Mode::Greedy => Choice::Greedy,
        }
    }
}

/// Result of the higher-level policy alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioSample {
    pub k: f64,
    pub pre_squash: f64,
    pub mu: f64,
    pub sigma: f64,
    pub logp: f64,
}

pub fn squash(pre: f64) -> f64 {
    (0.5 * pre.tanh() + 0.5).clamp(K_EPS, 1.0 - K_EPS)
}

/// `ln(0.5 (1 - tanh(K)^2))`, stable for large `|K|`.
pub fn log_squash_jacobian(pre: f64) -> f64 {
    let a = pre.abs();
    0.5f64.ln() + 2.0 * (std::f64::consts::LN_2 - a - (-2.0 * a).exp().ln_1p())
}

/// Log-density of `k = squash(K)` for `K ~ N(mu, sigma)`, evaluated at `K = pre`.
pub fn tanh_gaussian_logp(pre: f64, mu: f64, sigma: f64) -> f64 {
    let z = (pre - mu) / sigma;
    -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln() - log_squash_jacobian(pre)
}

fn input_transform(x: f64) -> f64 {
    x.signum() * x.abs().ln_1p()
}

fn network_inputs(state: &CutSelState, end_token: bool) -> Vec<Vec<f64>> {
    let mut xs: Vec<Vec<f64>> = state
        .rows()
        .iter()
        .map(|r| r.iter().map(|&v| input_transform(v)).collect())
        .collect();
    if end_token {
        xs.push(vec![1.0; NUM_FEATURES]);
    }
    xs
}

fn sample_index(probs: &[f64], mask: &[bool], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (j, (&p, &masked)) in probs.iter().zip(mask).enumerate() {
        if masked {
            continue;
        }
        acc += p;
        last = j;
        if u < acc {
            return j;
        }
    }
    last
}

fn argmax_unmasked(logits: &[f64], mask: &[bool]) -> usize {
    let mut best = None;
    for (j, (&l, &masked)) in logits.iter().zip(mask).enumerate() {
        if !masked && best.is_none_or(|(_, b)| l > b) {
            best = Some((j, l));
        }
    }
    best.map_or(0, |(j, _)| j)
}

struct Trace {
    action: HemAction,
    logp_h: Option<Var>,
    logp_l: Var,
}

impl HemParams {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_hidden(HEM_HIDDEN, rng)
    }

    pub fn with_hidden<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let ratio_encoder = Lstm::new(&mut store, "theta1.enc", NUM_FEATURES, hidden, rng);
        let ratio_head = Mlp::new(&mut store, "theta1.head", &[hidden, hidden, hidden, 2], rng);
        let out_bias = ratio_head.layers.last().expect("head has layers").b;
        store.get_mut(out_bias).data[1] += LOG_SIGMA_INIT;
        let encoder = Lstm::new(&mut store, "theta2.enc", NUM_FEATURES, hidden, rng);
        let decoder = Lstm::new(&mut store, "theta2.dec", hidden, hidden, rng);
        let attention = Attention::new(&mut store, "theta2.att", hidden, rng);
        let start = store.add_uniform("theta2.start", hidden, 1, hidden, rng);
        HemParams {
            store,
            hidden,
            ratio_encoder,
            ratio_head,
            encoder,
            decoder,
            attention,
            start,
        }
    }

    pub fn theta1(&self) -> Vec<ParamId> {
        self.store.group(THETA1)
    }

    pub fn theta2(&self) -> Vec<ParamId> {
        self.store.group(THETA2)
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        self.store.to_checkpoint()
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let w_hh = ckpt
            .tensors
            .get("theta2.enc.w_hh")
            .ok_or_else(|| Error::Checkpoint("missing theta2.enc.w_hh".into()))?;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
        let mut params = Self::with_hidden(w_hh.shape.1, &mut rng);
        params.store.load_checkpoint(ckpt)?;
        Ok(params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_checkpoint().save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }

    /// `(mu, log sigma)` from the final encoder state.
    fn ratio_dist(&self, tape: &mut Tape, xs: &[Var]) -> Result<(Var, Var)> {
        let (_, last) = self.ratio_encoder.run(tape, xs)?;
        let out = self.ratio_head.forward(tape, last.h)?;
        let mu = tape.slice(out, 0, 1)?;
        let log_sigma = tape.slice(out, 1, 1)?;
        let log_sigma = tape.clamp(log_sigma, LOG_SIGMA_MIN, LOG_SIGMA_MAX);
        Ok((mu, log_sigma))
    }

    fn ratio_logp(&self, tape: &mut Tape, mu: Var, log_sigma: Var, pre: f64) -> Result<Var> {
        let kc = tape.scalar_const(pre);
        let d = tape.sub(kc, mu)?;
        let neg = tape.scale(log_sigma, -1.0);
        let inv_sigma = tape.exp(neg);
        let z = tape.mul(d, inv_sigma)?;
        let z2 = tape.mul(z, z)?;
        let quad = tape.scale(z2, -0.5);
        let lp = tape.sub(quad, log_sigma)?;
        let rest =
            tape.scalar_const(-0.5 * (2.0 * std::f64::consts::PI).ln() - log_squash_jacobian(pre));
        tape.add(lp, rest)
    }

    /// Pointer decoding over `xs`. With `steps = None` the last input is an
    /// end token and decoding stops once it is chosen.
    fn decode(
        &self,
        tape: &mut Tape,
        xs: &[Var],
        steps: Option<usize>,
        choice: &mut Choice,
    ) -> Result<(Vec<usize>, Var)> {
        let total = xs.len();
        let end = if steps.is_none() {
            total.checked_sub(1)
        } else {
            None
        };
        let steps = steps.unwrap_or(total);
        let mut logp = tape.scalar_const(0.0);
        if steps == 0 {
            return Ok((Vec::new(), logp));
        }
        let (hs, enc_final) = self.encoder.run(tape, xs)?;
        let keys = self.attention.project_keys(tape, &hs)?;
        let mut state = enc_final;
        let mut input = tape.param(self.start);
        let mut mask = vec![false; total];
        let mut chosen = Vec::with_capacity(steps);
        for step in 0..steps {
            state = self.decoder.step(tape, input, state)?;
            let logits = self.attention.logits(tape, &keys, state.h)?;
            let j = match choice {
                Choice::Sample(rng) => {
                    let probs = Tape::masked_softmax(tape.value(logits), &mask);
                    sample_index(&probs, &mask, &mut **rng)
                }
                Choice::Greedy => argmax_unmasked(tape.value(logits), &mask),
                Choice::Replay(a) => match a.indices.get(step) {
                    Some(&j) => j,
                    None => end.ok_or_else(|| {
                        Error::ShapeMismatch("replayed action is shorter than m".into())
                    })?,
                },
            };
            let lp = tape.log_softmax_pick(logits, mask.clone(), j)?;
            logp = tape.add(logp, lp)?;
            if Some(j) == end {
                break;
            }
            chosen.push(j);
            mask[j] = true;
            input = hs[j];
        }
        Ok((chosen, logp))
    }

    fn trace(
        &self,
        tape: &mut Tape,
        state: &CutSelState,
        variant: HemVariant,
        mut choice: Choice,
    ) -> Result<Trace> {
        let n = state.len();
        let rows = network_inputs(state, variant == HemVariant::NoHigher);
        let xs: Vec<Var> = rows.into_iter().map(|r| tape.constant(r)).collect();
        let (k, pre_squash, logp_h, steps) = match variant {
            HemVariant::Full => {
                if n == 0 {
                    return Err(Error::DegenerateState);
                }
                let (mu, log_sigma) = self.ratio_dist(tape, &xs)?;
                let (mu_v, sigma_v) = (tape.scalar(mu), tape.scalar(log_sigma).exp());
                let pre = match &mut choice {
                    Choice::Sample(rng) => {
                        let eps: f64 = (**rng).sample(StandardNormal);
                        mu_v + sigma_v * eps
                    }
                    Choice::Greedy => mu_v,
                    Choice::Replay(a) => a.pre_squash,
                };
                let lp = self.ratio_logp(tape, mu, log_sigma, pre)?;
                let k = squash(pre);
                let m = match &choice {
                    Choice::Replay(a) => a.indices.len(),
                    _ => (n as f64 * k).floor() as usize,
                };
                (k, pre, Some(lp), Some(m.min(n)))
            }
            HemVariant::FixedRatio(r) => {
                let m = match &choice {
                    Choice::Replay(a) => a.indices.len(),
                    _ => (n as f64 * r).floor() as usize,
                };
                (r, 0.0, None, Some(m.min(n)))
            }
            HemVariant::NoHigher => (f64::NAN, 0.0, None, None),
        };
        let (indices, logp_l) = self.decode(tape, &xs, steps, &mut choice)?;
        let k = if k.is_nan() {
            if n == 0 {
                0.0
            } else {
                indices.len() as f64 / n as f64
            }
        } else {
            k
        };
        let action = HemAction {
            k,
            pre_squash,
            logp_h: logp_h.map_or(0.0, |v| tape.scalar(v)),
            logp_l: tape.scalar(logp_l),
            indices,
        };
        Ok(Trace {
            action,
            logp_h,
            logp_l,
        })
    }

    /// Samples or greedily picks an action. An empty pool gives the empty action.
    pub fn act(&self, state: &CutSelState, variant: HemVariant, mode: Mode) -> Result<HemAction> {
        if state.is_empty() && variant != HemVariant::NoHigher {
            return Ok(HemAction::empty());
        }
        let mut tape = Tape::new(&self.store);
        Ok(self.trace(&mut tape, state, variant, mode.into())?.action)
    }

    /// `(logp_h, logp_l)` of a previously taken action.
    pub fn log_prob(
        &self,
        state: &CutSelState,
        variant: HemVariant,
        action: &HemAction,
    ) -> Result<(f64, f64)> {
        if state.is_empty() && variant != HemVariant::NoHigher {
            return Ok((0.0, 0.0));
        }
        let mut tape = Tape::new(&self.store);
        let t = self.trace(&mut tape, state, variant, Choice::Replay(action))?;
        Ok((t.action.logp_h, t.action.logp_l))
    }

    /// Adds `w_h * d logp_h + w_l * d logp_l` for a replayed action into `grads`.
    pub fn accumulate_grads(
        &self,
        state: &CutSelState,
        variant: HemVariant,
        action: &HemAction,
        w_h: f64,
        w_l: f64,
        grads: &mut Grads,
    ) -> Result<()> {
        if state.is_empty() && variant != HemVariant::NoHigher {
            return Ok(());
        }
        let mut tape = Tape::new(&self.store);
        let t = self.trace(&mut tape, state, variant, Choice::Replay(action))?;
        let low = tape.scale(t.logp_l, w_l);
        let root = match t.logp_h {
            Some(h) => {
                let high = tape.scale(h, w_h);
                tape.add(high, low)?
            }
            None => low,
        };
        tape.backward(root, 1.0, grads);
        Ok(())
    }

    /// `(mu, log sigma)` of the ratio distribution; adds
    /// `w_mu * d mu + w_log_sigma * d log_sigma` into `grads`.
    pub fn ratio_head_grads(
        &self,
        state: &CutSelState,
        w_mu: f64,
        w_log_sigma: f64,
        grads: &mut Grads,
    ) -> Result<(f64, f64)> {
        if state.is_empty() {
            return Err(Error::DegenerateState);
        }
        let mut tape = Tape::new(&self.store);
        let xs: Vec<Var> = network_inputs(state, false)
            .into_iter()
            .map(|r| tape.constant(r))
            .collect();
        let (mu, log_sigma) = self.ratio_dist(&mut tape, &xs)?;
        let out = (tape.scalar(mu), tape.scalar(log_sigma));
        let a = tape.scale(mu, w_mu);
        let b = tape.scale(log_sigma, w_log_sigma);
        let root = tape.add(a, b)?;
        tape.backward(root, 1.0, grads);
        Ok(out)
    }
}

pub fn sample_ratio(
    params: &HemParams,
    state: &CutSelState,
    rng: &mut dyn RngCore,
) -> Result<RatioSample> {
    if state.is_empty() {
        return Err(Error::DegenerateState);
    }
    let mut tape = Tape::new(&params.store);
    let xs: Vec<Var> = network_inputs(state, false)
        .into_iter()
        .map(|r| tape.constant(r))
        .collect();
    let (mu, log_sigma) = params.ratio_dist(&mut tape, &xs)?;
    let (mu, sigma) = (tape.scalar(mu), tape.scalar(log_sigma).exp());
    let eps: f64 = rng.sample(StandardNormal);
    let pre = mu + sigma * eps;
    Ok(RatioSample {
        k: squash(pre),
        pre_squash: pre,
        mu,
        sigma,
        logp: tanh_gaussian_logp(pre, mu, sigma),
    })
}

/// Decodes exactly `m` distinct indices; returns them with their log-probability.
pub fn pointer_decode(
    params: &HemParams,
    state: &CutSelState,
    m: usize,
    mode: Mode,
) -> Result<(Vec<usize>, f64)> {
    if m > state.len() {
        return Err(Error::ShapeMismatch(format!(
            "cannot decode {m} of {} cuts",
            state.len()
        )));
    }
    let mut tape = Tape::new(&params.store);
    let xs: Vec<Var> = network_inputs(state, false)
        .into_iter()
        .map(|r| tape.constant(r))
        .collect();
    let (idx, lp) = params.decode(&mut tape, &xs, Some(m), &mut mode.into())?;
    Ok((idx, tape.scalar(lp)))
}

pub fn hem_select(params: &HemParams, state: &CutSelState, mode: Mode) -> Result<HemAction> {
    params.act(state, HemVariant::Full, mode)
}

pub fn hem_no_h(params: &HemParams, state: &CutSelState, mode: Mode) -> Result<HemAction> {
    params.act(state, HemVariant::NoHigher, mode)
}

pub fn hem_ratio(
    params: &HemParams,
    state: &CutSelState,
    ratio: f64,
    mode: Mode,
) -> Result<HemAction> {
    params.act(state, HemVariant::FixedRatio(ratio), mode)
}

/// [`hem_ratio`] with the chosen cuts re-sorted by ascending id.
pub fn hem_ratio_order(
    params: &HemParams,
    state: &CutSelState,
    cuts: &[Cut],
    ratio: f64,
    mode: Mode,
) -> Result<Vec<usize>> {
    let mut idx = hem_ratio(params, state, ratio, mode)?.indices;
    idx.sort_by_key(|&i| cuts[i].id);
    Ok(idx)
}

/// Greedy evaluation-time selector for any variant.
#[derive(Debug, Clone)]
pub struct HemSelector {
    pub params: Arc<HemParams>,
    pub variant: HemVariant,
    /// Discard the decode order and add cuts by ascending id.
    pub sort_by_id: bool,
}

impl HemSelector {
    pub fn hem(params: Arc<HemParams>) -> Self {
        HemSelector {
            params,
            variant: HemVariant::Full,
            sort_by_id: false,
        }
    }

    pub fn no_h(params: Arc<HemParams>) -> Self {
        HemSelector {
            params,
            variant: HemVariant::NoHigher,
            sort_by_id: false,
        }
    }

    pub fn ratio(params: Arc<HemParams>, ratio: f64) -> Self {
        HemSelector {
            params,
            variant: HemVariant::FixedRatio(ratio),
            sort_by_id: false,
        }
    }

    pub fn ratio_order(params: Arc<HemParams>, ratio: f64) -> Self {
        HemSelector {
            sort_by_id: true,
            ..Self::ratio(params, ratio)
        }
    }
}

impl CutSelector for HemSelector {
    fn name(&self) -> String {
        match (self.variant, self.sort_by_id) {
            (HemVariant::Full, _) => "HEM".into(),
            (HemVariant::NoHigher, _) => "HEM w/o H".into(),
            (HemVariant::FixedRatio(_), false) => "HEM-ratio".into(),
            (HemVariant::FixedRatio(_), true) => "HEM-ratio-order".into(),
        }
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        let mut idx = match self.params.act(state, self.variant, Mode::Greedy) {
            Ok(a) => a.indices,
            Err(e) => {
                log::warn!("HEM selection failed, adding no cuts: {e}");
                Vec::new()
            }
        };
        if self.sort_by_id {
            idx.sort_by_key(|&i| cuts[i].id);
        }
        idx
    }
}
