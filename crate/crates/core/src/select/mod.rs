//! The cut-selector interface and the rule-based baselines.

mod sbp;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::cuts::Cut;
use crate::features::CutSelState;

pub use sbp::{sbp_select, SbpParams, SbpSelector, SBP_HIDDEN};

/// Selection ratio used by every fixed-ratio baseline.
pub const DEFAULT_RATIO: f64 = 0.2;

/// Picks an ordered subset of the candidate pool. The returned indices are
/// distinct, `< cuts.len()`, and listed in the order the cuts get added.
pub trait CutSelector: Send + Sync {
    fn name(&self) -> String;

    fn select(&self, state: &CutSelState, cuts: &[Cut], rng: &mut dyn RngCore) -> Vec<usize>;
}

impl<S: CutSelector + ?Sized> CutSelector for Box<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], rng: &mut dyn RngCore) -> Vec<usize> {
        (**self).select(state, cuts, rng)
    }
}

impl<S: CutSelector + ?Sized> CutSelector for std::sync::Arc<S> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], rng: &mut dyn RngCore) -> Vec<usize> {
        (**self).select(state, cuts, rng)
    }
}

/// `ceil(ratio * n)`, so a positive ratio keeps at least one cut of a nonempty pool.
pub fn ceil_count(ratio: f64, n: usize) -> usize {
    if n == 0 || ratio <= 0.0 {
        return 0;
    }
    (((ratio * n as f64) - 1e-9).ceil() as usize).clamp(1, n)
}

/// The `count` best-scoring indices, best first. Ties go to the lower cut id.
pub fn top_by_score(scores: &[f64], cuts: &[Cut], count: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| {
        scores[b]
            .total_cmp(&scores[a])
            .then_with(|| cut_id(cuts, a).cmp(&cut_id(cuts, b)))
    });
    idx.truncate(count);
    idx
}

fn cut_id(cuts: &[Cut], i: usize) -> u64 {
    cuts.get(i).map_or(i as u64, |c| c.id)
}

/// Adds nothing.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoCuts;

impl CutSelector for NoCuts {
    fn name(&self) -> String {
        "NoCuts".into()
    }

    fn select(&self, _: &CutSelState, _: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        Vec::new()
    }
}

/// A uniformly random subset of `ceil(ratio * N)` cuts in random order.
#[derive(Debug, Clone, Copy)]
pub struct RandomSelector {
    pub ratio: f64,
}

impl Default for RandomSelector {
    fn default() -> Self {
        RandomSelector {
            ratio: DEFAULT_RATIO,
        }
    }
}

impl CutSelector for RandomSelector {
    fn name(&self) -> String {
        "Random".into()
    }

    fn select(&self, state: &CutSelState, _: &[Cut], rng: &mut dyn RngCore) -> Vec<usize> {
        let n = state.len();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx.truncate(ceil_count(self.ratio, n));
        idx
    }
}

/// Top `ceil(ratio * N)` cuts by normalized violation, highest first.
#[derive(Debug, Clone, Copy)]
pub struct NormalizedViolation {
    pub ratio: f64,
}

impl Default for NormalizedViolation {
    fn default() -> Self {
        NormalizedViolation {
            ratio: DEFAULT_RATIO,
        }
    }
}

pub fn select_nv(state: &CutSelState, cuts: &[Cut], ratio: f64) -> Vec<usize> {
    let scores: Vec<f64> = state
        .features
        .iter()
        .map(|f| f.normalized_violation)
        .collect();
    top_by_score(&scores, cuts, ceil_count(ratio, state.len()))
}

impl CutSelector for NormalizedViolation {
    fn name(&self) -> String {
        "NV".into()
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        select_nv(state, cuts, self.ratio)
    }
}

/// Top `ceil(ratio * N)` cuts by efficacy, highest first.
#[derive(Debug, Clone, Copy)]
pub struct Efficacy {
    pub ratio: f64,
}

impl Default for Efficacy {
    fn default() -> Self {
        Efficacy {
            ratio: DEFAULT_RATIO,
        }
    }
}

pub fn select_eff(state: &CutSelState, cuts: &[Cut], ratio: f64) -> Vec<usize> {
    let scores: Vec<f64> = state.features.iter().map(|f| f.efficacy).collect();
    top_by_score(&scores, cuts, ceil_count(ratio, state.len()))
}

impl CutSelector for Efficacy {
    fn name(&self) -> String {
        "Eff".into()
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        select_eff(state, cuts, self.ratio)
    }
}

/// Every candidate, uniformly permuted.
#[derive(Debug, Clone, Copy, Default)]
pub struct RandomAll;

pub fn select_random_all(n: usize, rng: &mut dyn RngCore) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    idx
}

impl CutSelector for RandomAll {
    fn name(&self) -> String {
        "RandomAll".into()
    }

    fn select(&self, state: &CutSelState, _: &[Cut], rng: &mut dyn RngCore) -> Vec<usize> {
        select_random_all(state.len(), rng)
    }
}

/// The normalized-violation top set, uniformly permuted.
#[derive(Debug, Clone, Copy)]
pub struct RandomNv {
    pub ratio: f64,
}

pub fn select_random_nv(
    state: &CutSelState,
    cuts: &[Cut],
    ratio: f64,
    rng: &mut dyn RngCore,
) -> Vec<usize> {
    let mut idx = select_nv(state, cuts, ratio);
    idx.shuffle(rng);
    idx
}

impl CutSelector for RandomNv {
    fn name(&self) -> String {
        format!("RandomNV({})", self.ratio)
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], rng: &mut dyn RngCore) -> Vec<usize> {
        select_random_nv(state, cuts, self.ratio, rng)
    }
}

/// Replays a fixed action. Indices out of range for the pool are dropped.
#[derive(Debug, Clone, Default)]
pub struct Injected {
    pub indices: Vec<usize>,
}

impl CutSelector for Injected {
    fn name(&self) -> String {
        "Injected".into()
    }

    fn select(&self, state: &CutSelState, _: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        self.indices
            .iter()
            .copied()
            .filter(|&i| i < state.len())
            .collect()
    }
}
