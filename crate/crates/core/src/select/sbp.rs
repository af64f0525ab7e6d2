use rand::{Rng, RngCore};

use crate::cuts::Cut;
use crate::error::{Error, Result};
use crate::features::{CutSelState, NUM_FEATURES};
use crate::nn::{Checkpoint, Mlp, ParamStore, Tensor};
use crate::select::{ceil_count, top_by_score, CutSelector, DEFAULT_RATIO};

pub const SBP_HIDDEN: usize = 128;
const RATIO_KEY: &str = "sbp.ratio";

/// Per-cut MLP scorer `13 -> 128 -> 128 -> 1` and a fixed selection ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct SbpParams {
    pub store: ParamStore,
    pub mlp: Mlp,
    pub ratio: f64,
}

impl SbpParams {
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_hidden(SBP_HIDDEN, rng)
    }

    pub fn with_hidden<R: Rng + ?Sized>(hidden: usize, rng: &mut R) -> Self {
        let mut store = ParamStore::new();
        let mlp = Mlp::new(&mut store, "sbp", &[NUM_FEATURES, hidden, hidden, 1], rng);
        SbpParams {
            store,
            mlp,
            ratio: DEFAULT_RATIO,
        }
    }

    pub fn score(&self, features: &[f64; NUM_FEATURES]) -> f64 {
        self.mlp.eval(&self.store, features)[0]
    }

    pub fn scores(&self, state: &CutSelState) -> Vec<f64> {
        state.rows().iter().map(|r| self.score(r)).collect()
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        let mut ckpt = self.store.to_checkpoint();
        ckpt.tensors
            .insert(RATIO_KEY.to_string(), Tensor::vector(vec![self.ratio]));
        ckpt
    }

    /// Loads weights into a freshly shaped network of the checkpoint's width.
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let first = ckpt
            .tensors
            .get("sbp.l0.w")
            .ok_or_else(|| Error::Checkpoint("missing sbp.l0.w".into()))?;
        let hidden = first.shape.0;
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0);
        let mut params = Self::with_hidden(hidden, &mut rng);
        params.store.load_checkpoint(ckpt)?;
        if let Some(r) = ckpt.tensors.get(RATIO_KEY) {
            params.ratio = r.data[0];
        }
        Ok(params)
    }
}

pub fn sbp_select(params: &SbpParams, state: &CutSelState, cuts: &[Cut]) -> Vec<usize> {
    let scores = params.scores(state);
    top_by_score(&scores, cuts, ceil_count(params.ratio, state.len()))
}

#[derive(Debug, Clone)]
pub struct SbpSelector {
    pub params: SbpParams,
}

impl CutSelector for SbpSelector {
    fn name(&self) -> String {
        "SBP".into()
    }

    fn select(&self, state: &CutSelState, cuts: &[Cut], _: &mut dyn RngCore) -> Vec<usize> {
        sbp_select(&self.params, state, cuts)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cuts::CutOrigin;
    use crate::select::select_nv;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pool(rows: &[[f64; NUM_FEATURES]]) -> (CutSelState, Vec<Cut>) {
        let cuts = (0..rows.len())
            .map(|i| Cut {
                alpha: vec![(0, 1.0)],
                beta: 1.0,
                origin: CutOrigin {
                    source_row: 0,
                    round: 0,
                },
                id: i as u64,
            })
            .collect();
        (CutSelState::from_rows(rows), cuts)
    }

    fn random_rows(n: usize, seed: u64) -> Vec<[f64; NUM_FEATURES]> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| std::array::from_fn(|_| rng.random_range(0.0..2.0)))
            .collect()
    }

    #[test]
    fn zero_weights_fall_back_to_id_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = SbpParams::with_hidden(8, &mut rng);
        let n = p.store.num_scalars();
        p.store.set_flat(&vec![0.0; n]).unwrap();
        let (s, c) = pool(&random_rows(12, 1));
        assert_eq!(sbp_select(&p, &s, &c), vec![0, 1, 2]);
    }

    #[test]
    fn copying_violation_matches_nv() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = SbpParams::with_hidden(4, &mut rng);
        let n = p.store.num_scalars();
        p.store.set_flat(&vec![0.0; n]).unwrap();
        let l = &p.mlp.layers;
        p.store.get_mut(l[0].w).data[12] = 0.1;
        p.store.get_mut(l[1].w).data[0] = 1.0;
        p.store.get_mut(l[2].w).data[0] = 1.0;
        for seed in 0..5 {
            let (s, c) = pool(&random_rows(20, seed));
            for ratio in [0.2, 0.5, 1.0] {
                p.ratio = ratio;
                assert_eq!(sbp_select(&p, &s, &c), select_nv(&s, &c, ratio));
            }
        }
    }

    #[test]
    fn permuting_inputs_permutes_outputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = SbpParams::with_hidden(16, &mut rng);
        let rows = random_rows(10, 2);
        let (s, c) = pool(&rows);
        let base: Vec<u64> = sbp_select(&p, &s, &c).iter().map(|&i| c[i].id).collect();
        let perm = [3, 7, 0, 9, 1, 5, 2, 8, 6, 4];
        let rows2: Vec<_> = perm.iter().map(|&i| rows[i]).collect();
        let cuts2: Vec<_> = perm.iter().map(|&i| c[i].clone()).collect();
        let s2 = CutSelState::from_rows(&rows2);
        let out: Vec<u64> = sbp_select(&p, &s2, &cuts2)
            .iter()
            .map(|&i| cuts2[i].id)
            .collect();
        assert_eq!(base, out);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut p = SbpParams::with_hidden(6, &mut rng);
        p.ratio = 0.35;
        let ckpt = p.to_checkpoint();
        let q = SbpParams::from_checkpoint(&ckpt).unwrap();
        assert_eq!(q, p);
    }
}
