//! Saves and reloads policy checkpoints and shows that the reloaded policy
//! makes identical greedy decisions.

use hemcut::generate::{generate, FamilyKind, GenSpec};
use hemcut::hem::{HemParams, HemVariant, Mode};
use hemcut::nn::Checkpoint;
use hemcut::select::SbpParams;
use hemcut::train::root_pool;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hemcut::Result<()> {
    let dir = std::env::temp_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let hem = HemParams::with_hidden(32, &mut rng);
    let sbp = SbpParams::with_hidden(32, &mut rng);
    hem.save(&dir.join("hem_demo.json"))?;
    sbp.to_checkpoint().save(&dir.join("sbp_demo.json"))?;

    let hem2 = HemParams::load(&dir.join("hem_demo.json"))?;
    let sbp2 = SbpParams::from_checkpoint(&Checkpoint::load(&dir.join("sbp_demo.json"))?)?;
    println!(
        "HEM: {} scalars, hidden {}; SBP: {} scalars",
        hem2.store.num_scalars(),
        hem2.hidden,
        sbp2.to_checkpoint()
            .tensors
            .values()
            .map(|t| t.data.len())
            .sum::<usize>()
    );

    let inst = &generate(&GenSpec::desk(FamilyKind::MultipleKnapsack, 2, 1))?[0];
    let pool = root_pool(inst)?;
    for variant in [
        HemVariant::Full,
        HemVariant::NoHigher,
        HemVariant::FixedRatio(0.3),
    ] {
        let a = hem.act(&pool.state, variant, Mode::Greedy)?;
        let b = hem2.act(&pool.state, variant, Mode::Greedy)?;
        assert_eq!(a.indices, b.indices);
        println!(
            "{variant:?}: k={:.3}, picks {:?} of {} candidates",
            a.k,
            a.indices,
            pool.cuts.len()
        );
    }
    assert_eq!(sbp.scores(&pool.state), sbp2.scores(&pool.state));
    Ok(())
}
