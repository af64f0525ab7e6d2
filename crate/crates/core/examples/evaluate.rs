//! Evaluates the rule-based selectors and untrained learned policies over
//! evaluation seeds {1, 2, 3} and prints the report table.
//!
//! Usage: `cargo run --release --example evaluate [count]`

use std::sync::Arc;

use hemcut::bench::{evaluate, EVAL_SEEDS};
use hemcut::cuts::SolveConfig;
use hemcut::generate::{generate, split, FamilyKind, GenSpec};
use hemcut::hem::{HemParams, HemSelector};
use hemcut::select::{
    CutSelector, Efficacy, NoCuts, NormalizedViolation, RandomSelector, SbpParams, SbpSelector,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hemcut::Result<()> {
    let count = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(40);
    let instances = generate(&GenSpec::desk(FamilyKind::SetCovering, 1, count))?;
    let (_, test) = split(&instances, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let hem = Arc::new(HemParams::new(&mut rng));
    let selectors: Vec<Arc<dyn CutSelector>> = vec![
        Arc::new(NoCuts),
        Arc::new(RandomSelector::default()),
        Arc::new(NormalizedViolation::default()),
        Arc::new(Efficacy::default()),
        Arc::new(SbpSelector {
            params: SbpParams::new(&mut rng),
        }),
        Arc::new(HemSelector::hem(hem.clone())),
        Arc::new(HemSelector::ratio(hem.clone(), 0.2)),
        Arc::new(HemSelector::ratio_order(hem, 0.2)),
    ];
    let (report, walls) = evaluate(&selectors, &test, &SolveConfig::default(), &EVAL_SEEDS)?;
    print!("{}", report.to_table());
    let secs: f64 = walls.iter().map(|w| w.seconds).sum();
    println!("{} solves, {secs:.2}s of solver wall time", walls.len());
    Ok(())
}
