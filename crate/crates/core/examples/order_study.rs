//! Adds the same cuts in ten random orders and reports how much the PD
//! integral moves, for RandomAll and RandomNV.
//!
//! Usage: `cargo run --release --example order_study [count]`

use hemcut::bench::{order_study, OrderRule};
use hemcut::cuts::SolveConfig;
use hemcut::generate::{generate, FamilyKind, GenSpec};

fn main() -> hemcut::Result<()> {
    let count = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(20);
    for kind in [FamilyKind::SetCovering, FamilyKind::MultipleKnapsack] {
        let instances = generate(&GenSpec::desk(kind, 1, count))?;
        for rule in [OrderRule::RandomAll, OrderRule::RandomNv(0.2)] {
            let study = order_study(&instances, rule, 10, &SolveConfig::default())?;
            let (mean, stdev) = study.summary();
            let spread = study
                .fraction_with_spread(5)
                .map_or("n/a".to_string(), |f| format!("{:.0}%", 100.0 * f));
            println!(
                "{kind:?} {rule:?}: mean PD integral {mean:.1}, mean stdev across orders {stdev:.1}, order-sensitive {spread}"
            );
        }
    }
    Ok(())
}
