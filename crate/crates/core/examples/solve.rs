//! Generates a few desk-scale instances of each family and solves them with
//! the rule-based selectors, printing time, nodes and PD integral.

use std::time::Instant;

use hemcut::cuts::{branch_and_cut, SolveConfig};
use hemcut::generate::{generate, FamilyKind, GenSpec};
use hemcut::select::{
    CutSelector, Efficacy, NoCuts, NormalizedViolation, RandomAll, RandomSelector,
};

fn main() -> hemcut::Result<()> {
    let selectors: Vec<Box<dyn CutSelector>> = vec![
        Box::new(NoCuts),
        Box::new(RandomSelector { ratio: 0.2 }),
        Box::new(NormalizedViolation { ratio: 0.2 }),
        Box::new(Efficacy { ratio: 0.2 }),
        Box::new(RandomAll),
    ];
    let config = SolveConfig::default();
    for kind in [
        FamilyKind::SetCovering,
        FamilyKind::MaxIndependentSet,
        FamilyKind::MultipleKnapsack,
    ] {
        let spec = GenSpec::desk(kind, 7, 5);
        for inst in generate(&spec)? {
            for sel in &selectors {
                let start = Instant::now();
                let stats = branch_and_cut(&inst, sel.as_ref(), &config)?;
                println!(
                    "{:<22} {:<8} work={:>8.0} nodes={:>5} pd_int={:>12.2} cands={:>3} sel={:>3} {:?} {:.3}s",
                    inst.name,
                    sel.name(),
                    stats.work_units,
                    stats.nodes,
                    stats.pd_integral,
                    stats.root.candidates.first().copied().unwrap_or(0),
                    stats.root.selected.first().copied().unwrap_or(0),
                    stats.status,
                    start.elapsed().as_secs_f64()
                );
            }
        }
    }
    Ok(())
}
