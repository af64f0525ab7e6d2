//! Trains the score-based baseline with evolution strategies on desk-scale set
//! covering and compares it with the random selector on the held-out split.
//!
//! Usage: `cargo run --release --example train_sbp [instances] [generations]`

use std::time::Instant;

use hemcut::generate::{generate, split, FamilyKind, GenSpec};
use hemcut::select::{RandomSelector, SbpSelector};
use hemcut::train::{es_train_sbp, mean_pd_integral, EsConfig};

fn main() -> hemcut::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let count = args.first().copied().unwrap_or(100);
    let generations = args.get(1).copied().unwrap_or(50);

    let instances = generate(&GenSpec::desk(FamilyKind::SetCovering, 1, count))?;
    let (train_set, test_set) = split(&instances, 1);
    let config = EsConfig {
        generations,
        ..EsConfig::default()
    };
    let start = Instant::now();
    let (params, outcome) = es_train_sbp(&train_set, &config)?;
    println!(
        "trained in {:.1}s, best fitness {:.4} (start {:.4})",
        start.elapsed().as_secs_f64(),
        outcome.best_fitness,
        outcome.history.first().copied().unwrap_or(f64::NAN)
    );
    let random = mean_pd_integral(&RandomSelector { ratio: 0.2 }, &test_set, &config.solve)?;
    let sbp = mean_pd_integral(&SbpSelector { params }, &test_set, &config.solve)?;
    println!("Random   mean PD integral {random:.2}");
    println!(
        "SBP-ES   mean PD integral {sbp:.2} ({:.3} x Random)",
        sbp / random
    );
    Ok(())
}
