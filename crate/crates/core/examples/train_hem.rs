//! Trains the hierarchical policy on desk-scale set covering and compares it
//! with the random selector on the held-out split.
//!
//! Usage: `cargo run --release --example train_hem [instances] [epochs]`

use std::sync::Arc;
use std::time::Instant;

use hemcut::generate::{generate, split, FamilyKind, GenSpec};
use hemcut::hem::{HemParams, HemSelector};
use hemcut::select::{NoCuts, RandomSelector};
use hemcut::train::{mean_pd_integral, train, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hemcut::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let args: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let count = args.first().copied().unwrap_or(100);
    let epochs = args.get(1).copied().unwrap_or(100);

    let instances = generate(&GenSpec::desk(FamilyKind::SetCovering, 1, count))?;
    let (train_set, test_set) = split(&instances, 1);
    let config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    let start = Instant::now();
    let init = HemParams::with_hidden(config.hidden, &mut ChaCha8Rng::seed_from_u64(config.seed));
    let eval_slice = &train_set[..train_set.len().min(16)];
    let outcome = train(init, &train_set, eval_slice, &config, None)?;
    println!("trained in {:.1}s", start.elapsed().as_secs_f64());

    let hem = HemSelector::hem(Arc::new(outcome.best));
    for (name, value) in [
        (
            "NoCuts",
            mean_pd_integral(&NoCuts, &test_set, &config.solve)?,
        ),
        (
            "Random",
            mean_pd_integral(&RandomSelector { ratio: 0.2 }, &test_set, &config.solve)?,
        ),
        ("HEM", mean_pd_integral(&hem, &test_set, &config.solve)?),
    ] {
        println!("{name:<8} mean PD integral {value:.2}");
    }
    Ok(())
}
