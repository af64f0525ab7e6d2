//! Runs the full harness end to end at a reduced budget: generate, train,
//! evaluate, order study, PCA and 2x generalization, all under one directory.
//! The `hemcut` binary exposes the same steps as subcommands.
//!
//! Usage: `cargo run --release --example pipeline [out_dir]`

use std::path::PathBuf;

use hemcut::bench::{
    run_evaluate, run_generalize, run_generate, run_order_study, run_pca, run_train,
    ExperimentConfig, Method,
};

fn main() -> hemcut::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("hemcut_pipeline"));
    let mut config = ExperimentConfig {
        count: 40,
        methods: vec![
            Method::NoCuts,
            Method::Random,
            Method::Nv,
            Method::Sbp,
            Method::Hem,
            Method::HemNoH,
        ],
        generalize_count: 8,
        ..ExperimentConfig::default()
    };
    config.train.epochs = 20;
    config.train.hidden = 32;
    config.es.generations = 10;
    config.es.hidden = 32;
    config.validate()?;

    run_generate(&config, &out)?;
    run_train(&config, &out)?;
    print!("{}", run_evaluate(&config, &out)?.to_table());
    let study = run_order_study(&config, &out)?;
    println!(
        "order study: mean stdev across orders {:.2}",
        study.summary().1
    );
    println!("pca: {} projected cuts", run_pca(&config, &out)?.len());
    for (k, report) in run_generalize(&config, &out)? {
        println!("{k}x instances");
        print!("{}", report.to_table());
    }
    println!("artifacts in {}", out.display());
    Ok(())
}
