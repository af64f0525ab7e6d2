use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hemcut::bench::{
    run_evaluate, run_generalize, run_generate, run_order_study, run_pca, run_train,
    ExperimentConfig, Preset,
};
use hemcut::Error;

/// Experiment harness for learned cut selection.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config; unspecified fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the generation, training and ES seeds.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Root directory for every artifact.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    #[arg(long, global = true, value_parser = ["desk", "paper"])]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate an instance corpus with a train/test split.
    Generate,
    /// Train every learned method listed in the config.
    Train,
    /// Evaluate all methods on the test split.
    Evaluate,
    /// Measure PD-integral spread across random cut orders.
    OrderStudy,
    /// Export 2-D projections of the selected cuts.
    Pca,
    /// Evaluate the checkpoints on larger instances.
    Generalize,
}

fn run(cli: Cli) -> hemcut::Result<()> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config = config.with_seed(seed);
    }
    if let Some(p) = &cli.preset {
        config.preset = p.parse::<Preset>()?;
    }
    config.validate()?;
    let out = cli.out.as_path();
    match cli.command {
        Command::Generate => {
            let m = run_generate(&config, out)?;
            println!("{} train / {} test instances", m.train.len(), m.test.len());
        }
        Command::Train => {
            for path in run_train(&config, out)? {
                println!("{}", path.display());
            }
        }
        Command::Evaluate => print!("{}", run_evaluate(&config, out)?.to_table()),
        Command::OrderStudy => {
            let s = run_order_study(&config, out)?;
            let (mean, stdev) = s.summary();
            println!("mean PD integral {mean:.2}, mean stdev across orders {stdev:.2}");
            match s.fraction_with_spread(config.order.min_candidates) {
                Some(f) => println!(
                    "{:.1}% of instances with >= {} candidates vary with order",
                    100.0 * f,
                    config.order.min_candidates
                ),
                None => println!(
                    "no instance has >= {} candidates",
                    config.order.min_candidates
                ),
            }
        }
        Command::Pca => println!("{} projected cuts", run_pca(&config, out)?.len()),
        Command::Generalize => {
            for (k, report) in run_generalize(&config, out)? {
                println!("scale {k}");
                print!("{}", report.to_table());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 2,
                Error::MissingArtifact(_) => 3,
                _ => 1,
            })
        }
    }
}
