//! Writes a desk-scale corpus with its train/test manifest, then reloads the
//! test split and prints each instance's root LP bound and candidate count.
//!
//! Usage: `cargo run --release --example corpus [family] [count] [dir]`

use std::path::PathBuf;

use hemcut::generate::{write_corpus, FamilyKind, GenSpec, Manifest};
use hemcut::train::root_pool;

fn main() -> hemcut::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: FamilyKind = args
        .first()
        .map_or(Ok(FamilyKind::MultipleKnapsack), |s| s.parse())?;
    let count = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let dir = args
        .get(2)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("hemcut_corpus"));

    let manifest = write_corpus(&GenSpec::desk(kind, 1, count), &dir)?;
    println!(
        "{} train / {} test instances in {}",
        manifest.train.len(),
        manifest.test.len(),
        dir.display()
    );
    for inst in Manifest::load(&dir)?.load_split(&dir, true)? {
        let pool = root_pool(&inst)?;
        println!(
            "{:<24} n={:<4} m={:<4} candidates={}",
            inst.name,
            inst.n,
            inst.m(),
            pool.cuts.len()
        );
    }
    Ok(())
}
