//! Projects the root cuts chosen by NV, Eff and Random onto the top two
//! principal components of their 13 features and writes the points as CSV.
//!
//! Usage: `cargo run --release --example pca [out.csv]`

use hemcut::bench::{hull_mask, pca_2d, write_points, PcaPoint};
use hemcut::generate::{generate, FamilyKind, GenSpec};
use hemcut::select::{CutSelector, Efficacy, NormalizedViolation, RandomSelector};
use hemcut::train::root_pool;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> hemcut::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("hemcut_pca.csv"));
    let selectors: [&dyn CutSelector; 3] = [
        &NormalizedViolation { ratio: 0.5 },
        &Efficacy { ratio: 0.5 },
        &RandomSelector { ratio: 0.5 },
    ];
    let inst = &generate(&GenSpec::desk(FamilyKind::SetCovering, 3, 1))?[0];
    let pool = root_pool(inst)?;
    let rows = pool.state.rows();
    let mut chosen = Vec::new();
    for sel in selectors {
        let picks = sel.select(&pool.state, &pool.cuts, &mut ChaCha8Rng::seed_from_u64(1));
        chosen.extend(picks.into_iter().map(|i| (sel.name(), i)));
    }
    let data: Vec<_> = chosen.iter().map(|&(_, i)| rows[i]).collect();
    let proj = pca_2d(&data)?;
    let total: f64 = proj.eigenvalues.iter().sum();
    println!(
        "{} picks by 3 selectors from a pool of {} cuts; top two components explain {:.1}% of the variance",
        data.len(),
        pool.cuts.len(),
        100.0 * (proj.eigenvalues[0] + proj.eigenvalues[1]) / total
    );
    let mut points = Vec::new();
    for sel in selectors {
        let idx: Vec<usize> = (0..chosen.len())
            .filter(|&j| chosen[j].0 == sel.name())
            .collect();
        let coords: Vec<[f64; 2]> = idx.iter().map(|&j| proj.coords[j]).collect();
        for (&j, hull) in idx.iter().zip(hull_mask(&coords)) {
            points.push(PcaPoint {
                instance: inst.name.clone(),
                method: sel.name(),
                cut: pool.cuts[chosen[j].1].id,
                x: proj.coords[j][0],
                y: proj.coords[j][1],
                hull,
                degenerate: proj.degenerate,
            });
        }
    }
    write_points(&points, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}
