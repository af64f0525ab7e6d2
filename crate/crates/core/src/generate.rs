//! Synthetic MILP families: set covering, maximum independent set on
//! Barabási–Albert graphs, and multiple knapsack.
//!
//! Distributions:
//! - set covering: each row/column pair is present with probability `density`,
//!   then every row is topped up to two columns and every column to one row;
//!   costs are uniform integers in `[1, 100]`.
//! - independent set: preferential attachment, each new node linking to
//!   `affinity` existing nodes; one `x_u + x_v <= 1` row per edge.
//! - multiple knapsack: weights and profits uniform integers in `[10, 100]`;
//!   every capacity is half the total weight divided by the number of knapsacks,
//!   perturbed by up to ±10%.
//!
//! With `require_cuts` set, an instance whose root LP yields no Gomory cut is
//! redrawn from the same stream (at most [`MAX_REDRAWS`] times).

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cuts::generate_cuts;
use crate::error::{Error, Result};
use crate::milp::{solve_lp, MilpInstance, Row};

pub const MAX_REDRAWS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Family {
    SetCovering {
        rows: usize,
        cols: usize,
        density: f64,
    },
    MaxIndependentSet {
        nodes: usize,
        affinity: usize,
    },
    MultipleKnapsack {
        items: usize,
        knapsacks: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FamilyKind {
    SetCovering,
    MaxIndependentSet,
    MultipleKnapsack,
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "setcovering" | "setcover" => Ok(FamilyKind::SetCovering),
            "maxindependentset" | "mis" | "independentset" => Ok(FamilyKind::MaxIndependentSet),
            "multipleknapsack" | "knapsack" => Ok(FamilyKind::MultipleKnapsack),
            other => Err(Error::Config(format!("unknown family {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub family: Family,
    pub seed: u64,
    pub count: usize,
    /// Redraw instances that are solved by the root LP alone.
    #[serde(default)]
    pub require_cuts: bool,
}

impl GenSpec {
    pub fn desk(kind: FamilyKind, seed: u64, count: usize) -> Self {
        GenSpec {
            family: Family::desk(kind),
            seed,
            count,
            require_cuts: true,
        }
    }

    pub fn paper(kind: FamilyKind, seed: u64, count: usize) -> Self {
        GenSpec {
            family: Family::paper(kind),
            seed,
            count,
            require_cuts: false,
        }
    }
}

impl Family {
    /// Small enough for full branch-and-cut plus training in minutes.
    pub fn desk(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::SetCovering => Family::SetCovering {
                rows: 30,
                cols: 60,
                density: 0.25,
            },
            FamilyKind::MaxIndependentSet => Family::MaxIndependentSet {
                nodes: 25,
                affinity: 4,
            },
            FamilyKind::MultipleKnapsack => Family::MultipleKnapsack {
                items: 12,
                knapsacks: 3,
            },
        }
    }

    /// The sizes of the original benchmark generators.
    pub fn paper(kind: FamilyKind) -> Self {
        match kind {
            FamilyKind::SetCovering => Family::SetCovering {
                rows: 500,
                cols: 1000,
                density: 0.05,
            },
            FamilyKind::MaxIndependentSet => Family::MaxIndependentSet {
                nodes: 500,
                affinity: 4,
            },
            FamilyKind::MultipleKnapsack => Family::MultipleKnapsack {
                items: 60,
                knapsacks: 12,
            },
        }
    }

    pub fn kind(&self) -> FamilyKind {
        match self {
            Family::SetCovering { .. } => FamilyKind::SetCovering,
            Family::MaxIndependentSet { .. } => FamilyKind::MaxIndependentSet,
            Family::MultipleKnapsack { .. } => FamilyKind::MultipleKnapsack,
        }
    }

    /// Multiplies the variable count by roughly `factor`, keeping density and affinity.
    pub fn scaled(&self, factor: f64) -> Self {
        let s = |v: usize| ((v as f64 * factor).round() as usize).max(1);
        match *self {
            Family::SetCovering {
                rows,
                cols,
                density,
            } => Family::SetCovering {
                rows: s(rows),
                cols: s(cols),
                density,
            },
            Family::MaxIndependentSet { nodes, affinity } => Family::MaxIndependentSet {
                nodes: s(nodes).max(affinity + 1),
                affinity,
            },
            Family::MultipleKnapsack { items, knapsacks } => Family::MultipleKnapsack {
                items: s(items),
                knapsacks,
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Family::SetCovering {
                rows,
                cols,
                density,
            } => rows > 0 && cols > 1 && density > 0.0 && density <= 1.0,
            Family::MaxIndependentSet { nodes, affinity } => affinity > 0 && nodes > affinity,
            Family::MultipleKnapsack { items, knapsacks } => items > 0 && knapsacks > 0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "invalid generator parameters {self:?}"
            )))
        }
    }
}

pub fn generate(spec: &GenSpec) -> Result<Vec<MilpInstance>> {
    spec.family.validate()?;
    let mut master = ChaCha8Rng::seed_from_u64(spec.seed);
    (0..spec.count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(master.next_u64());
            let name = format!("{}_{}_{i:05}", family_tag(spec.family.kind()), spec.seed);
            let mut inst = draw(&spec.family, &name, &mut rng)?;
            if spec.require_cuts {
                for _ in 0..MAX_REDRAWS {
                    let lp = solve_lp(&inst)?;
                    if !lp.is_optimal() || !generate_cuts(&inst, &lp).is_empty() {
                        break;
                    }
                    inst = draw(&spec.family, &name, &mut rng)?;
                }
            }
            Ok(inst)
        })
        .collect()
}

fn draw(family: &Family, name: &str, rng: &mut ChaCha8Rng) -> Result<MilpInstance> {
    match *family {
        Family::SetCovering {
            rows,
            cols,
            density,
        } => set_covering(name, rows, cols, density, rng),
        Family::MaxIndependentSet { nodes, affinity } => {
            let edges = barabasi_albert(nodes, affinity, rng);
            independent_set(name, nodes, &edges)
        }
        Family::MultipleKnapsack { items, knapsacks } => {
            multiple_knapsack(name, items, knapsacks, rng)
        }
    }
}

fn family_tag(kind: FamilyKind) -> &'static str {
    match kind {
        FamilyKind::SetCovering => "setcover",
        FamilyKind::MaxIndependentSet => "mis",
        FamilyKind::MultipleKnapsack => "knapsack",
    }
}

pub fn set_covering<R: Rng + ?Sized>(
    name: &str,
    rows: usize,
    cols: usize,
    density: f64,
    rng: &mut R,
) -> Result<MilpInstance> {
    let mut member = vec![vec![false; cols]; rows];
    for row in member.iter_mut() {
        for cell in row.iter_mut() {
            *cell = rng.random_bool(density);
        }
    }
    let want = 2.min(cols);
    for row in member.iter_mut() {
        while row.iter().filter(|&&b| b).count() < want {
            let j = rng.random_range(0..cols);
            row[j] = true;
        }
    }
    for j in 0..cols {
        if !member.iter().any(|r| r[j]) {
            let i = rng.random_range(0..rows);
            member[i][j] = true;
        }
    }
    let c: Vec<f64> = (0..cols)
        .map(|_| rng.random_range(1..=100) as f64)
        .collect();
    let constraints = member
        .iter()
        .map(|r| {
            let coefs = (0..cols).filter(|&j| r[j]).map(|j| (j, -1.0)).collect();
            Row::new(coefs, -1.0)
        })
        .collect();
    MilpInstance::with_bounds(
        name,
        c,
        constraints,
        (0..cols).collect(),
        vec![(0.0, 1.0); cols],
    )
}

/// Preferential attachment starting from a clique on `affinity + 1` nodes.
pub fn barabasi_albert<R: Rng + ?Sized>(
    nodes: usize,
    affinity: usize,
    rng: &mut R,
) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    let mut degree = vec![0usize; nodes];
    let seed_nodes = (affinity + 1).min(nodes);
    for u in 0..seed_nodes {
        for v in u + 1..seed_nodes {
            edges.push((u, v));
            degree[u] += 1;
            degree[v] += 1;
        }
    }
    for new in seed_nodes..nodes {
        let mut targets: Vec<usize> = Vec::with_capacity(affinity);
        while targets.len() < affinity.min(new) {
            let total: usize = (0..new)
                .filter(|v| !targets.contains(v))
                .map(|v| degree[v])
                .sum();
            let mut pick = rng.random_range(0..total.max(1));
            let mut chosen = None;
            for v in (0..new).filter(|v| !targets.contains(v)) {
                if pick < degree[v] {
                    chosen = Some(v);
                    break;
                }
                pick -= degree[v];
            }
            let v = chosen.unwrap_or_else(|| (0..new).find(|v| !targets.contains(v)).unwrap());
            targets.push(v);
        }
        for v in targets {
            edges.push((v, new));
            degree[v] += 1;
            degree[new] += 1;
        }
    }
    edges
}

/// `max sum x` subject to one edge constraint per edge, as a minimization.
pub fn independent_set(name: &str, nodes: usize, edges: &[(usize, usize)]) -> Result<MilpInstance> {
    let rows = edges
        .iter()
        .map(|&(u, v)| Row::new(vec![(u.min(v), 1.0), (u.max(v), 1.0)], 1.0))
        .collect();
    MilpInstance::with_bounds(
        name,
        vec![-1.0; nodes],
        rows,
        (0..nodes).collect(),
        vec![(0.0, 1.0); nodes],
    )
}

/// Variable `i * knapsacks + k` puts item `i` into knapsack `k`.
pub fn multiple_knapsack<R: Rng + ?Sized>(
    name: &str,
    items: usize,
    knapsacks: usize,
    rng: &mut R,
) -> Result<MilpInstance> {
    let weights: Vec<f64> = (0..items)
        .map(|_| rng.random_range(10..=100) as f64)
        .collect();
    let profits: Vec<f64> = (0..items)
        .map(|_| rng.random_range(10..=100) as f64)
        .collect();
    let base = weights.iter().sum::<f64>() / (2.0 * knapsacks as f64);
    let capacities: Vec<f64> = (0..knapsacks)
        .map(|_| (base * rng.random_range(0.9..=1.1)).floor())
        .collect();
    let n = items * knapsacks;
    let var = |i: usize, k: usize| i * knapsacks + k;
    let mut c = vec![0.0; n];
    for i in 0..items {
        for k in 0..knapsacks {
            c[var(i, k)] = -profits[i];
        }
    }
    let mut rows = Vec::with_capacity(items + knapsacks);
    for i in 0..items {
        rows.push(Row::new(
            (0..knapsacks).map(|k| (var(i, k), 1.0)).collect(),
            1.0,
        ));
    }
    for (k, &cap) in capacities.iter().enumerate() {
        rows.push(Row::new(
            (0..items).map(|i| (var(i, k), weights[i])).collect(),
            cap,
        ));
    }
    MilpInstance::with_bounds(name, c, rows, (0..n).collect(), vec![(0.0, 1.0); n])
}

/// First `ceil(80%)` of a deterministic shuffle go to train, the rest to test.
pub fn split<T: Clone>(items: &[T], seed: u64) -> (Vec<T>, Vec<T>) {
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (items.len() * 4).div_ceil(5);
    let train = idx[..n_train].iter().map(|&i| items[i].clone()).collect();
    let test = idx[n_train..].iter().map(|&i| items[i].clone()).collect();
    (train, test)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub spec: GenSpec,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl Manifest {
    pub const FILE_NAME: &'static str = "manifest.json";

    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(Self::FILE_NAME);
        if !path.exists() {
            return Err(Error::MissingArtifact(path.display().to_string()));
        }
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn load_split(&self, dir: &Path, test: bool) -> Result<Vec<MilpInstance>> {
        let files = if test { &self.test } else { &self.train };
        files
            .iter()
            .map(|f| MilpInstance::read(&dir.join(f)))
            .collect()
    }
}

/// Writes every instance as `<name>.json` plus the split manifest.
pub fn write_corpus(spec: &GenSpec, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir)?;
    let instances = generate(spec)?;
    let mut names = Vec::with_capacity(instances.len());
    for inst in &instances {
        let file = format!("{}.json", inst.name);
        inst.write(&dir.join(&file))?;
        names.push(file);
    }
    let (train, test) = split(&names, spec.seed);
    let manifest = Manifest {
        spec: *spec,
        train,
        test,
    };
    std::fs::write(
        dir.join(Manifest::FILE_NAME),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_cover_rows_are_covered() {
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let inst = set_covering("sc", 5, 8, 0.05, &mut rng).unwrap();
            assert_eq!(inst.m(), 5);
            assert!(inst.rows.iter().all(|r| !r.coefs.is_empty()));
            assert!(inst.is_feasible(&[1.0; 8], 1e-9));
        }
    }

    #[test]
    fn barabasi_albert_edge_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let edges = barabasi_albert(25, 4, &mut rng);
        assert_eq!(edges.len(), 10 + 20 * 4);
        assert!(edges.iter().all(|&(u, v)| u < v && v < 25));
        let mut sorted = edges.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), edges.len());
    }

    #[test]
    fn same_seed_same_bytes() {
        for kind in [
            FamilyKind::SetCovering,
            FamilyKind::MaxIndependentSet,
            FamilyKind::MultipleKnapsack,
        ] {
            let spec = GenSpec::desk(kind, 5, 3);
            let a: Vec<String> = generate(&spec)
                .unwrap()
                .iter()
                .map(|i| i.to_json().unwrap())
                .collect();
            let b: Vec<String> = generate(&spec)
                .unwrap()
                .iter()
                .map(|i| i.to_json().unwrap())
                .collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn split_is_eighty_twenty() {
        let items: Vec<usize> = (0..10).collect();
        let (train, test) = split(&items, 3);
        assert_eq!((train.len(), test.len()), (8, 2));
        let mut all: Vec<usize> = train.into_iter().chain(test).collect();
        all.sort();
        assert_eq!(all, items);
    }

    #[test]
    fn family_names_parse() {
        assert_eq!(
            "set-covering".parse::<FamilyKind>().unwrap(),
            FamilyKind::SetCovering
        );
        assert_eq!(
            "mis".parse::<FamilyKind>().unwrap(),
            FamilyKind::MaxIndependentSet
        );
        assert!("tsp".parse::<FamilyKind>().is_err());
    }
}
