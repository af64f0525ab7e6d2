use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cuts::gomory::generate_cuts_from;
use crate::cuts::stats::{pd_integral_of, Clock, RootInfo, SolveStats, SolveStatus, INITIAL_GAP};
use crate::error::{Error, Result};
use crate::features::featurize;
use crate::milp::{
    solve_lp_with, LpSolution, LpStatus, MilpInstance, SimplexOptions, FEASIBILITY_TOL,
    INTEGRALITY_TOL,
};
use crate::select::CutSelector;

/// A node whose LP bound is within this of the incumbent cannot improve it.
const PRUNE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// In units of `clock`.
    pub time_limit: f64,
    pub node_limit: u64,
    /// Separation rounds at the root.
    pub separation_rounds: usize,
    pub seed: u64,
    pub clock: Clock,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            time_limit: 1e6,
            node_limit: 20_000,
            separation_rounds: 1,
            seed: 1,
            clock: Clock::WorkUnits,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if self.time_limit.is_nan() || self.time_limit <= 0.0 {
            return Err(Error::Config("time_limit must be positive".into()));
        }
        Ok(())
    }
}

struct Timer {
    start: Instant,
    work: u64,
    clock: Clock,
}

impl Timer {
    fn now(&self) -> f64 {
        match self.clock {
            Clock::WorkUnits => self.work as f64,
            Clock::Seconds => self.start.elapsed().as_secs_f64(),
        }
    }
}

struct Node {
    bound: f64,
    seq: u64,
    bounds: Vec<(f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    // max-heap: smallest bound first, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Bounds {
    primal: Vec<(f64, f64)>,
    dual: Vec<(f64, f64)>,
}

impl Bounds {
    fn incumbent(&self) -> Option<f64> {
        self.primal.last().map(|&(_, b)| b)
    }

    fn offer_primal(&mut self, t: f64, v: f64) -> bool {
        if self.incumbent().is_none_or(|p| v < p - 1e-12) {
            self.primal.push((t, v));
            true
        } else {
            false
        }
    }

    fn offer_dual(&mut self, t: f64, v: f64) {
        let v = match self.incumbent() {
            Some(p) => v.min(p),
            None => v,
        };
        if self.dual.last().is_none_or(|&(_, d)| v > d + 1e-12) {
            self.dual.push((t, v));
        }
    }
}

/// Root separation rounds followed by best-first branch-and-bound.
///
/// Each round solves the LP, builds the Gomory pool, asks `selector` for an
/// ordered subset and appends it in that order. Branching uses the most
/// fractional variable; a nearest-integer rounding is tried at every node.
pub fn branch_and_cut(
    inst: &MilpInstance,
    selector: &dyn CutSelector,
    config: &SolveConfig,
) -> Result<SolveStats> {
    config.validate()?;
    let opts = SimplexOptions::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut timer = Timer {
        start: Instant::now(),
        work: 0,
        clock: config.clock,
    };
    let mut bounds = Bounds {
        primal: Vec::new(),
        dual: Vec::new(),
    };
    let mut root = RootInfo::default();
    let mut trouble = false;

    let mut model = inst.clone();
    let mut root_lp: Option<LpSolution> = None;
    let mut next_id = 0u64;
    for round in 0..config.separation_rounds {
        let lp = match solve_lp_with(&model, &model.bounds, &opts) {
            Ok(lp) => lp,
            Err(Error::NumericalFailure(p)) => {
                timer.work += p;
                trouble = true;
                break;
            }
            Err(e) => return Err(e),
        };
        timer.work += lp.pivots;
        if !lp.is_optimal() {
            root_lp = Some(lp);
            break;
        }
        bounds.offer_dual(timer.now(), lp.z_lp);
        root.lp_before.get_or_insert(lp.z_lp);
        root.lp_after = Some(lp.z_lp);
        let cuts = generate_cuts_from(&model, &lp, round, next_id);
        next_id += cuts.len() as u64;
        if cuts.is_empty() {
            root_lp = Some(lp);
            break;
        }
        let state = featurize(&model, &lp, &cuts)?;
        let mut chosen = selector.select(&state, &cuts, &mut rng);
        let mut seen = vec![false; cuts.len()];
        chosen.retain(|&i| i < cuts.len() && !std::mem::replace(&mut seen[i], true));
        root.candidates.push(cuts.len());
        root.selected.push(chosen.len());
        if chosen.is_empty() {
            root_lp = Some(lp);
            break;
        }
        let ordered: Vec<_> = chosen.iter().map(|&i| cuts[i].clone()).collect();
        model = model.add_rows(&ordered)?;
    }

    let mut heap = BinaryHeap::new();
    heap.push(Node {
        bound: f64::NEG_INFINITY,
        seq: 0,
        bounds: model.bounds.clone(),
    });
    let mut seq = 1u64;
    let mut nodes = 0u64;
    let mut status = SolveStatus::OptimalProven;
    let int_mask = model.integer_mask();

    while let Some(node) = heap.pop() {
        if timer.now() >= config.time_limit {
            heap.push(node);
            status = SolveStatus::TimeLimit;
            break;
        }
        if nodes >= config.node_limit {
            heap.push(node);
            status = SolveStatus::NodeLimit;
            break;
        }
        if bounds
            .incumbent()
            .is_some_and(|p| node.bound >= p - PRUNE_TOL)
        {
            continue;
        }
        let lp = match root_lp.take() {
            Some(lp) if nodes == 0 => lp,
            _ => match solve_lp_with(&model, &node.bounds, &opts) {
                Ok(lp) => {
                    timer.work += lp.pivots;
                    lp
                }
                Err(Error::NumericalFailure(p)) => {
                    timer.work += p;
                    trouble = true;
                    nodes += 1;
                    continue;
                }
                Err(e) => return Err(e),
            },
        };
        nodes += 1;
        let t = timer.now();
        match lp.status {
            LpStatus::Infeasible => {}
            LpStatus::Unbounded => trouble = true,
            LpStatus::Optimal => {
                if nodes == 1 {
                    bounds.offer_dual(t, lp.z_lp);
                    root.lp_before.get_or_insert(lp.z_lp);
                    root.lp_after = Some(lp.z_lp);
                }
                if bounds.incumbent().is_none_or(|p| lp.z_lp < p - PRUNE_TOL) {
                    process_node(
                        &model,
                        &int_mask,
                        &node,
                        &lp,
                        t,
                        &mut bounds,
                        &mut heap,
                        &mut seq,
                    );
                }
            }
        }
        if let Some(top) = heap.peek() {
            bounds.offer_dual(timer.now(), top.bound);
        }
    }

    let t_end = timer.now();
    if heap.is_empty() && status == SolveStatus::OptimalProven {
        match bounds.incumbent() {
            Some(p) => bounds.offer_dual(t_end, p),
            None => status = SolveStatus::Infeasible,
        }
    }
    let optimal_at = (status == SolveStatus::OptimalProven).then_some(t_end);
    let pd_gap = match (bounds.incumbent(), bounds.dual.last()) {
        (Some(p), Some(&(_, d))) => (p - d).max(0.0),
        _ => INITIAL_GAP,
    };
    let pd_integral = pd_integral_of(&bounds.primal, &bounds.dual, optimal_at, config.time_limit);
    Ok(SolveStats {
        time: timer.start.elapsed().as_secs_f64(),
        work_units: timer.work,
        nodes,
        status,
        pd_gap,
        pd_integral,
        horizon: config.time_limit,
        clock: config.clock,
        primal_events: bounds.primal,
        dual_events: bounds.dual,
        optimal_at,
        numerical_trouble: trouble,
        root,
    })
}

#[allow(clippy::too_many_arguments)]
fn process_node(
    model: &MilpInstance,
    int_mask: &[bool],
    node: &Node,
    lp: &LpSolution,
    t: f64,
    bounds: &mut Bounds,
    heap: &mut BinaryHeap<Node>,
    seq: &mut u64,
) {
    let x = &lp.x_star;
    let mut branch: Option<(usize, f64)> = None;
    for j in model.integers.iter().copied() {
        let f = x[j] - x[j].floor();
        let dist = f.min(1.0 - f);
        if dist > INTEGRALITY_TOL && branch.is_none_or(|(_, d)| dist > d) {
            branch = Some((j, dist));
        }
    }
    let Some((j, _)) = branch else {
        bounds.offer_primal(t, lp.z_lp);
        return;
    };

    let rounded: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(k, &v)| if int_mask[k] { v.round() } else { v })
        .collect();
    if model.is_feasible(&rounded, FEASIBILITY_TOL) {
        bounds.offer_primal(t, model.objective(&rounded));
    }
    if bounds.incumbent().is_some_and(|p| lp.z_lp >= p - PRUNE_TOL) {
        return;
    }

    let (lo, hi) = node.bounds[j];
    let down = x[j].floor();
    let up = x[j].ceil();
    if down >= lo {
        let mut b = node.bounds.clone();
        b[j] = (lo, down);
        heap.push(Node {
            bound: lp.z_lp,
            seq: *seq,
            bounds: b,
        });
        *seq += 1;
    }
    if up <= hi {
        let mut b = node.bounds.clone();
        b[j] = (up, hi);
        heap.push(Node {
            bound: lp.z_lp,
            seq: *seq,
            bounds: b,
        });
        *seq += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::Row;
    use crate::select::{NoCuts, RandomAll};

    fn knap() -> MilpInstance {
        // max 5a + 4b + 3c  s.t. 2a + 3b + c <= 5, 4a + b + 2c <= 11, 3a + 4b + 2c <= 8
        MilpInstance::with_bounds(
            "k",
            vec![-5.0, -4.0, -3.0],
            vec![
                Row::new(vec![(0, 2.0), (1, 3.0), (2, 1.0)], 5.0),
                Row::new(vec![(0, 4.0), (1, 1.0), (2, 2.0)], 11.0),
                Row::new(vec![(0, 3.0), (1, 4.0), (2, 2.0)], 8.0),
            ],
            vec![0, 1, 2],
            vec![(0.0, 3.0); 3],
        )
        .unwrap()
    }

    #[test]
    fn integral_root_needs_one_node() {
        let inst = MilpInstance::with_bounds(
            "t",
            vec![-1.0, -1.0],
            vec![Row::new(vec![(0, 1.0)], 1.0)],
            vec![0, 1],
            vec![(0.0, 1.0); 2],
        )
        .unwrap();
        let stats = branch_and_cut(&inst, &RandomAll, &SolveConfig::default()).unwrap();
        assert_eq!(stats.status, SolveStatus::OptimalProven);
        assert_eq!(stats.nodes, 1);
        assert!(stats.root.candidates.is_empty());
        assert_eq!(stats.primal_bound(), Some(-2.0));
        assert_eq!(stats.pd_gap, 0.0);
    }

    #[test]
    fn solves_small_knapsack() {
        let inst = knap();
        for sel in [&NoCuts as &dyn CutSelector, &RandomAll] {
            let stats = branch_and_cut(&inst, sel, &SolveConfig::default()).unwrap();
            assert_eq!(stats.status, SolveStatus::OptimalProven);
            // a=2, c=1 gives 13
            assert!((stats.primal_bound().unwrap() + 13.0).abs() < 1e-6);
            assert!(stats.pd_integral >= 0.0);
        }
    }

    #[test]
    fn deterministic_apart_from_wall_time() {
        let inst = knap();
        let cfg = SolveConfig {
            seed: 7,
            ..Default::default()
        };
        let mut a = branch_and_cut(&inst, &RandomAll, &cfg).unwrap();
        let mut b = branch_and_cut(&inst, &RandomAll, &cfg).unwrap();
        a.time = 0.0;
        b.time = 0.0;
        assert_eq!(a, b);
    }

    #[test]
    fn node_limit_stops_search() {
        let inst = MilpInstance::with_bounds(
            "t",
            vec![-1.0, -1.0],
            vec![Row::new(vec![(0, 2.0), (1, 2.0)], 3.0)],
            vec![0, 1],
            vec![(0.0, 1.0); 2],
        )
        .unwrap();
        let cfg = SolveConfig {
            node_limit: 1,
            ..Default::default()
        };
        let stats = branch_and_cut(&inst, &NoCuts, &cfg).unwrap();
        assert_eq!(stats.nodes, 1);
        assert_eq!(stats.status, SolveStatus::NodeLimit);
    }

    #[test]
    fn rejects_nonpositive_time_limit() {
        let cfg = SolveConfig {
            time_limit: 0.0,
            ..Default::default()
        };
        assert!(branch_and_cut(&knap(), &NoCuts, &cfg).is_err());
    }
}
