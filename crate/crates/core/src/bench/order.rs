use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::report::Stat;
use crate::cuts::{branch_and_cut, SolveConfig};
use crate::error::Result;
use crate::milp::MilpInstance;
use crate::select::{CutSelector, RandomAll, RandomNv};

/// Rule whose cut order is re-drawn for every seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OrderRule {
    RandomAll,
    RandomNv(f64),
}

impl OrderRule {
    fn selector(&self) -> Box<dyn CutSelector> {
        match *self {
            OrderRule::RandomAll => Box::new(RandomAll),
            OrderRule::RandomNv(ratio) => Box::new(RandomNv { ratio }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRow {
    pub instance: String,
    pub candidates: usize,
    /// PD integral under each order, by seed.
    pub values: Vec<f64>,
    pub pd_integral: Stat,
}

impl OrderRow {
    pub fn has_spread(&self) -> bool {
        self.pd_integral.stdev > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderStudy {
    pub rule: OrderRule,
    pub seeds: Vec<u64>,
    pub rows: Vec<OrderRow>,
}

impl OrderStudy {
    /// Share of instances with at least `min_candidates` cuts whose PD
    /// integral varies across orders; `None` if there are no such instances.
    pub fn fraction_with_spread(&self, min_candidates: usize) -> Option<f64> {
        let eligible: Vec<&OrderRow> = self
            .rows
            .iter()
            .filter(|r| r.candidates >= min_candidates)
            .collect();
        if eligible.is_empty() {
            return None;
        }
        let spread = eligible.iter().filter(|r| r.has_spread()).count();
        Some(spread as f64 / eligible.len() as f64)
    }

    /// Mean over instances of the per-instance mean and stdev.
    pub fn summary(&self) -> (f64, f64) {
        let n = self.rows.len().max(1) as f64;
        let mean = self.rows.iter().map(|r| r.pd_integral.mean).sum::<f64>() / n;
        let sd = self.rows.iter().map(|r| r.pd_integral.stdev).sum::<f64>() / n;
        (mean, sd)
    }

    /// `order_study.csv` (one row per instance) and `order_study.json`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut wtr = csv::Writer::from_path(dir.join("order_study.csv"))?;
        wtr.write_record([
            "instance",
            "candidates",
            "pd_integral_mean",
            "pd_integral_stdev",
            "values",
        ])?;
        for r in &self.rows {
            let values: Vec<String> = r.values.iter().map(f64::to_string).collect();
            wtr.write_record([
                r.instance.clone(),
                r.candidates.to_string(),
                r.pd_integral.mean.to_string(),
                r.pd_integral.stdev.to_string(),
                values.join(";"),
            ])?;
        }
        wtr.flush()?;
        std::fs::write(
            dir.join("order_study.json"),
            serde_json::to_string_pretty(self)?,
        )?;
        Ok(())
    }
}

/// Solves every instance once per seed `solve.seed .. solve.seed + n_orders`;
/// each seed draws a different order.
pub fn order_study(
    instances: &[MilpInstance],
    rule: OrderRule,
    n_orders: usize,
    solve: &SolveConfig,
) -> Result<OrderStudy> {
    let seeds: Vec<u64> = (0..n_orders as u64).map(|o| solve.seed + o).collect();
    let selector = rule.selector();
    let rows = instances
        .par_iter()
        .map(|inst| {
            let mut values = Vec::with_capacity(seeds.len());
            let mut candidates = 0;
            for &seed in &seeds {
                let stats =
                    branch_and_cut(inst, selector.as_ref(), &SolveConfig { seed, ..*solve })?;
                candidates = stats.root.candidates.first().copied().unwrap_or(0);
                values.push(stats.pd_integral);
            }
            Ok(OrderRow {
                instance: inst.name.clone(),
                candidates,
                pd_integral: Stat::of(&values),
                values,
            })
        })
        .collect::<Result<_>>()?;
    Ok(OrderStudy { rule, seeds, rows })
}
