//! Thirteen-dimensional per-cut features describing the selection state.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::cuts::Cut;
use crate::error::{Error, Result};
use crate::milp::{LpSolution, MilpInstance};

pub const NUM_FEATURES: usize = 13;

/// Column names of the CSV export, in vector order.
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "coef_mean",
    "coef_max",
    "coef_min",
    "coef_std",
    "obj_mean",
    "obj_max",
    "obj_min",
    "obj_std",
    "parallelism",
    "efficacy",
    "support",
    "integral_support",
    "normalized_violation",
];

/// `|beta|` below this is replaced by 1 in the normalized violation.
const BETA_GUARD: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutFeatures {
    pub coef_mean: f64,
    pub coef_max: f64,
    pub coef_min: f64,
    pub coef_std: f64,
    /// Statistics of the objective restricted to the cut's support.
    pub obj_mean: f64,
    pub obj_max: f64,
    pub obj_min: f64,
    pub obj_std: f64,
    pub parallelism: f64,
    pub efficacy: f64,
    pub support: f64,
    pub integral_support: f64,
    pub normalized_violation: f64,
}

impl CutFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.coef_mean,
            self.coef_max,
            self.coef_min,
            self.coef_std,
            self.obj_mean,
            self.obj_max,
            self.obj_min,
            self.obj_std,
            self.parallelism,
            self.efficacy,
            self.support,
            self.integral_support,
            self.normalized_violation,
        ]
    }

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        CutFeatures {
            coef_mean: v[0],
            coef_max: v[1],
            coef_min: v[2],
            coef_std: v[3],
            obj_mean: v[4],
            obj_max: v[5],
            obj_min: v[6],
            obj_std: v[7],
            parallelism: v[8],
            efficacy: v[9],
            support: v[10],
            integral_support: v[11],
            normalized_violation: v[12],
        }
    }
}

/// The selection state: one feature row per candidate cut, in candidate order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CutSelState {
    pub features: Vec<CutFeatures>,
}

impl CutSelState {
    pub fn new(features: Vec<CutFeatures>) -> Self {
        CutSelState { features }
    }

    /// Builds a state straight from raw rows; used by tests and toys.
    pub fn from_rows(rows: &[[f64; NUM_FEATURES]]) -> Self {
        CutSelState {
            features: rows.iter().map(|&r| CutFeatures::from_array(r)).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn rows(&self) -> Vec<[f64; NUM_FEATURES]> {
        self.features.iter().map(CutFeatures::to_array).collect()
    }

    /// Per-column z-score over the pool. Off by default in every selector.
    pub fn standardized(&self) -> Self {
        let n = self.len();
        if n == 0 {
            return self.clone();
        }
        let rows = self.rows();
        let mut mean = [0.0; NUM_FEATURES];
        let mut var = [0.0; NUM_FEATURES];
        for r in &rows {
            for k in 0..NUM_FEATURES {
                mean[k] += r[k] / n as f64;
            }
        }
        for r in &rows {
            for k in 0..NUM_FEATURES {
                var[k] += (r[k] - mean[k]).powi(2) / n as f64;
            }
        }
        let out: Vec<_> = rows
            .iter()
            .map(|r| {
                let mut z = [0.0; NUM_FEATURES];
                for k in 0..NUM_FEATURES {
                    let sd = var[k].sqrt();
                    z[k] = if sd > 1e-12 {
                        (r[k] - mean[k]) / sd
                    } else {
                        0.0
                    };
                }
                z
            })
            .collect();
        Self::from_rows(&out)
    }

    /// CSV with a fixed header, one row per cut.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(FEATURE_NAMES)?;
        for row in self.rows() {
            wtr.write_record(row.iter().map(|v| v.to_string()))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn mean_max_min_std(values: &[f64]) -> [f64; 4] {
    if values.is_empty() {
        return [0.0; 4];
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    [mean, max, min, var.sqrt()]
}

pub fn featurize_cut(
    inst: &MilpInstance,
    x_star: &[f64],
    int_mask: &[bool],
    cut: &Cut,
) -> Result<CutFeatures> {
    let norm = cut.norm();
    if norm == 0.0 {
        return Err(Error::ZeroNormCut);
    }
    let nonzero: Vec<(usize, f64)> = cut
        .alpha
        .iter()
        .copied()
        .filter(|&(_, a)| a != 0.0)
        .collect();
    let coefs: Vec<f64> = nonzero.iter().map(|&(_, a)| a).collect();
    let objs: Vec<f64> = nonzero.iter().map(|&(j, _)| inst.c[j]).collect();
    let [coef_mean, coef_max, coef_min, coef_std] = mean_max_min_std(&coefs);
    let [obj_mean, obj_max, obj_min, obj_std] = mean_max_min_std(&objs);

    let c_norm = inst.c.iter().map(|v| v * v).sum::<f64>().sqrt();
    let c_dot: f64 = nonzero.iter().map(|&(j, a)| a * inst.c[j]).sum();
    let parallelism = if c_norm > 0.0 {
        (c_dot / (c_norm * norm)).clamp(-1.0, 1.0)
    } else {
        0.0
    };
    let violation = cut.activity(x_star) - cut.beta;
    let efficacy = violation.abs() / norm;
    let support = nonzero.len() as f64 / inst.n as f64;
    let integral_support =
        nonzero.iter().filter(|&&(j, _)| int_mask[j]).count() as f64 / nonzero.len() as f64;
    let denom = if cut.beta.abs() < BETA_GUARD {
        1.0
    } else {
        cut.beta.abs()
    };
    let normalized_violation = (violation / denom).max(0.0);
    Ok(CutFeatures {
        coef_mean,
        coef_max,
        coef_min,
        coef_std,
        obj_mean,
        obj_max,
        obj_min,
        obj_std,
        parallelism,
        efficacy,
        support,
        integral_support,
        normalized_violation,
    })
}

/// Encodes `(instance, LP optimum, candidate pool)` as a feature sequence.
pub fn featurize(inst: &MilpInstance, lp: &LpSolution, cuts: &[Cut]) -> Result<CutSelState> {
    let mask = inst.integer_mask();
    let features = cuts
        .iter()
        .map(|c| featurize_cut(inst, &lp.x_star, &mask, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(CutSelState { features })
}
