use serde::{Deserialize, Serialize};

use crate::milp::{ColumnKind, LpSolution, MilpInstance, TableauRow};

/// Fractional parts outside `[MIN_FRAC, 1 - MIN_FRAC]` do not produce cuts.
pub const MIN_FRAC: f64 = 1e-4;
const ZERO_COEF: f64 = 1e-11;
const MAX_DYNAMISM: f64 = 1e8;
const DUPLICATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutOrigin {
    /// Basic variable whose tableau row produced the cut.
    pub source_row: usize,
    pub round: usize,
}

/// A valid inequality `alpha · x <= beta` over the original variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cut {
    pub alpha: Vec<(usize, f64)>,
    pub beta: f64,
    pub origin: CutOrigin,
    /// Generation order; later rounds continue the numbering.
    pub id: u64,
}

impl Cut {
    pub fn activity(&self, x: &[f64]) -> f64 {
        self.alpha.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// `alpha · x - beta`; positive when `x` is cut off.
    pub fn violation(&self, x: &[f64]) -> f64 {
        self.activity(x) - self.beta
    }

    pub fn norm(&self) -> f64 {
        self.alpha.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt()
    }

    pub fn dense_alpha(&self, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for &(j, a) in &self.alpha {
            out[j] += a;
        }
        out
    }
}

/// Gomory cuts from every fractional tableau row of `lp`, numbered from zero.
pub fn generate_cuts(inst: &MilpInstance, lp: &LpSolution) -> Vec<Cut> {
    generate_cuts_from(inst, lp, 0, 0)
}

/// Like [`generate_cuts`], tagging cuts with `round` and numbering from `first_id`.
/// Duplicates (after normalization) keep only the earliest cut.
pub fn generate_cuts_from(
    inst: &MilpInstance,
    lp: &LpSolution,
    round: usize,
    first_id: u64,
) -> Vec<Cut> {
    if !lp.is_optimal() {
        return Vec::new();
    }
    let mut out: Vec<Cut> = Vec::new();
    let mut normalized: Vec<(Vec<f64>, f64)> = Vec::new();
    for row in &lp.tableau_rows {
        let Some((alpha, beta)) = cut_from_row(inst, lp, row) else {
            continue;
        };
        let norm = alpha.iter().map(|a| a * a).sum::<f64>().sqrt();
        let key: Vec<f64> = alpha.iter().map(|a| a / norm).collect();
        let key_beta = beta / norm;
        let duplicate = normalized.iter().any(|(k, b)| {
            (b - key_beta).abs() < DUPLICATE_TOL
                && k.iter()
                    .zip(&key)
                    .all(|(x, y)| (x - y).abs() < DUPLICATE_TOL)
        });
        if duplicate {
            continue;
        }
        normalized.push((key, key_beta));
        let sparse = alpha
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(j, &a)| (j, a))
            .collect();
        out.push(Cut {
            alpha: sparse,
            beta,
            origin: CutOrigin {
                source_row: row.var,
                round,
            },
            id: first_id + out.len() as u64,
        });
    }
    out
}

fn frac(v: f64) -> f64 {
    let f = v - v.floor();
    if !(ZERO_COEF..=1.0 - ZERO_COEF).contains(&f) {
        0.0
    } else {
        f
    }
}

/// Builds the cut in nonbasic space, `sum g_k z_k >= g0`, then maps it back to
/// the original variables. Rows whose nonbasic support is all integral give the
/// pure fractional cut; rows touching continuous columns give the mixed-integer
/// Gomory cut, which reduces to a valid inequality when some `z_k` is continuous.
fn cut_from_row(inst: &MilpInstance, lp: &LpSolution, row: &TableauRow) -> Option<(Vec<f64>, f64)> {
    let f0 = row.rhs - row.rhs.floor();
    if !(MIN_FRAC..=1.0 - MIN_FRAC).contains(&f0) {
        return None;
    }
    let pure = row
        .nonbasic
        .iter()
        .zip(&row.coefs)
        .all(|(&k, &a)| a.abs() <= ZERO_COEF || lp.columns[k].integral);

    let mut terms: Vec<(usize, f64)> = Vec::new();
    let g0 = if pure { f0 } else { 1.0 };
    for (&k, &a) in row.nonbasic.iter().zip(&row.coefs) {
        if a.abs() <= ZERO_COEF {
            continue;
        }
        let g = if lp.columns[k].integral {
            let fk = frac(a);
            if pure {
                fk
            } else if fk <= f0 {
                fk / f0
            } else {
                (1.0 - fk) / (1.0 - f0)
            }
        } else if a > 0.0 {
            a / f0
        } else {
            -a / (1.0 - f0)
        };
        if g > 0.0 {
            terms.push((k, g));
        }
    }
    if terms.is_empty() {
        return None;
    }
    let (gmin, gmax) = terms
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &(_, g)| {
            (lo.min(g), hi.max(g))
        });
    if gmax / gmin > MAX_DYNAMISM {
        return None;
    }

    // sum g_k (c_k + L_k x) >= g0   <=>   -sum g_k L_k x <= sum g_k c_k - g0
    let mut alpha = vec![0.0; inst.n];
    let mut beta = -g0;
    for (k, g) in terms {
        match lp.columns[k].kind {
            ColumnKind::Structural(j) => {
                alpha[j] -= g;
                beta += g * lp.bounds[j].0;
            }
            ColumnKind::Slack(i) => {
                let r = &inst.rows[i];
                for &(j, a) in &r.coefs {
                    alpha[j] += g * a;
                }
                beta += g * r.rhs;
            }
            ColumnKind::UpperSlack(j) => {
                alpha[j] += g;
                beta += g * lp.bounds[j].1;
            }
            ColumnKind::Artificial => return None,
        }
    }
    for a in &mut alpha {
        if a.abs() < 1e-12 {
            *a = 0.0;
        }
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return None;
    }
    let violation: f64 = alpha
        .iter()
        .zip(&lp.x_star)
        .map(|(a, x)| a * x)
        .sum::<f64>()
        - beta;
    if violation < 1e-6 {
        return None;
    }
    Some((alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_lp, Row};

    #[test]
    fn integral_lp_gives_no_cuts() {
        let inst = MilpInstance::with_bounds(
            "t",
            vec![-1.0, -1.0],
            vec![Row::new(vec![(0, 1.0), (1, 1.0)], 2.0)],
            vec![0, 1],
            vec![(0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap();
        let lp = solve_lp(&inst).unwrap();
        assert!(generate_cuts(&inst, &lp).is_empty());
    }

    #[test]
    fn single_variable_cut_implies_x_le_1() {
        let inst = MilpInstance::new(
            "t",
            vec![-1.0],
            vec![Row::new(vec![(0, 2.0)], 3.0)],
            vec![0],
        )
        .unwrap();
        let lp = solve_lp(&inst).unwrap();
        let cuts = generate_cuts(&inst, &lp);
        assert_eq!(cuts.len(), 1);
        let cut = &cuts[0];
        // alpha x <= beta with alpha > 0 must give x <= 1
        assert_eq!(cut.alpha.len(), 1);
        let (j, a) = cut.alpha[0];
        assert_eq!(j, 0);
        assert!(a > 0.0);
        assert!((cut.beta / a - 1.0).abs() < 1e-9);
        for p in [0.0, 1.0] {
            assert!(cut.violation(&[p]) <= 1e-6);
        }
        assert!(cut.violation(&lp.x_star) >= MIN_FRAC);
    }

    #[test]
    fn ids_and_round_follow_arguments() {
        let inst = MilpInstance::new(
            "t",
            vec![-1.0, -1.0],
            vec![Row::new(vec![(0, 2.0)], 3.0), Row::new(vec![(1, 2.0)], 5.0)],
            vec![0, 1],
        )
        .unwrap();
        let lp = solve_lp(&inst).unwrap();
        let cuts = generate_cuts_from(&inst, &lp, 3, 10);
        assert_eq!(cuts.len(), 2);
        assert_eq!(cuts[0].id, 10);
        assert_eq!(cuts[1].id, 11);
        assert!(cuts.iter().all(|c| c.origin.round == 3));
    }
}
