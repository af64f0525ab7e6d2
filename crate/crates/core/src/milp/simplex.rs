//! Revised primal simplex over a dense explicit basis inverse.
//!
//! The instance `min c·x, A x <= b, lo <= x <= hi` is brought to equality form
//! by shifting `x' = x - lo`, turning every finite upper bound into an extra
//! row `x'_j + t_j = hi_j - lo_j`, and adding one slack per row. Rows whose
//! shifted rhs is negative are negated and receive an artificial column for
//! phase one.

use crate::error::{Error, Result};
use crate::milp::instance::{MilpInstance, FEASIBILITY_TOL, INTEGRALITY_TOL};

const PIVOT_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// What a standard-form column stands for, expressed over the original variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    /// `x_j - lo_j`
    Structural(usize),
    /// `b_i - a_i·x` for instance row `i`
    Slack(usize),
    /// `hi_j - x_j`
    UpperSlack(usize),
    Artificial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Column {
    pub kind: ColumnKind,
    /// The column takes integer values at every integer-feasible point.
    pub integral: bool,
}

/// Simplex tableau row of a fractional basic integer variable:
/// `x_var + sum_k coefs[k] * z[nonbasic[k]] = rhs`, with `rhs` in original units.
#[derive(Debug, Clone, PartialEq)]
pub struct TableauRow {
    pub var: usize,
    pub rhs: f64,
    pub nonbasic: Vec<usize>,
    pub coefs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x_star: Vec<f64>,
    pub z_lp: f64,
    /// Basic column per standard-form row.
    pub basis: Vec<usize>,
    pub columns: Vec<Column>,
    pub tableau_rows: Vec<TableauRow>,
    /// Row duals of the instance rows (`<= 0` at a minimization optimum).
    pub duals: Vec<f64>,
    /// Bounds the LP was solved under.
    pub bounds: Vec<(f64, f64)>,
    pub pivots: u64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    /// `(variable basic?, instance row slack basic?)`.
    pub fn basis_status(&self, n: usize, m: usize) -> (Vec<bool>, Vec<bool>) {
        let mut vars = vec![false; n];
        let mut rows = vec![false; m];
        for &col in &self.basis {
            match self.columns[col].kind {
                ColumnKind::Structural(j) => vars[j] = true,
                ColumnKind::Slack(i) => rows[i] = true,
                _ => {}
            }
        }
        (vars, rows)
    }

    fn empty(status: LpStatus, n: usize, bounds: &[(f64, f64)], pivots: u64) -> Self {
        LpSolution {
            status,
            x_star: vec![0.0; n],
            z_lp: match status {
                LpStatus::Unbounded => f64::NEG_INFINITY,
                _ => f64::INFINITY,
            },
            basis: Vec::new(),
            columns: Vec::new(),
            tableau_rows: Vec::new(),
            duals: Vec::new(),
            bounds: bounds.to_vec(),
            pivots,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexOptions {
    pub max_pivots: u64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degeneracy_threshold: u32,
    pub refactor_every: u32,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions {
            max_pivots: 50_000,
            degeneracy_threshold: 30,
            refactor_every: 64,
        }
    }
}

pub fn solve_lp(inst: &MilpInstance) -> Result<LpSolution> {
    solve_lp_with(inst, &inst.bounds, &SimplexOptions::default())
}

pub fn solve_lp_with_bounds(inst: &MilpInstance, bounds: &[(f64, f64)]) -> Result<LpSolution> {
    solve_lp_with(inst, bounds, &SimplexOptions::default())
}

pub fn solve_lp_with(
    inst: &MilpInstance,
    bounds: &[(f64, f64)],
    opts: &SimplexOptions,
) -> Result<LpSolution> {
    if bounds.len() != inst.n {
        return Err(Error::DimensionMismatch(format!(
            "{} bounds for {} variables",
            bounds.len(),
            inst.n
        )));
    }
    if bounds.iter().any(|&(lo, hi)| lo > hi + FEASIBILITY_TOL) {
        return Ok(LpSolution::empty(LpStatus::Infeasible, inst.n, bounds, 0));
    }
    let mut sf = StandardForm::build(inst, bounds);
    let mut engine = Engine::new(&sf, *opts);

    if sf.n_art > 0 {
        let cost: Vec<f64> = sf
            .columns
            .iter()
            .map(|c| {
                if c.kind == ColumnKind::Artificial {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        let allowed = vec![true; sf.ncols];
        match engine.run(&sf, &cost, &allowed)? {
            Outcome::Optimal => {}
            // phase one is bounded below by zero
            Outcome::Unbounded => return Err(Error::NumericalFailure(engine.pivots)),
        }
        let infeas: f64 = engine
            .basis
            .iter()
            .zip(&engine.x_b)
            .filter(|(&col, _)| sf.columns[col].kind == ColumnKind::Artificial)
            .map(|(_, &v)| v)
            .sum();
        let scale = 1.0 + sf.b.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if infeas > FEASIBILITY_TOL * scale {
            return Ok(LpSolution::empty(
                LpStatus::Infeasible,
                inst.n,
                bounds,
                engine.pivots,
            ));
        }
        engine.drive_out_artificials(&sf);
    }

    let mut cost = vec![0.0; sf.ncols];
    cost[..inst.n].copy_from_slice(&inst.c);
    let allowed: Vec<bool> = sf
        .columns
        .iter()
        .map(|c| c.kind != ColumnKind::Artificial)
        .collect();
    if let Outcome::Unbounded = engine.run(&sf, &cost, &allowed)? {
        return Ok(LpSolution::empty(
            LpStatus::Unbounded,
            inst.n,
            bounds,
            engine.pivots,
        ));
    }
    engine.refactor(&sf);
    Ok(engine.extract(inst, &mut sf, &cost, bounds))
}

struct StandardForm {
    nrows: usize,
    ncols: usize,
    n_art: usize,
    /// Row-major `nrows x ncols`.
    a: Vec<f64>,
    b: Vec<f64>,
    columns: Vec<Column>,
    /// Row was negated to make its rhs nonnegative.
    flipped: Vec<bool>,
    m_inst: usize,
    initial_basis: Vec<usize>,
}

impl StandardForm {
    fn build(inst: &MilpInstance, bounds: &[(f64, f64)]) -> Self {
        let n = inst.n;
        let m = inst.m();
        let is_int = inst.integer_mask();
        let is_whole = |v: f64| (v - v.round()).abs() <= 1e-12;
        let upper: Vec<usize> = (0..n).filter(|&j| bounds[j].1.is_finite()).collect();
        let nrows = m + upper.len();

        let mut b = Vec::with_capacity(nrows);
        for row in &inst.rows {
            let shift: f64 = row.coefs.iter().map(|&(j, a)| a * bounds[j].0).sum();
            b.push(row.rhs - shift);
        }
        for &j in &upper {
            b.push(bounds[j].1 - bounds[j].0);
        }
        let flipped: Vec<bool> = b.iter().map(|&v| v < 0.0).collect();
        let n_art = flipped.iter().filter(|&&f| f).count();
        let ncols = n + nrows + n_art;

        let mut columns = Vec::with_capacity(ncols);
        for j in 0..n {
            columns.push(Column {
                kind: ColumnKind::Structural(j),
                integral: is_int[j] && is_whole(bounds[j].0),
            });
        }
        for (i, row) in inst.rows.iter().enumerate() {
            let integral =
                is_whole(row.rhs) && row.coefs.iter().all(|&(j, a)| is_int[j] && is_whole(a));
            columns.push(Column {
                kind: ColumnKind::Slack(i),
                integral,
            });
        }
        for &j in &upper {
            columns.push(Column {
                kind: ColumnKind::UpperSlack(j),
                integral: is_int[j] && is_whole(bounds[j].1),
            });
        }
        for _ in 0..n_art {
            columns.push(Column {
                kind: ColumnKind::Artificial,
                integral: false,
            });
        }

        let mut a = vec![0.0; nrows * ncols];
        for (i, row) in inst.rows.iter().enumerate() {
            for &(j, v) in &row.coefs {
                a[i * ncols + j] += v;
            }
        }
        for (k, &j) in upper.iter().enumerate() {
            a[(m + k) * ncols + j] = 1.0;
        }
        let mut initial_basis = Vec::with_capacity(nrows);
        let mut next_art = n + nrows;
        for r in 0..nrows {
            a[r * ncols + n + r] = 1.0;
            if flipped[r] {
                for v in &mut a[r * ncols..(r + 1) * ncols] {
                    *v = -*v;
                }
                b[r] = -b[r];
                a[r * ncols + next_art] = 1.0;
                initial_basis.push(next_art);
                next_art += 1;
            } else {
                initial_basis.push(n + r);
            }
        }
        StandardForm {
            nrows,
            ncols,
            n_art,
            a,
            b,
            columns,
            flipped,
            m_inst: m,
            initial_basis,
        }
    }

    fn col(&self, q: usize, out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            *o = self.a[r * self.ncols + q];
        }
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Engine {
    m: usize,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    /// Row-major `m x m`.
    binv: Vec<f64>,
    x_b: Vec<f64>,
    pivots: u64,
    since_refactor: u32,
    opts: SimplexOptions,
}

impl Engine {
    fn new(sf: &StandardForm, opts: SimplexOptions) -> Self {
        let m = sf.nrows;
        let mut binv = vec![0.0; m * m];
        for r in 0..m {
            binv[r * m + r] = 1.0;
        }
        let mut is_basic = vec![false; sf.ncols];
        for &q in &sf.initial_basis {
            is_basic[q] = true;
        }
        Engine {
            m,
            basis: sf.initial_basis.clone(),
            is_basic,
            binv,
            x_b: sf.b.clone(),
            pivots: 0,
            since_refactor: 0,
            opts,
        }
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (r, &q) in self.basis.iter().enumerate() {
            let cb = cost[q];
            if cb != 0.0 {
                let row = &self.binv[r * m..(r + 1) * m];
                for (yi, &bi) in y.iter_mut().zip(row) {
                    *yi += cb * bi;
                }
            }
        }
        y
    }

    fn ftran(&self, a_q: &[f64], out: &mut [f64]) {
        let m = self.m;
        for (r, o) in out.iter_mut().enumerate() {
            let row = &self.binv[r * m..(r + 1) * m];
            *o = row.iter().zip(a_q).map(|(x, y)| x * y).sum();
        }
    }

    fn run(&mut self, sf: &StandardForm, cost: &[f64], allowed: &[bool]) -> Result<Outcome> {
        let m = self.m;
        let ncols = sf.ncols;
        let mut degenerate_run = 0u32;
        let mut a_q = vec![0.0; m];
        let mut d_col = vec![0.0; m];
        loop {
            let y = self.duals(cost);
            let bland = degenerate_run >= self.opts.degeneracy_threshold;
            let mut entering = None;
            let mut best = -DUAL_TOL;
            for q in 0..ncols {
                if self.is_basic[q] || !allowed[q] {
                    continue;
                }
                let mut d = cost[q];
                for (r, &yr) in y.iter().enumerate() {
                    let a = sf.a[r * ncols + q];
                    if a != 0.0 {
                        d -= yr * a;
                    }
                }
                if bland {
                    if d < -DUAL_TOL {
                        entering = Some(q);
                        break;
                    }
                } else if d < best {
                    best = d;
                    entering = Some(q);
                }
            }
            let Some(q) = entering else {
                return Ok(Outcome::Optimal);
            };

            sf.col(q, &mut a_q);
            self.ftran(&a_q, &mut d_col);
            let mut leave: Option<usize> = None;
            let mut min_ratio = f64::INFINITY;
            for r in 0..m {
                let dr = d_col[r];
                if dr <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.x_b[r].max(0.0) / dr;
                let take = match leave {
                    None => true,
                    Some(l) => {
                        if ratio < min_ratio - 1e-12 {
                            true
                        } else if ratio <= min_ratio + 1e-12 {
                            if bland {
                                self.basis[r] < self.basis[l]
                            } else {
                                dr > d_col[l]
                            }
                        } else {
                            false
                        }
                    }
                };
                if take {
                    min_ratio = min_ratio.min(ratio);
                    leave = Some(r);
                }
            }
            let Some(l) = leave else {
                return Ok(Outcome::Unbounded);
            };
            let step = self.x_b[l].max(0.0) / d_col[l];
            if step <= DEGENERATE_STEP {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(sf, l, q, &d_col);
            if self.pivots > self.opts.max_pivots {
                return Err(Error::NumericalFailure(self.pivots));
            }
        }
    }

    fn pivot(&mut self, sf: &StandardForm, l: usize, q: usize, d_col: &[f64]) {
        let m = self.m;
        let piv = d_col[l];
        let step = self.x_b[l] / piv;
        for (r, (xb, &d)) in self.x_b.iter_mut().zip(d_col).enumerate() {
            if r == l {
                *xb = step;
            } else {
                *xb -= step * d;
                if *xb < 0.0 && *xb > -FEASIBILITY_TOL {
                    *xb = 0.0;
                }
            }
        }
        let (before, rest) = self.binv.split_at_mut(l * m);
        let (lrow, after) = rest.split_at_mut(m);
        for v in lrow.iter_mut() {
            *v /= piv;
        }
        for (r, row) in before
            .chunks_mut(m)
            .enumerate()
            .chain(after.chunks_mut(m).enumerate().map(|(i, c)| (i + l + 1, c)))
        {
            let f = d_col[r];
            if f != 0.0 {
                for (x, &y) in row.iter_mut().zip(lrow.iter()) {
                    *x -= f * y;
                }
            }
        }
        self.is_basic[self.basis[l]] = false;
        self.is_basic[q] = true;
        self.basis[l] = q;
        self.pivots += 1;
        self.since_refactor += 1;
        if self.since_refactor >= self.opts.refactor_every {
            self.refactor(sf);
        }
    }

    /// Recomputes the basis inverse and basic values from scratch.
    fn refactor(&mut self, sf: &StandardForm) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let w = 2 * m;
        let mut aug = vec![0.0; m * w];
        for (k, &q) in self.basis.iter().enumerate() {
            for r in 0..m {
                aug[r * w + k] = sf.a[r * sf.ncols + q];
            }
        }
        for r in 0..m {
            aug[r * w + m + r] = 1.0;
        }
        for k in 0..m {
            let p = (k..m)
                .max_by(|&i, &j| aug[i * w + k].abs().total_cmp(&aug[j * w + k].abs()))
                .unwrap();
            if aug[p * w + k].abs() < 1e-13 {
                // singular basis; keep the updated inverse
                return;
            }
            if p != k {
                for c in 0..w {
                    aug.swap(p * w + c, k * w + c);
                }
            }
            let inv = 1.0 / aug[k * w + k];
            for c in 0..w {
                aug[k * w + c] *= inv;
            }
            for r in 0..m {
                if r != k {
                    let f = aug[r * w + k];
                    if f != 0.0 {
                        for c in 0..w {
                            aug[r * w + c] -= f * aug[k * w + c];
                        }
                    }
                }
            }
        }
        for r in 0..m {
            self.binv[r * m..(r + 1) * m].copy_from_slice(&aug[r * w + m..(r + 1) * w]);
        }
        let mut x_b = vec![0.0; m];
        self.ftran(&sf.b, &mut x_b);
        for v in &mut x_b {
            if *v < 0.0 && *v > -FEASIBILITY_TOL {
                *v = 0.0;
            }
        }
        self.x_b = x_b;
    }

    fn drive_out_artificials(&mut self, sf: &StandardForm) {
        let m = self.m;
        let mut a_q = vec![0.0; m];
        let mut d_col = vec![0.0; m];
        for l in 0..m {
            if sf.columns[self.basis[l]].kind != ColumnKind::Artificial {
                continue;
            }
            let row = self.binv[l * m..(l + 1) * m].to_vec();
            let candidate = (0..sf.ncols).find(|&q| {
                !self.is_basic[q]
                    && sf.columns[q].kind != ColumnKind::Artificial
                    && (0..m)
                        .map(|r| row[r] * sf.a[r * sf.ncols + q])
                        .sum::<f64>()
                        .abs()
                        > 1e-7
            });
            if let Some(q) = candidate {
                sf.col(q, &mut a_q);
                self.ftran(&a_q, &mut d_col);
                self.pivot(sf, l, q, &d_col);
            }
        }
    }

    fn extract(
        &self,
        inst: &MilpInstance,
        sf: &mut StandardForm,
        cost: &[f64],
        bounds: &[(f64, f64)],
    ) -> LpSolution {
        let m = self.m;
        let mut x = bounds.iter().map(|&(lo, _)| lo).collect::<Vec<_>>();
        for (r, &q) in self.basis.iter().enumerate() {
            if let ColumnKind::Structural(j) = sf.columns[q].kind {
                x[j] += self.x_b[r];
            }
        }
        let z_lp = inst.objective(&x);
        let y = self.duals(cost);
        let duals = (0..sf.m_inst)
            .map(|i| if sf.flipped[i] { -y[i] } else { y[i] })
            .collect();

        let mut tableau_rows = Vec::new();
        let nonbasic: Vec<usize> = (0..sf.ncols)
            .filter(|&q| !self.is_basic[q] && sf.columns[q].kind != ColumnKind::Artificial)
            .collect();
        for (r, &q) in self.basis.iter().enumerate() {
            let ColumnKind::Structural(j) = sf.columns[q].kind else {
                continue;
            };
            if !inst.is_integer(j) {
                continue;
            }
            let frac = x[j] - x[j].floor();
            if frac <= INTEGRALITY_TOL || frac >= 1.0 - INTEGRALITY_TOL {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let coefs = nonbasic
                .iter()
                .map(|&k| (0..m).map(|i| row[i] * sf.a[i * sf.ncols + k]).sum())
                .collect();
            tableau_rows.push(TableauRow {
                var: j,
                rhs: x[j],
                nonbasic: nonbasic.clone(),
                coefs,
            });
        }
        LpSolution {
            status: LpStatus::Optimal,
            x_star: x,
            z_lp,
            basis: self.basis.clone(),
            columns: std::mem::take(&mut sf.columns),
            tableau_rows,
            duals,
            bounds: bounds.to_vec(),
            pivots: self.pivots,
        }
    }
}
