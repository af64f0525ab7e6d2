//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use hemcut::milp::{MilpInstance, Row};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Outcome of minimizing over a finite point set or vertex set.
#[derive(Debug, Clone, PartialEq)]
pub enum Optimum {
    Infeasible,
    Value { objective: f64, x: Vec<f64> },
}

impl Optimum {
    pub fn objective(&self) -> Option<f64> {
        match self {
            Optimum::Infeasible => None,
            Optimum::Value { objective, .. } => Some(*objective),
        }
    }
}

/// Every constraint of a bounded instance as `g · x <= h`: the rows, then
/// `-x_j <= -lo_j` and `x_j <= hi_j`.
fn halfspaces(inst: &MilpInstance) -> Vec<(Vec<f64>, f64)> {
    let n = inst.n;
    let mut out = Vec::new();
    for row in &inst.rows {
        let mut g = vec![0.0; n];
        for &(j, a) in &row.coefs {
            g[j] += a;
        }
        out.push((g, row.rhs));
    }
    for (j, &(lo, hi)) in inst.bounds.iter().enumerate() {
        let mut g = vec![0.0; n];
        g[j] = -1.0;
        out.push((g, -lo));
        assert!(hi.is_finite(), "vertex enumeration needs finite bounds");
        let mut g = vec![0.0; n];
        g[j] = 1.0;
        out.push((g, hi));
    }
    out
}

fn combinations(k: usize, n: usize, visit: &mut dyn FnMut(&[usize])) {
    fn rec(
        start: usize,
        k: usize,
        n: usize,
        cur: &mut Vec<usize>,
        visit: &mut dyn FnMut(&[usize]),
    ) {
        if cur.len() == k {
            visit(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, k, n, cur, visit);
            cur.pop();
        }
    }
    rec(0, k, n, &mut Vec::with_capacity(k), visit);
}

/// Every basic feasible solution of the LP relaxation, found by solving each
/// choice of `n` tight constraints.
pub fn lp_vertices(inst: &MilpInstance, tol: f64) -> Vec<Vec<f64>> {
    let n = inst.n;
    let hs = halfspaces(inst);
    let mut out = Vec::new();
    combinations(n, hs.len(), &mut |pick| {
        let a = DMatrix::from_fn(n, n, |r, c| hs[pick[r]].0[c]);
        let b = DVector::from_fn(n, |r, _| hs[pick[r]].1);
        let Some(x) = a.lu().solve(&b) else { return };
        if x.iter().any(|v| !v.is_finite()) {
            return;
        }
        let feasible = hs.iter().all(|(g, h)| {
            let lhs: f64 = g.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
            lhs <= h + tol * (1.0 + h.abs())
        });
        if feasible {
            out.push(x.iter().copied().collect());
        }
    });
    out
}

/// Minimum of `w · x` over the LP relaxation by vertex enumeration.
pub fn lp_enumerate(inst: &MilpInstance, w: &[f64]) -> Optimum {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x in lp_vertices(inst, 1e-9) {
        let v: f64 = w.iter().zip(&x).map(|(a, b)| a * b).sum();
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, x));
        }
    }
    match best {
        None => Optimum::Infeasible,
        Some((objective, x)) => Optimum::Value { objective, x },
    }
}

/// All integer points of a pure integer instance with finite bounds that
/// satisfy every row.
pub fn integer_points(inst: &MilpInstance) -> Vec<Vec<f64>> {
    assert_eq!(inst.integers.len(), inst.n, "pure integer instances only");
    let ranges: Vec<(i64, i64)> = inst
        .bounds
        .iter()
        .map(|&(lo, hi)| (lo.ceil() as i64, hi.floor() as i64))
        .collect();
    let mut out = Vec::new();
    let mut x: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return out;
    }
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if inst.rows.iter().all(|r| r.activity(&xf) <= r.rhs + 1e-9) {
            out.push(xf);
        }
        let mut j = 0;
        loop {
            if j == x.len() {
                return out;
            }
            if x[j] < ranges[j].1 {
                x[j] += 1;
                break;
            }
            x[j] = ranges[j].0;
            j += 1;
        }
    }
}

/// Integer optimum by brute force.
pub fn integer_enumerate(inst: &MilpInstance) -> Optimum {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for x in integer_points(inst) {
        let v = inst.objective(&x);
        if best.as_ref().is_none_or(|(b, _)| v < *b - 1e-12) {
            best = Some((v, x));
        }
    }
    match best {
        None => Optimum::Infeasible,
        Some((objective, x)) => Optimum::Value { objective, x },
    }
}

/// Continuous LP with `n + m <= 12`, finite bounds, dense random rows.
pub fn random_lp(rng: &mut ChaCha8Rng, name: &str) -> MilpInstance {
    let n = rng.random_range(1..=6);
    let m = rng.random_range(1..=(12 - n).min(6));
    let integral = rng.random_bool(0.3);
    let draw = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| {
        let v = rng.random_range(lo..hi);
        if integral {
            v.round()
        } else {
            v
        }
    };
    let c: Vec<f64> = (0..n).map(|_| draw(rng, -5.0, 5.0)).collect();
    let rows = (0..m)
        .map(|_| {
            let mut coefs = Vec::new();
            for j in 0..n {
                if rng.random_bool(0.8) {
                    coefs.push((j, draw(rng, -4.0, 6.0)));
                }
            }
            Row::new(coefs, draw(rng, -3.0, 12.0))
        })
        .collect();
    let bounds = (0..n)
        .map(|_| {
            let lo = draw(rng, -2.0, 1.0);
            (lo, lo + draw(rng, 0.5, 6.0).max(0.5))
        })
        .collect();
    MilpInstance::with_bounds(name, c, rows, vec![], bounds).unwrap()
}

/// Pure integer instance with integer data, `n <= 5` and bounds `[0, u]`, `u <= 3`.
pub fn random_small_ip(rng: &mut ChaCha8Rng, name: &str) -> MilpInstance {
    let n = rng.random_range(2..=5);
    let m = rng.random_range(1..=4);
    let c: Vec<f64> = (0..n).map(|_| -(rng.random_range(1..=9) as f64)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(1..=3) as f64).collect();
    let rows = (0..m)
        .map(|_| {
            let coefs: Vec<(usize, f64)> = (0..n)
                .map(|j| (j, rng.random_range(-2..=9) as f64))
                .collect();
            let cap: f64 = coefs.iter().map(|&(j, a)| a.max(0.0) * upper[j]).sum();
            Row::new(coefs, (cap * rng.random_range(0.3..0.7)).floor())
        })
        .collect();
    let bounds = upper.iter().map(|&u| (0.0, u)).collect();
    MilpInstance::with_bounds(name, c, rows, (0..n).collect(), bounds).unwrap()
}

/// Binary program with `4 <= n <= 12` variables and mixed-sign integer rows.
pub fn random_binary(rng: &mut ChaCha8Rng, name: &str) -> MilpInstance {
    let n = rng.random_range(4..=12);
    let m = rng.random_range(1..=5);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-10..=4) as f64).collect();
    let rows = (0..m)
        .map(|_| {
            let mut coefs = Vec::new();
            for j in 0..n {
                if rng.random_bool(0.7) {
                    coefs.push((j, rng.random_range(-3..=9) as f64));
                }
            }
            let pos: f64 = coefs.iter().map(|&(_, a)| a.max(0.0)).sum();
            Row::new(coefs, (pos * rng.random_range(-0.1..0.6)).floor())
        })
        .collect();
    MilpInstance::with_bounds(name, c, rows, (0..n).collect(), vec![(0.0, 1.0); n]).unwrap()
}
