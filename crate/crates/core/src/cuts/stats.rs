use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gap assumed while either bound is still unknown.
pub const INITIAL_GAP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    OptimalProven,
    Infeasible,
    TimeLimit,
    NodeLimit,
}

/// Unit of the time axis that bound events and limits are measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Clock {
    /// Simplex pivots. Deterministic.
    #[default]
    WorkUnits,
    /// Wall-clock seconds.
    Seconds,
}

/// Bound trajectories and end-of-run metrics of one branch-and-cut solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    /// Wall-clock seconds.
    pub time: f64,
    /// Simplex pivots spent.
    pub work_units: u64,
    pub nodes: u64,
    pub status: SolveStatus,
    pub pd_gap: f64,
    /// Primal-dual integral over `[0, horizon]` in `clock` units.
    pub pd_integral: f64,
    pub horizon: f64,
    pub clock: Clock,
    /// `(t, bound)` each time the incumbent improved.
    pub primal_events: Vec<(f64, f64)>,
    /// `(t, bound)` each time the global lower bound rose.
    pub dual_events: Vec<(f64, f64)>,
    /// Time the search finished with proven optimality.
    pub optimal_at: Option<f64>,
    pub numerical_trouble: bool,
    pub root: RootInfo,
}

/// What happened during the separation rounds at the root.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RootInfo {
    /// Root LP objective before any cut was added.
    pub lp_before: Option<f64>,
    /// Root LP objective after the last separation round.
    pub lp_after: Option<f64>,
    pub candidates: Vec<usize>,
    pub selected: Vec<usize>,
}

impl SolveStats {
    pub fn primal_bound(&self) -> Option<f64> {
        self.primal_events.last().map(|&(_, b)| b)
    }

    pub fn dual_bound(&self) -> Option<f64> {
        self.dual_events.last().map(|&(_, b)| b)
    }

    /// Solve time in the stats' own clock.
    pub fn clock_time(&self) -> f64 {
        match self.clock {
            Clock::WorkUnits => self.work_units as f64,
            Clock::Seconds => self.time,
        }
    }

    /// The subset of fields exchanged with external tools.
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Wire<'a> {
            time: f64,
            nodes: u64,
            status: SolveStatus,
            pd_gap: f64,
            pd_integral: f64,
            primal_events: &'a [(f64, f64)],
            dual_events: &'a [(f64, f64)],
        }
        Ok(serde_json::to_string(&Wire {
            time: self.clock_time(),
            nodes: self.nodes,
            status: self.status,
            pd_gap: self.pd_gap,
            pd_integral: self.pd_integral,
            primal_events: &self.primal_events,
            dual_events: &self.dual_events,
        })?)
    }
}

/// Integral of the primal-dual gap step function over `[0, horizon]`.
///
/// The gap is [`INITIAL_GAP`] until both bounds exist and zero from the moment
/// optimality is proven.
pub fn pd_integral(stats: &SolveStats, horizon: f64) -> f64 {
    pd_integral_of(
        &stats.primal_events,
        &stats.dual_events,
        stats.optimal_at,
        horizon,
    )
}

pub fn pd_integral_of(
    primal: &[(f64, f64)],
    dual: &[(f64, f64)],
    optimal_at: Option<f64>,
    horizon: f64,
) -> f64 {
    if horizon <= 0.0 {
        return 0.0;
    }
    let mut times: Vec<f64> = primal
        .iter()
        .chain(dual)
        .map(|&(t, _)| t)
        .chain(optimal_at)
        .filter(|&t| t < horizon)
        .collect();
    times.push(0.0);
    times.push(horizon);
    times.sort_by(f64::total_cmp);
    times.dedup();

    let bound_at = |events: &[(f64, f64)], t: f64| {
        events
            .iter()
            .take_while(|&&(te, _)| te <= t)
            .last()
            .map(|&(_, b)| b)
    };
    let mut total = 0.0;
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        let gap = if optimal_at.is_some_and(|t| t <= t0) {
            0.0
        } else {
            match (bound_at(primal, t0), bound_at(dual, t0)) {
                (Some(p), Some(d)) => (p - d).max(0.0),
                _ => INITIAL_GAP,
            }
        };
        total += gap * (t1 - t0);
    }
    total
}

/// `(baseline - method) / baseline`.
pub fn improvement(metric_nocuts: f64, metric_method: f64) -> Result<f64> {
    if metric_nocuts == 0.0 {
        return Err(Error::UndefinedImprovement);
    }
    Ok((metric_nocuts - metric_method) / metric_nocuts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gap_rectangle() {
        let v = pd_integral_of(&[(0.0, 5.0)], &[(0.0, 3.0)], None, 10.0);
        assert!((v - 20.0).abs() < 1e-12);
    }

    #[test]
    fn no_bounds_uses_initial_gap() {
        assert_eq!(pd_integral_of(&[], &[], None, 10.0), 1000.0);
        assert_eq!(pd_integral_of(&[], &[(0.0, 1.0)], None, 10.0), 1000.0);
    }

    #[test]
    fn dual_closing_the_gap() {
        let v = pd_integral_of(&[(0.0, 5.0)], &[(0.0, 3.0), (4.0, 5.0)], None, 10.0);
        assert!((v - 8.0).abs() < 1e-12);
    }

    #[test]
    fn optimality_zeroes_the_tail() {
        let v = pd_integral_of(&[(1.0, 5.0)], &[(2.0, 4.0)], Some(3.0), 10.0);
        // [0,2): 100 per unit, [2,3): gap 1
        assert!((v - 201.0).abs() < 1e-12);
    }

    #[test]
    fn improvement_arithmetic() {
        assert!((improvement(6.31, 1.85).unwrap() - 0.706_814_580_031_695_7).abs() < 1e-12);
        assert!((improvement(8.78, 1.76).unwrap() - 0.799_544_419_134_396_3).abs() < 1e-12);
        assert_eq!(improvement(3.0, 3.0).unwrap(), 0.0);
        assert!(matches!(
            improvement(0.0, 1.0),
            Err(Error::UndefinedImprovement)
        ));
    }
}
