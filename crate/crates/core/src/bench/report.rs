use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cuts::{branch_and_cut, improvement, Clock, SolveConfig, SolveStatus};
use crate::error::{Error, Result};
use crate::milp::MilpInstance;
use crate::select::CutSelector;

/// Seeds every method is run with.
pub const EVAL_SEEDS: [u64; 3] = [1, 2, 3];
pub const BASELINE: &str = "NoCuts";

/// One solve of one method on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub instance: String,
    pub seed: u64,
    /// In the solve's clock units.
    pub time: f64,
    pub nodes: u64,
    pub pd_gap: f64,
    pub pd_integral: f64,
    pub status: SolveStatus,
    pub candidates: usize,
    pub selected: usize,
}

/// Arithmetic mean and population standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub stdev: f64,
}

impl Stat {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Stat {
                mean: f64::NAN,
                stdev: f64::NAN,
            };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Stat {
            mean,
            stdev: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRow {
    pub method: String,
    pub runs: usize,
    pub time: Stat,
    pub nodes: Stat,
    pub pd_gap: Stat,
    pub pd_integral: Stat,
    /// Relative to the baseline's mean; `None` without a baseline or when
    /// the baseline mean is zero.
    pub improvement_time: Option<f64>,
    pub improvement_pd_integral: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub clock: Clock,
    pub rows: Vec<MethodRow>,
    pub records: Vec<RunRecord>,
}

/// Improvement as a percentage with one decimal, or `NA`.
pub fn format_improvement(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.1}", 100.0 * v),
        None => "NA".into(),
    }
}

fn cell(s: Stat) -> String {
    format!("{:.2} ({:.2})", s.mean, s.stdev)
}

impl EvalReport {
    /// Aggregates per method, keeping first-appearance order of methods.
    pub fn from_records(records: Vec<RunRecord>, clock: Clock) -> Self {
        let mut methods: Vec<String> = Vec::new();
        for r in &records {
            if !methods.contains(&r.method) {
                methods.push(r.method.clone());
            }
        }
        let mut rows: Vec<MethodRow> = methods
            .iter()
            .map(|m| {
                let rs: Vec<&RunRecord> = records.iter().filter(|r| &r.method == m).collect();
                let col = |f: fn(&RunRecord) -> f64| {
                    Stat::of(&rs.iter().map(|r| f(r)).collect::<Vec<_>>())
                };
                MethodRow {
                    method: m.clone(),
                    runs: rs.len(),
                    time: col(|r| r.time),
                    nodes: col(|r| r.nodes as f64),
                    pd_gap: col(|r| r.pd_gap),
                    pd_integral: col(|r| r.pd_integral),
                    improvement_time: None,
                    improvement_pd_integral: None,
                }
            })
            .collect();
        if let Some(base) = rows.iter().find(|r| r.method == BASELINE).cloned() {
            for row in &mut rows {
                row.improvement_time = improvement(base.time.mean, row.time.mean).ok();
                row.improvement_pd_integral =
                    improvement(base.pd_integral.mean, row.pd_integral.mean).ok();
            }
        }
        EvalReport {
            clock,
            rows,
            records,
        }
    }

    pub fn row(&self, method: &str) -> Option<&MethodRow> {
        self.rows.iter().find(|r| r.method == method)
    }

    /// Fixed-width table: mean (stdev) with two decimals, improvements in
    /// percent with one decimal.
    pub fn to_table(&self) -> String {
        let unit = match self.clock {
            Clock::WorkUnits => "Time (work units)",
            Clock::Seconds => "Time (s)",
        };
        let header = [
            "Method",
            unit,
            "Improvement (%)",
            "Nodes",
            "PD gap",
            "PD integral",
            "Improvement (%)",
        ];
        let body: Vec<[String; 7]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.method.clone(),
                    cell(r.time),
                    format_improvement(r.improvement_time),
                    cell(r.nodes),
                    cell(r.pd_gap),
                    cell(r.pd_integral),
                    format_improvement(r.improvement_pd_integral),
                ]
            })
            .collect();
        let widths: Vec<usize> = (0..7)
            .map(|c| {
                body.iter()
                    .map(|row| row[c].len())
                    .chain(std::iter::once(header[c].len()))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: Vec<&str>| -> String {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(header.to_vec());
        out.push('\n');
        out.push_str(&"-".repeat(widths.iter().sum::<usize>() + 2 * 6));
        out.push('\n');
        for row in &body {
            out.push_str(&line(row.iter().map(String::as_str).collect()));
            out.push('\n');
        }
        out
    }

    pub fn write_records_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        for r in &self.records {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn write_summary_csv<W: std::io::Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "method",
            "runs",
            "time_mean",
            "time_stdev",
            "nodes_mean",
            "nodes_stdev",
            "pd_gap_mean",
            "pd_gap_stdev",
            "pd_integral_mean",
            "pd_integral_stdev",
            "improvement_time",
            "improvement_pd_integral",
        ])?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into());
        for r in &self.rows {
            wtr.write_record([
                r.method.clone(),
                r.runs.to_string(),
                r.time.mean.to_string(),
                r.time.stdev.to_string(),
                r.nodes.mean.to_string(),
                r.nodes.stdev.to_string(),
                r.pd_gap.mean.to_string(),
                r.pd_gap.stdev.to_string(),
                r.pd_integral.mean.to_string(),
                r.pd_integral.stdev.to_string(),
                opt(r.improvement_time),
                opt(r.improvement_pd_integral),
            ])?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// `report.csv`, `records.csv`, `report.json` and `report.txt`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        self.write_summary_csv(std::fs::File::create(dir.join("report.csv"))?)?;
        self.write_records_csv(std::fs::File::create(dir.join("records.csv"))?)?;
        std::fs::write(dir.join("report.json"), serde_json::to_string_pretty(self)?)?;
        std::fs::write(dir.join("report.txt"), self.to_table())?;
        Ok(())
    }

    /// Reads the raw records back and re-aggregates them.
    pub fn read_records_csv(path: &Path, clock: Clock) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.display().to_string()));
        }
        let mut rdr = csv::Reader::from_path(path)?;
        let records = rdr
            .deserialize()
            .collect::<std::result::Result<Vec<RunRecord>, _>>()?;
        Ok(Self::from_records(records, clock))
    }
}

/// Wall-clock seconds per record, in record order. Kept apart from the report
/// so that work-unit reports are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WallTime {
    pub method: String,
    pub instance: String,
    pub seed: u64,
    pub seconds: f64,
}

/// Every selector on every instance under every seed.
pub fn evaluate(
    selectors: &[Arc<dyn CutSelector>],
    instances: &[MilpInstance],
    solve: &SolveConfig,
    seeds: &[u64],
) -> Result<(EvalReport, Vec<WallTime>)> {
    let jobs: Vec<(usize, usize, u64)> = (0..selectors.len())
        .flat_map(|s| {
            (0..instances.len()).flat_map(move |i| seeds.iter().map(move |&seed| (s, i, seed)))
        })
        .collect();
    let results: Vec<(RunRecord, WallTime)> = jobs
        .par_iter()
        .map(|&(s, i, seed)| {
            let config = SolveConfig { seed, ..*solve };
            let stats = branch_and_cut(&instances[i], selectors[s].as_ref(), &config)?;
            let method = selectors[s].name();
            let record = RunRecord {
                method: method.clone(),
                instance: instances[i].name.clone(),
                seed,
                time: stats.clock_time(),
                nodes: stats.nodes,
                pd_gap: stats.pd_gap,
                pd_integral: stats.pd_integral,
                status: stats.status,
                candidates: stats.root.candidates.first().copied().unwrap_or(0),
                selected: stats.root.selected.first().copied().unwrap_or(0),
            };
            let wall = WallTime {
                method,
                instance: instances[i].name.clone(),
                seed,
                seconds: stats.time,
            };
            Ok((record, wall))
        })
        .collect::<Result<_>>()?;
    let (records, walls) = results.into_iter().unzip();
    Ok((EvalReport::from_records(records, solve.clock), walls))
}

pub fn write_wall_times(walls: &[WallTime], path: &Path) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for w in walls {
        wtr.serialize(w)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(method: &str, time: f64, pd: f64, seed: u64) -> RunRecord {
        RunRecord {
            method: method.into(),
            instance: "i".into(),
            seed,
            time,
            nodes: 1,
            pd_gap: 0.0,
            pd_integral: pd,
            status: SolveStatus::OptimalProven,
            candidates: 0,
            selected: 0,
        }
    }

    #[test]
    fn paper_improvements() {
        let r = EvalReport::from_records(
            vec![rec("NoCuts", 6.31, 8.78, 1), rec("HEM", 1.85, 1.76, 1)],
            Clock::Seconds,
        );
        let hem = r.row("HEM").unwrap();
        assert_eq!(format_improvement(hem.improvement_pd_integral), "80.0");
        assert!((hem.improvement_time.unwrap() - (6.31 - 1.85) / 6.31).abs() < 1e-15);
        assert_eq!(
            format_improvement(r.row("NoCuts").unwrap().improvement_time),
            "0.0"
        );
        assert!(r.to_table().contains("HEM"));
    }

    #[test]
    fn identical_seeds_zero_stdev() {
        let r = EvalReport::from_records(
            vec![rec("NoCuts", 5.0, 9.0, 1), rec("NoCuts", 5.0, 9.0, 2)],
            Clock::WorkUnits,
        );
        assert_eq!(r.rows[0].time.stdev, 0.0);
        assert_eq!(r.rows[0].pd_integral.stdev, 0.0);
    }

    #[test]
    fn no_baseline_no_improvement() {
        let r = EvalReport::from_records(vec![rec("HEM", 1.0, 1.0, 1)], Clock::WorkUnits);
        assert_eq!(r.rows[0].improvement_time, None);
        assert_eq!(format_improvement(None), "NA");
    }

    #[test]
    fn records_round_trip_through_csv() {
        let dir = tempfile::tempdir().unwrap();
        let r = EvalReport::from_records(
            vec![
                rec("NoCuts", 6.0, 10.0, 1),
                rec("NoCuts", 7.5, 12.25, 2),
                rec("HEM", 3.0, 4.0, 1),
            ],
            Clock::WorkUnits,
        );
        r.write(dir.path()).unwrap();
        let back = EvalReport::read_records_csv(&dir.path().join("records.csv"), Clock::WorkUnits)
            .unwrap();
        assert_eq!(back, r);
    }
}
