//! Aggregation and emission of experiment results.
//!
//! Raw per-run records and the CSV table exclude wall-clock time on purpose:
//! those two artifacts are the reproducibility surface and must come out
//! byte-identical across re-runs. Wall time lives only in the aggregate
//! JSON, which is the one artifact allowed to differ.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::multi_target::StrategyKind;
use crate::space::ArchDescriptor;
use crate::svg;

/// Mean and sample standard deviation (n−1 divisor); `std` is absent for a
/// single sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<f64>,
}

impl MeanStd {
    /// Returns `None` for an empty slice.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let std = if samples.len() < 2 {
            None
        } else {
            let var = samples.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
            Some(var.sqrt())
        };
        Some(Self { mean, std })
    }
}

/// Result of one search stage inside a run, stripped to stable fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetRecord {
    pub target_ms: f64,
    pub accuracy: f64,
    pub latency_ms: f64,
    pub evaluations: u64,
    pub rejections: u64,
    pub iterations: u64,
    pub arch: ArchDescriptor,
}

/// One (strategy, repetition) cell of an experiment: stable fields only, so
/// the JSONL artifact is byte-identical across re-runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub space: String,
    pub strategy: StrategyKind,
    /// Sweep key the record belongs to (target count for k-sweeps, target
    /// for profiles, 0 for plain experiments).
    pub sweep_key: f64,
    pub rep: u64,
    pub seed: u64,
    pub targets_ms: Vec<f64>,
    pub total_evaluations: u64,
    pub total_rejections: u64,
    pub total_iterations: u64,
    pub per_target: Vec<TargetRecord>,
}

/// A failed cell; the report keeps going without it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub strategy: StrategyKind,
    pub rep: u64,
    pub message: String,
}

/// What the rows of a report are keyed by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupBy {
    /// Rows are latency targets; the headline metric is best accuracy.
    Target,
    /// Rows are target counts; the headline metric is total evaluations.
    K,
}

impl GroupBy {
    /// Name of the key column in CSV output.
    pub fn key_column(&self) -> &'static str {
        match self {
            GroupBy::Target => "latency_ms",
            GroupBy::K => "k",
        }
    }
}

/// Which per-run quantity a sweep tabulates and plots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    Accuracy,
    Evaluations,
    Rejections,
}

impl Metric {
    pub fn label(&self) -> &'static str {
        match self {
            Metric::Accuracy => "accuracy",
            Metric::Evaluations => "evaluations",
            Metric::Rejections => "rejections",
        }
    }
}

/// Aggregated statistics for one (row, strategy) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStats {
    pub runs: usize,
    pub accuracy: MeanStd,
    pub evaluations: MeanStd,
    pub rejections: MeanStd,
    pub wall_time_s: MeanStd,
}

/// One row of the aggregate table; `cells` follows the report's strategy
/// order, `None` where every run of the cell failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub key: f64,
    pub cells: Vec<Option<CellStats>>,
}

/// A full experiment report: aggregate rows plus the raw records they were
/// computed from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub space: String,
    pub group_by: GroupBy,
    pub metric: Metric,
    pub strategies: Vec<StrategyKind>,
    pub rows: Vec<AggregateRow>,
    /// Architectures that failed the post-hoc latency re-check. Always 0
    /// unless the search admission invariant is broken.
    pub violations: u64,
    pub failures: Vec<CellFailure>,
    pub raw_runs: Vec<RunRecord>,
}

impl AggregateReport {
    /// Sweep slug used in artifact file names.
    pub fn sweep_name(&self) -> String {
        let key = match self.group_by {
            GroupBy::Target => "target",
            GroupBy::K => "k",
        };
        format!("{}_by_{}", self.metric.label(), key)
    }

    /// Mean of `metric` in the cell for (`key`, `strategy`), if aggregated.
    pub fn cell_mean(&self, key: f64, strategy: StrategyKind) -> Option<f64> {
        let si = self.strategies.iter().position(|&s| s == strategy)?;
        let row = self.rows.iter().find(|r| r.key == key)?;
        let stats = row.cells.get(si)?.as_ref()?;
        Some(match self.metric {
            Metric::Accuracy => stats.accuracy.mean,
            Metric::Evaluations => stats.evaluations.mean,
            Metric::Rejections => stats.rejections.mean,
        })
    }

    /// Wide CSV: one row per key, a (mean, std) column pair per strategy,
    /// headline metric only. Floats print in shortest round-trip form, so
    /// the bytes are a pure function of the aggregated values.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.group_by.key_column());
        for s in &self.strategies {
            out.push_str(&format!(",{slug}_mean,{slug}_std", slug = s.csv_slug()));
        }
        out.push('\n');
        for row in &self.rows {
            out.push_str(&trim_float(row.key));
            for cell in &row.cells {
                match cell {
                    Some(stats) => {
                        let m = match self.metric {
                            Metric::Accuracy => stats.accuracy,
                            Metric::Evaluations => stats.evaluations,
                            Metric::Rejections => stats.rejections,
                        };
                        out.push(',');
                        out.push_str(&trim_float(m.mean));
                        out.push(',');
                        if let Some(std) = m.std {
                            out.push_str(&trim_float(std));
                        }
                    }
                    None => out.push_str(",,"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// One JSON object per raw run, newline-delimited.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for run in &self.raw_runs {
            out.push_str(&serde_json::to_string(run)?);
            out.push('\n');
        }
        Ok(out)
    }

    /// Grouped bar chart of the headline metric.
    pub fn to_svg(&self) -> String {
        let labels: Vec<String> = self.rows.iter().map(|r| trim_float(r.key)).collect();
        let series: Vec<(String, &'static str, Vec<f64>)> = self
            .strategies
            .iter()
            .enumerate()
            .map(|(si, s)| {
                let values = self
                    .rows
                    .iter()
                    .map(|row| {
                        row.cells[si]
                            .as_ref()
                            .map(|c| match self.metric {
                                Metric::Accuracy => c.accuracy.mean,
                                Metric::Evaluations => c.evaluations.mean,
                                Metric::Rejections => c.rejections.mean,
                            })
                            .unwrap_or(0.0)
                    })
                    .collect();
                (s.label().to_owned(), strategy_color(*s), values)
            })
            .collect();
        let title = format!(
            "{} by {} ({})",
            self.metric.label(),
            self.group_by.key_column(),
            self.space
        );
        svg::grouped_bars(&title, self.group_by.key_column(), &labels, &series)
    }
}

fn strategy_color(s: StrategyKind) -> &'static str {
    match s {
        StrategyKind::Vanilla => "#4c72b0",
        StrategyKind::TopDown => "#dd8452",
        StrategyKind::BottomUp => "#55a868",
    }
}

// Shortest round-trip decimal: 15.0 renders as "15", 4.5 as "4.5".
fn trim_float(v: f64) -> String {
    format!("{v}")
}

/// Writes `report.csv`, `report.json`, `raw_runs.jsonl` and the sweep SVG
/// into `dir`, creating it if needed. Returns the written paths.
pub fn emit_report(report: &AggregateReport, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let csv_path = dir.join("report.csv");
    fs::write(&csv_path, report.to_csv())?;
    written.push(csv_path);
    let json_path = dir.join("report.json");
    fs::write(&json_path, serde_json::to_string_pretty(report)?)?;
    written.push(json_path);
    let jsonl_path = dir.join("raw_runs.jsonl");
    fs::write(&jsonl_path, report.to_jsonl()?)?;
    written.push(jsonl_path);
    let svg_path = dir.join(format!("plot_{}.svg", report.sweep_name()));
    fs::write(&svg_path, report.to_svg())?;
    written.push(svg_path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stats(acc: f64, evals: f64) -> CellStats {
        CellStats {
            runs: 2,
            accuracy: MeanStd {
                mean: acc,
                std: Some(0.01),
            },
            evaluations: MeanStd {
                mean: evals,
                std: Some(1.0),
            },
            rejections: MeanStd {
                mean: 3.0,
                std: Some(0.5),
            },
            wall_time_s: MeanStd {
                mean: 0.1,
                std: Some(0.01),
            },
        }
    }

    fn sample_report() -> AggregateReport {
        AggregateReport {
            space: "tiny-fixture".into(),
            group_by: GroupBy::Target,
            metric: Metric::Accuracy,
            strategies: vec![
                StrategyKind::Vanilla,
                StrategyKind::TopDown,
                StrategyKind::BottomUp,
            ],
            rows: vec![
                AggregateRow {
                    key: 15.0,
                    cells: vec![Some(stats(0.8, 100.0)), Some(stats(0.79, 40.0)), None],
                },
                AggregateRow {
                    key: 20.0,
                    cells: vec![Some(stats(0.82, 100.0)), Some(stats(0.81, 40.0)), None],
                },
            ],
            violations: 0,
            failures: vec![],
            raw_runs: vec![],
        }
    }

    #[test]
    fn csv_header_matches_the_pinned_layout() {
        let report = sample_report();
        let csv = report.to_csv();
        let header = csv.lines().next().unwrap();
        assert_eq!(
            header,
            "latency_ms,vanilla_mean,vanilla_std,topdown_mean,topdown_std,bottomup_mean,bottomup_std"
        );
        // a row: key, then mean/std pairs, empty fields for the dead cell
        assert_eq!(csv.lines().nth(1).unwrap(), "15,0.8,0.01,0.79,0.01,,");
    }

    #[test]
    fn csv_with_no_strategies_is_header_only() {
        let mut report = sample_report();
        report.strategies.clear();
        for row in &mut report.rows {
            row.cells.clear();
        }
        assert_eq!(report.to_csv(), "latency_ms\n15\n20\n");
    }

    #[test]
    fn k_sweep_uses_the_k_column_and_evaluations() {
        let mut report = sample_report();
        report.group_by = GroupBy::K;
        report.metric = Metric::Evaluations;
        let csv = report.to_csv();
        assert!(csv.starts_with("k,"));
        assert!(csv.lines().nth(1).unwrap().starts_with("15,100,1,40,1,,"));
        assert_eq!(report.sweep_name(), "evaluations_by_k");
    }

    #[test]
    fn json_round_trips() {
        let report = sample_report();
        let json = serde_json::to_string(&report).unwrap();
        let back: AggregateReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }

    #[test]
    fn mean_std_uses_the_sample_divisor() {
        let m = MeanStd::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.mean, 2.0);
        assert!((m.std.unwrap() - 1.0).abs() < 1e-12);
        let single = MeanStd::from_samples(&[5.0]).unwrap();
        assert_eq!(single.mean, 5.0);
        assert_eq!(single.std, None);
        assert_eq!(MeanStd::from_samples(&[]), None);
    }

    #[test]
    fn emitted_files_land_in_the_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let report = sample_report();
        let written = emit_report(&report, tmp.path()).unwrap();
        assert_eq!(written.len(), 4);
        for path in &written {
            assert!(path.exists(), "{path:?} missing");
        }
        assert!(tmp.path().join("plot_accuracy_by_target.svg").exists());
        let svg = std::fs::read_to_string(tmp.path().join("plot_accuracy_by_target.svg")).unwrap();
        assert!(svg.starts_with("<svg"));
        assert!(svg.contains("#4c72b0"));
    }

    #[test]
    fn cell_mean_lookup() {
        let report = sample_report();
        assert_eq!(report.cell_mean(15.0, StrategyKind::Vanilla), Some(0.8));
        assert_eq!(report.cell_mean(15.0, StrategyKind::BottomUp), None);
        assert_eq!(report.cell_mean(99.0, StrategyKind::Vanilla), None);
    }
}
