//! Experiment driver: repeated sweeps over targets, strategies and spaces,
//! aggregated into [`AggregateReport`]s and written out as artifacts.
//!
//! Every run seeds itself from the config seed plus its task coordinates, so
//! a campaign produces identical raw records no matter how many worker
//! threads execute it or in which order the cells finish.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{AccuracyModel, LatencyModel};
use crate::multi_target::{run_strategy, BaseParams, MultiTargetOutcome, MultiTargetPlan, StrategyKind};
use crate::report::{
    emit_report, AggregateReport, AggregateRow, CellFailure, CellStats, GroupBy, MeanStd, Metric,
    RunRecord, TargetRecord,
};
use crate::rng::derive_seed;
use crate::search::SearchOutcome;
use crate::space::{ArchitectureConfig, DesignSpace};

/// A full experiment campaign. Serializable so a JSON file can pin one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Design space presets to sweep; the first one is the default subject
    /// for single-space entry points.
    #[serde(default = "default_spaces")]
    pub spaces: Vec<String>,
    /// Latency targets of the deployment grid, milliseconds.
    #[serde(default = "default_targets")]
    pub targets_ms: Vec<f64>,
    #[serde(default = "default_strategies")]
    pub strategies: Vec<StrategyKind>,
    /// Independent repetitions per cell.
    #[serde(default = "default_repetitions")]
    pub repetitions: u64,
    /// Master seed; per-run seeds derive from it and the task coordinates.
    #[serde(default)]
    pub seed: u64,
    /// Seed of the synthesized latency tables.
    #[serde(default = "default_latency_seed")]
    pub latency_seed: u64,
    #[serde(default)]
    pub accuracy: AccuracyModel,
    /// Iterations of the first (cold) stage of each run.
    #[serde(default = "default_n_first")]
    pub n_first: u64,
    /// Iterations of every warm-started stage.
    #[serde(default = "default_n_rest")]
    pub n_rest: u64,
    #[serde(default)]
    pub search: BaseParams,
    /// Grid sizes for the budget sweep; each k runs on the k largest targets.
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    /// Artifact directory; consumers fall back to `EVONAS_OUT` or `./out`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_spaces() -> Vec<String> {
    vec!["mobilenetv3".into()]
}
fn default_targets() -> Vec<f64> {
    (3..=12).map(|i| 5.0 * i as f64).collect()
}
fn default_strategies() -> Vec<StrategyKind> {
    StrategyKind::ALL.to_vec()
}
fn default_repetitions() -> u64 {
    10
}
fn default_latency_seed() -> u64 {
    1
}
fn default_n_first() -> u64 {
    500
}
fn default_n_rest() -> u64 {
    63
}
fn default_k_values() -> Vec<usize> {
    vec![1, 2, 3, 4, 5, 10]
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.spaces.is_empty() {
            return Err(Error::InvalidParams("space list is empty".into()));
        }
        for name in &self.spaces {
            DesignSpace::preset(name)?;
        }
        if self.repetitions == 0 {
            return Err(Error::InvalidParams("repetitions must be positive".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidParams("strategy list is empty".into()));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(Error::InvalidParams(format!("strategy {s} listed twice")));
            }
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidParams("k value list is empty".into()));
        }
        for (i, &k) in self.k_values.iter().enumerate() {
            if k < 1 || k > self.targets_ms.len() {
                return Err(Error::InvalidParams(format!(
                    "k must lie in 1..={}, got {k}",
                    self.targets_ms.len()
                )));
            }
            if self.k_values[..i].contains(&k) {
                return Err(Error::InvalidParams(format!("k value {k} listed twice")));
            }
        }
        // target and budget checks ride on the plan validator
        self.plan(self.targets_ms.clone(), 0).validate()
    }

    pub fn plan(&self, targets_ms: Vec<f64>, seed: u64) -> MultiTargetPlan {
        MultiTargetPlan {
            targets_ms,
            n_first: self.n_first,
            n_rest: self.n_rest,
            base_params: self.search.clone(),
            seed,
        }
    }

    /// Space and estimator pair for one preset name.
    pub fn models(&self, space_name: &str) -> Result<(DesignSpace, LatencyModel, AccuracyModel)> {
        let space = DesignSpace::preset(space_name)?;
        let lat = LatencyModel::for_space(&space, self.latency_seed);
        Ok((space, lat, self.accuracy.clone()))
    }
}

/// A successful cell: the stable record plus its (unstable) wall times,
/// aligned with `record.per_target`.
struct RunResult {
    record: RunRecord,
    stage_wall_s: Vec<f64>,
}

fn stage_record(o: &SearchOutcome) -> TargetRecord {
    TargetRecord {
        target_ms: o.target_ms,
        accuracy: o.best.accuracy,
        latency_ms: o.best.latency_ms,
        evaluations: o.evaluations,
        rejections: o.rejections,
        iterations: o.iterations_run,
        arch: o.best.config.descriptor(),
    }
}

fn run_result(
    space: &str,
    sweep_key: f64,
    rep: u64,
    plan: &MultiTargetPlan,
    out: &MultiTargetOutcome,
) -> RunResult {
    RunResult {
        record: RunRecord {
            space: space.to_owned(),
            strategy: out.strategy,
            sweep_key,
            rep,
            seed: plan.seed,
            targets_ms: plan.targets_ms.clone(),
            total_evaluations: out.total_evaluations,
            total_rejections: out.total_rejections,
            total_iterations: out.total_iterations(),
            per_target: out.per_target.iter().map(stage_record).collect(),
        },
        stage_wall_s: out.per_target.iter().map(|o| o.wall_time_s).collect(),
    }
}

fn split_results(
    results: Vec<Result<RunResult, CellFailure>>,
) -> (Vec<RunResult>, Vec<CellFailure>) {
    let mut runs = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(run) => runs.push(run),
            Err(fail) => failures.push(fail),
        }
    }
    (runs, failures)
}

#[derive(Default)]
struct Samples {
    accuracy: Vec<f64>,
    evaluations: Vec<f64>,
    rejections: Vec<f64>,
    wall: Vec<f64>,
}

impl Samples {
    fn push(&mut self, accuracy: f64, evaluations: f64, rejections: f64, wall: f64) {
        self.accuracy.push(accuracy);
        self.evaluations.push(evaluations);
        self.rejections.push(rejections);
        self.wall.push(wall);
    }

    fn stats(self) -> Option<CellStats> {
        Some(CellStats {
            runs: self.accuracy.len(),
            accuracy: MeanStd::from_samples(&self.accuracy)?,
            evaluations: MeanStd::from_samples(&self.evaluations)?,
            rejections: MeanStd::from_samples(&self.rejections)?,
            wall_time_s: MeanStd::from_samples(&self.wall)?,
        })
    }
}

/// One row per target, one cell per strategy, samples taken from the stage
/// that ran that exact target.
fn target_rows(targets: &[f64], strategies: &[StrategyKind], runs: &[RunResult]) -> Vec<AggregateRow> {
    targets
        .iter()
        .map(|&t| AggregateRow {
            key: t,
            cells: strategies
                .iter()
                .map(|&s| {
                    let mut samples = Samples::default();
                    for run in runs.iter().filter(|r| r.record.strategy == s) {
                        if let Some(i) =
                            run.record.per_target.iter().position(|p| p.target_ms == t)
                        {
                            let p = &run.record.per_target[i];
                            samples.push(
                                p.accuracy,
                                p.evaluations as f64,
                                p.rejections as f64,
                                run.stage_wall_s[i],
                            );
                        }
                    }
                    samples.stats()
                })
                .collect(),
        })
        .collect()
}

/// Recomputes the latency of every recorded architecture. Counts a
/// violation when it exceeds the stage target or disagrees with the record;
/// either means the admission invariant broke somewhere.
fn verify_records<'a>(
    space: &DesignSpace,
    lat: &LatencyModel,
    records: impl Iterator<Item = &'a TargetRecord>,
) -> Result<u64> {
    let mut violations = 0;
    for rec in records {
        let cfg = ArchitectureConfig::from_descriptor(space, &rec.arch)?;
        let ms = lat.latency(&cfg)?;
        if ms > rec.target_ms || ms != rec.latency_ms {
            violations += 1;
        }
    }
    Ok(violations)
}

/// Accuracy-parity sweep on the first configured space.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<AggregateReport> {
    cfg.validate()?;
    accuracy_sweep(cfg, &cfg.spaces[0])
}

/// Runs every strategy over the full target grid, `repetitions` times, and
/// tabulates per-target best accuracy. Strategies share the per-repetition
/// plan seed, so their rows are paired.
pub fn accuracy_sweep(cfg: &ExperimentConfig, space_name: &str) -> Result<AggregateReport> {
    let (space, lat, acc) = cfg.models(space_name)?;
    let mut targets = cfg.targets_ms.clone();
    targets.sort_by(f64::total_cmp);
    let k = cfg.targets_ms.len() as f64;
    let tasks: Vec<(u64, StrategyKind)> = (0..cfg.repetitions)
        .flat_map(|rep| cfg.strategies.iter().map(move |&s| (rep, s)))
        .collect();
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(rep, strategy)| {
            let plan = cfg.plan(cfg.targets_ms.clone(), derive_seed(cfg.seed, &[rep]));
            match run_strategy(&space, &lat, &acc, &plan, strategy) {
                Ok(out) => Ok(run_result(space_name, k, rep, &plan, &out)),
                Err(e) => Err(CellFailure {
                    strategy,
                    rep,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let (runs, failures) = split_results(results);
    let rows = target_rows(&targets, &cfg.strategies, &runs);
    let violations = verify_records(
        &space,
        &lat,
        runs.iter().flat_map(|r| r.record.per_target.iter()),
    )?;
    Ok(AggregateReport {
        space: space_name.to_owned(),
        group_by: GroupBy::Target,
        metric: Metric::Accuracy,
        strategies: cfg.strategies.clone(),
        rows,
        violations,
        failures,
        raw_runs: runs.into_iter().map(|r| r.record).collect(),
    })
}

/// Budget sweep: for each k, runs every strategy on the k largest targets
/// and tabulates total evaluations. The accuracy column of a cell is the
/// mean best accuracy across the run's targets.
pub fn sweep_k(cfg: &ExperimentConfig, space_name: &str) -> Result<AggregateReport> {
    let (space, lat, acc) = cfg.models(space_name)?;
    let mut grid = cfg.targets_ms.clone();
    grid.sort_by(f64::total_cmp);
    let mut ks = cfg.k_values.clone();
    ks.sort_unstable();
    let tasks: Vec<(usize, u64, StrategyKind)> = ks
        .iter()
        .flat_map(|&k| {
            (0..cfg.repetitions)
                .flat_map(move |rep| cfg.strategies.iter().map(move |&s| (k, rep, s)))
        })
        .collect();
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(k, rep, strategy)| {
            let targets: Vec<f64> = grid[grid.len() - k..].iter().rev().copied().collect();
            let plan = cfg.plan(targets, derive_seed(cfg.seed, &[k as u64, rep]));
            match run_strategy(&space, &lat, &acc, &plan, strategy) {
                Ok(out) => Ok(run_result(space_name, k as f64, rep, &plan, &out)),
                Err(e) => Err(CellFailure {
                    strategy,
                    rep,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let (runs, failures) = split_results(results);
    let rows = ks
        .iter()
        .map(|&k| {
            let key = k as f64;
            AggregateRow {
                key,
                cells: cfg
                    .strategies
                    .iter()
                    .map(|&s| {
                        let mut samples = Samples::default();
                        for run in runs
                            .iter()
                            .filter(|r| r.record.strategy == s && r.record.sweep_key == key)
                        {
                            let stages = &run.record.per_target;
                            let acc_mean = stages.iter().map(|p| p.accuracy).sum::<f64>()
                                / stages.len() as f64;
                            samples.push(
                                acc_mean,
                                run.record.total_evaluations as f64,
                                run.record.total_rejections as f64,
                                run.stage_wall_s.iter().sum(),
                            );
                        }
                        samples.stats()
                    })
                    .collect(),
            }
        })
        .collect();
    let violations = verify_records(
        &space,
        &lat,
        runs.iter().flat_map(|r| r.record.per_target.iter()),
    )?;
    Ok(AggregateReport {
        space: space_name.to_owned(),
        group_by: GroupBy::K,
        metric: Metric::Evaluations,
        strategies: cfg.strategies.clone(),
        rows,
        violations,
        failures,
        raw_runs: runs.into_iter().map(|r| r.record).collect(),
    })
}

/// Constraint-pressure profile: one cold single-target search per (target,
/// repetition), tabulating rejected samples. A single stage has no warm
/// start to differ on, so this always runs plain searches and reports one
/// strategy column.
pub fn single_target_profile(cfg: &ExperimentConfig, space_name: &str) -> Result<AggregateReport> {
    let (space, lat, acc) = cfg.models(space_name)?;
    let mut targets = cfg.targets_ms.clone();
    targets.sort_by(f64::total_cmp);
    let strategies = vec![StrategyKind::Vanilla];
    let tasks: Vec<(usize, u64)> = (0..targets.len())
        .flat_map(|ti| (0..cfg.repetitions).map(move |rep| (ti, rep)))
        .collect();
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(ti, rep)| {
            let plan = cfg.plan(
                vec![targets[ti]],
                derive_seed(cfg.seed, &[ti as u64, rep]),
            );
            match run_strategy(&space, &lat, &acc, &plan, StrategyKind::Vanilla) {
                Ok(out) => Ok(run_result(space_name, targets[ti], rep, &plan, &out)),
                Err(e) => Err(CellFailure {
                    strategy: StrategyKind::Vanilla,
                    rep,
                    message: e.to_string(),
                }),
            }
        })
        .collect();
    let (runs, failures) = split_results(results);
    let rows = target_rows(&targets, &strategies, &runs);
    let violations = verify_records(
        &space,
        &lat,
        runs.iter().flat_map(|r| r.record.per_target.iter()),
    )?;
    Ok(AggregateReport {
        space: space_name.to_owned(),
        group_by: GroupBy::Target,
        metric: Metric::Rejections,
        strategies,
        rows,
        violations,
        failures,
        raw_runs: runs.into_iter().map(|r| r.record).collect(),
    })
}

/// The three reports of one space.
#[derive(Debug, Clone)]
pub struct SpaceReports {
    pub accuracy: AggregateReport,
    pub k_sweep: AggregateReport,
    pub profile: AggregateReport,
}

fn space_reports(cfg: &ExperimentConfig, space_name: &str) -> Result<SpaceReports> {
    Ok(SpaceReports {
        accuracy: accuracy_sweep(cfg, space_name)?,
        k_sweep: sweep_k(cfg, space_name)?,
        profile: single_target_profile(cfg, space_name)?,
    })
}

/// Runs all three sweeps on every configured space.
pub fn sweep_spaces(cfg: &ExperimentConfig) -> Result<Vec<SpaceReports>> {
    cfg.validate()?;
    cfg.spaces.iter().map(|name| space_reports(cfg, name)).collect()
}

/// Headline numbers for one strategy on one space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: StrategyKind,
    /// Largest per-target gap in mean best accuracy to the vanilla baseline;
    /// absent when a needed cell is missing.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_accuracy_gap: Option<f64>,
    /// Mean total evaluations at the largest k, relative to vanilla.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSummary {
    pub space: String,
    pub k_max: usize,
    pub strategies: Vec<StrategySummary>,
    pub tightest_target_ms: f64,
    pub loosest_target_ms: f64,
    /// One-sided sign-test p-value that the tightest target draws more
    /// rejections than the loosest, paired by repetition.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection_sign_test_p: Option<f64>,
    pub violations: u64,
    pub failed_cells: usize,
}

/// What a full pipeline run produced, also written to `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSummary {
    pub config: ExperimentConfig,
    pub spaces: Vec<SpaceSummary>,
}

fn summarize_space(cfg: &ExperimentConfig, reports: &SpaceReports) -> SpaceSummary {
    let mut targets = cfg.targets_ms.clone();
    targets.sort_by(f64::total_cmp);
    let tightest = targets[0];
    let loosest = targets[targets.len() - 1];
    let k_max = cfg.k_values.iter().copied().max().unwrap_or(1);
    let vanilla_evals = reports.k_sweep.cell_mean(k_max as f64, StrategyKind::Vanilla);
    let strategies = cfg
        .strategies
        .iter()
        .map(|&s| {
            let max_accuracy_gap = targets
                .iter()
                .map(|&t| {
                    let own = reports.accuracy.cell_mean(t, s)?;
                    let base = reports.accuracy.cell_mean(t, StrategyKind::Vanilla)?;
                    Some((own - base).abs())
                })
                .try_fold(0f64, |m, gap| gap.map(|g| m.max(g)));
            let evaluation_ratio = match (reports.k_sweep.cell_mean(k_max as f64, s), vanilla_evals)
            {
                (Some(own), Some(base)) if base > 0.0 => Some(own / base),
                _ => None,
            };
            StrategySummary {
                strategy: s,
                max_accuracy_gap,
                evaluation_ratio,
            }
        })
        .collect();
    let pairs: Vec<(f64, f64)> = (0..cfg.repetitions)
        .filter_map(|rep| {
            let at = |key: f64| {
                reports
                    .profile
                    .raw_runs
                    .iter()
                    .find(|r| r.sweep_key == key && r.rep == rep)
                    .map(|r| r.total_rejections as f64)
            };
            Some((at(tightest)?, at(loosest)?))
        })
        .collect();
    SpaceSummary {
        space: reports.accuracy.space.clone(),
        k_max,
        strategies,
        tightest_target_ms: tightest,
        loosest_target_ms: loosest,
        rejection_sign_test_p: sign_test_greater(&pairs),
        violations: reports.accuracy.violations
            + reports.k_sweep.violations
            + reports.profile.violations,
        failed_cells: reports.accuracy.failures.len()
            + reports.k_sweep.failures.len()
            + reports.profile.failures.len(),
    }
}

/// Runs every sweep on every space, writes artifacts under
/// `out_dir/<space>/{accuracy,k_sweep,profile}/` plus `summary.json`, and
/// returns the summary.
pub fn run_pipeline(cfg: &ExperimentConfig, out_dir: &Path) -> Result<PipelineSummary> {
    cfg.validate()?;
    let mut spaces = Vec::new();
    for name in &cfg.spaces {
        let reports = space_reports(cfg, name)?;
        let base = out_dir.join(name);
        emit_report(&reports.accuracy, &base.join("accuracy"))?;
        emit_report(&reports.k_sweep, &base.join("k_sweep"))?;
        emit_report(&reports.profile, &base.join("profile"))?;
        spaces.push(summarize_space(cfg, &reports));
    }
    let summary = PipelineSummary {
        config: cfg.clone(),
        spaces,
    };
    fs::create_dir_all(out_dir)?;
    fs::write(
        out_dir.join("summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// Exact one-sided sign test: p-value of seeing at least the observed number
/// of `x > y` pairs under a fair coin. Ties drop out; `None` when nothing
/// remains (or beyond the exact-arithmetic range of 127 pairs).
pub fn sign_test_greater(pairs: &[(f64, f64)]) -> Option<f64> {
    let mut n = 0u32;
    let mut s = 0u32;
    for &(x, y) in pairs {
        if x > y {
            n += 1;
            s += 1;
        } else if y > x {
            n += 1;
        }
    }
    if n == 0 || n > 127 {
        return None;
    }
    let tail: u128 = (s..=n).map(|i| binomial(n, i)).sum();
    Some(tail as f64 / 2f64.powi(n as i32))
}

// Exact for n <= 127; the factor (n - i) keeps the running product integral.
fn binomial(n: u32, k: u32) -> u128 {
    let k = k.min(n - k);
    let mut c = 1u128;
    for i in 0..k {
        c = c * (n - i) as u128 / (i + 1) as u128;
    }
    c
}
