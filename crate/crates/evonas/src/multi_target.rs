//! Scheduling one search per latency target across a whole target set.
//!
//! Three strategies share the same single-target engine and differ only in
//! processing order, warm-start material and per-stage budget:
//!
//! * `vanilla` runs every target independently at the full budget.
//! * `top-down` sorts targets descending; each later stage is seeded by
//!   randomly pruning the previous optimum until it fits, and runs at the
//!   reduced budget.
//! * `bottom-up` sorts targets ascending; the previous optimum already fits
//!   every later (looser) target and is passed along unchanged.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{AccuracyModel, LatencyModel};
use crate::rng::{derive_seed, Rng};
use crate::search::{evolutionary_search, SearchOutcome, SearchParams, WarmStart};
use crate::space::{prune_to_latency, DesignSpace, DEFAULT_PRUNE_MAX_ROUNDS};

/// Tag mixed into a stage seed to split the pruning stream from the search
/// stream of the same stage.
const PRUNE_TAG: u64 = 0x7072_756e; // "prun"

/// Which multi-target schedule to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Vanilla,
    TopDown,
    BottomUp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Vanilla,
        StrategyKind::TopDown,
        StrategyKind::BottomUp,
    ];

    /// Human-facing label, also the serde spelling.
    pub fn label(&self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::TopDown => "top-down",
            StrategyKind::BottomUp => "bottom-up",
        }
    }

    /// Identifier-safe spelling for CSV columns and file names.
    pub fn csv_slug(&self) -> &'static str {
        match self {
            StrategyKind::Vanilla => "vanilla",
            StrategyKind::TopDown => "topdown",
            StrategyKind::BottomUp => "bottomup",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(StrategyKind::Vanilla),
            "top-down" | "topdown" => Ok(StrategyKind::TopDown),
            "bottom-up" | "bottomup" => Ok(StrategyKind::BottomUp),
            other => Err(Error::InvalidValue(format!(
                "unknown strategy `{other}` (expected vanilla, top-down or bottom-up)"
            ))),
        }
    }
}

/// A multi-target workload: the target set plus the per-stage budgets.
///
/// `n_first` iterations are spent on a cold search, `n_rest` on every
/// warm-started stage. Vanilla ignores `n_rest` and runs every stage cold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiTargetPlan {
    pub targets_ms: Vec<f64>,
    #[serde(default = "default_n_first")]
    pub n_first: u64,
    #[serde(default = "default_n_rest")]
    pub n_rest: u64,
    #[serde(default)]
    pub base_params: BaseParams,
    #[serde(default)]
    pub seed: u64,
}

fn default_n_first() -> u64 {
    500
}
fn default_n_rest() -> u64 {
    63
}

/// [`SearchParams`] minus the iteration count, which the plan owns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseParams {
    #[serde(default = "default_population")]
    pub population_size: usize,
    #[serde(default = "default_parent_ratio")]
    pub parent_ratio: f64,
    #[serde(default = "default_mutation_ratio")]
    pub mutation_ratio: f64,
    #[serde(default = "default_p_mut")]
    pub p_mut: f64,
    #[serde(default = "default_max_reject")]
    pub max_reject: u64,
}

fn default_population() -> usize {
    100
}
fn default_parent_ratio() -> f64 {
    0.25
}
fn default_mutation_ratio() -> f64 {
    0.5
}
fn default_p_mut() -> f64 {
    0.1
}
fn default_max_reject() -> u64 {
    10_000
}

impl Default for BaseParams {
    fn default() -> Self {
        Self {
            population_size: default_population(),
            parent_ratio: default_parent_ratio(),
            mutation_ratio: default_mutation_ratio(),
            p_mut: default_p_mut(),
            max_reject: default_max_reject(),
        }
    }
}

impl BaseParams {
    pub fn with_iterations(&self, num_iterations: u64) -> SearchParams {
        SearchParams {
            population_size: self.population_size,
            num_iterations,
            parent_ratio: self.parent_ratio,
            mutation_ratio: self.mutation_ratio,
            p_mut: self.p_mut,
            max_reject: self.max_reject,
        }
    }
}

impl MultiTargetPlan {
    pub fn new(targets_ms: Vec<f64>, seed: u64) -> Self {
        Self {
            targets_ms,
            n_first: default_n_first(),
            n_rest: default_n_rest(),
            base_params: BaseParams::default(),
            seed,
        }
    }

    /// Switches the warm-stage budget to `ceil(sqrt(n_first))`.
    pub fn with_sqrt_rest(mut self) -> Self {
        self.n_rest = (self.n_first as f64).sqrt().ceil() as u64;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.targets_ms.is_empty() {
            return Err(Error::InvalidParams("target list is empty".into()));
        }
        for &t in &self.targets_ms {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidParams(format!(
                    "latency target must be finite and positive, got {t:?}"
                )));
            }
        }
        let mut sorted = self.targets_ms.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParams("latency targets must be distinct".into()));
        }
        if self.n_rest < 1 || self.n_first < self.n_rest {
            return Err(Error::InvalidParams(
                "budgets must satisfy n_first >= n_rest >= 1".into(),
            ));
        }
        self.base_params.with_iterations(self.n_first).validate()
    }

    /// Total evaluations the plan will spend under `strategy`, closed form.
    pub fn evaluation_budget(&self, strategy: StrategyKind) -> u64 {
        let k = self.targets_ms.len() as u64;
        let first = self.base_params.with_iterations(self.n_first).evaluation_budget();
        let rest = self.base_params.with_iterations(self.n_rest).evaluation_budget();
        match strategy {
            StrategyKind::Vanilla => k * first,
            StrategyKind::TopDown | StrategyKind::BottomUp => first + (k - 1) * rest,
        }
    }
}

/// Results of one multi-target run, stage outcomes in processing order.
#[derive(Debug, Clone, Serialize)]
pub struct MultiTargetOutcome {
    pub strategy: StrategyKind,
    pub per_target: Vec<SearchOutcome>,
    /// Targets in the order the strategy processed them.
    pub order_processed: Vec<f64>,
    pub total_evaluations: u64,
    pub total_rejections: u64,
    pub total_wall_time_s: f64,
}

impl MultiTargetOutcome {
    fn collect(strategy: StrategyKind, per_target: Vec<SearchOutcome>) -> Self {
        Self {
            strategy,
            order_processed: per_target.iter().map(|o| o.target_ms).collect(),
            total_evaluations: per_target.iter().map(|o| o.evaluations).sum(),
            total_rejections: per_target.iter().map(|o| o.rejections).sum(),
            total_wall_time_s: per_target.iter().map(|o| o.wall_time_s).sum(),
            per_target,
        }
    }

    /// Stage outcome for an exact target value, if that target was run.
    pub fn outcome_for(&self, target_ms: f64) -> Option<&SearchOutcome> {
        self.per_target.iter().find(|o| o.target_ms == target_ms)
    }

    pub fn total_iterations(&self) -> u64 {
        self.per_target.iter().map(|o| o.iterations_run).sum()
    }
}

fn stage_seed(plan: &MultiTargetPlan, processed_index: usize) -> u64 {
    derive_seed(plan.seed, &[processed_index as u64])
}

/// Every target cold, full budget, in the given order.
pub fn run_vanilla(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    plan: &MultiTargetPlan,
) -> Result<MultiTargetOutcome> {
    plan.validate()?;
    let params = plan.base_params.with_iterations(plan.n_first);
    let mut per_target = Vec::with_capacity(plan.targets_ms.len());
    for (idx, &target_ms) in plan.targets_ms.iter().enumerate() {
        per_target.push(evolutionary_search(
            space,
            lat,
            acc,
            target_ms,
            &params,
            &WarmStart::none(),
            stage_seed(plan, idx),
        )?);
    }
    Ok(MultiTargetOutcome::collect(StrategyKind::Vanilla, per_target))
}

/// Loosest target first at full budget; each tighter stage is seeded by
/// pruning the previous optimum until it fits and runs at the warm budget.
pub fn run_top_down(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    plan: &MultiTargetPlan,
) -> Result<MultiTargetOutcome> {
    plan.validate()?;
    let mut order = plan.targets_ms.clone();
    order.sort_by(|a, b| f64::total_cmp(b, a));
    let mut per_target: Vec<SearchOutcome> = Vec::with_capacity(order.len());
    for (idx, &target_ms) in order.iter().enumerate() {
        let seed = stage_seed(plan, idx);
        let (params, warm) = match per_target.last() {
            None => (plan.base_params.with_iterations(plan.n_first), WarmStart::none()),
            Some(prev) => {
                let mut prune_rng = Rng::new(derive_seed(seed, &[PRUNE_TAG]));
                let seed_cfg = prune_to_latency(
                    &prev.best.config,
                    target_ms,
                    lat,
                    &mut prune_rng,
                    DEFAULT_PRUNE_MAX_ROUNDS,
                )?;
                (
                    plan.base_params.with_iterations(plan.n_rest),
                    WarmStart::single(seed_cfg),
                )
            }
        };
        per_target.push(evolutionary_search(
            space, lat, acc, target_ms, &params, &warm, seed,
        )?);
    }
    Ok(MultiTargetOutcome::collect(StrategyKind::TopDown, per_target))
}

/// Tightest target first at full budget; each looser stage reuses the
/// previous optimum directly (it satisfies the looser constraint for free)
/// and runs at the warm budget.
pub fn run_bottom_up(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    plan: &MultiTargetPlan,
) -> Result<MultiTargetOutcome> {
    plan.validate()?;
    let mut order = plan.targets_ms.clone();
    order.sort_by(f64::total_cmp);
    let mut per_target: Vec<SearchOutcome> = Vec::with_capacity(order.len());
    for (idx, &target_ms) in order.iter().enumerate() {
        let seed = stage_seed(plan, idx);
        let (params, warm) = match per_target.last() {
            None => (plan.base_params.with_iterations(plan.n_first), WarmStart::none()),
            Some(prev) => (
                plan.base_params.with_iterations(plan.n_rest),
                WarmStart::single(prev.best.config.clone()),
            ),
        };
        per_target.push(evolutionary_search(
            space, lat, acc, target_ms, &params, &warm, seed,
        )?);
        if let [.., prev, last] = per_target.as_slice() {
            // Warm-starting with the previous optimum makes each stage's
            // best at least as accurate as the one before it.
            debug_assert!(last.best.accuracy >= prev.best.accuracy);
        }
    }
    Ok(MultiTargetOutcome::collect(StrategyKind::BottomUp, per_target))
}

/// Dispatches on `strategy`.
pub fn run_strategy(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    plan: &MultiTargetPlan,
    strategy: StrategyKind,
) -> Result<MultiTargetOutcome> {
    match strategy {
        StrategyKind::Vanilla => run_vanilla(space, lat, acc, plan),
        StrategyKind::TopDown => run_top_down(space, lat, acc, plan),
        StrategyKind::BottomUp => run_bottom_up(space, lat, acc, plan),
    }
}
