//! Latency-constrained evolutionary subnetwork search.
//!
//! The crate models weight-sharing design spaces (per-unit depths, per-slot
//! kernel sizes and expansion ratios, a global input resolution), estimates
//! candidate latency from an additive per-block lookup table and candidate
//! accuracy from a deterministic surrogate, and searches each latency target
//! with a constrained evolutionary loop. When a deployment needs one model
//! per latency target, the multi-target schedulers reuse the optimum of one
//! stage to warm-start the next, cutting the evaluation budget well below
//! running every target cold.
//!
//! Entry points: [`DesignSpace`] for spaces, [`LatencyModel`] /
//! [`AccuracyModel`] for estimators, [`evolutionary_search`] for one target,
//! [`run_strategy`] for a target set, and [`bench`] for full experiment
//! sweeps with CSV/JSON/SVG reports.

#![forbid(unsafe_code)]

pub mod bench;
pub mod cli;
pub mod error;
pub mod estimator;
pub mod multi_target;
pub mod report;
pub mod rng;
pub mod search;
pub mod space;
mod svg;

pub use error::{Error, Result};
pub use estimator::{brute_force_best, AccuracyModel, LatencyModel, OracleResult};
pub use multi_target::{
    run_bottom_up, run_strategy, run_top_down, run_vanilla, MultiTargetOutcome, MultiTargetPlan,
    StrategyKind,
};
pub use rng::{derive_seed, Rng};
pub use search::{
    evolutionary_search, evolutionary_search_traced, sample_valid, Candidate, SearchOutcome,
    SearchParams, WarmStart,
};
pub use space::{
    crossover, enumerate_all, mutate, prune_random, prune_to_latency, sample_random,
    ArchDescriptor, ArchitectureConfig, DesignSpace, DesignSpaceSpec, PRESET_NAMES,
};

#[cfg(doctest)]
mod book_tests {
    //! Keeps the guide's code blocks compiling and passing.
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/design-spaces.md")]
    mod design_spaces {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/strategies.md")]
    mod strategies {}
    #[doc = include_str!("../../../book/src/benchmarking.md")]
    mod benchmarking {}
}
