//! Single-target evolutionary search under a hard latency constraint.
//!
//! The constraint is enforced by rejection: whenever a freshly sampled,
//! mutated or crossed-over candidate misses the latency target, that attempt
//! is repeated until one fits (or a cap trips). Rejected candidates are
//! never scored, so the accuracy-evaluation budget depends only on the
//! population size and iteration count, while the rejection counter grows
//! with constraint tightness.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{rank_cmp, AccuracyModel, LatencyModel};
use crate::rng::Rng;
use crate::space::{crossover, mutate, sample_random, ArchitectureConfig, DesignSpace};

/// Knobs of one evolutionary search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    /// Population size kept between iterations.
    #[serde(default = "default_population")]
    pub population_size: usize,
    /// Number of refill generations.
    #[serde(default = "default_iterations")]
    pub num_iterations: u64,
    /// Fraction of the population kept as parents each iteration (ceiled).
    #[serde(default = "default_parent_ratio")]
    pub parent_ratio: f64,
    /// Probability an offspring comes from mutation rather than crossover.
    #[serde(default = "default_mutation_ratio")]
    pub mutation_ratio: f64,
    /// Per-gene resampling probability inside mutation.
    #[serde(default = "default_p_mut")]
    pub p_mut: f64,
    /// Cap on consecutive constraint rejections for one candidate.
    #[serde(default = "default_max_reject")]
    pub max_reject: u64,
}

fn default_population() -> usize {
    100
}
fn default_iterations() -> u64 {
    500
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

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            population_size: default_population(),
            num_iterations: default_iterations(),
            parent_ratio: default_parent_ratio(),
            mutation_ratio: default_mutation_ratio(),
            p_mut: default_p_mut(),
            max_reject: default_max_reject(),
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.population_size < 2 {
            return Err(Error::InvalidParams(
                "population_size must be at least 2".into(),
            ));
        }
        if self.num_iterations < 1 {
            return Err(Error::InvalidParams(
                "num_iterations must be at least 1".into(),
            ));
        }
        if !(self.parent_ratio > 0.0 && self.parent_ratio <= 1.0) {
            return Err(Error::InvalidParams(
                "parent_ratio must lie in (0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.mutation_ratio) {
            return Err(Error::InvalidParams(
                "mutation_ratio must lie in [0, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_mut) {
            return Err(Error::InvalidParams("p_mut must lie in [0, 1]".into()));
        }
        if self.max_reject == 0 {
            return Err(Error::InvalidParams("max_reject must be positive".into()));
        }
        Ok(())
    }

    /// Parents kept per iteration: `ceil(parent_ratio * population_size)`.
    pub fn parent_count(&self) -> usize {
        ((self.parent_ratio * self.population_size as f64).ceil() as usize)
            .clamp(1, self.population_size)
    }

    /// Offspring admitted per iteration.
    pub fn offspring_count(&self) -> usize {
        self.population_size - self.parent_count()
    }

    /// Accuracy evaluations a full run will spend: the initial population
    /// plus one per offspring. Rejected candidates are never scored, so this
    /// is exact regardless of how tight the constraint is.
    pub fn evaluation_budget(&self) -> u64 {
        self.population_size as u64 + self.num_iterations * self.offspring_count() as u64
    }
}

/// A scored member of the population.
#[derive(Debug, Clone, Serialize)]
pub struct Candidate {
    pub config: ArchitectureConfig,
    pub accuracy: f64,
    pub latency_ms: f64,
}

/// Configs injected into the initial population before random filling.
#[derive(Debug, Clone, Default)]
pub struct WarmStart {
    pub seeds: Vec<ArchitectureConfig>,
}

impl WarmStart {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn single(config: ArchitectureConfig) -> Self {
        Self {
            seeds: vec![config],
        }
    }
}

/// Everything a finished search reports.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub best: Candidate,
    pub target_ms: f64,
    /// Accuracy evaluations spent (one per admitted candidate).
    pub evaluations: u64,
    /// Candidates rejected by the latency constraint.
    pub rejections: u64,
    pub iterations_run: u64,
    pub wall_time_s: f64,
    pub seed: u64,
}

/// One line of the optional per-iteration run log.
#[derive(Debug, Clone, Serialize)]
pub struct IterationStat {
    pub iteration: u64,
    pub best_accuracy: f64,
    pub evaluations: u64,
    pub rejections: u64,
}

/// Samples random configs until one fits under `target_ms`, returning the
/// config and the number of rejected draws. Errors after `max_reject`
/// consecutive failures.
pub fn sample_valid(
    space: &DesignSpace,
    lat: &LatencyModel,
    target_ms: f64,
    rng: &mut Rng,
    max_reject: u64,
) -> Result<(ArchitectureConfig, u64)> {
    let mut rejections = 0u64;
    loop {
        let cfg = sample_random(space, rng);
        if lat.latency(&cfg)? <= target_ms {
            return Ok((cfg, rejections));
        }
        rejections += 1;
        if rejections > max_reject {
            return Err(Error::ConstraintTooTight {
                target_ms,
                attempts: rejections,
            });
        }
    }
}

/// Mutates `parent` until the child fits under `target_ms`; same counting
/// and cap as [`sample_valid`].
pub fn mutate_valid(
    parent: &ArchitectureConfig,
    lat: &LatencyModel,
    target_ms: f64,
    p_mut: f64,
    rng: &mut Rng,
    max_reject: u64,
) -> Result<(ArchitectureConfig, u64)> {
    let mut rejections = 0u64;
    loop {
        let cfg = mutate(parent, p_mut, rng);
        if lat.latency(&cfg)? <= target_ms {
            return Ok((cfg, rejections));
        }
        rejections += 1;
        if rejections > max_reject {
            return Err(Error::ConstraintTooTight {
                target_ms,
                attempts: rejections,
            });
        }
    }
}

/// Crosses two distinct parents drawn uniformly from the pool until the
/// child fits; each repeated attempt redraws the pair.
fn crossover_valid(
    pool: &[Candidate],
    lat: &LatencyModel,
    target_ms: f64,
    rng: &mut Rng,
    max_reject: u64,
) -> Result<(ArchitectureConfig, u64)> {
    let mut rejections = 0u64;
    loop {
        let i = rng.index(pool.len());
        let j = if pool.len() == 1 {
            i
        } else {
            loop {
                let j = rng.index(pool.len());
                if j != i {
                    break j;
                }
            }
        };
        let cfg = crossover(&pool[i].config, &pool[j].config, rng)?;
        if lat.latency(&cfg)? <= target_ms {
            return Ok((cfg, rejections));
        }
        rejections += 1;
        if rejections > max_reject {
            return Err(Error::ConstraintTooTight {
                target_ms,
                attempts: rejections,
            });
        }
    }
}

/// Runs one evolutionary search. See [`evolutionary_search_traced`] for the
/// variant that also returns the per-iteration log.
pub fn evolutionary_search(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    target_ms: f64,
    params: &SearchParams,
    warm: &WarmStart,
    seed: u64,
) -> Result<SearchOutcome> {
    evolutionary_search_traced(space, lat, acc, target_ms, params, warm, seed)
        .map(|(outcome, _)| outcome)
}

/// Runs one evolutionary search and returns `(outcome, per-iteration log)`.
///
/// The population starts from the warm-start seeds (truncated at the
/// population size, each checked against the constraint) topped up with
/// rejection-sampled random configs. Every iteration ranks candidates by
/// accuracy (ties: lower latency, then smaller gene vector), keeps the top
/// parents and refills with offspring: mutation of one uniform parent with
/// probability `mutation_ratio`, crossover of two distinct parents
/// otherwise. The reported best is the best candidate ever admitted.
///
/// Identical inputs produce identical outcomes except for `wall_time_s`.
pub fn evolutionary_search_traced(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    target_ms: f64,
    params: &SearchParams,
    warm: &WarmStart,
    seed: u64,
) -> Result<(SearchOutcome, Vec<IterationStat>)> {
    params.validate()?;
    let start = Instant::now();
    let floor = lat.minimal_latency(space)?;
    if target_ms < floor {
        return Err(Error::InfeasibleTarget {
            target_ms,
            minimal_ms: floor,
        });
    }

    let mut rng = Rng::new(seed);
    let mut evaluations = 0u64;
    let mut rejections = 0u64;
    let mut population: Vec<Candidate> = Vec::with_capacity(params.population_size);
    let mut best: Option<Candidate> = None;

    let admit = |config: ArchitectureConfig,
                     latency_ms: f64,
                     evaluations: &mut u64,
                     best: &mut Option<Candidate>|
     -> Candidate {
        assert!(latency_ms <= target_ms, "admitted candidate over target");
        let candidate = Candidate {
            accuracy: acc.predict(&config),
            config,
            latency_ms,
        };
        *evaluations += 1;
        let improves = match best {
            None => true,
            Some(b) => {
                rank_cmp(
                    (candidate.accuracy, candidate.latency_ms, &candidate.config),
                    (b.accuracy, b.latency_ms, &b.config),
                ) == std::cmp::Ordering::Less
            }
        };
        if improves {
            *best = Some(candidate.clone());
        }
        candidate
    };

    for seed_cfg in warm.seeds.iter().take(params.population_size) {
        if seed_cfg.space() != space {
            return Err(Error::InvalidValue(format!(
                "warm-start seed belongs to space `{}`, not `{}`",
                seed_cfg.space().name(),
                space.name()
            )));
        }
        let latency_ms = lat.latency(seed_cfg)?;
        if latency_ms > target_ms {
            return Err(Error::InfeasibleWarmSeed {
                latency_ms,
                target_ms,
            });
        }
        population.push(admit(seed_cfg.clone(), latency_ms, &mut evaluations, &mut best));
    }
    while population.len() < params.population_size {
        let (cfg, rej) = sample_valid(space, lat, target_ms, &mut rng, params.max_reject)?;
        rejections += rej;
        let latency_ms = lat.latency(&cfg)?;
        population.push(admit(cfg, latency_ms, &mut evaluations, &mut best));
    }

    let mut trace = Vec::with_capacity(params.num_iterations as usize);
    for iteration in 1..=params.num_iterations {
        population.sort_unstable_by(|a, b| {
            rank_cmp(
                (a.accuracy, a.latency_ms, &a.config),
                (b.accuracy, b.latency_ms, &b.config),
            )
        });
        population.truncate(params.parent_count());
        for _ in 0..params.offspring_count() {
            let (cfg, rej) = if rng.chance(params.mutation_ratio) {
                let parent = &population[rng.index(params.parent_count())];
                mutate_valid(
                    &parent.config,
                    lat,
                    target_ms,
                    params.p_mut,
                    &mut rng,
                    params.max_reject,
                )?
            } else {
                crossover_valid(
                    &population[..params.parent_count()],
                    lat,
                    target_ms,
                    &mut rng,
                    params.max_reject,
                )?
            };
            rejections += rej;
            let latency_ms = lat.latency(&cfg)?;
            population.push(admit(cfg, latency_ms, &mut evaluations, &mut best));
        }
        let best_now = best.as_ref().expect("population is never empty");
        trace.push(IterationStat {
            iteration,
            best_accuracy: best_now.accuracy,
            evaluations,
            rejections,
        });
    }

    let outcome = SearchOutcome {
        best: best.expect("population is never empty"),
        target_ms,
        evaluations,
        rejections,
        iterations_run: params.num_iterations,
        wall_time_s: start.elapsed().as_secs_f64(),
        seed,
    };
    debug_assert!(outcome.evaluations >= params.population_size as u64);
    Ok((outcome, trace))
}
