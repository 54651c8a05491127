//! Property bodies shared between the randomized suite and the acceptance
//! runner, so both enforce the same invariants.

#![allow(dead_code)]

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use evonas::space::{prune_random_with, DesignSpaceSpec};
use evonas::{
    brute_force_best, crossover, evolutionary_search, mutate, prune_random, prune_to_latency,
    sample_random, AccuracyModel, ArchitectureConfig, DesignSpace, LatencyModel, Rng,
    SearchParams, WarmStart,
};
use proptest::prelude::*;
use proptest::sample::subsequence;
use proptest::test_runner::TestCaseResult;

pub const PRUNE_ROUNDS: u32 = 32;

/// Small random spaces; pools are strictly increasing, so every subsequence
/// is a valid choice list.
pub fn arb_space() -> impl Strategy<Value = DesignSpace> {
    (
        1usize..=3,
        subsequence(vec![0u32, 1, 2, 3], 1..=3),
        subsequence(vec![3u32, 5, 7], 1..=2),
        subsequence(vec![1.0f64, 3.0, 4.0, 6.0], 1..=2),
        subsequence(vec![96u32, 160, 224], 1..=2),
    )
        .prop_map(|(num_units, depths, kernels, expands, resolutions)| {
            DesignSpace::new(DesignSpaceSpec {
                name: "generated".into(),
                num_units,
                depth_choices: depths,
                kernel_choices: kernels,
                expand_choices: expands,
                resolution_choices: resolutions,
            })
            .expect("pool subsequences always validate")
        })
}

fn hash_of(cfg: &ArchitectureConfig) -> u64 {
    let mut h = DefaultHasher::new();
    cfg.hash(&mut h);
    h.finish()
}

/// Round-tripping through the descriptor rebuilds the canonical form, so
/// equality after the trip proves the config was canonical to begin with.
pub fn is_canonical_member(space: &DesignSpace, cfg: &ArchitectureConfig) -> bool {
    cfg.space().name() == space.name()
        && ArchitectureConfig::from_descriptor(space, &cfg.descriptor())
            .map(|rebuilt| rebuilt == *cfg)
            .unwrap_or(false)
}

/// Latency recomputed by an independent walker, same accumulation order.
pub fn walk_latency(lat: &LatencyModel, cfg: &ArchitectureConfig) -> f64 {
    let mut total = lat.overhead_ms();
    for unit in 0..cfg.space().num_units() {
        for slot in 0..cfg.depth(unit) as usize {
            let desc = evonas::estimator::BlockDescriptor {
                unit,
                slot,
                kernel: cfg.kernel(unit, slot),
                expand: cfg.expand(unit, slot),
                resolution: cfg.resolution(),
            };
            total += lat.entry(&desc).expect("tables cover every block");
        }
    }
    total
}

pub fn check_closure(space: DesignSpace, seed: u64, p_mut: f64) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let a = sample_random(&space, &mut rng);
    let b = sample_random(&space, &mut rng);
    prop_assert!(is_canonical_member(&space, &a));
    prop_assert!(is_canonical_member(&space, &b));
    prop_assert!(is_canonical_member(&space, &mutate(&a, p_mut, &mut rng)));
    prop_assert!(is_canonical_member(&space, &crossover(&a, &b, &mut rng).unwrap()));
    prop_assert!(is_canonical_member(&space, &prune_random(&a, &mut rng)));
    let lat = LatencyModel::synthesize(&space, seed, 0.05);
    let floor = lat.minimal_latency(&space).unwrap();
    let fitted = prune_to_latency(&a, floor, &lat, &mut rng, PRUNE_ROUNDS).unwrap();
    prop_assert!(is_canonical_member(&space, &fitted));
    Ok(())
}

pub fn check_mutation_identity(space: DesignSpace, seed: u64) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let cfg = sample_random(&space, &mut rng);
    prop_assert_eq!(mutate(&cfg, 0.0, &mut rng), cfg);
    Ok(())
}

pub fn check_prune_monotone(
    space: DesignSpace,
    seed: u64,
    p_shrink: f64,
    target_frac: f64,
) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let cfg = sample_random(&space, &mut rng);
    let pruned = prune_random_with(&cfg, p_shrink, &mut rng);
    let before = cfg.genes();
    let after = pruned.genes();
    prop_assert!(after.iter().zip(&before).all(|(a, b)| a <= b));
    let lat = LatencyModel::synthesize(&space, seed, 0.05);
    prop_assert!(lat.latency(&pruned).unwrap() <= lat.latency(&cfg).unwrap());

    // target-directed pruning obeys both the gene bound and the target
    let floor = lat.minimal_latency(&space).unwrap();
    let span = lat.latency(&ArchitectureConfig::maximal(&space)).unwrap() - floor;
    let target = floor + target_frac * span;
    let fitted = prune_to_latency(&cfg, target, &lat, &mut rng, PRUNE_ROUNDS).unwrap();
    prop_assert!(fitted.genes().iter().zip(&before).all(|(a, b)| a <= b));
    prop_assert!(lat.latency(&fitted).unwrap() <= target);
    Ok(())
}

pub fn check_determinism(space: DesignSpace, seed: u64, p_mut: f64) -> TestCaseResult {
    let run = || {
        let mut rng = Rng::new(seed);
        let a = sample_random(&space, &mut rng);
        let b = sample_random(&space, &mut rng);
        let m = mutate(&a, p_mut, &mut rng);
        let c = crossover(&a, &b, &mut rng).unwrap();
        let p = prune_random(&a, &mut rng);
        (a, b, m, c, p)
    };
    prop_assert_eq!(run(), run());
    Ok(())
}

pub fn check_equality_canonicalization(space: DesignSpace, seed: u64) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let cfg = sample_random(&space, &mut rng);
    let spec = space.spec();
    let max_depth = space.max_depth();
    // rebuild from flat values, scribbling random (legal) choices over every
    // inactive slot
    let depths: Vec<u32> = (0..space.num_units()).map(|u| cfg.depth(u)).collect();
    let mut kernels = Vec::with_capacity(space.num_units() * max_depth);
    let mut expands = Vec::with_capacity(space.num_units() * max_depth);
    for u in 0..space.num_units() {
        for s in 0..max_depth {
            if cfg.is_active(u, s) {
                kernels.push(cfg.kernel(u, s));
                expands.push(cfg.expand(u, s));
            } else {
                kernels.push(spec.kernel_choices[rng.index(spec.kernel_choices.len())]);
                expands.push(spec.expand_choices[rng.index(spec.expand_choices.len())]);
            }
        }
    }
    let scribbled =
        ArchitectureConfig::from_flat_values(&space, &depths, &kernels, &expands, cfg.resolution())
            .unwrap();
    prop_assert_eq!(&scribbled, &cfg);
    prop_assert_eq!(hash_of(&scribbled), hash_of(&cfg));
    Ok(())
}

pub fn check_latency_additivity(space: DesignSpace, seed: u64) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let cfg = sample_random(&space, &mut rng);
    let lat = LatencyModel::synthesize(&space, seed, 0.05);
    prop_assert_eq!(lat.latency(&cfg).unwrap(), walk_latency(&lat, &cfg));
    Ok(())
}

pub fn check_surrogate_monotone(space: DesignSpace, seed: u64) -> TestCaseResult {
    let mut rng = Rng::new(seed);
    let cfg = sample_random(&space, &mut rng);
    let acc = AccuracyModel {
        interaction_weight: 0.0,
        ..AccuracyModel::with_seed(seed)
    };
    let base = acc.predict(&cfg);
    let spec = space.spec();
    let max_depth = space.max_depth();
    let depths: Vec<u32> = (0..space.num_units()).map(|u| cfg.depth(u)).collect();
    let flat = |u: usize, s: usize| u * max_depth + s;
    let kernels: Vec<u32> = (0..space.num_units())
        .flat_map(|u| (0..max_depth).map(move |s| (u, s)))
        .map(|(u, s)| cfg.kernel(u, s))
        .collect();
    let expands: Vec<f64> = (0..space.num_units())
        .flat_map(|u| (0..max_depth).map(move |s| (u, s)))
        .map(|(u, s)| cfg.expand(u, s))
        .collect();

    // every legal single-gene bump: one step up in depth, kernel or expand of
    // an active slot, or resolution
    let mut bumped: Vec<ArchitectureConfig> = Vec::new();
    for u in 0..space.num_units() {
        let dpos = spec.depth_choices.iter().position(|&d| d == depths[u]).unwrap();
        if dpos + 1 < spec.depth_choices.len() {
            let mut d = depths.clone();
            d[u] = spec.depth_choices[dpos + 1];
            bumped.push(
                ArchitectureConfig::from_flat_values(&space, &d, &kernels, &expands, cfg.resolution())
                    .unwrap(),
            );
        }
        for s in 0..cfg.depth(u) as usize {
            let kpos = spec.kernel_choices.iter().position(|&k| k == kernels[flat(u, s)]).unwrap();
            if kpos + 1 < spec.kernel_choices.len() {
                let mut k = kernels.clone();
                k[flat(u, s)] = spec.kernel_choices[kpos + 1];
                bumped.push(
                    ArchitectureConfig::from_flat_values(&space, &depths, &k, &expands, cfg.resolution())
                        .unwrap(),
                );
            }
            let epos = spec.expand_choices.iter().position(|&e| e == expands[flat(u, s)]).unwrap();
            if epos + 1 < spec.expand_choices.len() {
                let mut e = expands.clone();
                e[flat(u, s)] = spec.expand_choices[epos + 1];
                bumped.push(
                    ArchitectureConfig::from_flat_values(&space, &depths, &kernels, &e, cfg.resolution())
                        .unwrap(),
                );
            }
        }
    }
    let rpos = spec
        .resolution_choices
        .iter()
        .position(|&r| r == cfg.resolution())
        .unwrap();
    if rpos + 1 < spec.resolution_choices.len() {
        bumped.push(
            ArchitectureConfig::from_flat_values(
                &space,
                &depths,
                &kernels,
                &expands,
                spec.resolution_choices[rpos + 1],
            )
            .unwrap(),
        );
    }
    for up in bumped {
        prop_assert!(acc.predict(&up) >= base - 1e-12);
    }
    Ok(())
}

pub fn check_oracle_dominance(seed: u64, target_frac: f64) -> TestCaseResult {
    let space = DesignSpace::preset("tiny-fixture").unwrap();
    let lat = LatencyModel::tiny_fixture(&space);
    let acc = AccuracyModel::default();
    let target = 4.0 + 4.0 * target_frac;
    let oracle = brute_force_best(&space, &lat, &acc, target).unwrap();
    let params = SearchParams {
        population_size: 8,
        num_iterations: 10,
        ..SearchParams::default()
    };
    let found = evolutionary_search(&space, &lat, &acc, target, &params, &WarmStart::none(), seed)
        .unwrap();
    prop_assert!(oracle.best_accuracy >= found.best.accuracy - 1e-12);
    prop_assert!(found.best.latency_ms <= target);
    Ok(())
}

/// Deterministic sweep: best feasible accuracy never falls as the target
/// loosens.
pub fn check_oracle_monotone_in_target() -> Result<(), String> {
    let space = DesignSpace::preset("tiny-fixture").unwrap();
    let lat = LatencyModel::tiny_fixture(&space);
    let acc = AccuracyModel::default();
    let mut last = f64::NEG_INFINITY;
    let mut target = 4.0;
    while target <= 8.0 {
        let oracle = brute_force_best(&space, &lat, &acc, target)
            .map_err(|e| format!("oracle failed at {target} ms: {e}"))?;
        if oracle.best_accuracy < last {
            return Err(format!(
                "best accuracy fell from {last} to {} at {target} ms",
                oracle.best_accuracy
            ));
        }
        last = oracle.best_accuracy;
        target += 0.25;
    }
    Ok(())
}
