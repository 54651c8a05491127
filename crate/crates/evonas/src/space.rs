//! Design spaces and the architecture genome.
//!
//! A design space is a grid of per-unit choices: how many blocks each unit
//! stacks (depth), and which kernel size / expansion ratio each block slot
//! uses, plus one global input resolution. A point in the space is an
//! [`ArchitectureConfig`]. Slots beyond a unit's chosen depth are inactive;
//! they are stored at the minimum choice so that two configs that differ
//! only in dead slots compare, hash and serialize identically.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::LatencyModel;
use crate::rng::Rng;

/// Upper bound on [`enumerate_all`] output size.
pub const DEFAULT_ENUMERATION_CAP: u128 = 1_000_000;

/// Per-gene probability that [`prune_random`] steps the gene down one notch.
pub const DEFAULT_PRUNE_STEP_PROBABILITY: f64 = 0.5;

/// Round cap for [`prune_to_latency`].
pub const DEFAULT_PRUNE_MAX_ROUNDS: u32 = 32;

/// Names accepted by [`DesignSpace::preset`].
pub const PRESET_NAMES: [&str; 4] = ["mobilenetv3", "proxylessnas", "resnet50d", "tiny-fixture"];

/// Raw description of a design space. Construct a [`DesignSpace`] to use it;
/// validation happens there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpaceSpec {
    pub name: String,
    pub num_units: usize,
    /// Allowed block counts per unit, strictly increasing.
    pub depth_choices: Vec<u32>,
    /// Allowed kernel sizes per block slot, strictly increasing.
    pub kernel_choices: Vec<u32>,
    /// Allowed expansion (width) ratios per block slot, strictly increasing.
    pub expand_choices: Vec<f64>,
    /// Allowed input resolutions, strictly increasing.
    pub resolution_choices: Vec<u32>,
}

fn check_increasing<T: PartialOrd + fmt::Debug>(what: &str, xs: &[T]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::InvalidSpace(format!("{what} must not be empty")));
    }
    for w in xs.windows(2) {
        if w[0] >= w[1] {
            return Err(Error::InvalidSpace(format!(
                "{what} must be strictly increasing, got {:?} before {:?}",
                w[0], w[1]
            )));
        }
    }
    Ok(())
}

impl DesignSpaceSpec {
    fn validate(&self) -> Result<()> {
        if self.num_units == 0 {
            return Err(Error::InvalidSpace("num_units must be at least 1".into()));
        }
        check_increasing("depth_choices", &self.depth_choices)?;
        check_increasing("kernel_choices", &self.kernel_choices)?;
        check_increasing("expand_choices", &self.expand_choices)?;
        check_increasing("resolution_choices", &self.resolution_choices)?;
        if self.expand_choices.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidSpace("expand_choices must be finite".into()));
        }
        Ok(())
    }
}

/// Validated, cheaply clonable handle to a [`DesignSpaceSpec`].
#[derive(Debug, Clone)]
pub struct DesignSpace {
    inner: Arc<DesignSpaceSpec>,
}

impl DesignSpace {
    pub fn new(spec: DesignSpaceSpec) -> Result<Self> {
        spec.validate()?;
        let mut spec = spec;
        // normalize -0.0 so value equality and bit-level hashing agree
        for x in &mut spec.expand_choices {
            if *x == 0.0 {
                *x = 0.0;
            }
        }
        Ok(Self {
            inner: Arc::new(spec),
        })
    }

    /// Looks up one of the built-in spaces by name.
    pub fn preset(name: &str) -> Result<Self> {
        let spec = match name {
            "mobilenetv3" => DesignSpaceSpec {
                name: "mobilenetv3".into(),
                num_units: 5,
                depth_choices: vec![2, 3, 4],
                kernel_choices: vec![3, 5, 7],
                expand_choices: vec![3.0, 4.0, 6.0],
                resolution_choices: vec![128, 160, 192, 224],
            },
            "proxylessnas" => DesignSpaceSpec {
                name: "proxylessnas".into(),
                num_units: 6,
                depth_choices: vec![2, 3, 4],
                kernel_choices: vec![3, 5, 7],
                expand_choices: vec![3.0, 4.0, 6.0],
                resolution_choices: vec![128, 160, 192, 224],
            },
            "resnet50d" => DesignSpaceSpec {
                name: "resnet50d".into(),
                num_units: 4,
                depth_choices: vec![0, 1, 2],
                kernel_choices: vec![3],
                expand_choices: vec![0.2, 0.25, 0.35],
                resolution_choices: vec![128, 160, 192, 224],
            },
            "tiny-fixture" => DesignSpaceSpec {
                name: "tiny-fixture".into(),
                num_units: 2,
                depth_choices: vec![1, 2],
                kernel_choices: vec![3, 5],
                expand_choices: vec![3.0],
                resolution_choices: vec![128],
            },
            other => {
                return Err(Error::InvalidSpace(format!(
                    "unknown design space `{other}`; presets are {PRESET_NAMES:?}"
                )))
            }
        };
        Self::new(spec)
    }

    pub fn spec(&self) -> &DesignSpaceSpec {
        &self.inner
    }

    pub fn name(&self) -> &str {
        &self.inner.name
    }

    pub fn num_units(&self) -> usize {
        self.inner.num_units
    }

    /// Block slots allocated per unit: the largest depth choice.
    pub fn max_depth(&self) -> usize {
        *self.inner.depth_choices.last().expect("validated nonempty") as usize
    }

    /// Total block slots across all units.
    pub fn total_slots(&self) -> usize {
        self.num_units() * self.max_depth()
    }

    /// Number of distinct configurations, or `None` on overflow.
    ///
    /// Distinctness is counted after canonicalization: for a unit of depth
    /// `d` only the `d` active slots vary, giving `sum_d (K*E)^d` options
    /// per unit, all raised to the number of units and multiplied by the
    /// resolution count.
    pub fn config_count(&self) -> Option<u128> {
        let spec = self.spec();
        let per_slot = (spec.kernel_choices.len() as u128)
            .checked_mul(spec.expand_choices.len() as u128)?;
        let mut per_unit: u128 = 0;
        for &d in &spec.depth_choices {
            per_unit = per_unit.checked_add(per_slot.checked_pow(d)?)?;
        }
        let mut total: u128 = spec.resolution_choices.len() as u128;
        for _ in 0..spec.num_units {
            total = total.checked_mul(per_unit)?;
        }
        Some(total)
    }
}

impl PartialEq for DesignSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

// Choice lists are validated finite, so PartialEq is total here.
impl Eq for DesignSpace {}

impl Hash for DesignSpace {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let spec = self.spec();
        spec.name.hash(state);
        spec.num_units.hash(state);
        spec.depth_choices.hash(state);
        spec.kernel_choices.hash(state);
        for x in &spec.expand_choices {
            x.to_bits().hash(state);
        }
        spec.resolution_choices.hash(state);
    }
}

impl Serialize for DesignSpace {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.spec().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DesignSpace {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let spec = DesignSpaceSpec::deserialize(deserializer)?;
        DesignSpace::new(spec).map_err(serde::de::Error::custom)
    }
}

/// One point in a design space.
///
/// Genes are stored as indices into the space's choice lists: one depth per
/// unit, one kernel and one expand per block slot (row-major by unit), and
/// the resolution. Inactive slots are pinned to index 0.
#[derive(Clone)]
pub struct ArchitectureConfig {
    space: DesignSpace,
    depth_idx: Vec<usize>,
    kernel_idx: Vec<usize>,
    expand_idx: Vec<usize>,
    resolution_idx: usize,
}

/// Plain-data, serializable view of a config: chosen values, active slots
/// only. This is the JSON form used in outcomes and reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchDescriptor {
    pub space: String,
    pub resolution: u32,
    pub depths: Vec<u32>,
    pub kernels: Vec<Vec<u32>>,
    pub expands: Vec<Vec<f64>>,
}

impl ArchitectureConfig {
    /// All genes at their minimum choice.
    pub fn minimal(space: &DesignSpace) -> Self {
        let mut cfg = Self {
            space: space.clone(),
            depth_idx: vec![0; space.num_units()],
            kernel_idx: vec![0; space.total_slots()],
            expand_idx: vec![0; space.total_slots()],
            resolution_idx: 0,
        };
        cfg.canonicalize();
        cfg
    }

    /// All genes at their maximum choice.
    pub fn maximal(space: &DesignSpace) -> Self {
        let spec = space.spec();
        Self {
            space: space.clone(),
            depth_idx: vec![spec.depth_choices.len() - 1; space.num_units()],
            kernel_idx: vec![spec.kernel_choices.len() - 1; space.total_slots()],
            expand_idx: vec![spec.expand_choices.len() - 1; space.total_slots()],
            resolution_idx: spec.resolution_choices.len() - 1,
        }
        // every slot active at max depth, nothing to canonicalize
    }

    /// Builds a config from flat chosen values. `kernels` and `expands` list
    /// one value per slot (unit-major, `num_units * max_depth` long); values
    /// in inactive slots are accepted and canonicalized away.
    pub fn from_flat_values(
        space: &DesignSpace,
        depths: &[u32],
        kernels: &[u32],
        expands: &[f64],
        resolution: u32,
    ) -> Result<Self> {
        let spec = space.spec();
        if depths.len() != space.num_units() {
            return Err(Error::InvalidValue(format!(
                "expected {} depths, got {}",
                space.num_units(),
                depths.len()
            )));
        }
        if kernels.len() != space.total_slots() || expands.len() != space.total_slots() {
            return Err(Error::InvalidValue(format!(
                "expected {} slot values, got {} kernels / {} expands",
                space.total_slots(),
                kernels.len(),
                expands.len()
            )));
        }
        let find_u32 = |what: &str, list: &[u32], v: u32| -> Result<usize> {
            list.iter().position(|&c| c == v).ok_or_else(|| {
                Error::InvalidValue(format!("{what} {v} is not one of {list:?}"))
            })
        };
        let mut cfg = Self {
            space: space.clone(),
            depth_idx: depths
                .iter()
                .map(|&d| find_u32("depth", &spec.depth_choices, d))
                .collect::<Result<_>>()?,
            kernel_idx: kernels
                .iter()
                .map(|&k| find_u32("kernel", &spec.kernel_choices, k))
                .collect::<Result<_>>()?,
            expand_idx: expands
                .iter()
                .map(|&e| {
                    spec.expand_choices.iter().position(|&c| c == e).ok_or_else(|| {
                        Error::InvalidValue(format!(
                            "expand {e:?} is not one of {:?}",
                            spec.expand_choices
                        ))
                    })
                })
                .collect::<Result<_>>()?,
            resolution_idx: find_u32("resolution", &spec.resolution_choices, resolution)?,
        };
        cfg.canonicalize();
        Ok(cfg)
    }

    /// Rebuilds a config from its serialized descriptor form.
    pub fn from_descriptor(space: &DesignSpace, d: &ArchDescriptor) -> Result<Self> {
        if d.space != space.name() {
            return Err(Error::InvalidValue(format!(
                "descriptor belongs to space `{}`, not `{}`",
                d.space,
                space.name()
            )));
        }
        if d.kernels.len() != d.depths.len() || d.expands.len() != d.depths.len() {
            return Err(Error::InvalidValue(
                "descriptor unit lists have mismatched lengths".into(),
            ));
        }
        let max_depth = space.max_depth();
        let mut kernels = vec![space.spec().kernel_choices[0]; space.total_slots()];
        let mut expands = vec![space.spec().expand_choices[0]; space.total_slots()];
        for (u, &depth) in d.depths.iter().enumerate() {
            let (ks, es) = (&d.kernels[u], &d.expands[u]);
            if ks.len() != depth as usize || es.len() != depth as usize {
                return Err(Error::InvalidValue(format!(
                    "unit {u} declares depth {depth} but lists {} kernels / {} expands",
                    ks.len(),
                    es.len()
                )));
            }
            for s in 0..depth as usize {
                kernels[u * max_depth + s] = ks[s];
                expands[u * max_depth + s] = es[s];
            }
        }
        Self::from_flat_values(space, &d.depths, &kernels, &expands, d.resolution)
    }

    pub fn space(&self) -> &DesignSpace {
        &self.space
    }

    pub fn depth(&self, unit: usize) -> u32 {
        self.space.spec().depth_choices[self.depth_idx[unit]]
    }

    pub fn kernel(&self, unit: usize, slot: usize) -> u32 {
        self.space.spec().kernel_choices[self.kernel_idx[self.slot_pos(unit, slot)]]
    }

    pub fn expand(&self, unit: usize, slot: usize) -> f64 {
        self.space.spec().expand_choices[self.expand_idx[self.slot_pos(unit, slot)]]
    }

    pub fn resolution(&self) -> u32 {
        self.space.spec().resolution_choices[self.resolution_idx]
    }

    /// Whether `slot` of `unit` is below the unit's chosen depth.
    pub fn is_active(&self, unit: usize, slot: usize) -> bool {
        slot < self.depth(unit) as usize
    }

    pub fn active_slot_count(&self) -> usize {
        (0..self.space.num_units()).map(|u| self.depth(u) as usize).sum()
    }

    fn slot_pos(&self, unit: usize, slot: usize) -> usize {
        debug_assert!(slot < self.space.max_depth());
        unit * self.space.max_depth() + slot
    }

    /// Resets every inactive slot to choice index 0.
    fn canonicalize(&mut self) {
        let max_depth = self.space.max_depth();
        for u in 0..self.space.num_units() {
            for s in self.depth(u) as usize..max_depth {
                self.kernel_idx[u * max_depth + s] = 0;
                self.expand_idx[u * max_depth + s] = 0;
            }
        }
    }

    /// Canonical gene vector: depths, kernels, expands (unit-major), then
    /// resolution. Lexicographic order on this vector is the config tie-break
    /// order used throughout the crate.
    pub fn genes(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.depth_idx.len() + 2 * self.kernel_idx.len() + 1);
        out.extend_from_slice(&self.depth_idx);
        out.extend_from_slice(&self.kernel_idx);
        out.extend_from_slice(&self.expand_idx);
        out.push(self.resolution_idx);
        out
    }

    /// Lexicographic comparison of canonical gene vectors, allocation-free.
    pub fn cmp_genes(&self, other: &Self) -> std::cmp::Ordering {
        self.depth_idx
            .cmp(&other.depth_idx)
            .then_with(|| self.kernel_idx.cmp(&other.kernel_idx))
            .then_with(|| self.expand_idx.cmp(&other.expand_idx))
            .then_with(|| self.resolution_idx.cmp(&other.resolution_idx))
    }

    /// Mean position of the genes inside their choice lists, in `[0, 1]`.
    ///
    /// Every gene of the canonical vector contributes `index / (count - 1)`;
    /// single-choice dimensions contribute 1. Inactive slots sit at index 0.
    pub fn utilization(&self) -> f64 {
        let spec = self.space.spec();
        let frac = |idx: usize, count: usize| -> f64 {
            if count == 1 {
                1.0
            } else {
                idx as f64 / (count - 1) as f64
            }
        };
        let mut sum = 0.0;
        let mut n = 0usize;
        for &d in &self.depth_idx {
            sum += frac(d, spec.depth_choices.len());
            n += 1;
        }
        for &k in &self.kernel_idx {
            sum += frac(k, spec.kernel_choices.len());
            n += 1;
        }
        for &e in &self.expand_idx {
            sum += frac(e, spec.expand_choices.len());
            n += 1;
        }
        sum += frac(self.resolution_idx, spec.resolution_choices.len());
        n += 1;
        sum / n as f64
    }

    /// True when every gene sits at its minimum choice.
    pub fn is_minimal(&self) -> bool {
        self.resolution_idx == 0
            && self.depth_idx.iter().all(|&d| d == 0)
            && self.kernel_idx.iter().all(|&k| k == 0)
            && self.expand_idx.iter().all(|&e| e == 0)
    }

    pub fn descriptor(&self) -> ArchDescriptor {
        ArchDescriptor {
            space: self.space.name().to_owned(),
            resolution: self.resolution(),
            depths: (0..self.space.num_units()).map(|u| self.depth(u)).collect(),
            kernels: (0..self.space.num_units())
                .map(|u| (0..self.depth(u) as usize).map(|s| self.kernel(u, s)).collect())
                .collect(),
            expands: (0..self.space.num_units())
                .map(|u| (0..self.depth(u) as usize).map(|s| self.expand(u, s)).collect())
                .collect(),
        }
    }
}

impl PartialEq for ArchitectureConfig {
    fn eq(&self, other: &Self) -> bool {
        // stored form is canonical, so inactive slots can never disagree
        self.space == other.space
            && self.resolution_idx == other.resolution_idx
            && self.depth_idx == other.depth_idx
            && self.kernel_idx == other.kernel_idx
            && self.expand_idx == other.expand_idx
    }
}

impl Eq for ArchitectureConfig {}

impl Hash for ArchitectureConfig {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.space.name().hash(state);
        self.depth_idx.hash(state);
        self.kernel_idx.hash(state);
        self.expand_idx.hash(state);
        self.resolution_idx.hash(state);
    }
}

impl fmt::Debug for ArchitectureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ArchitectureConfig({:?})", self.descriptor())
    }
}

impl Serialize for ArchitectureConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.descriptor().serialize(serializer)
    }
}

/// Draws every dimension independently and uniformly from its choice list.
///
/// Note the distribution is uniform per dimension, not uniform over distinct
/// configs: a unit at depth 1 absorbs all draws of its dead slots.
pub fn sample_random(space: &DesignSpace, rng: &mut Rng) -> ArchitectureConfig {
    let spec = space.spec();
    let mut cfg = ArchitectureConfig {
        space: space.clone(),
        depth_idx: (0..space.num_units())
            .map(|_| rng.index(spec.depth_choices.len()))
            .collect(),
        kernel_idx: (0..space.total_slots())
            .map(|_| rng.index(spec.kernel_choices.len()))
            .collect(),
        expand_idx: (0..space.total_slots())
            .map(|_| rng.index(spec.expand_choices.len()))
            .collect(),
        resolution_idx: rng.index(spec.resolution_choices.len()),
    };
    cfg.canonicalize();
    cfg
}

/// Resamples each gene independently with probability `p_mut`.
///
/// The gene set is taken from the input config: unit depths, kernel and
/// expand of slots active in the input, and the resolution. Slots activated
/// by a depth increase come in at the minimum choice.
pub fn mutate(arch: &ArchitectureConfig, p_mut: f64, rng: &mut Rng) -> ArchitectureConfig {
    assert!((0.0..=1.0).contains(&p_mut), "p_mut must lie in [0, 1]");
    let spec = arch.space.spec();
    let max_depth = arch.space.max_depth();
    let mut out = arch.clone();
    for u in 0..arch.space.num_units() {
        if rng.chance(p_mut) {
            out.depth_idx[u] = rng.index(spec.depth_choices.len());
        }
    }
    for u in 0..arch.space.num_units() {
        for s in 0..arch.depth(u) as usize {
            let pos = u * max_depth + s;
            if rng.chance(p_mut) {
                out.kernel_idx[pos] = rng.index(spec.kernel_choices.len());
            }
            if rng.chance(p_mut) {
                out.expand_idx[pos] = rng.index(spec.expand_choices.len());
            }
        }
    }
    if rng.chance(p_mut) {
        out.resolution_idx = rng.index(spec.resolution_choices.len());
    }
    out.canonicalize();
    out
}

/// Uniform crossover: each gene of the child comes from either parent with
/// probability 1/2. Errors when the parents live in different spaces.
pub fn crossover(
    a: &ArchitectureConfig,
    b: &ArchitectureConfig,
    rng: &mut Rng,
) -> Result<ArchitectureConfig> {
    if a.space != b.space {
        return Err(Error::IncompatibleParents {
            left: a.space.name().to_owned(),
            right: b.space.name().to_owned(),
        });
    }
    let mut out = a.clone();
    for u in 0..out.depth_idx.len() {
        if rng.chance(0.5) {
            out.depth_idx[u] = b.depth_idx[u];
        }
    }
    for pos in 0..out.kernel_idx.len() {
        if rng.chance(0.5) {
            out.kernel_idx[pos] = b.kernel_idx[pos];
        }
    }
    for pos in 0..out.expand_idx.len() {
        if rng.chance(0.5) {
            out.expand_idx[pos] = b.expand_idx[pos];
        }
    }
    if rng.chance(0.5) {
        out.resolution_idx = b.resolution_idx;
    }
    out.canonicalize();
    Ok(out)
}

/// One randomized shrink pass with the default step probability (0.5).
///
/// Every gene independently moves one step down its choice list with that
/// probability; nothing ever moves up, so the result is elementwise <= the
/// input. Unless the input already sits at the all-minimum floor, the pass
/// is redrawn until at least one gene actually moved.
pub fn prune_random(arch: &ArchitectureConfig, rng: &mut Rng) -> ArchitectureConfig {
    prune_random_with(arch, DEFAULT_PRUNE_STEP_PROBABILITY, rng)
}

/// [`prune_random`] with an explicit step probability.
pub fn prune_random_with(
    arch: &ArchitectureConfig,
    p_shrink: f64,
    rng: &mut Rng,
) -> ArchitectureConfig {
    assert!((0.0..=1.0).contains(&p_shrink), "p_shrink must lie in [0, 1]");
    if arch.is_minimal() || p_shrink == 0.0 {
        return arch.clone();
    }
    const MAX_PASSES: u32 = 64;
    for _ in 0..MAX_PASSES {
        let out = prune_pass(arch, p_shrink, rng);
        if out != *arch {
            return out;
        }
    }
    // Vanishingly unlikely fallback (p >= 1/2 of escaping per pass): force
    // the first non-minimal gene down a step so the contract still holds.
    let mut out = arch.clone();
    let max_depth = arch.space.max_depth();
    if let Some(u) = out.depth_idx.iter().position(|&d| d > 0) {
        out.depth_idx[u] -= 1;
    } else if let Some(pos) = (0..out.kernel_idx.len())
        .find(|&p| arch.is_active(p / max_depth, p % max_depth) && out.kernel_idx[p] > 0)
    {
        out.kernel_idx[pos] -= 1;
    } else if let Some(pos) = (0..out.expand_idx.len())
        .find(|&p| arch.is_active(p / max_depth, p % max_depth) && out.expand_idx[p] > 0)
    {
        out.expand_idx[pos] -= 1;
    } else {
        out.resolution_idx -= 1;
    }
    out.canonicalize();
    out
}

fn prune_pass(arch: &ArchitectureConfig, p_shrink: f64, rng: &mut Rng) -> ArchitectureConfig {
    let mut out = arch.clone();
    for u in 0..arch.space.num_units() {
        if rng.chance(p_shrink) {
            out.depth_idx[u] = out.depth_idx[u].saturating_sub(1);
        }
    }
    let max_depth = arch.space.max_depth();
    for u in 0..arch.space.num_units() {
        for s in 0..arch.depth(u) as usize {
            let pos = u * max_depth + s;
            if rng.chance(p_shrink) {
                out.kernel_idx[pos] = out.kernel_idx[pos].saturating_sub(1);
            }
            if rng.chance(p_shrink) {
                out.expand_idx[pos] = out.expand_idx[pos].saturating_sub(1);
            }
        }
    }
    if rng.chance(p_shrink) {
        out.resolution_idx = out.resolution_idx.saturating_sub(1);
    }
    out.canonicalize();
    out
}

/// Shrinks `arch` until its latency fits under `target_ms`.
///
/// Applies [`prune_random`] up to `max_rounds` times, each round on the
/// previous result, returning as soon as the constraint holds. When the
/// rounds run out the all-minimum config is returned. Errors when even that
/// floor config misses the target.
pub fn prune_to_latency(
    arch: &ArchitectureConfig,
    target_ms: f64,
    lat: &LatencyModel,
    rng: &mut Rng,
    max_rounds: u32,
) -> Result<ArchitectureConfig> {
    assert!(max_rounds >= 1, "max_rounds must be at least 1");
    let minimal = ArchitectureConfig::minimal(&arch.space);
    let floor = lat.latency(&minimal)?;
    if target_ms < floor {
        return Err(Error::InfeasibleTarget {
            target_ms,
            minimal_ms: floor,
        });
    }
    let mut cur = arch.clone();
    for _ in 0..max_rounds {
        cur = prune_random(&cur, rng);
        if lat.latency(&cur)? <= target_ms {
            return Ok(cur);
        }
    }
    Ok(minimal)
}

/// Enumerates every distinct configuration with the default cap.
pub fn enumerate_all(space: &DesignSpace) -> Result<Vec<ArchitectureConfig>> {
    enumerate_all_with_cap(space, DEFAULT_ENUMERATION_CAP)
}

/// Enumerates every distinct configuration, erroring when the space holds
/// more than `cap` of them.
pub fn enumerate_all_with_cap(space: &DesignSpace, cap: u128) -> Result<Vec<ArchitectureConfig>> {
    let count = space.config_count().unwrap_or(u128::MAX);
    if count > cap {
        return Err(Error::SpaceTooLarge { count, cap });
    }
    let spec = space.spec();
    let max_depth = space.max_depth();
    let mut out = Vec::with_capacity(count as usize);
    let mut cfg = ArchitectureConfig::minimal(space);

    // Depth-first walk: per unit pick a depth and an assignment for its
    // active slots, then a resolution at the leaves. Stored form stays
    // canonical because inactive slots are simply never touched.
    fn walk(
        spec: &DesignSpaceSpec,
        max_depth: usize,
        unit: usize,
        cfg: &mut ArchitectureConfig,
        out: &mut Vec<ArchitectureConfig>,
    ) {
        if unit == spec.num_units {
            for r in 0..spec.resolution_choices.len() {
                cfg.resolution_idx = r;
                out.push(cfg.clone());
            }
            cfg.resolution_idx = 0;
            return;
        }
        for d_idx in 0..spec.depth_choices.len() {
            cfg.depth_idx[unit] = d_idx;
            let active = spec.depth_choices[d_idx] as usize;
            fn slots(
                spec: &DesignSpaceSpec,
                max_depth: usize,
                unit: usize,
                slot: usize,
                active: usize,
                cfg: &mut ArchitectureConfig,
                out: &mut Vec<ArchitectureConfig>,
            ) {
                if slot == active {
                    walk(spec, max_depth, unit + 1, cfg, out);
                    return;
                }
                let pos = unit * max_depth + slot;
                for k in 0..spec.kernel_choices.len() {
                    for e in 0..spec.expand_choices.len() {
                        cfg.kernel_idx[pos] = k;
                        cfg.expand_idx[pos] = e;
                        slots(spec, max_depth, unit, slot + 1, active, cfg, out);
                    }
                }
                cfg.kernel_idx[pos] = 0;
                cfg.expand_idx[pos] = 0;
            }
            slots(spec, max_depth, unit, 0, active, cfg, out);
        }
        cfg.depth_idx[unit] = 0;
    }
    walk(spec, max_depth, 0, &mut cfg, &mut out);
    debug_assert_eq!(out.len() as u128, count);
    Ok(out)
}
