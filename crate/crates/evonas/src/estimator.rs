//! Latency tables and the surrogate accuracy predictor.
//!
//! Latency is additive: a fixed overhead plus one table entry per active
//! block slot, the classic lookup-table device that makes a hard latency
//! constraint cheap to check millions of times. Accuracy comes from a
//! deterministic surrogate with a smooth saturating backbone and a small
//! seeded interaction term, so experiments are exactly reproducible and
//! tiny spaces can be checked against exhaustive enumeration.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{mix, Rng};
use crate::space::{enumerate_all, ArchitectureConfig, DesignSpace};

/// Fixed overhead used by synthesized tables.
pub const DEFAULT_OVERHEAD_MS: f64 = 1.0;

/// Calibration target: the maximal config of a synthesized table lands here.
pub const DEFAULT_MAX_LATENCY_MS: f64 = 60.0;

/// Key of one latency table entry.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BlockDescriptor {
    pub unit: usize,
    pub slot: usize,
    pub kernel: u32,
    pub expand: f64,
    pub resolution: u32,
}

impl PartialEq for BlockDescriptor {
    fn eq(&self, other: &Self) -> bool {
        self.unit == other.unit
            && self.slot == other.slot
            && self.kernel == other.kernel
            && self.expand.to_bits() == other.expand.to_bits()
            && self.resolution == other.resolution
    }
}

impl Eq for BlockDescriptor {}

impl Hash for BlockDescriptor {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.unit.hash(state);
        self.slot.hash(state);
        self.kernel.hash(state);
        self.expand.to_bits().hash(state);
        self.resolution.hash(state);
    }
}

impl fmt::Display for BlockDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "block (unit {}, slot {}, kernel {}, expand {:?}, resolution {})",
            self.unit, self.slot, self.kernel, self.expand, self.resolution
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LatencyEntry {
    unit: usize,
    slot: usize,
    kernel: u32,
    expand: f64,
    resolution: u32,
    ms: f64,
}

/// Additive per-block latency lookup table.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LatencyModelJson", into = "LatencyModelJson")]
pub struct LatencyModel {
    overhead_ms: f64,
    table: HashMap<BlockDescriptor, f64>,
}

#[derive(Serialize, Deserialize)]
struct LatencyModelJson {
    overhead_ms: f64,
    entries: Vec<LatencyEntry>,
}

impl From<LatencyModel> for LatencyModelJson {
    fn from(m: LatencyModel) -> Self {
        let mut entries: Vec<LatencyEntry> = m
            .table
            .iter()
            .map(|(d, &ms)| LatencyEntry {
                unit: d.unit,
                slot: d.slot,
                kernel: d.kernel,
                expand: d.expand,
                resolution: d.resolution,
                ms,
            })
            .collect();
        entries.sort_by(|a, b| {
            (a.unit, a.slot, a.kernel, a.resolution)
                .cmp(&(b.unit, b.slot, b.kernel, b.resolution))
                .then(a.expand.total_cmp(&b.expand))
        });
        LatencyModelJson {
            overhead_ms: m.overhead_ms,
            entries,
        }
    }
}

impl TryFrom<LatencyModelJson> for LatencyModel {
    type Error = Error;
    fn try_from(j: LatencyModelJson) -> Result<Self> {
        LatencyModel::new(
            j.overhead_ms,
            j.entries.into_iter().map(|e| {
                (
                    BlockDescriptor {
                        unit: e.unit,
                        slot: e.slot,
                        kernel: e.kernel,
                        expand: e.expand,
                        resolution: e.resolution,
                    },
                    e.ms,
                )
            }),
        )
    }
}

impl LatencyModel {
    /// Builds a table, checking that entries are nonnegative and that for a
    /// fixed (unit, slot, resolution) a larger kernel or expand never gets
    /// cheaper.
    pub fn new(
        overhead_ms: f64,
        entries: impl IntoIterator<Item = (BlockDescriptor, f64)>,
    ) -> Result<Self> {
        if !overhead_ms.is_finite() || overhead_ms < 0.0 {
            return Err(Error::InvalidValue(format!(
                "overhead must be nonnegative, got {overhead_ms:?}"
            )));
        }
        let mut table = HashMap::new();
        for (desc, ms) in entries {
            if !ms.is_finite() || ms < 0.0 {
                return Err(Error::InvalidValue(format!(
                    "latency of {desc} must be finite and nonnegative, got {ms:?}"
                )));
            }
            table.insert(desc, ms);
        }
        let model = Self { overhead_ms, table };
        model.check_monotone()?;
        Ok(model)
    }

    fn check_monotone(&self) -> Result<()> {
        // (kernel, expand, ms) rows per (unit, slot, resolution)
        type Rows = Vec<(u32, f64, f64)>;
        let mut groups: HashMap<(usize, usize, u32), Rows> = HashMap::new();
        for (d, &ms) in &self.table {
            groups
                .entry((d.unit, d.slot, d.resolution))
                .or_default()
                .push((d.kernel, d.expand, ms));
        }
        for ((unit, slot, resolution), rows) in groups {
            for a in &rows {
                for b in &rows {
                    if a.0 <= b.0 && a.1 <= b.1 && a.2 > b.2 {
                        return Err(Error::InvalidValue(format!(
                            "latency not monotone at unit {unit}, slot {slot}, \
                             resolution {resolution}: kernel {} expand {:?} costs {:?} ms \
                             but kernel {} expand {:?} costs {:?} ms",
                            a.0, a.1, a.2, b.0, b.1, b.2
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn overhead_ms(&self) -> f64 {
        self.overhead_ms
    }

    pub fn entry(&self, desc: &BlockDescriptor) -> Option<f64> {
        self.table.get(desc).copied()
    }

    /// Predicted latency: overhead plus the entries of all active slots,
    /// accumulated in ascending (unit, slot) order.
    pub fn latency(&self, arch: &ArchitectureConfig) -> Result<f64> {
        let mut total = self.overhead_ms;
        let resolution = arch.resolution();
        for unit in 0..arch.space().num_units() {
            for slot in 0..arch.depth(unit) as usize {
                let desc = BlockDescriptor {
                    unit,
                    slot,
                    kernel: arch.kernel(unit, slot),
                    expand: arch.expand(unit, slot),
                    resolution,
                };
                total += self
                    .table
                    .get(&desc)
                    .copied()
                    .ok_or_else(|| Error::IncompleteTable(desc.to_string()))?;
            }
        }
        Ok(total)
    }

    /// Latency of the all-minimum config; the feasibility floor of a space.
    pub fn minimal_latency(&self, space: &DesignSpace) -> Result<f64> {
        self.latency(&ArchitectureConfig::minimal(space))
    }

    /// Synthesizes a table from a compute proxy: each entry is
    /// `scale_ms * expand * kernel^2 * (resolution / 224)^2`, jittered by a
    /// seeded per-(unit, slot) factor in `[0.8, 1.2]`. Monotone in every
    /// dimension by construction.
    pub fn synthesize(space: &DesignSpace, seed: u64, scale_ms: f64) -> Self {
        let spec = space.spec();
        let mut rng = Rng::new(seed);
        let mut table = HashMap::new();
        for unit in 0..spec.num_units {
            for slot in 0..space.max_depth() {
                let jitter = 0.8 + 0.4 * rng.f64();
                for &kernel in &spec.kernel_choices {
                    for &expand in &spec.expand_choices {
                        for &resolution in &spec.resolution_choices {
                            let r = resolution as f64 / 224.0;
                            let ms = scale_ms
                                * expand
                                * (kernel as f64).powi(2)
                                * r.powi(2)
                                * jitter;
                            table.insert(
                                BlockDescriptor {
                                    unit,
                                    slot,
                                    kernel,
                                    expand,
                                    resolution,
                                },
                                ms,
                            );
                        }
                    }
                }
            }
        }
        Self {
            overhead_ms: DEFAULT_OVERHEAD_MS,
            table,
        }
    }

    /// Synthesizes a table whose maximal config lands on `max_ms`.
    pub fn calibrated(space: &DesignSpace, seed: u64, max_ms: f64) -> Self {
        assert!(
            max_ms > DEFAULT_OVERHEAD_MS,
            "calibration target must exceed the overhead"
        );
        let probe = Self::synthesize(space, seed, 1.0);
        let max = ArchitectureConfig::maximal(space);
        let span = probe
            .latency(&max)
            .expect("synthesized tables are complete")
            - probe.overhead_ms;
        if span == 0.0 {
            // zero-cost corner (e.g. every depth choice is 0); keep unit scale
            return probe;
        }
        Self::synthesize(space, seed, (max_ms - DEFAULT_OVERHEAD_MS) / span)
    }

    /// Default table for a named space: the tiny fixture gets its fixed
    /// hand-written table, everything else a calibrated synthesized one.
    pub fn for_space(space: &DesignSpace, seed: u64) -> Self {
        if space.name() == "tiny-fixture" {
            Self::tiny_fixture(space)
        } else {
            Self::calibrated(space, seed, DEFAULT_MAX_LATENCY_MS)
        }
    }

    /// Fixed table for the tiny fixture space: 2.0 ms overhead, 1.0 ms per
    /// kernel-3 block and 1.5 ms per kernel-5 block, identical across units
    /// and slots. Floor 4.0 ms, ceiling 8.0 ms.
    pub fn tiny_fixture(space: &DesignSpace) -> Self {
        let spec = space.spec();
        let mut table = HashMap::new();
        for unit in 0..spec.num_units {
            for slot in 0..space.max_depth() {
                for &kernel in &spec.kernel_choices {
                    for &expand in &spec.expand_choices {
                        for &resolution in &spec.resolution_choices {
                            let ms = if kernel <= 3 { 1.0 } else { 1.5 };
                            table.insert(
                                BlockDescriptor {
                                    unit,
                                    slot,
                                    kernel,
                                    expand,
                                    resolution,
                                },
                                ms,
                            );
                        }
                    }
                }
            }
        }
        Self {
            overhead_ms: 2.0,
            table,
        }
    }
}

/// Deterministic surrogate accuracy predictor.
///
/// `predict = clamp(base + amplitude * (1 - exp(-saturation_rate * u)) +
/// interaction_weight * h, 0, 1)` where `u` is the config's mean gene
/// position (see [`ArchitectureConfig::utilization`]) and `h` in `[-1, 1]`
/// is a hash of the seed and the canonical gene vector. The backbone makes
/// bigger configs better with diminishing returns; the interaction term
/// adds reproducible config-specific texture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyModel {
    #[serde(default = "default_base")]
    pub base: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_saturation_rate")]
    pub saturation_rate: f64,
    #[serde(default = "default_interaction_weight")]
    pub interaction_weight: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_base() -> f64 {
    0.60
}
fn default_amplitude() -> f64 {
    0.25
}
fn default_saturation_rate() -> f64 {
    2.0
}
fn default_interaction_weight() -> f64 {
    0.02
}

impl Default for AccuracyModel {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl AccuracyModel {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            base: default_base(),
            amplitude: default_amplitude(),
            saturation_rate: default_saturation_rate(),
            interaction_weight: default_interaction_weight(),
            seed,
        }
    }

    /// Interaction term in `[-1, 1)`: a seeded mix of the gene vector.
    fn interaction(&self, arch: &ArchitectureConfig) -> f64 {
        let mut z = mix(self.seed);
        for g in arch.genes() {
            z = mix(z ^ g as u64);
        }
        (z >> 11) as f64 * (2.0 / (1u64 << 53) as f64) - 1.0
    }

    pub fn predict(&self, arch: &ArchitectureConfig) -> f64 {
        let backbone =
            self.base + self.amplitude * (1.0 - (-self.saturation_rate * arch.utilization()).exp());
        let raw = backbone + self.interaction_weight * self.interaction(arch);
        raw.clamp(0.0, 1.0)
    }
}

/// Ranks `(accuracy, latency, config)` triples: higher accuracy first, then
/// lower latency, then lexicographically smaller gene vector. `Less` means
/// `a` ranks ahead of `b`. This single ordering backs both the oracle and
/// the evolutionary selection, so ties resolve identically everywhere.
pub fn rank_cmp(
    a: (f64, f64, &ArchitectureConfig),
    b: (f64, f64, &ArchitectureConfig),
) -> Ordering {
    b.0.total_cmp(&a.0)
        .then_with(|| a.1.total_cmp(&b.1))
        .then_with(|| a.2.cmp_genes(b.2))
}

/// Result of exhaustively scoring a (small) space.
#[derive(Debug, Clone, Serialize)]
pub struct OracleResult {
    pub best: ArchitectureConfig,
    pub best_accuracy: f64,
    pub best_latency_ms: f64,
    /// Configs that satisfied the latency constraint.
    pub feasible_count: u64,
}

/// Enumerates the whole space and returns the best feasible config under
/// `target_ms`. Errors when the space exceeds the enumeration cap or no
/// config fits the target.
pub fn brute_force_best(
    space: &DesignSpace,
    lat: &LatencyModel,
    acc: &AccuracyModel,
    target_ms: f64,
) -> Result<OracleResult> {
    let mut best: Option<(f64, f64, ArchitectureConfig)> = None;
    let mut feasible_count = 0u64;
    let mut minimal_ms = f64::INFINITY;
    for cfg in enumerate_all(space)? {
        let ms = lat.latency(&cfg)?;
        minimal_ms = minimal_ms.min(ms);
        if ms > target_ms {
            continue;
        }
        feasible_count += 1;
        let accuracy = acc.predict(&cfg);
        let better = match &best {
            None => true,
            Some((b_acc, b_ms, b_cfg)) => {
                rank_cmp((accuracy, ms, &cfg), (*b_acc, *b_ms, b_cfg)) == Ordering::Less
            }
        };
        if better {
            best = Some((accuracy, ms, cfg));
        }
    }
    match best {
        Some((best_accuracy, best_latency_ms, best)) => Ok(OracleResult {
            best,
            best_accuracy,
            best_latency_ms,
            feasible_count,
        }),
        None => Err(Error::InfeasibleTarget {
            target_ms,
            minimal_ms,
        }),
    }
}
