//! Layer-ordered candidate search over all cuboids.
//!
//! Each cuboid is scanned by grouping the active leaves on their projected
//! key. A first pass accumulates measure sums, partition weights, `Σ|ds|`
//! and the positive leaf explanatory power; a second pass over the
//! surviving candidates accumulates the ripple residuals.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::datamodel::{Cuboid, CuboidKeys, Element, LeafTable, MeasureSums};
use crate::partition::{Partition, WeightedLeafSet};
use crate::risk::{self, RiskBreakdown, RiskOptions};

/// An element that passed both thresholds.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub element: Element,
    pub breakdown: RiskBreakdown,
    /// Sign-normalized explanatory power over the active leaves.
    pub ep: f64,
    pub layer: usize,
}

impl Candidate {
    /// Higher explanatory power wins, then the lexicographically smaller element.
    fn beats(&self, other: &Candidate) -> bool {
        self.ep > other.ep || (self.ep == other.ep && self.element < other.element)
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Thresholds {
    pub risk: f64,
    pub ep: f64,
}

/// Precomputed per-table state shared by every search call.
#[derive(Debug)]
pub(crate) struct SearchSpace<'a> {
    pub table: &'a LeafTable,
    layers: Vec<Vec<(Cuboid, CuboidKeys)>>,
    /// `v(M) − f(M)` of the full table.
    pub change: f64,
    /// +1 or −1 so that the abnormal partition has non-negative ep.
    pub sign: f64,
    /// Sign-normalized explanatory power of each leaf.
    leaf_ep: Vec<f64>,
    pub risk: RiskOptions,
    prune_layers: usize,
    /// Bit index of each prunable cuboid mask.
    prunable: HashMap<u64, usize>,
}

impl<'a> SearchSpace<'a> {
    pub fn new(
        table: &'a LeafTable,
        change: f64,
        sign: f64,
        risk: RiskOptions,
        prune_layers: usize,
    ) -> Option<Self> {
        let mut layers = Vec::new();
        for cuboids in crate::datamodel::enumerate_cuboids(table.dim()) {
            let mut layer = Vec::with_capacity(cuboids.len());
            for c in cuboids {
                layer.push((c, CuboidKeys::new(c, table.schema())?));
            }
            layers.push(layer);
        }
        let leaf_ep = (0..table.len())
            .map(|i| sign * (table.actual(i) - table.forecast(i)) / change)
            .collect();
        // the bound only holds for additive measures
        let prune_layers = match table.measure_kind() {
            crate::datamodel::MeasureKind::Fundamental => prune_layers.min(table.dim()),
            crate::datamodel::MeasureKind::Derived => 0,
        };
        let prunable = layers
            .iter()
            .take(prune_layers)
            .flatten()
            .enumerate()
            .map(|(bit, (c, _))| (c.mask(), bit))
            .collect();
        Some(Self {
            table,
            layers,
            change,
            sign,
            leaf_ep,
            risk,
            prune_layers,
            prunable,
        })
    }

    #[inline]
    pub fn ep_of(&self, v: f64, f: f64) -> f64 {
        self.sign * (v - f) / self.change
    }

    /// Runs one search: returns the highest-ep qualifying element of the
    /// lowest layer that has any.
    pub fn search(&self, weights: &WeightedLeafSet, th: Thresholds) -> Option<Candidate> {
        let active: Vec<u32> = weights.active_leaves().map(|i| i as u32).collect();
        if active.is_empty() {
            return None;
        }
        let mut marks = PruneMarks::new(self.prunable.len(), self.table.len());
        for (layer_idx, layer) in self.layers.iter().enumerate() {
            let layer_no = layer_idx + 1;
            let prune_here = layer_no <= self.prune_layers;
            let scans: Vec<CuboidScan> = layer
                .par_iter()
                .map(|(cuboid, keys)| {
                    let skip = marks.query_for(cuboid, &self.prunable);
                    self.scan(weights, &active, *cuboid, keys, &marks, &skip, prune_here, th)
                })
                .collect();

            let mut best: Option<Candidate> = None;
            for scan in &scans {
                if let Some(c) = &scan.best {
                    if best.as_ref().map_or(true, |b| c.beats(b)) {
                        best = Some(c.clone());
                    }
                }
            }
            if best.is_some() {
                return best;
            }
            if prune_here {
                for ((cuboid, _), scan) in layer.iter().zip(&scans) {
                    let bit = self.prunable[&cuboid.mask()];
                    for &leaf in &scan.pruned_leaves {
                        marks.set(leaf as usize, bit);
                    }
                }
            }
        }
        None
    }

    #[allow(clippy::too_many_arguments)]
    fn scan(
        &self,
        weights: &WeightedLeafSet,
        active: &[u32],
        cuboid: Cuboid,
        keys: &CuboidKeys,
        marks: &PruneMarks,
        skip: &[usize],
        prune: bool,
        th: Thresholds,
    ) -> CuboidScan {
        let table = self.table;
        let mut slots = SlotMap::new(keys.size(), active.len());
        let mut accs: Vec<Acc> = Vec::new();
        let mut slot_keys: Vec<u64> = Vec::new();
        let mut leaf_slots: Vec<(u32, u32)> = Vec::with_capacity(active.len());

        for &leaf in active {
            let i = leaf as usize;
            if !skip.is_empty() && marks.any(i, skip) {
                continue;
            }
            let key = keys.key(table.row(i));
            let slot = slots.get_or_insert(key, || {
                accs.push(Acc::default());
                slot_keys.push(key);
                (accs.len() - 1) as u32
            });
            let acc = &mut accs[slot as usize];
            table.accumulate(&mut acc.sums, i);
            let w = weights.weight(i);
            match weights.partition(i) {
                Partition::Abnormal => acc.w_a += w,
                Partition::Normal => acc.w_n += w,
                Partition::Zero => {}
            }
            acc.r_d += weights.deviation(i).abs();
            acc.ep_pos += self.leaf_ep[i].max(0.0);
            leaf_slots.push((leaf, slot));
        }

        let is_leaf_layer = cuboid.layer() == table.dim();
        let mut states: Vec<SlotState> = Vec::with_capacity(accs.len());
        let mut any_pruned = false;
        let mut need_ripple = false;
        for acc in &accs {
            let (v, f) = table.resolve(&acc.sums);
            let ep = self.ep_of(v, f);
            if prune && acc.ep_pos < th.ep {
                any_pruned = true;
                states.push(SlotState::Pruned);
                continue;
            }
            let r1 = if self.risk.fixed_r1 {
                1.0
            } else {
                risk::r1(acc.w_a, acc.w_n)
            };
            // r2 ≥ 0, so r1 bounds the risk from above
            if ep >= th.ep && r1 >= th.risk {
                let ratio = risk::ripple_ratio(v, f);
                need_ripple |= !is_leaf_layer;
                states.push(SlotState::Open { ep, ratio, r_n: 0.0 });
            } else {
                states.push(SlotState::Rejected);
            }
        }

        if need_ripple {
            for &(leaf, slot) in &leaf_slots {
                if let SlotState::Open { ratio, r_n, .. } = &mut states[slot as usize] {
                    let i = leaf as usize;
                    let v = table.actual(i);
                    let a = risk::expected_actual(*ratio, v, table.forecast(i));
                    *r_n += risk::ripple_residual(a, v);
                }
            }
        }

        let mut best: Option<Candidate> = None;
        for (slot, state) in states.iter().enumerate() {
            let SlotState::Open { ep, ratio, r_n } = *state else {
                continue;
            };
            let acc = &accs[slot];
            let r2 = if is_leaf_layer {
                0.0
            } else {
                risk::r2_from_sums(r_n, acc.r_d)
            };
            let breakdown =
                risk::combine(acc.w_a, acc.w_n, r2, r_n, acc.r_d, ratio.is_none(), self.risk);
            if breakdown.risk < th.risk {
                continue;
            }
            let cand = Candidate {
                element: keys.element(slot_keys[slot], table.dim()),
                breakdown,
                ep,
                layer: cuboid.layer(),
            };
            if best.as_ref().map_or(true, |b| cand.beats(b)) {
                best = Some(cand);
            }
        }

        let pruned_leaves = if any_pruned && cuboid.layer() < table.dim() {
            leaf_slots
                .iter()
                .filter(|(_, s)| matches!(states[*s as usize], SlotState::Pruned))
                .map(|&(l, _)| l)
                .collect()
        } else {
            Vec::new()
        };
        CuboidScan {
            best,
            pruned_leaves,
        }
    }

    /// Sign-normalized `ep⁺(e)` over the active leaves of `e`.
    pub fn max_potential_ep(&self, e: &Element, weights: &WeightedLeafSet) -> f64 {
        weights
            .active_leaves()
            .filter(|&i| e.covers(self.table.row(i)))
            .map(|i| self.leaf_ep[i].max(0.0))
            .sum()
    }
}

#[derive(Debug, Default)]
struct Acc {
    sums: MeasureSums,
    w_a: f64,
    w_n: f64,
    r_d: f64,
    ep_pos: f64,
}

#[derive(Debug, Clone, Copy)]
enum SlotState {
    Pruned,
    Rejected,
    Open {
        ep: f64,
        ratio: Option<f64>,
        r_n: f64,
    },
}

struct CuboidScan {
    best: Option<Candidate>,
    /// Active leaves under elements pruned in this cuboid.
    pruned_leaves: Vec<u32>,
}

/// Key → slot map; dense when the cuboid's key space is small relative to
/// the number of leaves.
enum SlotMap {
    Dense(Vec<u32>),
    Sparse(HashMap<u64, u32>),
}

impl SlotMap {
    fn new(key_space: u64, leaves: usize) -> Self {
        let limit = (4 * leaves as u64).max(1 << 16);
        if key_space <= limit {
            SlotMap::Dense(vec![u32::MAX; key_space as usize])
        } else {
            SlotMap::Sparse(HashMap::with_capacity(leaves.min(1 << 20)))
        }
    }

    #[inline]
    fn get_or_insert(&mut self, key: u64, insert: impl FnOnce() -> u32) -> u32 {
        match self {
            SlotMap::Dense(v) => {
                let s = &mut v[key as usize];
                if *s == u32::MAX {
                    *s = insert();
                }
                *s
            }
            SlotMap::Sparse(m) => *m.entry(key).or_insert_with(insert),
        }
    }
}

/// Per-leaf bitset recording which prunable cuboids pruned the leaf's
/// element. A leaf marked in cuboid `C` is skipped in every superset of `C`:
/// its element there is a descendant of a pruned element.
struct PruneMarks {
    words: usize,
    bits: Vec<u64>,
    marked: bool,
}

impl PruneMarks {
    fn new(prunable: usize, leaves: usize) -> Self {
        let words = prunable.div_ceil(64);
        Self {
            words,
            bits: vec![0; words * leaves],
            marked: false,
        }
    }

    #[inline]
    fn set(&mut self, leaf: usize, bit: usize) {
        self.bits[leaf * self.words + bit / 64] |= 1 << (bit % 64);
        self.marked = true;
    }

    /// Bits of the prunable cuboids that are proper subsets of `cuboid`.
    fn query_for(&self, cuboid: &Cuboid, prunable: &HashMap<u64, usize>) -> Vec<usize> {
        if !self.marked {
            return Vec::new();
        }
        let mut bits: Vec<usize> = prunable
            .iter()
            .filter(|(&m, _)| m != cuboid.mask() && Cuboid::from_mask(m).is_subset_of(cuboid))
            .map(|(_, &b)| b)
            .collect();
        bits.sort_unstable();
        bits
    }

    #[inline]
    fn any(&self, leaf: usize, bits: &[usize]) -> bool {
        let row = &self.bits[leaf * self.words..(leaf + 1) * self.words];
        bits.iter().any(|&b| row[b / 64] & (1 << (b % 64)) != 0)
    }
}
