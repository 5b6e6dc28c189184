//! Two-way split of leaves into normal and abnormal sets around a threshold
//! estimated from the deviation-score distribution, with distance weights.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{deviation_score, LeafTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Partition {
    Normal,
    Abnormal,
    /// Both actual and forecast are zero; carries no information.
    Zero,
}

/// Sign of the abnormal deviation scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Abnormal leaves have `ds ≥ t` (actual below forecast).
    Positive,
    /// Abnormal leaves have `ds ≤ t` (actual above forecast).
    Negative,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionOptions {
    /// Number of unique values trimmed from each end before picking `t`.
    pub trim_k: usize,
    pub trim_outliers: bool,
    /// Every non-zero leaf gets weight 1.
    pub uniform_weights: bool,
}

impl Default for PartitionOptions {
    fn default() -> Self {
        Self {
            trim_k: 5,
            trim_outliers: true,
            uniform_weights: false,
        }
    }
}

/// Per-leaf weight and partition, plus the partition threshold.
///
/// Leaves can be removed as root causes are found; removed leaves keep
/// their entries but no longer count as members.
#[derive(Debug, Clone)]
pub struct WeightedLeafSet {
    weights: Vec<f64>,
    partitions: Vec<Partition>,
    deviations: Vec<f64>,
    active: Vec<bool>,
    threshold: f64,
    direction: Direction,
}

impl WeightedLeafSet {
    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn weight(&self, leaf: usize) -> f64 {
        self.weights[leaf]
    }

    #[inline]
    pub fn partition(&self, leaf: usize) -> Partition {
        self.partitions[leaf]
    }

    /// Deviation score of the leaf.
    #[inline]
    pub fn deviation(&self, leaf: usize) -> f64 {
        self.deviations[leaf]
    }

    #[inline]
    pub fn is_active(&self, leaf: usize) -> bool {
        self.active[leaf]
    }

    pub fn active_count(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn active_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.active
            .iter()
            .enumerate()
            .filter_map(|(i, &a)| a.then_some(i))
    }

    /// Active leaves of the abnormal partition.
    pub fn abnormal_leaves(&self) -> impl Iterator<Item = usize> + '_ {
        self.active_leaves()
            .filter(|&i| self.partitions[i] == Partition::Abnormal)
    }

    /// Removes leaves from the set; returns how many were still active.
    pub fn remove(&mut self, leaves: &[usize]) -> usize {
        let mut removed = 0;
        for &i in leaves {
            if std::mem::replace(&mut self.active[i], false) {
                removed += 1;
            }
        }
        removed
    }

    /// Sets every non-zero leaf's weight to 1.
    pub fn make_uniform(&mut self) {
        for (w, p) in self.weights.iter_mut().zip(&self.partitions) {
            if *p != Partition::Zero {
                *w = 1.0;
            }
        }
    }
}

/// Drops every entry equal to one of the `k` smallest or `k` largest unique
/// values. Score sets with at most `2k + 1` unique values are returned as is.
pub fn trim_outliers(scores: &[f64], k: usize) -> Vec<f64> {
    match trimmed_range(scores, k) {
        Some((lo, hi)) => scores
            .iter()
            .copied()
            .filter(|&s| s >= lo && s <= hi)
            .collect(),
        None => scores.to_vec(),
    }
}

/// Smallest and largest surviving unique values after trimming, or `None`
/// when nothing is trimmed.
fn trimmed_range(scores: &[f64], k: usize) -> Option<(f64, f64)> {
    let mut unique = scores.to_vec();
    unique.sort_by(f64::total_cmp);
    unique.dedup();
    if k == 0 || unique.len() <= 2 * k + 1 {
        return None;
    }
    Some((unique[k], unique[unique.len() - 1 - k]))
}

fn min_max(scores: impl Iterator<Item = f64>) -> (f64, f64) {
    scores.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
        (lo.min(s), hi.max(s))
    })
}

pub fn partition_and_weight(table: &LeafTable) -> Result<WeightedLeafSet> {
    partition_and_weight_with(table, &PartitionOptions::default())
}

pub fn partition_and_weight_with(
    table: &LeafTable,
    opts: &PartitionOptions,
) -> Result<WeightedLeafSet> {
    if table.is_empty() {
        return Err(Error::EmptyTable);
    }
    let deviations: Vec<f64> = (0..table.len())
        .into_par_iter()
        .map(|i| deviation_score(table.actual(i), table.forecast(i)))
        .collect();

    let (lo, hi) = match opts.trim_outliers.then(|| trimmed_range(&deviations, opts.trim_k)) {
        Some(Some(range)) => range,
        _ => min_max(deviations.iter().copied()),
    };

    let (threshold, direction) = if lo.abs() < hi.abs() {
        (-lo, Direction::Positive)
    } else {
        (-hi, Direction::Negative)
    };

    let mut weights = Vec::with_capacity(table.len());
    let mut partitions = Vec::with_capacity(table.len());
    for (i, &ds) in deviations.iter().enumerate() {
        let (p, w) = if table.actual(i) == 0.0 && table.forecast(i) == 0.0 {
            (Partition::Zero, 0.0)
        } else {
            let abnormal = match direction {
                Direction::Positive => ds >= threshold,
                Direction::Negative => ds <= threshold,
            };
            if abnormal {
                (Partition::Abnormal, ds.abs().min(1.0))
            } else {
                (Partition::Normal, (threshold - ds).abs().min(1.0))
            }
        };
        partitions.push(p);
        weights.push(w);
    }

    let mut set = WeightedLeafSet {
        weights,
        partitions,
        deviations,
        active: vec![true; table.len()],
        threshold,
        direction,
    };
    if opts.uniform_weights {
        set.make_uniform();
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::fixtures::table1;
    use crate::datamodel::AttributeSchema;
    use proptest::prelude::*;

    /// Sort-and-slice reference for trimming.
    fn trim_oracle(scores: &[f64], k: usize) -> Vec<f64> {
        let mut u: Vec<f64> = scores.to_vec();
        u.sort_by(|a, b| a.partial_cmp(b).unwrap());
        u.dedup();
        if u.len() <= 2 * k + 1 {
            return scores.to_vec();
        }
        let keep = &u[k..u.len() - k];
        scores.iter().copied().filter(|s| keep.contains(s)).collect()
    }

    #[test]
    fn trim_examples() {
        let twelve: Vec<f64> = (0..12).map(f64::from).collect();
        assert_eq!(trim_outliers(&twelve, 5), vec![5.0, 6.0]);
        let five = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(trim_outliers(&five, 5), five.to_vec());
        let eleven: Vec<f64> = (0..11).map(f64::from).collect();
        assert_eq!(trim_outliers(&eleven, 5), eleven);
        // duplicates of trimmed values go too
        let dup = [0.0, 0.0, 1.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        assert_eq!(trim_outliers(&dup, 1), vec![1.0, 2.0, 3.0, 3.0]);
        assert_eq!(trim_outliers(&dup, 1), trim_oracle(&dup, 1));
    }

    #[test]
    fn table1_partition() {
        let w = partition_and_weight(&table1()).unwrap();
        assert_eq!(w.direction(), Direction::Positive);
        assert!((w.threshold() - 2.0 / 29.0).abs() < 1e-12);
        assert!((w.threshold() - 0.0690).abs() < 1e-4);
        let parts: Vec<_> = (0..5).map(|i| w.partition(i)).collect();
        use Partition::*;
        assert_eq!(parts, [Abnormal, Abnormal, Normal, Normal, Normal]);
        let expected = [1.0, 1.0, 0.1379, 0.0690, 0.0492];
        for (i, e) in expected.iter().enumerate() {
            assert!((w.weight(i) - e).abs() < 1e-4, "leaf {i}: {}", w.weight(i));
        }
        assert!((w.weight(2) - 4.0 / 29.0).abs() < 1e-12);
        assert!((w.deviation(1) - 14.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn no_residual_table() {
        let schema = AttributeSchema::synthetic(&[3]).unwrap();
        let t = LeafTable::fundamental(
            schema,
            vec![vec![0], vec![1], vec![2]],
            vec![1.0, 2.0, 0.0],
            vec![1.0, 2.0, 0.0],
        )
        .unwrap();
        let w = partition_and_weight(&t).unwrap();
        assert_eq!(w.threshold(), 0.0);
        assert_eq!(w.partition(0), Partition::Abnormal);
        assert_eq!(w.partition(1), Partition::Abnormal);
        assert_eq!(w.partition(2), Partition::Zero);
        assert!((0..3).all(|i| w.weight(i) == 0.0));
    }

    #[test]
    fn empty_table_rejected() {
        let schema = AttributeSchema::synthetic(&[1]).unwrap();
        let t = LeafTable::fundamental(schema, vec![], vec![], vec![]).unwrap();
        assert!(matches!(partition_and_weight(&t), Err(Error::EmptyTable)));
    }

    #[test]
    fn removal_and_uniform_weights() {
        let t = table1();
        let mut w = partition_and_weight_with(
            &t,
            &PartitionOptions {
                uniform_weights: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((0..5).all(|i| w.weight(i) == 1.0));
        assert_eq!(w.remove(&[0, 1]), 2);
        assert_eq!(w.remove(&[1]), 0);
        assert_eq!(w.abnormal_leaves().count(), 0);
        assert_eq!(w.active_count(), 3);
    }

    fn table_from(values: &[(f64, f64)]) -> LeafTable {
        let schema = AttributeSchema::synthetic(&[values.len()]).unwrap();
        let rows = (0..values.len() as u32).map(|i| vec![i]).collect();
        let (v, f) = values.iter().copied().unzip();
        LeafTable::fundamental(schema, rows, v, f).unwrap()
    }

    proptest! {
        #[test]
        fn trim_agrees_with_oracle(
            scores in prop::collection::vec((-20i32..20).prop_map(|x| x as f64 / 4.0), 1..60),
            k in 0usize..6,
        ) {
            let k = k.max(1);
            prop_assert_eq!(trim_outliers(&scores, k), trim_oracle(&scores, k));
        }

        #[test]
        fn partition_total_and_weights_bounded(
            values in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..50),
            zeros in prop::collection::vec(any::<bool>(), 50),
        ) {
            let values: Vec<_> = values
                .iter()
                .zip(&zeros)
                .map(|(&(v, f), &z)| if z { (0.0, 0.0) } else { (v, f) })
                .collect();
            let t = table_from(&values);
            let w = partition_and_weight(&t).unwrap();
            for i in 0..t.len() {
                let wi = w.weight(i);
                prop_assert!((0.0..=1.0).contains(&wi));
                match w.partition(i) {
                    Partition::Zero => {
                        prop_assert_eq!(wi, 0.0);
                        prop_assert!(values[i] == (0.0, 0.0));
                    }
                    Partition::Abnormal => match w.direction() {
                        Direction::Positive => prop_assert!(w.deviation(i) >= w.threshold()),
                        Direction::Negative => prop_assert!(w.deviation(i) <= w.threshold()),
                    },
                    Partition::Normal => {}
                }
            }
        }

        #[test]
        fn mirrored_table_flips_direction(
            values in prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 1..50),
        ) {
            let t = table_from(&values);
            let swapped: Vec<_> = values.iter().map(|&(v, f)| (f, v)).collect();
            let m = table_from(&swapped);
            let a = partition_and_weight(&t).unwrap();
            let b = partition_and_weight(&m).unwrap();
            let lo_hi_tie = {
                let ds: Vec<f64> = (0..t.len()).map(|i| a.deviation(i)).collect();
                let (lo, hi) = trimmed_range(&ds, 5).unwrap_or_else(|| min_max(ds.iter().copied()));
                lo.abs() == hi.abs()
            };
            // an exact tie resolves to the same branch on both sides
            prop_assume!(!lo_hi_tie);
            prop_assert_eq!(a.threshold(), -b.threshold());
            prop_assert_ne!(a.direction(), b.direction());
            for i in 0..t.len() {
                prop_assert_eq!(a.partition(i), b.partition(i));
                prop_assert_eq!(a.weight(i), b.weight(i));
            }
        }

        #[test]
        fn separated_anomalies_are_abnormal(
            normal in prop::collection::vec(-0.2f64..0.2, 12..40),
            anomalous in prop::collection::vec(0.5f64..1.5, 1..6),
        ) {
            // build leaves with prescribed deviation scores: f = 1, v = (2 − ds)/(2 + ds)
            let mut values: Vec<(f64, f64)> = normal
                .iter()
                .chain(&anomalous)
                .map(|&ds| ((2.0 - ds) / (2.0 + ds), 1.0))
                .collect();
            values.push((1.0, 1.0));
            let t = table_from(&values);
            let w = partition_and_weight(&t).unwrap();
            prop_assume!(w.direction() == Direction::Positive);
            for i in normal.len()..normal.len() + anomalous.len() {
                prop_assert_eq!(w.partition(i), Partition::Abnormal);
            }
        }

        #[test]
        fn weights_grow_with_distance(
            values in prop::collection::vec((0.1f64..100.0, 0.1f64..100.0), 2..50),
        ) {
            let t = table_from(&values);
            let w = partition_and_weight(&t).unwrap();
            for i in 0..t.len() {
                for j in 0..t.len() {
                    if w.partition(i) != w.partition(j) { continue; }
                    let (di, dj) = (w.deviation(i), w.deviation(j));
                    match w.partition(i) {
                        Partition::Abnormal if di.abs() <= dj.abs() => {
                            prop_assert!(w.weight(i) <= w.weight(j));
                        }
                        Partition::Normal
                            if (w.threshold() - di).abs() <= (w.threshold() - dj).abs() =>
                        {
                            prop_assert!(w.weight(i) <= w.weight(j));
                        }
                        _ => {}
                    }
                }
            }
        }
    }
}
