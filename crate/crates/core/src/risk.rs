//! Risk of a candidate element: weighted abnormal-mass ratio `r1` minus the
//! ripple-adjustment ratio `r2`.
//!
//! All sums run over the element's leaves that are still active in the
//! weighted leaf set.

use serde::{Deserialize, Serialize};

use crate::datamodel::{Element, LeafTable, MeasureSums};
use crate::partition::{Partition, WeightedLeafSet};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RiskBreakdown {
    pub r1: f64,
    pub r2: f64,
    pub risk: f64,
    pub w_a: f64,
    pub w_n: f64,
    pub r_n: f64,
    pub r_d: f64,
    /// `f(e_r) = 0`, so every leaf was treated as matching the ripple effect.
    pub ripple_fallback: bool,
}

/// Ablation switches on the risk terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RiskOptions {
    /// `r1` is fixed to 1.
    pub fixed_r1: bool,
    /// `r2` is fixed to 0.
    pub fixed_r2: bool,
}

/// `(w_a, w_n)`: weight sums over abnormal and normal leaves under `e`.
pub fn abnormal_mass(e: &Element, weights: &WeightedLeafSet, table: &LeafTable) -> (f64, f64) {
    let mut w_a = 0.0;
    let mut w_n = 0.0;
    for i in active_descendants(e, weights, table) {
        match weights.partition(i) {
            Partition::Abnormal => w_a += weights.weight(i),
            Partition::Normal => w_n += weights.weight(i),
            Partition::Zero => {}
        }
    }
    (w_a, w_n)
}

#[inline]
pub fn r1(w_a: f64, w_n: f64) -> f64 {
    w_a / (w_n + w_a + 1.0)
}

/// Ripple-implied actual of a leaf given its parent's `v/f` ratio.
/// With `ratio = None` (parent forecast 0) the leaf's own actual is returned.
#[inline]
pub fn expected_actual(ratio: Option<f64>, leaf_actual: f64, leaf_forecast: f64) -> f64 {
    match ratio {
        Some(r) => leaf_forecast * r,
        None => leaf_actual,
    }
}

/// `v(e_r)/f(e_r)`, or `None` when the forecast is zero.
#[inline]
pub fn ripple_ratio(v: f64, f: f64) -> Option<f64> {
    (f != 0.0).then(|| v / f)
}

/// Ripple-implied actual `a(e) = f(e)·v(e_r)/f(e_r)` of one leaf, with the
/// parent aggregated over the whole table.
pub fn ripple_expected(e_r: &Element, leaf: usize, table: &LeafTable) -> f64 {
    let (v, f) = table.aggregate(e_r);
    expected_actual(ripple_ratio(v, f), table.actual(leaf), table.forecast(leaf))
}

/// One leaf's contribution `2|a − v|/(a + v)` to `r_n`.
#[inline]
pub fn ripple_residual(expected: f64, actual: f64) -> f64 {
    let s = expected + actual;
    if s == 0.0 {
        0.0
    } else {
        2.0 * (expected - actual).abs() / s
    }
}

/// `r2 = r_n / r_d`, 0 when `r_d = 0`.
#[inline]
pub fn r2_from_sums(r_n: f64, r_d: f64) -> f64 {
    if r_d == 0.0 {
        0.0
    } else {
        r_n / r_d
    }
}

/// `(r2, r_n, r_d, fallback)` for `e_r` over its active leaves.
pub fn r2_terms(
    e_r: &Element,
    weights: &WeightedLeafSet,
    table: &LeafTable,
) -> (f64, f64, f64, bool) {
    let leaves: Vec<usize> = active_descendants(e_r, weights, table).collect();
    let mut sums = MeasureSums::default();
    for &i in &leaves {
        table.accumulate(&mut sums, i);
    }
    let (v, f) = table.resolve(&sums);
    let ratio = ripple_ratio(v, f);
    let mut r_n = 0.0;
    let mut r_d = 0.0;
    for &i in &leaves {
        let a = expected_actual(ratio, table.actual(i), table.forecast(i));
        r_n += ripple_residual(a, table.actual(i));
        r_d += weights.deviation(i).abs();
    }
    if e_r.is_leaf() {
        return (0.0, r_n, r_d, ratio.is_none());
    }
    (r2_from_sums(r_n, r_d), r_n, r_d, ratio.is_none())
}

pub fn r2(e_r: &Element, weights: &WeightedLeafSet, table: &LeafTable) -> f64 {
    r2_terms(e_r, weights, table).0
}

pub fn risk_score(e: &Element, weights: &WeightedLeafSet, table: &LeafTable) -> RiskBreakdown {
    risk_score_with(e, weights, table, RiskOptions::default())
}

pub fn risk_score_with(
    e: &Element,
    weights: &WeightedLeafSet,
    table: &LeafTable,
    opts: RiskOptions,
) -> RiskBreakdown {
    let (w_a, w_n) = abnormal_mass(e, weights, table);
    let (r2, r_n, r_d, fallback) = r2_terms(e, weights, table);
    combine(w_a, w_n, r2, r_n, r_d, fallback, opts)
}

pub(crate) fn combine(
    w_a: f64,
    w_n: f64,
    r2: f64,
    r_n: f64,
    r_d: f64,
    ripple_fallback: bool,
    opts: RiskOptions,
) -> RiskBreakdown {
    let r1 = if opts.fixed_r1 { 1.0 } else { r1(w_a, w_n) };
    let r2 = if opts.fixed_r2 { 0.0 } else { r2 };
    RiskBreakdown {
        r1,
        r2,
        risk: r1 - r2,
        w_a,
        w_n,
        r_n,
        r_d,
        ripple_fallback,
    }
}

fn active_descendants<'a>(
    e: &'a Element,
    weights: &'a WeightedLeafSet,
    table: &'a LeafTable,
) -> impl Iterator<Item = usize> + 'a {
    (0..table.len()).filter(move |&i| weights.is_active(i) && e.covers(table.row(i)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::fixtures::table1;
    use crate::datamodel::AttributeSchema;
    use crate::partition::partition_and_weight;
    use proptest::prelude::*;

    fn el(t: &LeafTable, s: &str) -> Element {
        Element::parse(s, t.schema()).unwrap()
    }

    #[test]
    fn table1_abnormal_mass() {
        let t = table1();
        let w = partition_and_weight(&t).unwrap();
        assert_eq!(abnormal_mass(&el(&t, "DataCenter=X"), &w, &t), (2.0, 0.0));
        let (wa, wn) = abnormal_mass(&el(&t, "DeviceType=D1"), &w, &t);
        assert_eq!(wa, 1.0);
        assert!((wn - 0.1379).abs() < 1e-4);
        let absent = el(&t, "DataCenter=X&DeviceType=D3");
        assert_eq!(abnormal_mass(&absent, &w, &t), (0.0, 0.0));
    }

    #[test]
    fn r1_examples() {
        assert!((r1(2.0, 0.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r1(0.0, 5.0), 0.0);
        assert!((r1(1.0, 0.1379) - 0.4678).abs() < 1e-4);
    }

    #[test]
    fn ripple_examples() {
        let t = table1();
        let x = el(&t, "DataCenter=X");
        assert!((ripple_expected(&x, 0, &t) - 9.75).abs() < 1e-12);
        assert_eq!(expected_actual(ripple_ratio(5.0, 5.0), 1.0, 7.0), 7.0);
        assert_eq!(expected_actual(ripple_ratio(5.0, 4.0), 1.0, 0.0), 0.0);
        assert_eq!(expected_actual(ripple_ratio(5.0, 0.0), 3.0, 0.0), 3.0);
    }

    #[test]
    fn table1_r2_and_risk() {
        let t = table1();
        let w = partition_and_weight(&t).unwrap();
        let x = el(&t, "DataCenter=X");
        let (r2, r_n, r_d, fallback) = r2_terms(&x, &w, &t);
        assert!(!fallback);
        let rn_hand = 2.0 * 0.25 / 19.75 + 2.0 * 0.25 / 6.25;
        assert!((r_n - rn_hand).abs() < 1e-12);
        assert!((r_n - 0.1053).abs() < 1e-4);
        assert!((r_d - (1.0 + 14.0 / 13.0)).abs() < 1e-12);
        assert!((r2 - 0.0507).abs() < 1e-4);
        let b = risk_score(&x, &w, &t);
        assert!((b.risk - 0.6160).abs() < 1e-4);
        assert_eq!(b.risk, b.r1 - b.r2);
        assert_eq!(b.r1, b.w_a / (b.w_n + b.w_a + 1.0));
        // leaves rely on r1 alone
        for i in 0..t.len() {
            assert_eq!(super::r2(&t.leaf_element(i), &w, &t), 0.0);
        }
    }

    #[test]
    fn element_without_abnormal_mass_is_not_risky() {
        let t = table1();
        let w = partition_and_weight(&t).unwrap();
        let b = risk_score(&el(&t, "DataCenter=Y"), &w, &t);
        assert_eq!(b.w_a, 0.0);
        assert!(b.risk <= 0.0);
    }

    #[test]
    fn fixed_terms() {
        let t = table1();
        let w = partition_and_weight(&t).unwrap();
        let x = el(&t, "DataCenter=X");
        let no_r1 = risk_score_with(&x, &w, &t, RiskOptions { fixed_r1: true, fixed_r2: false });
        assert_eq!(no_r1.r1, 1.0);
        assert_eq!(no_r1.risk, 1.0 - no_r1.r2);
        let no_r2 = risk_score_with(&x, &w, &t, RiskOptions { fixed_r1: false, fixed_r2: true });
        assert_eq!(no_r2.risk, 2.0 / 3.0);
    }

    /// Brute-force scoring over every element of a 3×3 table with one
    /// injected root cause.
    #[test]
    fn injected_root_cause_outscores_parent() {
        let schema = AttributeSchema::synthetic(&[3, 3]).unwrap();
        let mut rows = Vec::new();
        let mut v = Vec::new();
        let mut f = Vec::new();
        let noise = [1.02, 0.97, 1.01, 0.99, 1.03, 0.98, 1.0, 1.01, 0.99];
        for a in 0..3u32 {
            for b in 0..3u32 {
                let i = (a * 3 + b) as usize;
                rows.push(vec![a, b]);
                let base = 50.0 + 10.0 * i as f64;
                f.push(base);
                // root cause (a2, *) halves actuals
                v.push(if a == 1 { base * 0.5 } else { base * noise[i] });
            }
        }
        let t = LeafTable::fundamental(schema, rows, v, f).unwrap();
        let w = partition_and_weight(&t).unwrap();
        let rc = el(&t, "a=a2");
        let rb = risk_score(&rc, &w, &t);
        assert!(rb.risk >= 0.5, "{rb:?}");
        assert!(rb.r2 < 1e-12);
        let total = risk_score(&Element::total(2), &w, &t);
        assert!(total.r1 < rb.r1);
        let mut best = None::<(f64, Element)>;
        for a in (0..3).chain([crate::datamodel::WILDCARD]) {
            for b in (0..3).chain([crate::datamodel::WILDCARD]) {
                let e = Element::new(vec![a, b]);
                if e.layer() != 1 {
                    continue;
                }
                let r = risk_score(&e, &w, &t).risk;
                if best.as_ref().map_or(true, |(br, _)| r > *br) {
                    best = Some((r, e));
                }
            }
        }
        assert_eq!(best.unwrap().1, rc);
    }

    fn table_strategy() -> impl Strategy<Value = LeafTable> {
        prop::collection::vec((0.0f64..100.0, 0.0f64..100.0), 9).prop_map(|vals| {
            let schema = AttributeSchema::synthetic(&[3, 3]).unwrap();
            let rows = (0..9u32).map(|i| vec![i / 3, i % 3]).collect();
            let (v, f) = vals.into_iter().unzip();
            LeafTable::fundamental(schema, rows, v, f).unwrap()
        })
    }

    fn every_element() -> Vec<Element> {
        let w = crate::datamodel::WILDCARD;
        let mut out = Vec::new();
        for a in [0, 1, 2, w] {
            for b in [0, 1, 2, w] {
                out.push(Element::new(vec![a, b]));
            }
        }
        out
    }

    proptest! {
        #[test]
        fn risk_bounds(t in table_strategy()) {
            let w = partition_and_weight(&t).unwrap();
            for e in every_element() {
                let b = risk_score(&e, &w, &t);
                prop_assert!((0.0..1.0).contains(&b.r1));
                prop_assert!(b.r2 >= 0.0);
                prop_assert!(b.risk < 1.0);
                prop_assert_eq!(b.risk, b.r1 - b.r2);
            }
        }

        #[test]
        fn exact_ripple_gives_zero_r2(
            forecasts in prop::collection::vec(0.0f64..100.0, 9),
            factor in 0.0f64..3.0,
        ) {
            let schema = AttributeSchema::synthetic(&[3, 3]).unwrap();
            let rows = (0..9u32).map(|i| vec![i / 3, i % 3]).collect();
            // row a1 scaled uniformly, others unchanged
            let actual: Vec<f64> = forecasts
                .iter()
                .enumerate()
                .map(|(i, &f)| if i < 3 { f * factor } else { f })
                .collect();
            let t = LeafTable::fundamental(schema, rows, actual, forecasts.clone()).unwrap();
            let w = partition_and_weight(&t).unwrap();
            let e = Element::new(vec![0, crate::datamodel::WILDCARD]);
            prop_assume!(forecasts[..3].iter().sum::<f64>() > 0.0);
            prop_assert!(r2(&e, &w, &t) < 1e-9);
        }

        #[test]
        fn r1_monotone(wa in 0.0f64..100.0, wn in 0.0f64..100.0, d in 0.0f64..10.0) {
            prop_assert!(r1(wa + d, wn) >= r1(wa, wn));
            prop_assert!(r1(wa, wn + d) <= r1(wa, wn));
        }

        #[test]
        fn scale_invariance(t in table_strategy(), c in 0.01f64..100.0) {
            let scaled = t.map_values(|_, v, f| (v * c, f * c)).unwrap();
            let w1 = partition_and_weight(&t).unwrap();
            let w2 = partition_and_weight(&scaled).unwrap();
            for e in every_element() {
                let a = risk_score(&e, &w1, &t);
                let b = risk_score(&e, &w2, &scaled);
                prop_assert!((a.r1 - b.r1).abs() < 1e-9);
                prop_assert!((a.r2 - b.r2).abs() < 1e-9);
                prop_assert!((a.risk - b.risk).abs() < 1e-9);
            }
        }
    }
}
