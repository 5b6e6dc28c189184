//! Helpers shared by the integration tests and the acceptance binary.
//!
//! `brute_force` is a deliberately naive localizer written against the raw
//! leaf columns only: every element of every cuboid is enumerated and
//! scored from scratch on each iteration, with no grouping, no pruning and
//! no shared state with the library's search.
#![allow(dead_code)]

use std::collections::BTreeSet;

use proptest::prelude::*;
use rootloc::datamodel::WILDCARD;
use rootloc::{AttributeSchema, Element, LeafTable, LocalizerConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleCause {
    pub element: Element,
    pub ep: f64,
    pub risk: f64,
    pub layer: usize,
}

fn ds(v: f64, f: f64) -> f64 {
    if v + f == 0.0 {
        0.0
    } else {
        2.0 * (f - v) / (f + v)
    }
}

struct LeafState {
    abnormal: Vec<bool>,
    zero: Vec<bool>,
    weight: Vec<f64>,
    dev: Vec<f64>,
}

fn partition(t: &LeafTable, cfg: &LocalizerConfig) -> LeafState {
    let n = t.len();
    let dev: Vec<f64> = (0..n).map(|i| ds(t.actual(i), t.forecast(i))).collect();
    let mut uniq = dev.clone();
    uniq.sort_by(|a, b| a.partial_cmp(b).unwrap());
    uniq.dedup();
    let k = cfg.trim_k;
    let (lo, hi) = if !cfg.no_outlier_removal && k > 0 && uniq.len() > 2 * k + 1 {
        (uniq[k], uniq[uniq.len() - 1 - k])
    } else {
        (uniq[0], uniq[uniq.len() - 1])
    };
    let positive = lo.abs() < hi.abs();
    let t_part = if positive { -lo } else { -hi };
    let mut st = LeafState {
        abnormal: vec![false; n],
        zero: vec![false; n],
        weight: vec![0.0; n],
        dev: dev.clone(),
    };
    for i in 0..n {
        if t.actual(i) == 0.0 && t.forecast(i) == 0.0 {
            st.zero[i] = true;
            continue;
        }
        let d = dev[i];
        st.abnormal[i] = if positive { d >= t_part } else { d <= t_part };
        let w = if st.abnormal[i] { d.abs() } else { (t_part - d).abs() };
        st.weight[i] = if cfg.no_weights { 1.0 } else { w.min(1.0) };
    }
    st
}

fn covers(e: &[u32], row: &[u32]) -> bool {
    e.iter().zip(row).all(|(&c, &r)| c == WILDCARD || c == r)
}

/// Every element with at least one active leaf, grouped by layer.
fn elements_by_layer(t: &LeafTable, active: &[bool]) -> Vec<BTreeSet<Vec<u32>>> {
    let d = t.dim();
    let mut layers = vec![BTreeSet::new(); d + 1];
    for mask in 1u32..(1 << d) {
        for i in (0..t.len()).filter(|&i| active[i]) {
            let e: Vec<u32> = (0..d)
                .map(|a| if mask >> a & 1 == 1 { t.row(i)[a] } else { WILDCARD })
                .collect();
            layers[mask.count_ones() as usize].insert(e);
        }
    }
    layers
}

/// Scores `e` over the active leaves; returns `(ep, risk)`.
fn score(
    t: &LeafTable,
    st: &LeafState,
    active: &[bool],
    e: &[u32],
    change: f64,
    sign: f64,
    cfg: &LocalizerConfig,
) -> (f64, f64) {
    let leaves: Vec<usize> = (0..t.len())
        .filter(|&i| active[i] && covers(e, t.row(i)))
        .collect();
    let v: f64 = leaves.iter().map(|&i| t.actual(i)).sum();
    let f: f64 = leaves.iter().map(|&i| t.forecast(i)).sum();
    let ep = sign * (v - f) / change;
    let mut w_a = 0.0;
    let mut w_n = 0.0;
    for &i in &leaves {
        if st.zero[i] {
            continue;
        }
        if st.abnormal[i] {
            w_a += st.weight[i];
        } else {
            w_n += st.weight[i];
        }
    }
    let r1 = if cfg.no_r1 { 1.0 } else { w_a / (w_n + w_a + 1.0) };
    let is_leaf = e.iter().all(|&c| c != WILDCARD);
    let r2 = if cfg.no_r2 || is_leaf {
        0.0
    } else {
        let mut num = 0.0;
        let mut den = 0.0;
        for &i in &leaves {
            let actual = t.actual(i);
            let expected = if f == 0.0 { actual } else { t.forecast(i) * (v / f) };
            if expected + actual != 0.0 {
                num += 2.0 * (expected - actual).abs() / (expected + actual);
            }
            den += st.dev[i].abs();
        }
        if den == 0.0 {
            0.0
        } else {
            num / den
        }
    };
    (ep, r1 - r2)
}

/// Naive reference localizer for additive tables.
pub fn brute_force(t: &LeafTable, cfg: &LocalizerConfig) -> Vec<OracleCause> {
    let n = t.len();
    let st = partition(t, cfg);
    let total_v: f64 = (0..n).map(|i| t.actual(i)).sum();
    let total_f: f64 = (0..n).map(|i| t.forecast(i)).sum();
    let change = total_v - total_f;
    assert!(change != 0.0, "oracle needs an overall anomaly");
    let abnormal_ep = |active: &[bool]| -> f64 {
        let (v, f) = (0..n)
            .filter(|&i| active[i] && st.abnormal[i])
            .fold((0.0, 0.0), |(v, f), i| (v + t.actual(i), f + t.forecast(i)));
        (v - f) / change
    };
    let mut active = vec![true; n];
    let raw = abnormal_ep(&active);
    let sign = if raw < 0.0 { -1.0 } else { 1.0 };
    let t_ep = cfg.pep_threshold * sign * raw;
    let mut remaining = sign * raw;
    let cap = cfg.max_iterations.unwrap_or(n);
    let mut out = Vec::new();
    if remaining <= 0.0 {
        return out;
    }
    while remaining >= t_ep && out.len() < cap {
        let mut found: Option<OracleCause> = None;
        for (layer, elems) in elements_by_layer(t, &active).into_iter().enumerate().skip(1) {
            for e in elems {
                let (ep, risk) = score(t, &st, &active, &e, change, sign, cfg);
                if ep < t_ep || risk < cfg.risk_threshold {
                    continue;
                }
                let cand = OracleCause {
                    element: Element::new(e),
                    ep,
                    risk,
                    layer,
                };
                let better = match &found {
                    None => true,
                    Some(b) => cand.ep > b.ep || (cand.ep == b.ep && cand.element < b.element),
                };
                if better {
                    found = Some(cand);
                }
            }
            if found.is_some() {
                break;
            }
        }
        let Some(c) = found else { break };
        for i in 0..n {
            if covers(c.element.coords(), t.row(i)) {
                active[i] = false;
            }
        }
        remaining = sign * abnormal_ep(&active);
        out.push(c);
    }
    out
}

/// A schema with attributes `a`, `b`, … and values `a0`, `a1`, ….
pub fn schema(cards: &[usize]) -> AttributeSchema {
    AttributeSchema::new(cards.iter().enumerate().map(|(a, &c)| {
        let name = ((b'a' + a as u8) as char).to_string();
        let values: Vec<String> = (0..c).map(|j| format!("{name}{j}")).collect();
        (name, values)
    }))
    .unwrap()
}

/// All coordinate rows of a full grid, last attribute fastest.
pub fn grid(cards: &[usize]) -> Vec<Vec<u32>> {
    let mut rows = vec![vec![]];
    for &c in cards {
        rows = rows
            .into_iter()
            .flat_map(|r| {
                (0..c as u32).map(move |j| {
                    let mut r = r.clone();
                    r.push(j);
                    r
                })
            })
            .collect();
    }
    rows
}

/// Random small additive table with integer measures and one scaled
/// element, so that aggregate sums are exact.
pub fn small_table() -> impl Strategy<Value = LeafTable> {
    (prop::collection::vec(1usize..=3, 1..=3), any::<u64>())
        .prop_flat_map(|(cards, _)| {
            let rows = grid(&cards);
            let n = rows.len();
            (
                Just(cards),
                prop::collection::vec(any::<bool>(), n),
                prop::collection::vec(0u32..60, n),
                prop::collection::vec(-3i32..=3, n),
                prop::collection::vec(0u32..3, 3),
                0u32..8,
                prop::sample::select(vec![0.0, 0.2, 0.5, 1.5, 3.0]),
            )
        })
        .prop_filter_map(
            "needs an overall anomaly",
            |(cards, keep, base, noise, anomaly, mask, factor)| {
                let mut rows = Vec::new();
                let mut actual = Vec::new();
                let mut forecast = Vec::new();
                let d = cards.len();
                let anomaly: Vec<u32> = (0..d)
                    .map(|a| {
                        if mask >> a & 1 == 1 {
                            anomaly[a] % cards[a] as u32
                        } else {
                            WILDCARD
                        }
                    })
                    .collect();
                for (i, row) in grid(&cards).into_iter().enumerate() {
                    // keep roughly two thirds of the grid, but never drop a whole table
                    if !keep[i] && i % 3 != 0 {
                        continue;
                    }
                    let f = base[i] as f64;
                    let mut v = (base[i] as i32 + noise[i]).max(0) as f64;
                    if covers(&anomaly, &row) {
                        v = (f * factor).round();
                    }
                    rows.push(row);
                    actual.push(v);
                    forecast.push(f);
                }
                let change: f64 = actual.iter().sum::<f64>() - forecast.iter().sum::<f64>();
                if change == 0.0 {
                    return None;
                }
                LeafTable::fundamental(schema(&cards), rows, actual, forecast).ok()
            },
        )
}

/// Every element that covers at least one leaf of `t`.
pub fn all_elements(t: &LeafTable) -> Vec<Element> {
    let active = vec![true; t.len()];
    elements_by_layer(t, &active)
        .into_iter()
        .flatten()
        .map(Element::new)
        .collect()
}
