//! Iterative root-cause set construction.
//!
//! The leaves are partitioned and weighted once. Each iteration searches the
//! cuboids layer by layer for the best risky element, removes its leaves and
//! stops once the abnormal leaves left over explain less than `t_ep` of the
//! overall change.

mod config;
mod search;

use serde::{Deserialize, Serialize};

pub use config::{
    ablation_variant, Ablation, LocalizerConfig, DEFAULT_PEP_THRESHOLD, DEFAULT_PRUNE_LAYERS,
    DEFAULT_RISK_THRESHOLD,
};
pub use search::Candidate;

use crate::datamodel::{overall_change, Element, LeafTable};
use crate::error::{Error, Result};
use crate::partition::{partition_and_weight_with, Direction, WeightedLeafSet};
use crate::risk::RiskBreakdown;
use search::{SearchSpace, Thresholds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The remaining abnormal leaves explain less than `t_ep`.
    Explained,
    /// No element passed both thresholds.
    NoCandidate,
    IterationCap,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::Explained => "explained",
            Termination::NoCandidate => "no_candidate",
            Termination::IterationCap => "iteration_cap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCause {
    pub element: Element,
    pub breakdown: RiskBreakdown,
    /// Explanatory power over the leaves still present when it was selected.
    pub ep: f64,
    pub layer: usize,
    pub iteration: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RootCauseSet {
    /// Root causes in discovery order.
    pub causes: Vec<RootCause>,
    pub termination: Termination,
    /// Explanatory power of the initial abnormal partition, sign-normalized.
    pub abnormal_ep: f64,
    /// Absolute explanatory-power threshold `t_pep · abnormal_ep`.
    pub ep_threshold: f64,
    pub partition_threshold: f64,
    pub direction: Direction,
}

impl RootCauseSet {
    pub fn elements(&self) -> Vec<Element> {
        self.causes.iter().map(|c| c.element.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.causes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.causes.is_empty()
    }
}

/// Prepared localization state for one table.
pub struct Localizer<'a> {
    cfg: LocalizerConfig,
    space: SearchSpace<'a>,
    weights: WeightedLeafSet,
    abnormal_ep: f64,
}

impl<'a> Localizer<'a> {
    /// Partitions the table and fixes the sign normalization.
    pub fn new(table: &'a LeafTable, cfg: &LocalizerConfig) -> Result<Self> {
        cfg.validate()?;
        if table.is_empty() {
            return Err(Error::EmptyTable);
        }
        let change = overall_change(table)?;
        let weights = partition_and_weight_with(table, &cfg.partition_options())?;
        let (v, f) = table.aggregate_rows(weights.abnormal_leaves());
        let raw = (v - f) / change;
        let sign = if raw < 0.0 { -1.0 } else { 1.0 };
        let space = SearchSpace::new(table, change, sign, cfg.risk_options(), cfg.prune_layers)
            .ok_or_else(|| Error::Config("element key space exceeds 64 bits".into()))?;
        Ok(Self {
            cfg: cfg.clone(),
            space,
            weights,
            abnormal_ep: sign * raw,
        })
    }

    pub fn weights(&self) -> &WeightedLeafSet {
        &self.weights
    }

    /// +1 or −1: the factor applied to every explanatory power.
    pub fn sign(&self) -> f64 {
        self.space.sign
    }

    pub fn ep_threshold(&self) -> f64 {
        self.cfg.pep_threshold * self.abnormal_ep
    }

    /// Sign-normalized explanatory power of the active abnormal leaves.
    pub fn remaining_abnormal_ep(&self, weights: &WeightedLeafSet) -> f64 {
        let (v, f) = self.space.table.aggregate_rows(weights.abnormal_leaves());
        self.space.ep_of(v, f)
    }

    /// Sign-normalized explanatory power of `e` over the active leaves.
    pub fn explanatory_power(&self, e: &Element, weights: &WeightedLeafSet) -> f64 {
        let t = self.space.table;
        let (v, f) = t.aggregate_rows(
            weights
                .active_leaves()
                .filter(|&i| e.covers(t.row(i))),
        );
        self.space.ep_of(v, f)
    }

    /// Upper bound on the explanatory power of any subset of `e`'s active
    /// leaves.
    pub fn max_potential_ep(&self, e: &Element, weights: &WeightedLeafSet) -> f64 {
        self.space.max_potential_ep(e, weights)
    }

    /// One layer-ordered search over the active leaves of `weights`.
    pub fn element_search(
        &self,
        weights: &WeightedLeafSet,
        risk_threshold: f64,
        ep_threshold: f64,
    ) -> Option<Candidate> {
        self.space.search(
            weights,
            Thresholds {
                risk: risk_threshold,
                ep: ep_threshold,
            },
        )
    }

    pub fn run(&self) -> RootCauseSet {
        let t_ep = self.ep_threshold();
        let mut weights = self.weights.clone();
        let mut remaining = self.abnormal_ep;
        let mut causes = Vec::new();
        let cap = self.cfg.max_iterations.unwrap_or(self.space.table.len());

        let termination = if remaining <= 0.0 {
            Termination::Explained
        } else {
            loop {
                if remaining < t_ep {
                    break Termination::Explained;
                }
                if causes.len() >= cap {
                    break Termination::IterationCap;
                }
                let Some(c) = self.element_search(&weights, self.cfg.risk_threshold, t_ep) else {
                    break Termination::NoCandidate;
                };
                let table = self.space.table;
                let covered: Vec<usize> = weights
                    .active_leaves()
                    .filter(|&i| c.element.covers(table.row(i)))
                    .collect();
                let removed = weights.remove(&covered);
                debug_assert!(removed > 0);
                remaining = self.remaining_abnormal_ep(&weights);
                causes.push(RootCause {
                    element: c.element,
                    breakdown: c.breakdown,
                    ep: c.ep,
                    layer: c.layer,
                    iteration: causes.len(),
                });
            }
        };

        RootCauseSet {
            causes,
            termination,
            abnormal_ep: self.abnormal_ep,
            ep_threshold: t_ep,
            partition_threshold: self.weights.threshold(),
            direction: self.weights.direction(),
        }
    }
}

/// Localizes the root-cause set of one anomalous table.
pub fn localize(table: &LeafTable, cfg: &LocalizerConfig) -> Result<RootCauseSet> {
    Ok(Localizer::new(table, cfg)?.run())
}

/// `ep⁺(e) = Σ_{leaves of e} max(0, sign · ep(leaf))` over the whole table.
pub fn max_potential_ep(e: &Element, table: &LeafTable, sign: f64) -> Result<f64> {
    let change = overall_change(table)?;
    Ok(table
        .leaf_descendants(e)
        .into_iter()
        .map(|i| (sign * (table.actual(i) - table.forecast(i)) / change).max(0.0))
        .sum())
}
