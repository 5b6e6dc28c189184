use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::PartitionOptions;
use crate::risk::RiskOptions;

pub const DEFAULT_RISK_THRESHOLD: f64 = 0.5;
pub const DEFAULT_PEP_THRESHOLD: f64 = 0.02;
pub const DEFAULT_PRUNE_LAYERS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalizerConfig {
    /// Minimum risk `t_r` of a candidate element.
    pub risk_threshold: f64,
    /// Proportional explanatory-power threshold `t_pep` in `(0, 1]`.
    pub pep_threshold: f64,
    /// Elements in layers `1..=prune_layers` are pruned by their maximum
    /// potential explanatory power; 0 disables pruning.
    pub prune_layers: usize,
    pub no_outlier_removal: bool,
    pub no_r1: bool,
    pub no_r2: bool,
    pub no_weights: bool,
    /// Unique values trimmed from each end of the deviation scores.
    pub trim_k: usize,
    /// Iteration cap; `None` means the number of leaves.
    pub max_iterations: Option<usize>,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            risk_threshold: DEFAULT_RISK_THRESHOLD,
            pep_threshold: DEFAULT_PEP_THRESHOLD,
            prune_layers: DEFAULT_PRUNE_LAYERS,
            no_outlier_removal: false,
            no_r1: false,
            no_r2: false,
            no_weights: false,
            trim_k: 5,
            max_iterations: None,
        }
    }
}

/// Component switched off in an ablation run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Ablation {
    NoOutlierRemoval,
    NoR1,
    NoR2,
    NoWeights,
}

impl Ablation {
    pub const ALL: [Ablation; 4] = [
        Ablation::NoOutlierRemoval,
        Ablation::NoR1,
        Ablation::NoR2,
        Ablation::NoWeights,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::NoOutlierRemoval => "no-outlier-removal",
            Ablation::NoR1 => "no-r1",
            Ablation::NoR2 => "no-r2",
            Ablation::NoWeights => "no-weights",
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pep_threshold > 0.0 && self.pep_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "pep threshold must be in (0, 1], got {}",
                self.pep_threshold
            )));
        }
        if !self.risk_threshold.is_finite() {
            return Err(Error::Config("risk threshold must be finite".into()));
        }
        if self.max_iterations == Some(0) {
            return Err(Error::Config("max iterations must be positive".into()));
        }
        Ok(())
    }

    pub fn ablations(&self) -> Vec<Ablation> {
        Ablation::ALL
            .into_iter()
            .filter(|a| match a {
                Ablation::NoOutlierRemoval => self.no_outlier_removal,
                Ablation::NoR1 => self.no_r1,
                Ablation::NoR2 => self.no_r2,
                Ablation::NoWeights => self.no_weights,
            })
            .collect()
    }

    pub(crate) fn partition_options(&self) -> PartitionOptions {
        PartitionOptions {
            trim_k: self.trim_k,
            trim_outliers: !self.no_outlier_removal,
            uniform_weights: self.no_weights,
        }
    }

    pub(crate) fn risk_options(&self) -> RiskOptions {
        RiskOptions {
            fixed_r1: self.no_r1,
            fixed_r2: self.no_r2,
        }
    }
}

/// `cfg` with the given components switched off.
pub fn ablation_variant(cfg: &LocalizerConfig, ablations: &[Ablation]) -> LocalizerConfig {
    let mut out = cfg.clone();
    for a in ablations {
        match a {
            Ablation::NoOutlierRemoval => out.no_outlier_removal = true,
            Ablation::NoR1 => out.no_r1 = true,
            Ablation::NoR2 => out.no_r2 = true,
            Ablation::NoWeights => out.no_weights = true,
        }
    }
    out
}
