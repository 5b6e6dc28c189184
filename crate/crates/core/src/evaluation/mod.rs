//! Element-level F1 scoring, the benchmark runner and parameter sweeps.

mod bench;
pub(crate) mod report;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

pub use bench::{
    ablation_study, parameter_sweep, run_benchmark, run_dataset, Dataset, DatasetInstance,
    SweepReport, SweepRow,
};
pub use report::format_number;

use crate::error::{Error, Result};
use crate::localization::LocalizerConfig;

/// Instance id → formatted elements.
pub type ElementSets = BTreeMap<String, Vec<String>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    /// `2·TP / (2·TP + FP + FN)`; 1 when there is nothing to find and
    /// nothing was predicted.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.tp + self.fp + self.fn_;
        if denom == 0 {
            1.0
        } else {
            (2 * self.tp) as f64 / denom as f64
        }
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub id: String,
    pub counts: Counts,
    pub predicted: Vec<String>,
    pub truth: Vec<String>,
    pub scenario: String,
    pub runtime_secs: Option<f64>,
    pub termination: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub scenario: String,
    pub instances: usize,
    pub counts: Counts,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub instances: Vec<InstanceOutcome>,
    pub counts: Counts,
    pub f1: f64,
    pub scenarios: Vec<ScenarioRow>,
    pub runtime_mean: f64,
    pub runtime_std: f64,
    /// Instances that failed to load or run; they are scored as empty
    /// predictions.
    pub failures: usize,
    pub config: Option<LocalizerConfig>,
}

impl EvalReport {
    pub fn instance(&self, id: &str) -> Option<&InstanceOutcome> {
        self.instances.iter().find(|o| o.id == id)
    }

    /// Per-instance F1 standard deviation.
    pub fn instance_f1_std(&self) -> f64 {
        let f1s: Vec<f64> = self.instances.iter().map(|o| o.counts.f1()).collect();
        mean_std(&f1s).1
    }

    pub fn predicted_elements(&self) -> usize {
        self.instances.iter().map(|o| o.predicted.len()).sum()
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Scenario label `(layer, #elements)` of a truth set; `mixed` when the
/// elements sit in different layers.
pub fn scenario_label(truth: &[String]) -> String {
    if truth.is_empty() {
        return "(none)".into();
    }
    let layers: BTreeSet<usize> = truth
        .iter()
        .map(|e| if e.is_empty() { 0 } else { e.split('&').count() })
        .collect();
    match layers.iter().next() {
        Some(l) if layers.len() == 1 => format!("({l}, {})", truth.len()),
        _ => format!("(mixed, {})", truth.len()),
    }
}

pub fn instance_counts(predicted: &[String], truth: &[String]) -> Counts {
    let p: BTreeSet<&String> = predicted.iter().collect();
    let t: BTreeSet<&String> = truth.iter().collect();
    let tp = p.intersection(&t).count();
    Counts {
        tp,
        fp: p.len() - tp,
        fn_: t.len() - tp,
    }
}

/// Micro-averaged element-level F1 of `predictions` against `truth`.
/// Both maps must hold the same instance ids.
pub fn score_f1(predictions: &ElementSets, truth: &ElementSets) -> Result<EvalReport> {
    check_ids(predictions, truth)?;
    let outcomes = truth
        .iter()
        .map(|(id, t)| {
            let p = &predictions[id];
            InstanceOutcome {
                id: id.clone(),
                counts: instance_counts(p, t),
                predicted: p.clone(),
                truth: t.clone(),
                scenario: scenario_label(t),
                runtime_secs: None,
                termination: None,
                error: None,
            }
        })
        .collect();
    Ok(summarize(outcomes, None))
}

fn check_ids(predictions: &ElementSets, truth: &ElementSets) -> Result<()> {
    if let Some(id) = predictions.keys().find(|id| !truth.contains_key(*id)) {
        return Err(Error::UnknownInstance(format!("{id} (no ground truth)")));
    }
    if let Some(id) = truth.keys().find(|id| !predictions.contains_key(*id)) {
        return Err(Error::UnknownInstance(format!("{id} (no prediction)")));
    }
    Ok(())
}

pub(crate) fn summarize(
    mut outcomes: Vec<InstanceOutcome>,
    config: Option<LocalizerConfig>,
) -> EvalReport {
    outcomes.sort_by(|a, b| a.id.cmp(&b.id));
    let mut counts = Counts::default();
    let mut by_scenario: BTreeMap<String, (usize, Counts)> = BTreeMap::new();
    for o in &outcomes {
        counts.add(o.counts);
        let entry = by_scenario.entry(o.scenario.clone()).or_default();
        entry.0 += 1;
        entry.1.add(o.counts);
    }
    let scenarios = by_scenario
        .into_iter()
        .map(|(scenario, (instances, c))| ScenarioRow {
            scenario,
            instances,
            counts: c,
            f1: c.f1(),
        })
        .collect();
    let runtimes: Vec<f64> = outcomes.iter().filter_map(|o| o.runtime_secs).collect();
    let (runtime_mean, runtime_std) = mean_std(&runtimes);
    EvalReport {
        failures: outcomes.iter().filter(|o| o.error.is_some()).count(),
        f1: counts.f1(),
        counts,
        scenarios,
        runtime_mean,
        runtime_std,
        instances: outcomes,
        config,
    }
}
