use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::{instance_counts, scenario_label, summarize, EvalReport, InstanceOutcome};
use crate::datamodel::{LeafTable, MeasureKind};
use crate::error::{Error, Result};
use crate::io;
use crate::localization::{ablation_variant, localize, Ablation, LocalizerConfig};
use crate::synthgen::GeneratedDataset;

/// One loaded instance; a table that failed to load keeps its error text.
#[derive(Debug, Clone)]
pub struct DatasetInstance {
    pub id: String,
    pub table: std::result::Result<LeafTable, String>,
    /// Truth elements as written in the truth file.
    pub truth: Vec<String>,
}

/// A dataset held in memory, for repeated runs.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub instances: Vec<DatasetInstance>,
}

impl Dataset {
    /// Loads every instance and the truth file of a dataset directory.
    pub fn load(dir: &Path, kind: Option<MeasureKind>) -> Result<Self> {
        let entries = dataset_entries(dir)?;
        let instances = entries
            .into_par_iter()
            .map(|(id, path, truth)| DatasetInstance {
                table: io::read_instance(&path, kind).map_err(|e| e.to_string()),
                id,
                truth,
            })
            .collect();
        Ok(Self { instances })
    }

    pub fn from_generated(data: &GeneratedDataset) -> Self {
        let instances = data
            .instances
            .iter()
            .map(|inst| DatasetInstance {
                id: inst.id.clone(),
                table: Ok(inst.table.clone()),
                truth: inst.truth.formatted(&data.schema),
            })
            .collect();
        Self { instances }
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }
}

/// `(id, instance path, raw truth)` for every instance; ids of instance
/// files and truth rows must agree.
fn dataset_entries(dir: &Path) -> Result<Vec<(String, std::path::PathBuf, Vec<String>)>> {
    let mut truth = io::read_truth(&dir.join(io::TRUTH_FILE))?;
    let files = io::list_instances(dir)?;
    let mut out = Vec::with_capacity(files.len());
    for (id, path) in files {
        let t = truth
            .remove(&id)
            .ok_or_else(|| Error::UnknownInstance(format!("{id} (no ground truth)")))?;
        out.push((id, path, t));
    }
    if let Some(id) = truth.keys().next() {
        return Err(Error::UnknownInstance(format!("{id} (no instance file)")));
    }
    Ok(out)
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::Config(format!("cannot start {jobs} worker threads: {e}")))
}

fn evaluate_one(
    id: &str,
    table: std::result::Result<&LeafTable, &str>,
    raw_truth: &[String],
    cfg: &LocalizerConfig,
) -> InstanceOutcome {
    let mut outcome = InstanceOutcome {
        id: id.to_owned(),
        counts: Default::default(),
        predicted: Vec::new(),
        truth: raw_truth.to_vec(),
        scenario: scenario_label(raw_truth),
        runtime_secs: None,
        termination: None,
        error: None,
    };
    let result = table.map_err(str::to_owned).and_then(|t| {
        let names = t.schema().names();
        let truth = raw_truth
            .iter()
            .map(|e| io::canonical_element(e, names))
            .collect::<Result<Vec<_>>>()
            .map_err(|e| format!("truth: {e}"))?;
        let start = Instant::now();
        let rs = localize(t, cfg).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let predicted: Vec<String> = rs.causes.iter().map(|c| c.element.format(t.schema())).collect();
        Ok((truth, predicted, secs, rs.termination.as_str()))
    });
    match result {
        Ok((truth, predicted, secs, termination)) => {
            outcome.counts = instance_counts(&predicted, &truth);
            outcome.scenario = scenario_label(&truth);
            outcome.truth = truth;
            outcome.predicted = predicted;
            outcome.runtime_secs = Some(secs);
            outcome.termination = Some(termination.to_owned());
        }
        Err(e) => {
            outcome.counts = instance_counts(&[], raw_truth);
            outcome.error = Some(e);
        }
    }
    outcome
}

/// Localizes every instance of an in-memory dataset on `jobs` threads
/// (0 = one per core) and scores the result.
pub fn run_dataset(ds: &Dataset, cfg: &LocalizerConfig, jobs: usize) -> Result<EvalReport> {
    cfg.validate()?;
    let outcomes = pool(jobs)?.install(|| {
        ds.instances
            .par_iter()
            .map(|inst| {
                let table = inst.table.as_ref().map_err(String::as_str);
                evaluate_one(&inst.id, table, &inst.truth, cfg)
            })
            .collect()
    });
    Ok(summarize(outcomes, Some(cfg.clone())))
}

/// Runs a dataset directory without holding every instance in memory.
/// Parsing is excluded from the per-instance runtime.
pub fn run_benchmark(
    dir: &Path,
    cfg: &LocalizerConfig,
    jobs: usize,
    kind: Option<MeasureKind>,
) -> Result<EvalReport> {
    cfg.validate()?;
    let entries = dataset_entries(dir)?;
    let outcomes = pool(jobs)?.install(|| {
        entries
            .par_iter()
            .map(|(id, path, truth)| {
                let table = io::read_instance(path, kind).map_err(|e| e.to_string());
                let table = table.as_ref().map_err(String::as_str);
                evaluate_one(id, table, truth, cfg)
            })
            .collect()
    });
    Ok(summarize(outcomes, Some(cfg.clone())))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    /// `t_r` or `t_pep`: the parameter varied in this row.
    pub parameter: String,
    pub risk_threshold: f64,
    pub pep_threshold: f64,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub base: LocalizerConfig,
    pub rows: Vec<SweepRow>,
}

/// One-at-a-time sweep: `t_r` over `risk_grid` with `t_pep` fixed at the
/// base value, then `t_pep` over `pep_grid` with `t_r` fixed. Settings
/// that coincide are run once.
pub fn parameter_sweep(
    ds: &Dataset,
    base: &LocalizerConfig,
    risk_grid: &[f64],
    pep_grid: &[f64],
    jobs: usize,
) -> Result<SweepReport> {
    if risk_grid.is_empty() || pep_grid.is_empty() {
        return Err(Error::Config("sweep grids must be non-empty".into()));
    }
    let settings = risk_grid
        .iter()
        .map(|&r| ("t_r", r, base.pep_threshold))
        .chain(pep_grid.iter().map(|&p| ("t_pep", base.risk_threshold, p)));
    let mut rows: Vec<SweepRow> = Vec::new();
    for (parameter, r, p) in settings {
        if rows.iter().any(|row| row.risk_threshold == r && row.pep_threshold == p) {
            continue;
        }
        let cfg = LocalizerConfig {
            risk_threshold: r,
            pep_threshold: p,
            ..base.clone()
        };
        rows.push(SweepRow {
            parameter: parameter.to_owned(),
            risk_threshold: r,
            pep_threshold: p,
            report: run_dataset(ds, &cfg, jobs)?,
        });
    }
    Ok(SweepReport {
        base: base.clone(),
        rows,
    })
}

/// The base configuration followed by each single-component ablation.
pub fn ablation_study(
    ds: &Dataset,
    base: &LocalizerConfig,
    jobs: usize,
) -> Result<Vec<(String, EvalReport)>> {
    let mut out = vec![("full".to_owned(), run_dataset(ds, base, jobs)?)];
    for a in Ablation::ALL {
        let cfg = ablation_variant(base, &[a]);
        out.push((a.name().to_owned(), run_dataset(ds, &cfg, jobs)?));
    }
    Ok(out)
}
