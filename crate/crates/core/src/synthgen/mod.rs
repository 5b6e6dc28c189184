//! Seeded synthetic datasets with injected, ripple-consistent anomalies and
//! their ground truth.

mod sample;
mod spec;

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use sample::{bernoulli, instance_rng, normal, standard_normal, uniform, uniform_int, weibull};
pub use spec::{AnomalyLayer, DatasetSpec, PRESETS};

use crate::datamodel::{enumerate_cuboids, AttributeSchema, Cuboid, Element, LeafTable, WILDCARD};
use crate::error::{Error, Result};
use crate::partition::Direction;

/// Rejected placements tolerated before an instance is regenerated.
pub const MAX_REJECTIONS: usize = 1000;
const MAX_REGENERATIONS: usize = 1000;

/// One injected anomaly: a set of elements in a single cuboid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Anomaly {
    pub elements: Vec<Element>,
    pub severity: f64,
    pub deviation: f64,
}

/// Measure column that an injection scales down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Actual,
    Forecast,
}

impl Side {
    /// Scaling the actual column pushes deviation scores up.
    pub fn direction(self) -> Direction {
        match self {
            Side::Actual => Direction::Positive,
            Side::Forecast => Direction::Negative,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceTruth {
    pub id: String,
    pub side: Side,
    pub anomalies: Vec<Anomaly>,
}

impl InstanceTruth {
    pub fn direction(&self) -> Direction {
        self.side.direction()
    }

    /// All anomaly elements, flattened.
    pub fn elements(&self) -> Vec<Element> {
        self.anomalies
            .iter()
            .flat_map(|a| a.elements.iter().cloned())
            .collect()
    }

    pub fn formatted(&self, schema: &AttributeSchema) -> Vec<String> {
        self.elements().iter().map(|e| e.format(schema)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct GroundTruth {
    pub instances: Vec<InstanceTruth>,
}

impl GroundTruth {
    /// Instance id → formatted truth elements.
    pub fn to_sets(&self, schema: &AttributeSchema) -> BTreeMap<String, Vec<String>> {
        self.instances
            .iter()
            .map(|t| (t.id.clone(), t.formatted(schema)))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub id: String,
    pub table: LeafTable,
    pub truth: InstanceTruth,
}

#[derive(Debug, Clone)]
pub struct GeneratedDataset {
    pub spec: DatasetSpec,
    pub schema: AttributeSchema,
    pub instances: Vec<GeneratedInstance>,
}

impl GeneratedDataset {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            instances: self.instances.iter().map(|i| i.truth.clone()).collect(),
        }
    }

    pub fn manifest(&self) -> Vec<(String, String)> {
        manifest(&self.spec)
    }
}

/// Spec fields plus the tool version.
pub fn manifest(spec: &DatasetSpec) -> Vec<(String, String)> {
    let mut kv = spec.to_key_values();
    kv.push(("tool_version".into(), env!("CARGO_PKG_VERSION").into()));
    kv
}

/// Zero-padded id of instance `index`.
pub fn instance_id(index: usize, instances: usize) -> String {
    let width = instances.saturating_sub(1).to_string().len().max(4);
    format!("{index:0width$}")
}

/// Dense row-major layout of the full leaf grid, last attribute fastest.
#[derive(Debug, Clone)]
struct Grid {
    cards: Vec<usize>,
    strides: Vec<usize>,
    len: usize,
}

impl Grid {
    fn new(cards: &[usize]) -> Self {
        let mut strides = vec![1; cards.len()];
        for a in (0..cards.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * cards[a + 1];
        }
        Self {
            cards: cards.to_vec(),
            strides,
            len: cards.iter().product(),
        }
    }

    fn rows(&self) -> Vec<u32> {
        let d = self.cards.len();
        let mut rows = Vec::with_capacity(self.len * d);
        let mut coords = vec![0u32; d];
        for _ in 0..self.len {
            rows.extend_from_slice(&coords);
            for a in (0..d).rev() {
                coords[a] += 1;
                if (coords[a] as usize) < self.cards[a] {
                    break;
                }
                coords[a] = 0;
            }
        }
        rows
    }

    /// Ascending leaf indices under `e`.
    fn leaves_under(&self, e: &Element) -> Vec<usize> {
        let mut out = vec![0usize];
        for (a, &c) in e.coords().iter().enumerate() {
            if c == WILDCARD {
                out = out
                    .iter()
                    .flat_map(|&o| (0..self.cards[a]).map(move |v| o + v * self.strides[a]))
                    .collect();
            } else {
                for o in &mut out {
                    *o += c as usize * self.strides[a];
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Weibull actuals for every leaf of the full grid, with a random fraction
/// of forced zeros.
pub fn sample_actuals<R: Rng + ?Sized>(
    leaves: usize,
    zero_prob_range: (f64, f64),
    rng: &mut R,
) -> Vec<f64> {
    let shape = uniform(rng, 0.5, 1.0);
    let mut actual: Vec<f64> = (0..leaves).map(|_| weibull(rng, shape) * 100.0).collect();
    let p = uniform(rng, zero_prob_range.0, zero_prob_range.1);
    for x in &mut actual {
        if bernoulli(rng, p) {
            *x = 0.0;
        }
    }
    actual
}

/// Noisy forecasts `f = max(v·N(1, σ), 0)`, then a fair per-leaf swap of
/// actual and forecast. Returns `(actual, forecast)`.
pub fn sample_forecasts<R: Rng + ?Sized>(
    actuals: &[f64],
    sigma: f64,
    rng: &mut R,
) -> (Vec<f64>, Vec<f64>) {
    let mut actual = actuals.to_vec();
    let mut forecast = Vec::with_capacity(actuals.len());
    for v in &mut actual {
        let f = (*v * normal(rng, 1.0, sigma)).max(0.0);
        if bernoulli(rng, 0.5) {
            forecast.push(*v);
            *v = f;
        } else {
            forecast.push(f);
        }
    }
    (actual, forecast)
}

/// Draws the anomalies of one instance. `None` when [`MAX_REJECTIONS`]
/// placements were rejected.
pub fn place_anomalies<R: Rng + ?Sized>(
    schema: &AttributeSchema,
    spec: &DatasetSpec,
    rng: &mut R,
) -> Option<Vec<Anomaly>> {
    let d = schema.dim();
    let cuboids = enumerate_cuboids(d);
    let top = Cuboid::from_mask((1u64 << d) - 1);
    let count = uniform_int(rng, spec.anomaly_count_range.0, spec.anomaly_count_range.1);
    let mut placed: Vec<Anomaly> = Vec::with_capacity(count);
    let mut used: HashSet<u64> = HashSet::new();
    let mut rejections = 0;

    while placed.len() < count {
        if rejections >= MAX_REJECTIONS {
            return None;
        }
        let (cuboid, n) = match spec.anomaly_layer {
            AnomalyLayer::TopOnly => (top, 1),
            AnomalyLayer::Free => {
                let layer = &cuboids[uniform_int(rng, 0, d - 1)];
                let c = layer[uniform_int(rng, 0, layer.len() - 1)];
                let (lo, hi) = spec.anomaly_element_range;
                (c, uniform_int(rng, lo, hi))
            }
        };
        let attrs = cuboid.attributes();
        let capacity: u128 = attrs.iter().map(|&a| schema.cardinality(a) as u128).product();
        if (spec.anomaly_layer == AnomalyLayer::Free && used.contains(&cuboid.mask()))
            || n as u128 > capacity
        {
            rejections += 1;
            continue;
        }

        let mut elements: Vec<Element> = Vec::with_capacity(n);
        while elements.len() < n {
            let mut coords = vec![WILDCARD; d];
            for &a in &attrs {
                coords[a] = uniform_int(rng, 0, schema.cardinality(a) - 1) as u32;
            }
            let e = Element::new(coords);
            if !elements.contains(&e) {
                elements.push(e);
            }
        }
        elements.sort();

        let overlaps = placed.iter().flat_map(|a| &a.elements).any(|o| {
            elements.iter().any(|e| {
                e == o
                    || e.is_descendant_of(o).unwrap_or(false)
                    || o.is_descendant_of(e).unwrap_or(false)
            })
        });
        if overlaps {
            rejections += 1;
            continue;
        }
        let severity = uniform(rng, spec.severity_range.0, spec.severity_range.1);
        let deviation = uniform(rng, spec.deviation_range.0, spec.deviation_range.1);
        used.insert(cuboid.mask());
        placed.push(Anomaly {
            elements,
            severity,
            deviation,
        });
    }
    Some(placed)
}

/// Column to scale: the actual one when the anomaly's leaves have more
/// actual than forecast mass.
pub fn injection_side(table: &LeafTable, anomaly: &Anomaly) -> Side {
    let leaves = anomaly_leaves(anomaly, |e| table.leaf_descendants(e));
    side_of(&leaves, table.actuals(), table.forecasts())
}

/// Scales the `side` column of every leaf under the anomaly by
/// `max(1 − N(s, d), 0)`, one draw per leaf.
pub fn inject_anomaly<R: Rng + ?Sized>(
    table: &LeafTable,
    anomaly: &Anomaly,
    side: Side,
    rng: &mut R,
) -> Result<LeafTable> {
    let leaves = anomaly_leaves(anomaly, |e| table.leaf_descendants(e));
    let mut actual = table.actuals().to_vec();
    let mut forecast = table.forecasts().to_vec();
    scale(&leaves, anomaly, side, &mut actual, &mut forecast, rng);
    table.map_values(|i, _, _| (actual[i], forecast[i]))
}

fn anomaly_leaves(anomaly: &Anomaly, under: impl Fn(&Element) -> Vec<usize>) -> Vec<usize> {
    let mut leaves: Vec<usize> = anomaly.elements.iter().flat_map(under).collect();
    leaves.sort_unstable();
    leaves.dedup();
    leaves
}

fn side_of(leaves: &[usize], actual: &[f64], forecast: &[f64]) -> Side {
    let v: f64 = leaves.iter().map(|&i| actual[i]).sum();
    let f: f64 = leaves.iter().map(|&i| forecast[i]).sum();
    if v > f {
        Side::Actual
    } else {
        Side::Forecast
    }
}

fn scale<R: Rng + ?Sized>(
    leaves: &[usize],
    anomaly: &Anomaly,
    side: Side,
    actual: &mut [f64],
    forecast: &mut [f64],
    rng: &mut R,
) {
    let column = match side {
        Side::Actual => actual,
        Side::Forecast => forecast,
    };
    for &i in leaves {
        let factor = 1.0 - normal(rng, anomaly.severity, anomaly.deviation);
        column[i] = (column[i] * factor).max(0.0);
    }
}

/// Instance `index` of the dataset; depends only on `(spec, index)`.
pub fn generate_instance(
    spec: &DatasetSpec,
    schema: &AttributeSchema,
    index: usize,
) -> Result<GeneratedInstance> {
    let grid = Grid::new(&spec.cardinalities);
    let mut rng = instance_rng(spec.seed, index as u64);
    let id = instance_id(index, spec.instances);
    for attempt in 0..MAX_REGENERATIONS {
        let base = sample_actuals(grid.len, spec.zero_prob_range, &mut rng);
        let sigma = uniform(&mut rng, spec.sigma_range.0, spec.sigma_range.1);
        let (mut actual, mut forecast) = sample_forecasts(&base, sigma, &mut rng);
        let Some(anomalies) = place_anomalies(schema, spec, &mut rng) else {
            log::warn!("instance {id}: placement infeasible, regenerating (attempt {attempt})");
            continue;
        };
        let leaf_sets: Vec<Vec<usize>> = anomalies
            .iter()
            .map(|a| anomaly_leaves(a, |e| grid.leaves_under(e)))
            .collect();
        let side = side_of(&leaf_sets[0], &actual, &forecast);
        for (a, leaves) in anomalies.iter().zip(&leaf_sets) {
            scale(leaves, a, side, &mut actual, &mut forecast, &mut rng);
        }
        let table = LeafTable::from_flat(schema.clone(), grid.rows(), actual, forecast)?;
        return Ok(GeneratedInstance {
            id: id.clone(),
            table,
            truth: InstanceTruth {
                id,
                side,
                anomalies,
            },
        });
    }
    Err(Error::Config(format!(
        "instance {id}: no feasible anomaly placement after {MAX_REGENERATIONS} regenerations"
    )))
}

/// Generates every instance in memory, in parallel.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<GeneratedDataset> {
    spec.validate()?;
    let schema = AttributeSchema::synthetic(&spec.cardinalities)?;
    let instances = (0..spec.instances)
        .into_par_iter()
        .map(|i| generate_instance(spec, &schema, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(GeneratedDataset {
        spec: spec.clone(),
        schema,
        instances,
    })
}

/// Generates the dataset straight to `dir`, keeping only the ground truth
/// in memory.
pub fn write_dataset(spec: &DatasetSpec, dir: &Path) -> Result<GroundTruth> {
    spec.validate()?;
    let schema = AttributeSchema::synthetic(&spec.cardinalities)?;
    let inst_dir = dir.join(crate::io::INSTANCE_DIR);
    std::fs::create_dir_all(&inst_dir).map_err(|e| Error::io(&inst_dir, e))?;
    let truths = (0..spec.instances)
        .into_par_iter()
        .map(|i| {
            let inst = generate_instance(spec, &schema, i)?;
            let path = inst_dir.join(format!("{}.csv", inst.id));
            crate::io::write_instance(&path, &inst.table)?;
            Ok(inst.truth)
        })
        .collect::<Result<Vec<_>>>()?;
    let truth = GroundTruth { instances: truths };
    crate::io::write_truth(&dir.join(crate::io::TRUTH_FILE), &truth.to_sets(&schema))?;
    crate::io::write_anomalies(&dir.join(crate::io::ANOMALIES_FILE), &truth, &schema)?;
    crate::io::write_manifest(&dir.join(crate::io::MANIFEST_FILE), &manifest(spec))?;
    Ok(truth)
}
