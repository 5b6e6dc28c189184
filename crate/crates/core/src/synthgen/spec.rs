use std::collections::BTreeMap;
use std::fmt::Display;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datamodel::element_space_size;
use crate::error::{Error, Result};

/// Where anomalies may be placed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnomalyLayer {
    /// Any cuboid; at most one anomaly per cuboid.
    Free,
    /// Only leaf elements, one per anomaly.
    TopOnly,
}

impl AnomalyLayer {
    pub fn as_str(self) -> &'static str {
        match self {
            AnomalyLayer::Free => "free",
            AnomalyLayer::TopOnly => "top-only",
        }
    }
}

/// Parameters of a synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    pub instances: usize,
    pub cardinalities: Vec<usize>,
    pub sigma_range: (f64, f64),
    pub zero_prob_range: (f64, f64),
    pub anomaly_count_range: (usize, usize),
    /// Elements per anomaly; ignored for [`AnomalyLayer::TopOnly`].
    pub anomaly_element_range: (usize, usize),
    pub anomaly_layer: AnomalyLayer,
    pub severity_range: (f64, f64),
    pub deviation_range: (f64, f64),
    pub seed: u64,
}

pub const PRESETS: [&str; 3] = ["S", "L", "H"];

impl DatasetSpec {
    /// Preset `S`, `L` or `H` (case-insensitive).
    pub fn preset(name: &str) -> Result<Self> {
        let base = DatasetSpec {
            name: "S".into(),
            instances: 1000,
            cardinalities: vec![10, 12, 10, 8, 5],
            sigma_range: (0.0, 0.25),
            zero_prob_range: (0.0, 0.25),
            anomaly_count_range: (1, 3),
            anomaly_element_range: (1, 3),
            anomaly_layer: AnomalyLayer::Free,
            severity_range: (0.25, 1.0),
            deviation_range: (0.0, 0.1),
            seed: 0,
        };
        match name.to_ascii_uppercase().as_str() {
            "S" => Ok(base),
            "L" => Ok(DatasetSpec {
                name: "L".into(),
                cardinalities: vec![10, 24, 10, 15],
                sigma_range: (0.0, 0.1),
                anomaly_count_range: (1, 5),
                anomaly_element_range: (1, 1),
                anomaly_layer: AnomalyLayer::TopOnly,
                severity_range: (0.5, 1.0),
                deviation_range: (0.0, 0.0),
                ..base
            }),
            "H" => Ok(DatasetSpec {
                name: "H".into(),
                instances: 100,
                cardinalities: vec![10, 5, 250, 20, 8, 12],
                ..base
            }),
            other => Err(Error::Config(format!(
                "unknown preset `{other}`; expected one of {}",
                PRESETS.join(", ")
            ))),
        }
    }

    pub fn dim(&self) -> usize {
        self.cardinalities.len()
    }

    /// Leaves per instance.
    pub fn leaf_count(&self) -> Result<usize> {
        self.cardinalities
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or(Error::Overflow)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.cardinalities.is_empty() || self.cardinalities.len() > 26 {
            return bad("between 1 and 26 attributes are required".into());
        }
        if self.cardinalities.contains(&0) {
            return bad("attribute cardinalities must be positive".into());
        }
        let leaves = self.leaf_count()?;
        if leaves > u32::MAX as usize {
            return bad(format!("{leaves} leaves per instance is too many"));
        }
        let ranges = [
            ("sigma_range", self.sigma_range),
            ("zero_prob_range", self.zero_prob_range),
            ("severity_range", self.severity_range),
            ("deviation_range", self.deviation_range),
        ];
        for (name, (lo, hi)) in ranges {
            if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && lo <= hi) {
                return bad(format!("{name} must satisfy 0 <= low <= high, got [{lo}, {hi}]"));
            }
        }
        if self.zero_prob_range.1 > 1.0 {
            return bad("zero_prob_range must lie in [0, 1]".into());
        }
        if self.severity_range.1 > 1.0 {
            return bad("severity_range must lie in [0, 1]".into());
        }
        for (name, (lo, hi)) in [
            ("anomaly_count_range", self.anomaly_count_range),
            ("anomaly_element_range", self.anomaly_element_range),
        ] {
            if lo == 0 || lo > hi {
                return bad(format!("{name} must satisfy 1 <= low <= high, got [{lo}, {hi}]"));
            }
        }
        let slots = match self.anomaly_layer {
            AnomalyLayer::Free => (1u128 << self.dim()) - 1,
            AnomalyLayer::TopOnly => leaves as u128,
        };
        if self.anomaly_count_range.1 as u128 > slots {
            return bad(format!(
                "cannot place {} anomalies: only {slots} slots",
                self.anomaly_count_range.1
            ));
        }
        if self.anomaly_layer == AnomalyLayer::Free {
            let max_cuboid = element_space_size(&self.cardinalities)?;
            if self.anomaly_element_range.0 as u128 > max_cuboid {
                return bad("anomaly_element_range exceeds the element space".into());
            }
        }
        Ok(())
    }

    /// Flat `key=value` pairs, in a fixed order.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        fn pair<T: Display>(r: (T, T)) -> String {
            format!("{},{}", r.0, r.1)
        }
        let cards: Vec<String> = self.cardinalities.iter().map(|c| c.to_string()).collect();
        vec![
            ("name".into(), self.name.clone()),
            ("instances".into(), self.instances.to_string()),
            ("cardinalities".into(), cards.join(",")),
            ("sigma_range".into(), pair(self.sigma_range)),
            ("zero_prob_range".into(), pair(self.zero_prob_range)),
            ("anomaly_count_range".into(), pair(self.anomaly_count_range)),
            ("anomaly_element_range".into(), pair(self.anomaly_element_range)),
            ("anomaly_layer".into(), self.anomaly_layer.as_str().into()),
            ("severity_range".into(), pair(self.severity_range)),
            ("deviation_range".into(), pair(self.deviation_range)),
            ("seed".into(), self.seed.to_string()),
        ]
    }

    /// Inverse of [`DatasetSpec::to_key_values`]. Keys missing from `kv`
    /// keep the value of the `preset` key (default `S`); unknown keys are
    /// rejected except `tool_version`.
    pub fn from_key_values(kv: &BTreeMap<String, String>) -> Result<Self> {
        let mut spec = DatasetSpec::preset(kv.get("preset").map_or("S", |s| s.as_str()))?;
        for (key, value) in kv {
            let v = value.trim();
            match key.as_str() {
                "preset" | "tool_version" => {}
                "name" => spec.name = v.to_owned(),
                "instances" => spec.instances = scalar(key, v)?,
                "cardinalities" => {
                    spec.cardinalities = v
                        .split(',')
                        .map(|s| scalar(key, s.trim()))
                        .collect::<Result<_>>()?
                }
                "sigma_range" => spec.sigma_range = range(key, v)?,
                "zero_prob_range" => spec.zero_prob_range = range(key, v)?,
                "anomaly_count_range" => spec.anomaly_count_range = range(key, v)?,
                "anomaly_element_range" => spec.anomaly_element_range = range(key, v)?,
                "anomaly_layer" => {
                    spec.anomaly_layer = match v {
                        "free" => AnomalyLayer::Free,
                        "top-only" => AnomalyLayer::TopOnly,
                        _ => {
                            return Err(Error::Config(format!(
                                "anomaly_layer must be `free` or `top-only`, got `{v}`"
                            )))
                        }
                    }
                }
                "severity_range" => spec.severity_range = range(key, v)?,
                "deviation_range" => spec.deviation_range = range(key, v)?,
                "seed" => spec.seed = scalar(key, v)?,
                _ => return Err(Error::Config(format!("unknown spec key `{key}`"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn scalar<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("invalid value `{v}` for `{key}`")))
}

/// `lo,hi`, or a single value for a degenerate range.
fn range<T: FromStr + Copy>(key: &str, v: &str) -> Result<(T, T)> {
    match v.split_once(',') {
        Some((lo, hi)) => Ok((scalar(key, lo.trim())?, scalar(key, hi.trim())?)),
        None => {
            let x = scalar(key, v)?;
            Ok((x, x))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_leaf_counts() {
        assert_eq!(DatasetSpec::preset("S").unwrap().leaf_count().unwrap(), 48_000);
        assert_eq!(DatasetSpec::preset("l").unwrap().leaf_count().unwrap(), 36_000);
        let h = DatasetSpec::preset("H").unwrap();
        assert_eq!(h.leaf_count().unwrap(), 24_000_000);
        assert_eq!(h.instances, 100);
        for p in PRESETS {
            DatasetSpec::preset(p).unwrap().validate().unwrap();
        }
        assert!(DatasetSpec::preset("Q").is_err());
    }

    #[test]
    fn key_value_round_trip() {
        for p in PRESETS {
            let mut spec = DatasetSpec::preset(p).unwrap();
            spec.seed = 42;
            spec.sigma_range = (0.0, 0.1 + 0.2);
            let kv: BTreeMap<_, _> = spec.to_key_values().into_iter().collect();
            assert_eq!(DatasetSpec::from_key_values(&kv).unwrap(), spec);
        }
    }

    #[test]
    fn partial_spec_overrides_preset() {
        let kv: BTreeMap<String, String> = [
            ("preset", "H"),
            ("cardinalities", "10,5,25,20,8,12"),
            ("instances", "10"),
            ("deviation_range", "0"),
        ]
        .into_iter()
        .map(|(k, v)| (k.to_owned(), v.to_owned()))
        .collect();
        let spec = DatasetSpec::from_key_values(&kv).unwrap();
        assert_eq!(spec.leaf_count().unwrap(), 2_400_000);
        assert_eq!(spec.instances, 10);
        assert_eq!(spec.deviation_range, (0.0, 0.0));
        assert_eq!(spec.severity_range, (0.25, 1.0));
    }

    #[test]
    fn invalid_specs() {
        let s = DatasetSpec::preset("S").unwrap();
        let cases = [
            DatasetSpec { severity_range: (0.5, 1.5), ..s.clone() },
            DatasetSpec { sigma_range: (0.3, 0.1), ..s.clone() },
            DatasetSpec { anomaly_count_range: (0, 2), ..s.clone() },
            DatasetSpec { anomaly_element_range: (3, 1), ..s.clone() },
            DatasetSpec { cardinalities: vec![], ..s.clone() },
            DatasetSpec { cardinalities: vec![2, 0], ..s.clone() },
            DatasetSpec { cardinalities: vec![2], anomaly_count_range: (1, 2), ..s.clone() },
            DatasetSpec { zero_prob_range: (0.0, 2.0), ..s.clone() },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let mut kv = BTreeMap::new();
        kv.insert("colour".to_owned(), "blue".to_owned());
        assert!(DatasetSpec::from_key_values(&kv).is_err());
    }
}
