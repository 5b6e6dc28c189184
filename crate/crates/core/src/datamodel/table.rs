use std::collections::HashSet;

use super::element::Element;
use super::schema::AttributeSchema;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasureKind {
    /// Additive measure; aggregates are plain sums.
    Fundamental,
    /// Quotient of two fundamental measures, combined after summing.
    Derived,
}

/// Per-leaf numerator and denominator columns of a derived measure.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedColumns {
    pub actual_num: Vec<f64>,
    pub forecast_num: Vec<f64>,
    pub actual_den: Vec<f64>,
    pub forecast_den: Vec<f64>,
}

/// `num / den`, with a zero denominator mapping to 0.
#[inline]
pub fn quotient(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

/// Running sums of the measure columns over a set of leaves.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MeasureSums {
    pub actual: f64,
    pub forecast: f64,
    pub actual_den: f64,
    pub forecast_den: f64,
}

/// All leaf elements of one anomaly instance, stored column-wise with
/// dictionary-encoded coordinates.
#[derive(Debug, Clone)]
pub struct LeafTable {
    schema: AttributeSchema,
    rows: Vec<u32>,
    actual: Vec<f64>,
    forecast: Vec<f64>,
    derived: Option<DerivedColumns>,
}

impl LeafTable {
    pub fn fundamental(
        schema: AttributeSchema,
        rows: Vec<Vec<u32>>,
        actual: Vec<f64>,
        forecast: Vec<f64>,
    ) -> Result<Self> {
        let flat = flatten_rows(&schema, rows)?;
        Self::from_flat(schema, flat, actual, forecast)
    }

    pub fn derived(
        schema: AttributeSchema,
        rows: Vec<Vec<u32>>,
        columns: DerivedColumns,
    ) -> Result<Self> {
        let flat = flatten_rows(&schema, rows)?;
        Self::from_flat_derived(schema, flat, columns)
    }

    pub(crate) fn from_flat(
        schema: AttributeSchema,
        rows: Vec<u32>,
        actual: Vec<f64>,
        forecast: Vec<f64>,
    ) -> Result<Self> {
        let table = Self {
            schema,
            rows,
            actual,
            forecast,
            derived: None,
        };
        table.validate()?;
        Ok(table)
    }

    pub(crate) fn from_flat_derived(
        schema: AttributeSchema,
        rows: Vec<u32>,
        columns: DerivedColumns,
    ) -> Result<Self> {
        let actual = columns
            .actual_num
            .iter()
            .zip(&columns.actual_den)
            .map(|(&n, &d)| quotient(n, d))
            .collect();
        let forecast = columns
            .forecast_num
            .iter()
            .zip(&columns.forecast_den)
            .map(|(&n, &d)| quotient(n, d))
            .collect();
        let table = Self {
            schema,
            rows,
            actual,
            forecast,
            derived: Some(columns),
        };
        table.validate()?;
        Ok(table)
    }

    fn validate(&self) -> Result<()> {
        self.schema.validate()?;
        let d = self.schema.dim();
        let n = self.rows.len() / d;
        if self.rows.len() % d != 0 {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: self.rows.len() % d,
            });
        }
        let mut columns: Vec<&[f64]> = vec![&self.actual, &self.forecast];
        if let Some(dc) = &self.derived {
            columns.extend([
                dc.actual_num.as_slice(),
                dc.forecast_num.as_slice(),
                dc.actual_den.as_slice(),
                dc.forecast_den.as_slice(),
            ]);
        }
        for col in &columns {
            if col.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: col.len(),
                });
            }
            if let Some((row, &value)) = col
                .iter()
                .enumerate()
                .find(|(_, v)| !(v.is_finite() && **v >= 0.0))
            {
                return Err(Error::NegativeValue { row, value });
            }
        }
        let mut seen = HashSet::with_capacity(n);
        for i in 0..n {
            let row = self.row(i);
            for (a, &v) in row.iter().enumerate() {
                if v as usize >= self.schema.cardinality(a) {
                    return Err(Error::Schema(format!(
                        "value id {v} out of range for attribute `{}`",
                        self.schema.name(a)
                    )));
                }
            }
            if !seen.insert(row) {
                return Err(Error::DuplicateLeaf(
                    self.leaf_element(i).format(&self.schema),
                ));
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &AttributeSchema {
        &self.schema
    }

    pub fn dim(&self) -> usize {
        self.schema.dim()
    }

    pub fn len(&self) -> usize {
        self.actual.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actual.is_empty()
    }

    pub fn measure_kind(&self) -> MeasureKind {
        if self.derived.is_some() {
            MeasureKind::Derived
        } else {
            MeasureKind::Fundamental
        }
    }

    pub fn derived_columns(&self) -> Option<&DerivedColumns> {
        self.derived.as_ref()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        let d = self.schema.dim();
        &self.rows[i * d..(i + 1) * d]
    }

    pub fn leaf_element(&self, i: usize) -> Element {
        Element::new(self.row(i).to_vec())
    }

    /// Leaf-level actual value (the quotient for derived measures).
    #[inline]
    pub fn actual(&self, i: usize) -> f64 {
        self.actual[i]
    }

    #[inline]
    pub fn forecast(&self, i: usize) -> f64 {
        self.forecast[i]
    }

    pub fn actuals(&self) -> &[f64] {
        &self.actual
    }

    pub fn forecasts(&self) -> &[f64] {
        &self.forecast
    }

    /// Indices of rows that are `e` itself or descendants of it.
    pub fn leaf_descendants(&self, e: &Element) -> Vec<usize> {
        (0..self.len()).filter(|&i| e.covers(self.row(i))).collect()
    }

    #[inline]
    pub fn accumulate(&self, sums: &mut MeasureSums, i: usize) {
        match &self.derived {
            None => {
                sums.actual += self.actual[i];
                sums.forecast += self.forecast[i];
            }
            Some(dc) => {
                sums.actual += dc.actual_num[i];
                sums.forecast += dc.forecast_num[i];
                sums.actual_den += dc.actual_den[i];
                sums.forecast_den += dc.forecast_den[i];
            }
        }
    }

    /// Resolves accumulated sums into the element's `(v, f)`.
    #[inline]
    pub fn resolve(&self, sums: &MeasureSums) -> (f64, f64) {
        match self.derived {
            None => (sums.actual, sums.forecast),
            Some(_) => (
                quotient(sums.actual, sums.actual_den),
                quotient(sums.forecast, sums.forecast_den),
            ),
        }
    }

    /// `(v, f)` aggregated over an explicit set of rows.
    pub fn aggregate_rows(&self, rows: impl IntoIterator<Item = usize>) -> (f64, f64) {
        let mut sums = MeasureSums::default();
        for i in rows {
            self.accumulate(&mut sums, i);
        }
        self.resolve(&sums)
    }

    /// `(v, f)` of an element over its leaf descendants.
    pub fn aggregate(&self, e: &Element) -> (f64, f64) {
        self.aggregate_rows((0..self.len()).filter(|&i| e.covers(self.row(i))))
    }

    /// `(v(M), f(M))` of the fully aggregated element.
    pub fn total(&self) -> (f64, f64) {
        self.aggregate_rows(0..self.len())
    }

    /// Copy of the table with every leaf's measure columns transformed.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64, f64) -> (f64, f64)) -> Result<Self> {
        let mut actual = Vec::with_capacity(self.len());
        let mut forecast = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let (v, fc) = f(i, self.actual[i], self.forecast[i]);
            actual.push(v);
            forecast.push(fc);
        }
        match &self.derived {
            None => Self::from_flat(self.schema.clone(), self.rows.clone(), actual, forecast),
            Some(_) => Err(Error::Config(
                "value mapping is only defined for fundamental measures".into(),
            )),
        }
    }
}

fn flatten_rows(schema: &AttributeSchema, rows: Vec<Vec<u32>>) -> Result<Vec<u32>> {
    let d = schema.dim();
    let mut flat = Vec::with_capacity(rows.len() * d);
    for row in rows {
        if row.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: row.len(),
            });
        }
        flat.extend(row);
    }
    Ok(flat)
}

/// Incremental construction from string-valued rows, interning values
/// into the schema dictionaries as they appear.
#[derive(Debug)]
pub struct LeafTableBuilder {
    schema: AttributeSchema,
    rows: Vec<u32>,
    actual: Vec<f64>,
    forecast: Vec<f64>,
    derived: Option<DerivedColumns>,
}

impl LeafTableBuilder {
    pub fn new(attribute_names: Vec<String>, kind: MeasureKind) -> Self {
        let derived = (kind == MeasureKind::Derived).then(|| DerivedColumns {
            actual_num: Vec::new(),
            forecast_num: Vec::new(),
            actual_den: Vec::new(),
            forecast_den: Vec::new(),
        });
        Self {
            schema: AttributeSchema::with_names(attribute_names),
            rows: Vec::new(),
            actual: Vec::new(),
            forecast: Vec::new(),
            derived,
        }
    }

    /// Builder whose dictionaries are pre-seeded from an existing schema, so
    /// value ids agree with it.
    pub fn with_schema(schema: AttributeSchema, kind: MeasureKind) -> Self {
        let mut b = Self::new(schema.names().to_vec(), kind);
        b.schema = schema;
        b
    }

    pub fn dim(&self) -> usize {
        self.schema.dim()
    }

    fn push_coords<S: AsRef<str>>(&mut self, values: &[S]) -> Result<()> {
        if values.len() != self.schema.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.schema.dim(),
                actual: values.len(),
            });
        }
        for (a, v) in values.iter().enumerate() {
            let id = self.schema.dictionary_mut(a).intern(v.as_ref());
            self.rows.push(id);
        }
        Ok(())
    }

    pub fn push_fundamental<S: AsRef<str>>(
        &mut self,
        values: &[S],
        actual: f64,
        forecast: f64,
    ) -> Result<()> {
        if self.derived.is_some() {
            return Err(Error::Config("builder expects derived rows".into()));
        }
        self.push_coords(values)?;
        self.actual.push(actual);
        self.forecast.push(forecast);
        Ok(())
    }

    pub fn push_derived<S: AsRef<str>>(
        &mut self,
        values: &[S],
        actual_num: f64,
        forecast_num: f64,
        actual_den: f64,
        forecast_den: f64,
    ) -> Result<()> {
        self.push_coords(values)?;
        let dc = self
            .derived
            .as_mut()
            .ok_or_else(|| Error::Config("builder expects fundamental rows".into()))?;
        dc.actual_num.push(actual_num);
        dc.forecast_num.push(forecast_num);
        dc.actual_den.push(actual_den);
        dc.forecast_den.push(forecast_den);
        Ok(())
    }

    pub fn build(self) -> Result<LeafTable> {
        match self.derived {
            None => LeafTable::from_flat(self.schema, self.rows, self.actual, self.forecast),
            Some(dc) => LeafTable::from_flat_derived(self.schema, self.rows, dc),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::fixtures::table1;

    #[test]
    fn table1_aggregates() {
        let t = table1();
        let s = t.schema();
        let x = Element::parse("DataCenter=X", s).unwrap();
        assert_eq!(t.aggregate(&x), (13.0, 40.0));
        assert_eq!(t.aggregate(&Element::total(2)), (158.0, 186.0));
        assert_eq!(t.total(), (158.0, 186.0));
        assert_eq!(t.leaf_descendants(&x), vec![0, 1]);
        assert_eq!(t.leaf_descendants(&Element::total(2)).len(), 5);
        // (X, D3) does not exist
        let xd3 = Element::parse("DataCenter=X&DeviceType=D3", s).unwrap();
        assert!(t.leaf_descendants(&xd3).is_empty());
        let yd2 = Element::parse("DataCenter=Y&DeviceType=D2", s).unwrap();
        assert_eq!(t.leaf_descendants(&yd2), vec![3]);
    }

    #[test]
    fn derived_quotient_after_summing() {
        let schema = AttributeSchema::new([("a", vec!["a1", "a2"])]).unwrap();
        let t = LeafTable::derived(
            schema,
            vec![vec![0], vec![1]],
            DerivedColumns {
                actual_num: vec![4.0, 6.0],
                forecast_num: vec![10.0, 10.0],
                actual_den: vec![10.0, 10.0],
                forecast_den: vec![10.0, 10.0],
            },
        )
        .unwrap();
        assert_eq!(t.measure_kind(), MeasureKind::Derived);
        assert_eq!(t.aggregate(&Element::total(1)), (0.5, 1.0));
        assert_eq!(t.actual(0), 0.4);
    }

    #[test]
    fn zero_denominator_yields_zero() {
        assert_eq!(quotient(3.0, 0.0), 0.0);
        assert_eq!(quotient(10.0, 20.0), 0.5);
    }

    #[test]
    fn rejects_duplicates_and_negatives() {
        let schema = AttributeSchema::synthetic(&[2]).unwrap();
        let dup = LeafTable::fundamental(
            schema.clone(),
            vec![vec![0], vec![0]],
            vec![1.0, 1.0],
            vec![1.0, 1.0],
        );
        assert!(matches!(dup, Err(Error::DuplicateLeaf(_))));
        let neg = LeafTable::fundamental(schema.clone(), vec![vec![0]], vec![-1.0], vec![1.0]);
        assert!(matches!(neg, Err(Error::NegativeValue { .. })));
        let range = LeafTable::fundamental(schema, vec![vec![5]], vec![1.0], vec![1.0]);
        assert!(range.is_err());
    }

    #[test]
    fn builder_interns_values() {
        let mut b = LeafTableBuilder::new(vec!["dc".into(), "dev".into()], MeasureKind::Fundamental);
        b.push_fundamental(&["X", "D1"], 1.0, 2.0).unwrap();
        b.push_fundamental(&["Y", "D1"], 1.0, 2.0).unwrap();
        assert!(b.push_fundamental(&["Y"], 1.0, 2.0).is_err());
        let t = b.build().unwrap();
        assert_eq!(t.schema().cardinalities(), vec![2, 1]);
        assert_eq!(t.row(1), &[1, 0]);
    }
}
