use super::element::Element;
use super::table::LeafTable;
use crate::error::{Error, Result};

/// Relative forecast residual `2(f − v)/(f + v)`, defined as 0 when both are 0.
#[inline]
pub fn deviation_score(v: f64, f: f64) -> f64 {
    let s = f + v;
    if s == 0.0 {
        0.0
    } else {
        2.0 * (f - v) / s
    }
}

/// Share of the overall change `v(M) − f(M)` carried by element `e`.
pub fn explanatory_power(e: &Element, table: &LeafTable) -> Result<f64> {
    let change = overall_change(table)?;
    let (v, f) = table.aggregate(e);
    Ok((v - f) / change)
}

/// `v(M) − f(M)`, or an error when the total shows no anomaly.
pub fn overall_change(table: &LeafTable) -> Result<f64> {
    let (v, f) = table.total();
    let change = v - f;
    if change == 0.0 {
        return Err(Error::NoOverallAnomaly(v));
    }
    Ok(change)
}
