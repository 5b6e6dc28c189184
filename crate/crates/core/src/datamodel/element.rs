use std::fmt;

use serde::{Deserialize, Serialize};

use super::schema::AttributeSchema;
use crate::error::{Error, Result};

/// Coordinate value marking an aggregated attribute.
pub const WILDCARD: u32 = u32::MAX;

/// One attribute-value combination where any coordinate may be a wildcard.
///
/// Ordering is lexicographic over the coordinate ids with the wildcard
/// sorting after every concrete value.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Element {
    coords: Vec<u32>,
}

impl Element {
    pub fn new(coords: Vec<u32>) -> Self {
        Self { coords }
    }

    /// The fully aggregated element `(*, …, *)`.
    pub fn total(dim: usize) -> Self {
        Self {
            coords: vec![WILDCARD; dim],
        }
    }

    pub fn coords(&self) -> &[u32] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Number of concrete coordinates.
    pub fn layer(&self) -> usize {
        self.coords.iter().filter(|&&c| c != WILDCARD).count()
    }

    pub fn is_leaf(&self) -> bool {
        self.coords.iter().all(|&c| c != WILDCARD)
    }

    /// Bit `i` set iff attribute `i` is concrete.
    pub fn attribute_mask(&self) -> u64 {
        self.coords
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != WILDCARD)
            .fold(0, |m, (i, _)| m | (1 << i))
    }

    /// True iff `self` is a proper descendant of `ancestor`.
    pub fn is_descendant_of(&self, ancestor: &Element) -> Result<bool> {
        if self.dim() != ancestor.dim() {
            return Err(Error::DimensionMismatch {
                expected: ancestor.dim(),
                actual: self.dim(),
            });
        }
        Ok(self != ancestor && ancestor.covers(&self.coords))
    }

    /// True iff a row with the given concrete coordinates lies under `self`
    /// (or equals it).
    #[inline]
    pub fn covers(&self, row: &[u32]) -> bool {
        self.coords
            .iter()
            .zip(row)
            .all(|(&c, &r)| c == WILDCARD || c == r)
    }

    /// Parses `attr=value&attr=value`; omitted attributes are wildcards.
    pub fn parse(text: &str, schema: &AttributeSchema) -> Result<Self> {
        let mut coords = vec![WILDCARD; schema.dim()];
        let text = text.trim();
        if text.is_empty() {
            return Ok(Self { coords });
        }
        for pair in text.split('&') {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::MalformedElement(text.to_owned()))?;
            let attr = schema
                .attribute_index(name)
                .ok_or_else(|| Error::UnknownAttribute(name.to_owned()))?;
            if coords[attr] != WILDCARD {
                return Err(Error::DuplicateAttribute(name.to_owned()));
            }
            coords[attr] = schema
                .dictionary(attr)
                .id(value)
                .ok_or_else(|| Error::UnknownValue {
                    attribute: name.to_owned(),
                    value: value.to_owned(),
                })?;
        }
        Ok(Self { coords })
    }

    /// Formats as `attr=value&attr=value` in schema order, wildcards omitted.
    pub fn format(&self, schema: &AttributeSchema) -> String {
        let mut out = String::new();
        for (attr, &c) in self.coords.iter().enumerate() {
            if c == WILDCARD {
                continue;
            }
            if !out.is_empty() {
                out.push('&');
            }
            out.push_str(schema.name(attr));
            out.push('=');
            out.push_str(schema.dictionary(attr).value(c).unwrap_or("?"));
        }
        out
    }

    /// Tuple notation, e.g. `(X, *)`.
    pub fn display<'a>(&'a self, schema: &'a AttributeSchema) -> TupleDisplay<'a> {
        TupleDisplay {
            element: self,
            schema,
        }
    }
}

pub struct TupleDisplay<'a> {
    element: &'a Element,
    schema: &'a AttributeSchema,
}

impl fmt::Display for TupleDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (attr, &c) in self.element.coords.iter().enumerate() {
            if attr > 0 {
                f.write_str(", ")?;
            }
            if c == WILDCARD {
                f.write_str("*")?;
            } else {
                f.write_str(self.schema.dictionary(attr).value(c).unwrap_or("?"))?;
            }
        }
        f.write_str(")")
    }
}
