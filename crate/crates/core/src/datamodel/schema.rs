use std::collections::HashMap;

use crate::error::{Error, Result};

/// Bidirectional value dictionary for one attribute. Ids are dense and
/// assigned in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValueDictionary {
    values: Vec<String>,
    ids: HashMap<String, u32>,
}

impl ValueDictionary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the id of `value`, inserting it if absent.
    pub fn intern(&mut self, value: &str) -> u32 {
        if let Some(&id) = self.ids.get(value) {
            return id;
        }
        let id = self.values.len() as u32;
        self.values.push(value.to_owned());
        self.ids.insert(value.to_owned(), id);
        id
    }

    pub fn id(&self, value: &str) -> Option<u32> {
        self.ids.get(value).copied()
    }

    pub fn value(&self, id: u32) -> Option<&str> {
        self.values.get(id as usize).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[String] {
        &self.values
    }
}

/// Ordered set of categorical attributes with their dictionary-encoded values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeSchema {
    names: Vec<String>,
    dictionaries: Vec<ValueDictionary>,
}

impl AttributeSchema {
    /// Builds a schema from attribute names and their value lists.
    pub fn new<N, V, S>(attributes: impl IntoIterator<Item = (N, V)>) -> Result<Self>
    where
        N: Into<String>,
        V: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut names = Vec::new();
        let mut dictionaries = Vec::new();
        for (name, values) in attributes {
            let mut dict = ValueDictionary::new();
            for v in values {
                dict.intern(v.as_ref());
            }
            names.push(name.into());
            dictionaries.push(dict);
        }
        let schema = Self {
            names,
            dictionaries,
        };
        schema.validate()?;
        Ok(schema)
    }

    /// Schema with generated names: attribute `i` is the `i`-th lowercase
    /// letter and its values are `<letter><1..=n>`.
    pub fn synthetic(cardinalities: &[usize]) -> Result<Self> {
        if cardinalities.len() > 26 {
            return Err(Error::Schema("at most 26 synthetic attributes".into()));
        }
        let attrs = cardinalities.iter().enumerate().map(|(i, &n)| {
            let letter = (b'a' + i as u8) as char;
            let values: Vec<String> = (1..=n).map(|j| format!("{letter}{j}")).collect();
            (letter.to_string(), values)
        });
        Self::new(attrs)
    }

    /// Schema with names only; dictionaries are filled during ingestion and
    /// the result must be re-validated with [`AttributeSchema::validate`].
    pub(crate) fn with_names(names: Vec<String>) -> Self {
        let dictionaries = vec![ValueDictionary::new(); names.len()];
        Self {
            names,
            dictionaries,
        }
    }

    pub(crate) fn dictionary_mut(&mut self, attr: usize) -> &mut ValueDictionary {
        &mut self.dictionaries[attr]
    }

    pub fn validate(&self) -> Result<()> {
        if self.names.is_empty() {
            return Err(Error::Schema("at least one attribute is required".into()));
        }
        for (i, name) in self.names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Schema(format!("attribute {i} has an empty name")));
            }
            if self.names[..i].contains(name) {
                return Err(Error::Schema(format!("duplicate attribute name `{name}`")));
            }
            if self.dictionaries[i].is_empty() {
                return Err(Error::Schema(format!("attribute `{name}` has no values")));
            }
        }
        Ok(())
    }

    /// Number of attributes.
    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, attr: usize) -> &str {
        &self.names[attr]
    }

    pub fn attribute_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn cardinality(&self, attr: usize) -> usize {
        self.dictionaries[attr].len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.dictionaries.iter().map(ValueDictionary::len).collect()
    }

    pub fn dictionary(&self, attr: usize) -> &ValueDictionary {
        &self.dictionaries[attr]
    }

    /// Number of elements excluding the fully aggregated one: `Π(n_i + 1) − 1`.
    pub fn element_space_size(&self) -> Result<u128> {
        element_space_size(&self.cardinalities())
    }
}

pub fn element_space_size(cardinalities: &[usize]) -> Result<u128> {
    let mut product: u128 = 1;
    for &n in cardinalities {
        product = product
            .checked_mul(n as u128 + 1)
            .ok_or(Error::Overflow)?;
    }
    Ok(product - 1)
}
