//! Attribute schema, elements, cuboids, leaf tables and the base scores.

mod cuboid;
mod element;
pub mod fixtures;
mod schema;
mod scores;
mod table;

pub use cuboid::{enumerate_cuboids, Cuboid};
pub(crate) use cuboid::CuboidKeys;
pub use element::{Element, TupleDisplay, WILDCARD};
pub use schema::{element_space_size, AttributeSchema, ValueDictionary};
pub use scores::{deviation_score, explanatory_power, overall_change};
pub use table::{
    quotient, DerivedColumns, LeafTable, LeafTableBuilder, MeasureKind, MeasureSums,
};
