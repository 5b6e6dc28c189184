//! Root-cause localization for anomalies in multi-dimensional measures.
//!
//! Given the actual and forecast value of every leaf attribute combination
//! over an anomalous interval, [`localization::localize`] returns the small
//! set of (possibly aggregated) elements that best explains the change in
//! the total. The crate also ships a seeded synthetic dataset generator
//! ([`synthgen`]) and an element-level F1 evaluation harness
//! ([`evaluation`]).

pub mod cli;
pub mod datamodel;
pub mod error;
pub mod evaluation;
pub mod io;
pub mod localization;
pub mod partition;
pub mod risk;
pub mod synthgen;

pub use datamodel::{AttributeSchema, Element, LeafTable, MeasureKind};
pub use error::{Error, Result};
pub use localization::{localize, LocalizerConfig, RootCauseSet};
