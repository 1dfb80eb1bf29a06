//! Binary case data: schema with context/target roles, datasets, CSV I/O and
//! the synthetic generator used in place of private clinical records.

mod dataset;
mod schema;
pub mod synthetic;

pub use dataset::{project, Dataset, Instance};
pub use schema::{AttributeSchema, SchemaSpec};
pub use synthetic::{generate_synthetic, GroundTruth, SyntheticConfig};
