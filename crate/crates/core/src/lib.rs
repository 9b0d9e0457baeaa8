pub mod cylinder_algebra;
pub mod error;
pub mod greenberg_levels;
pub mod integration_engine;
pub mod motivic_values;
mod linalg;
pub mod ring_tower;
pub mod scheme_model;

pub use error::{Error, Result};
