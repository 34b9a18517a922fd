//! Edge-element finite element time-domain solver for surface plasmon
//! polaritons guided along graphene sheets.

pub mod assembly;
pub mod dynamics;
pub mod elements;
pub mod error;
pub mod harness;
pub mod mesh;
pub mod physics;
pub mod solve;
pub mod sparse;

pub use error::{Error, Result};
