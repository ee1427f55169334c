//! Schrödinger operators on star graphs with a delta coupling at the vertex.

pub mod birman;
pub mod config;
pub mod edge;
pub mod error;
pub mod fd;
pub mod graph;
pub mod green;
mod par;
mod poly;
pub mod potential;
pub mod quadrature;
pub mod secular;
pub mod squeeze;
pub mod transfer;
pub mod weak;

pub use error::{Error, Result};
pub use graph::{Coupling, CouplingScale, Edge, EdgeEnd, StarGraph};
pub use potential::{EdgePotential, Segment};
