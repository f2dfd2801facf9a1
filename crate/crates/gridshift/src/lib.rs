//! Workbench for rectangle-free k-colorings of m×n grids.
//!
//! The pipeline: encode a grid-coloring problem (optionally streamlined with
//! shift-pattern internal symmetries) into CNF, solve or enumerate with the
//! embedded engines, verify and classify solutions up to isomorphism, and
//! reason about per-subgrid color distributions.

pub mod cnf;
pub mod dist;
pub mod encoder;
pub mod experiments;
pub mod grid;
pub mod iso;
pub mod layout;
pub mod render;
pub mod solver;

#[cfg(test)]
pub(crate) mod testutil;

pub use cnf::CnfFormula;
pub use dist::DistributionSet;
pub use encoder::VarMap;
pub use grid::{Coloring, GridSpec, IsoElement, RectangleWitness};
pub use layout::{DiagonalMode, PatternLayout, ShiftDirection};
pub use solver::{SolveConfig, SolveOutcome, SolveStatus};
