//! Toolkit for flat, constraint-aware sketch-and-extrude modeling sequences.

pub mod analysis;
pub mod constraints;
pub mod flatten;
pub mod format;
pub mod geom;
pub mod geomexec;
pub mod model;
pub mod nlt;
pub mod relations;
pub mod synth;
pub mod topology;
