//! Ontology-guided n-ball concept embeddings and ball-based few-shot
//! classification.
//!
//! The pipeline runs in stages:
//!
//! 1. [`ontology`]: parse a class hierarchy, compute its inferred class
//!    hierarchy (ICH) and per-concept level/occurrence statistics.
//! 2. [`embedding`]: learn one n-ball per concept so that subsumption becomes
//!    containment and disjointness becomes separation.
//! 3. [`eval`]: score a ball space (F1 over all/leaf subsumptions, disjoint
//!    leaf pairs) and grid-search its hyperparameters.
//! 4. [`negatives`]: cluster leaf centres to pick hard negatives.
//! 5. [`projector`]: train an MLP that maps feature vectors into the balls
//!    of their classes, and classify projected points.
//! 6. [`harness`]: synthetic features, few-shot episodes and evaluation.
//!
//! [`viz`] renders balls to SVG, [`pipeline`] chains every stage and [`cli`]
//! backs the `geoball` binary.

pub mod cli;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod negatives;
pub mod ontology;
pub mod optim;
pub mod pipeline;
pub mod projector;
pub mod viz;

pub use error::{Error, Result};
