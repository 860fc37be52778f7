//! Knowledge-graph embedding in Euclidean and hyperbolic space.
//!
//! `hykge` implements a family of link-prediction models built from three
//! ingredients — translation, 2D (complex) rotation, and 3D (quaternion)
//! rotation — applied in Euclidean space, in the Poincaré ball, or in both.
//! The library covers the full experiment loop: dataset ingestion, training
//! with uniform negative sampling and cross-entropy loss, filtered ranking
//! evaluation (MRR, Hits@K), and dataset-level relation-pattern analytics
//! (hierarchy scores, multiplicity, complex-relation categories).
//!
//! All parameters live in the tangent space at the origin, so plain Adam or
//! Adagrad drive the optimization; hyperbolic kinds map entities into the
//! ball with the exponential map at score time, using a trainable
//! per-relation curvature.
//!
//! The `examples/` directory holds one runnable program per capability;
//! the `hykge` binary exposes the same functionality as subcommands
//! (`train`, `evaluate`, `analyze`, `gradcheck`, `paramcount`).

pub mod algebra;
pub mod analysis;
pub mod cli;
pub mod data;
pub mod eval;
pub mod hyperbolic;
pub mod models;
pub mod training;

pub use data::Dataset;
pub use eval::Metrics;
pub use models::{ModelKind, ModelState, ScoreVariant};
pub use training::TrainConfig;
