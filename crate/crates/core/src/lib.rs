//! Multi-view graph convolutional network with differentiable node selection.
//!
//! Pipeline per forward pass:
//!
//! 1. [`graph`]: per-view KNN graphs, renormalized (computed once).
//! 2. [`fusion`]: trainable two-stage fusion into one adjacency A_f.
//! 3. [`learning`]: symmetric shrinkage mask giving the refined Â.
//! 4. [`selection`]: relaxed sorting of node in-degrees, DCG confidences and a
//!    learned edge gate giving A_select.
//! 5. [`model`]: two graph convolutions over A_select, softmax output,
//!    masked cross-entropy, Adam.
//!
//! Everything is differentiated by the small reverse-mode engine in [`tape`].

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod checkpoint;
pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod fusion;
pub mod gradcheck;
pub mod graph;
pub mod learning;
pub mod matrix;
pub mod model;
pub mod parallel;
pub mod prepared;
pub mod selection;
pub mod tape;

pub use config::RunConfig;
pub use data::MultiViewDataset;
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ModelConfig, ModelState};
pub use tape::{Tape, Var};
