//! Spatio-temporal and-or graph (STAOG) models for action classification.
//!
//! A video is described by its spatio-temporal interest points. The model
//! scores it with a four-layer grammar:
//!
//! ```text
//! root        whole-video BoW + temporal displacement penalties
//!  └─ and     one per anchor frame; frame-level BoW
//!      └─ or  one per grid cell; selects exactly one child leaf
//!          └─ leaf  deformable part detector (appearance + displacement)
//! ```
//!
//! Pairwise edges link active leaves: spatial edges between 4-adjacent
//! cells of the same anchor frame (8 relation bins) and temporal edges
//! between the same cell in consecutive anchor frames (4 interval
//! predicates). The total response is linear in the parameter vector,
//! `R = ψ·Φ(X, L)`, over latent leaf activations and anchor displacements.
//!
//! Modules:
//!
//! - [`features`]: interest-point files, codebooks, BoW histograms, and the
//!   planted-motif synthetic generator.
//! - [`model`]: the graph, its parameter layout, every response function
//!   and the joint feature map.
//! - [`inference`]: cascaded part detection, per-frame hypotheses and exact
//!   chain verification, plus a brute-force reference.
//! - [`learning`]: latent structural SVM training by CCCP with structure
//!   reconfiguration, and one-vs-rest multiclass.
//! - [`numerics`]: k-means, spectral clustering, and the dual QP solver.
//! - [`eval`]: accuracy and average precision.
//! - [`commands`]: the command implementations behind the `staog` binary.
//!
//! See the crate's `examples/` directory for one runnable program per
//! capability.

pub mod commands;
pub mod config;
pub mod error;
pub mod eval;
pub mod features;
pub mod inference;
pub mod learning;
pub mod model;
pub mod numerics;
pub mod sparse;

pub use error::{Error, Result};
pub use features::{Codebook, FeatureVideo, IndexedVideo, InterestPoint, Region3D};
pub use inference::{infer, infer_bruteforce, InferenceResult, PreparedVideo};
pub use model::{LatentAssignment, LeafId, StaogModel, Structure};
