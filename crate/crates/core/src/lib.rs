//! Entity embeddings learned from a set of nonnegative entity-relation matrices.
//!
//! Each matrix relates the entities of a row type to those of a column type.
//! Training samples every matrix independently under its own normalization,
//! so a matrix with small raw weights still contributes as many pairs per
//! iteration as a heavy one, and scales each matrix's updates by its `alpha`.
//!
//! The crate also provides matrix builders for tabular data and text, per-type
//! mean centering for cross-type distance plots, and the clustering metrics
//! used to evaluate the result.

pub mod builders;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod io;
pub mod matrix;
pub mod postproc;
pub mod registry;
pub mod sampler;
pub mod sgns;
pub mod trainer;

pub use embedding::{init_embeddings, EmbeddingSet, Scalar};
pub use error::{Error, Result};
pub use matrix::{Cell, MatrixSet, RelationMatrix};
pub use registry::{EntityId, Registry, TypeId, TypeRole};
pub use trainer::{train, train_with, LrSchedule, SamplingMode, TrainConfig};
