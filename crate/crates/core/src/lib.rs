//! Open-world clustering of embedding vectors: distances, dimension
//! reduction, clustering engines, validity indices, external evaluation,
//! number-of-cluster estimation and core pseudo-labeling.

pub mod cluster;
pub mod datasets;
pub mod distance;
pub mod error;
pub mod external;
pub mod io;
mod linalg;
pub mod model;
pub mod pipeline;
pub mod pseudo;
pub mod reduce;
pub mod selection;
pub mod stats;
pub mod validity;

pub use error::{Error, Result};
pub use model::{Centers, ClusterAssignment, DistanceMatrix, EmbeddingMatrix, KnnGraph, LabelVector, RngSeed};
