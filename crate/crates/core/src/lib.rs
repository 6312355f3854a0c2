//! Patch orderings for 2D grids, sinusoidal positional embeddings over them,
//! structural-integrity metrics for embedding fields, the three-cell
//! synthetic benchmark, and a context-bias optimizer.

pub mod compare;
pub mod error;
pub mod grid;
pub mod io;
pub mod opt;
pub mod order;
pub mod pe;
pub mod pesi;
pub mod three_cell;

pub use error::{Error, Result};
pub use grid::GridShape;
pub use order::{gilbert_order, hilbert_order, zigzag_order, OrderKind, PatchOrder};
pub use pe::{
    apply_bias, cosine_field, embed, make_frequencies, ContextBias, EmbeddingField, FrequencySet,
    SimilarityField,
};
