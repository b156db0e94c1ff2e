//! Author-similarity layouts from document corpora.
//!
//! The pipeline turns a set of author-attributed documents into a 2-D map of
//! authors in which nearby nodes publish about similar things:
//!
//! 1. [`corpus`] ingests raw text (or precomputed counts) into a count-matrix
//!    corpus with a deterministic vocabulary.
//! 2. An author representation is chosen: aggregated word frequencies
//!    ([`bow`]), or topic distributions inferred by collapsed Gibbs sampling
//!    ([`topics`] — LDA with per-author aggregation, the Author-Topic model,
//!    or the Hierarchical Author-Topic model).
//! 3. [`kernels`] scores author similarity with the Bhattacharyya coefficient
//!    and assembles (and optionally combines) Gram matrices.
//! 4. [`embedding`] produces low-dimensional coordinates by Minimum Volume
//!    Embedding over a k-nearest-neighbor graph, with kernel PCA as the
//!    baseline factorization.
//! 5. [`render`] emits the final node-link artifacts as DOT and JSON.
//!
//! Every stage is a pure function of its inputs plus an explicit `u64` seed,
//! so identical runs produce byte-identical artifacts.

pub mod bow;
pub mod corpus;
pub mod embedding;
pub mod kernels;
pub mod linalg;
pub mod render;
pub mod synthetic;
pub mod topics;
