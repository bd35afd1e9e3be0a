//! Discourse-aware retrieval re-ranking toolkit.
//!
//! The library ranks documents against queries with a Dirichlet-smoothed
//! query-likelihood baseline, then re-ranks them by mixing in language models
//! induced from the rhetorical relations (contrast, elaboration, ...) annotated
//! on each document. A Poisson-gamma hierarchy with a Laplace-approximated
//! posterior infers which relation is expected to help retrieval the most, and
//! a TREC-style harness (MAP/BPREF/NDCG, paired t-tests, 5-fold cross
//! validation) measures the outcome.
//!
//! Modules map onto the pipeline stages:
//!
//! - [`corpus`] — data model and line-oriented readers/writers (topics, qrels,
//!   run files, discourse annotations, raw documents).
//! - [`discourse`] — cue-word tagger for corpora without annotations, and
//!   relation distribution statistics.
//! - [`index`] — collection statistics backing all probability estimates.
//! - [`scoring`] — baseline ranking and the per-relation mixture re-ranker.
//! - [`selection`] — Bayesian inference of expected per-relation performance
//!   and the randomized pooling driver.
//! - [`evaluation`] — metrics, significance testing, and cross-validation
//!   tuning over the smoothing and mixture parameters.
//!
//! Numeric kernels are generic over the scalar type via [`Real`]; the
//! pipeline types and file formats fix the scalar to [`Score`].

#![forbid(unsafe_code)]
#![warn(missing_docs)]

pub mod corpus;
pub mod discourse;
pub mod evaluation;
pub mod index;
pub mod num;
pub mod scoring;
pub mod selection;

pub use num::Real;

/// Scalar type used by the concrete pipeline and all file formats.
pub type Score = f64;
