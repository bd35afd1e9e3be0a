//! Test-only oracles and synthetic corpora.
//!
//! Everything here is deliberately independent of the implementation paths
//! it checks: quadrature replaces Laplace approximations, metrics are
//! recomputed from their textbook definitions with naive loops, and corpora
//! are built from explicit token lists.

pub mod gen;
pub mod oracles;
pub mod quad;
