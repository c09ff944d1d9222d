//! Pólya urn LDA: partially collapsed, Pólya urn and fully collapsed Gibbs
//! samplers for latent Dirichlet allocation, with the sparse data structures,
//! random-variate machinery and diagnostics they rely on.
// Guards are written `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod error;
pub mod eval;
pub mod hypothesis;
pub mod ppu_check;
pub mod rand_dist;
pub mod sampler;
pub mod stats;
pub mod tdemo;

pub use error::{Error, Result};
