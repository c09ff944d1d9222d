//! Random-variate machinery: alias tables, Gamma/Dirichlet/Poisson samplers,
//! the cached Poisson sampler used for Φ draws, and both constructions of the
//! Poisson Pólya urn.
//!
//! Every sampler takes an explicit RNG handle. Parallel workers draw from
//! independent ChaCha streams derived from `(master seed, stream id)`, see
//! [`stream_rng`].

mod alias;
mod gamma;
mod poisson;
mod ppu;

pub use alias::AliasTable;
pub use gamma::{dirichlet_sample, dirichlet_sample_into, gamma_sample, Gamma};
pub use poisson::{
    poisson_sample, zero_truncated_poisson_sample, PoissonAliasCache, DEFAULT_CACHE_LIMIT,
    TRUNCATION_TAIL_MASS,
};
pub use ppu::{ppu_asymptotic_moments, ppu_sample_direct, ppu_sample_hier, PpuDraw};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// RNG used throughout the samplers.
pub type SamplerRng = ChaCha8Rng;

/// Logical owner of a random stream. Together with an iteration number and an
/// index, it names a stream uniquely for a given master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamKind {
    Init = 1,
    PhiRow = 2,
    Document = 3,
    Collapsed = 4,
    Synth = 5,
    Check = 6,
    Demo = 7,
}

/// Independent stream for `(seed, kind, iteration, index)`.
///
/// The stream id packs the three fields (8 + 24 + 32 bits), so distinct
/// triples never share a stream as long as `iteration < 2^24` and
/// `index < 2^32`.
pub fn stream_rng(seed: u64, kind: StreamKind, iteration: u64, index: u64) -> SamplerRng {
    debug_assert!(iteration < 1 << 24);
    debug_assert!(index < 1 << 32);
    let id = ((kind as u64) << 56) | ((iteration & 0xff_ffff) << 32) | (index & 0xffff_ffff);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}
