//! Seeded random streams.
//!
//! All randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`), a portable
//! generator whose output is fixed by its specification. A stream is keyed by
//! a 64-bit seed (expanded to the 256-bit ChaCha key with
//! `SeedableRng::seed_from_u64`, i.e. PCG32 key expansion) plus a 64-bit
//! stream id placed in the ChaCha nonce via `set_stream`. Distinct work items
//! (one magma, one matrix cell) get distinct stream ids, so the draws of each
//! item are independent of scheduling and thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream ids reserved per purpose, in the top byte of the stream id.
#[derive(Clone, Copy, Debug)]
#[repr(u8)]
pub enum Purpose {
    Magma = 1,
    MonteCarlo = 2,
    PcaStart = 3,
    Audit = 4,
}

/// Generator for `(seed, purpose, index)`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 56);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | index);
    rng
}
