//! Deterministic random substreams.
//!
//! Every random draw in the crate comes from a ChaCha8 generator keyed by the
//! master seed, with the 64-bit stream id laid out as
//!
//! ```text
//!   bits 56..64  component tag
//!   bits 16..56  replica index (40 bits)
//!   bits  0..16  band index
//! ```
//!
//! so that each (component, replica, band) triple owns an independent stream.
//! Sampling band `j` never consumes randomness from band `j + 1`, which is what
//! makes truncation levels nest.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum StreamTag {
    Gaussian = 1,
    Atoms = 2,
}

const REPLICA_BITS: u32 = 40;
const BAND_BITS: u32 = 16;

pub fn stream_id(tag: StreamTag, replica: u64, band: u64) -> u64 {
    debug_assert!(replica < (1 << REPLICA_BITS));
    debug_assert!(band < (1 << BAND_BITS));
    ((tag as u64) << (REPLICA_BITS + BAND_BITS))
        | ((replica & ((1 << REPLICA_BITS) - 1)) << BAND_BITS)
        | (band & ((1 << BAND_BITS) - 1))
}

pub fn substream(seed: u64, tag: StreamTag, replica: u64, band: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(tag, replica, band));
    rng
}
