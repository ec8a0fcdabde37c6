//! Counter-based substream derivation.
//!
//! Every random draw in the simulator comes from a ChaCha stream keyed by
//! (master seed, purpose, trial, user). Work units can therefore run in any
//! order, on any number of threads, without changing a single output bit.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a substream is for. Each purpose gets statistically independent
/// randomness even at identical (seed, trial, user) coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel,
    Codebook,
    Calibration,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Channel => 0x6368616e,     // "chan"
            Purpose::Codebook => 0x636f6465,    // "code"
            Purpose::Calibration => 0x63616c69, // "cali"
        }
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Derives the substream for (seed, purpose, trial, user).
pub fn substream(seed: u64, purpose: Purpose, trial: u64, user: u64) -> ChaCha8Rng {
    let mut state = seed ^ 0xa076_1d64_78bd_642f;
    for v in [purpose.tag(), trial, user] {
        state ^= v.wrapping_mul(0x2545_f491_4f6c_dd1d);
        state = splitmix64(&mut state);
    }
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
