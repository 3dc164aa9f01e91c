//! Stable per-work-item random streams.
//!
//! Every random draw in a simulation is tied to `(master_seed, index, purpose)`
//! so that results do not depend on which thread evaluates which trial.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// What a random stream is used for. Separate purposes never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 0x43_48_41_4e,
    Pilot = 0x50_49_4c_4f,
    Data = 0x44_41_54_41,
    Noise = 0x4e_4f_49_53,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes the three components into a 256-bit ChaCha seed.
pub fn derive_seed(master: u64, index: u64, purpose: Purpose) -> [u8; 32] {
    let mut state = splitmix64(master ^ splitmix64(index ^ splitmix64(purpose as u64)));
    let mut seed = [0u8; 32];
    for chunk in seed.chunks_exact_mut(8) {
        state = splitmix64(state);
        chunk.copy_from_slice(&state.to_le_bytes());
    }
    seed
}

pub fn stream(master: u64, index: u64, purpose: Purpose) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_seed(master, index, purpose))
}
