//! Keyed random streams.
//!
//! Every stream is a ChaCha8 generator. Its 256-bit key is four successive
//! SplitMix64 outputs started from `seed ^ domain`, and its 64-bit ChaCha
//! stream id is the caller's key (a node id, a plant index, ...). Streams for
//! different keys are therefore independent and can be drawn in any order or
//! on any thread. Changing any constant here changes every surrogate and
//! synthetic field, so treat them as frozen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Separates the uses of one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    YearShuffle = 0x5348_5546_464C_4531,
    SynthNoise = 0x5359_4E54_4E4F_4953,
    SynthPlant = 0x5359_4E54_504C_4E54,
    AnnualEvents = 0x414E_4E55_4556_4E54,
}

pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn stream(seed: u64, domain: Domain, key: u64) -> ChaCha8Rng {
    let mut state = seed ^ domain as u64;
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(key);
    rng
}
