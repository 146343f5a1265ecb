//! Named, index-addressed random substreams.
//!
//! Every random decision in a study is drawn from a stream derived from
//! `(seed, label, index)`. Results therefore do not depend on the order in
//! which independent units (load nodes, scenarios) are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StudyRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a 64-bit stream key from a seed, a stream label and an index.
pub fn stream_key(seed: u64, label: &str, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    for b in label.bytes() {
        h = splitmix64(h ^ u64::from(b));
    }
    splitmix64(h ^ splitmix64(index.wrapping_add(0xA5A5_A5A5)))
}

pub fn substream(seed: u64, label: &str, index: u64) -> StudyRng {
    StudyRng::seed_from_u64(stream_key(seed, label, index))
}
