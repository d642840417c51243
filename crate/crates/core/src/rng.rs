//! Named, indexed random substreams derived from one scenario seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Substream names used across the crate.
pub const READINESS: &str = "readiness";
pub const JITTER: &str = "jitter";
pub const WORKLOAD: &str = "workload";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(name: &str) -> u64 {
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Independent generator for repeat `index` of stream `name`. The same
/// `(seed, name, index)` always yields the same sequence.
pub fn substream(seed: u64, name: &str, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(index)));
    rng.set_stream(fnv1a(name));
    rng
}
