//! Sub-seed derivation.
//!
//! Every random stream in a run is seeded from one master seed:
//!
//! ```text
//! sub_seed(master, tag) = splitmix64(master XOR fnv1a64(tag))
//! ```
//!
//! with FNV-1a over the UTF-8 bytes of the tag (offset basis
//! `0xcbf29ce484222325`, prime `0x100000001b3`) and the standard SplitMix64
//! finalizer. Streams are then drawn from `ChaCha8Rng::seed_from_u64`.
//!
//! Tags in use: `traps` (ensemble construction), `exposure` (exposure run),
//! `sweep` (gate-sweep noise), `figures/<n>` (independent figure runs).
//! Inside an exposure run the run seed is split further into `photons`,
//! `capture`, `noise` and `rts`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub const TAG_TRAPS: &str = "traps";
pub const TAG_EXPOSURE: &str = "exposure";
pub const TAG_SWEEP: &str = "sweep";

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325_u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sub_seed(master: u64, tag: &str) -> u64 {
    splitmix64(master ^ fnv1a64(tag.as_bytes()))
}

pub fn stream(master: u64, tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, tag))
}
