//! Per-stage seed derivation.
//!
//! Every random stage derives its own stream from one base seed:
//! `derive_seed(base, stage, index)` hashes the stage name with FNV-1a, then
//! mixes base, stage hash and index through SplitMix64. Adding a stage never
//! shifts the random numbers seen by another stage.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

pub fn derive_seed(base: u64, stage: &str, index: u64) -> u64 {
    let h = splitmix64(base ^ fnv1a(stage.as_bytes()));
    splitmix64(h ^ splitmix64(index))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stages_get_distinct_streams() {
        let a = derive_seed(7, "rank", 0);
        let b = derive_seed(7, "kmeans", 0);
        let c = derive_seed(7, "rank", 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(7, "rank", 0));
    }
}
