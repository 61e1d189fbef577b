//! Deterministic sampling helpers.
//!
//! All randomness in the crate flows through `ChaCha8Rng` streams and these
//! helpers, so results depend only on the seed, not on the version of any
//! distribution code.

use rand::RngCore;

/// Unbiased uniform draw from `[0, bound)` by rejection.
pub fn uniform_u64(rng: &mut impl RngCore, bound: u64) -> u64 {
    assert!(bound > 0, "empty range");
    if bound.is_power_of_two() {
        return rng.next_u64() & (bound - 1);
    }
    let zone = u64::MAX - (u64::MAX % bound + 1) % bound;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return x % bound;
        }
    }
}

pub fn uniform_index(rng: &mut impl RngCore, len: usize) -> usize {
    uniform_u64(rng, len as u64) as usize
}

/// Derives an independent child stream; used to give each check and each
/// sample batch its own reproducible stream.
pub fn derive_rng(seed: u64, salt: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&salt.to_le_bytes());
    key[16..24].copy_from_slice(&0x6f6c696d_u64.to_le_bytes());
    rand_chacha::ChaCha8Rng::from_seed(key)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn uniform_is_in_range_and_deterministic() {
        let mut a = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut b = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for bound in [1u64, 2, 3, 7, 100, 1 << 40] {
            for _ in 0..64 {
                let x = uniform_u64(&mut a, bound);
                assert!(x < bound);
                assert_eq!(x, uniform_u64(&mut b, bound));
            }
        }
    }

    #[test]
    fn derived_streams_differ() {
        use rand::RngCore;
        let mut a = derive_rng(1, 0);
        let mut b = derive_rng(1, 1);
        assert_ne!(a.next_u64(), b.next_u64());
    }
}
