//! Exact arithmetic on `[0, 1)` for limit-machine coordinates.
//!
//! Coordinates come in two closed families: finite binary fractions
//! ([`Dyadic`]) and shifted points `q + c*sqrt(2) mod 1` ([`TorusCoord`]).
//! Every coordinate update the machine performs (bit de-interleaving,
//! multiply-by-integer mod 1, adding sqrt(2)) stays inside these families,
//! so well-definedness and consistency checks compare bit-exact values
//! instead of floats with tolerances.

use std::fmt;

/// Binary fraction in `[0, 1)` with finite support, stored msb-first and
/// normalized: the last stored bit is always 1 (the empty vector is zero).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Dyadic {
    bits: Vec<u8>,
}

impl Dyadic {
    pub fn zero() -> Dyadic {
        Dyadic { bits: Vec::new() }
    }

    /// The fraction `x / 2^64` from 64 fresh random bits.
    pub fn from_u64(x: u64) -> Dyadic {
        let bits = (0..64).map(|i| ((x >> (63 - i)) & 1) as u8).collect();
        Dyadic { bits }.normalized()
    }

    pub fn from_bits(bits: &[u8]) -> Dyadic {
        assert!(bits.iter().all(|&b| b <= 1), "bits must be 0 or 1");
        Dyadic {
            bits: bits.to_vec(),
        }
        .normalized()
    }

    fn normalized(mut self) -> Dyadic {
        while self.bits.last() == Some(&0) {
            self.bits.pop();
        }
        self
    }

    pub fn is_zero(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Bits padded with trailing zeros to `len` (must be >= current length).
    pub fn padded_bits(&self, len: usize) -> Vec<u8> {
        let mut out = self.bits.clone();
        debug_assert!(len >= out.len());
        out.resize(len, 0);
        out
    }

    /// Little-endian 64-bit limbs of the bit string read as an integer
    /// (msb of the fraction = msb of the integer of width `len`).
    fn limbs(&self, len: usize) -> Vec<u64> {
        let padded = self.padded_bits(len);
        let words = len.div_ceil(64);
        let mut limbs = vec![0u64; words];
        for (i, &b) in padded.iter().enumerate() {
            if b == 1 {
                let pos = len - 1 - i;
                limbs[pos / 64] |= 1 << (pos % 64);
            }
        }
        limbs
    }

    fn from_limbs(limbs: &[u64], len: usize) -> Dyadic {
        let mut bits = Vec::with_capacity(len);
        for i in 0..len {
            let pos = len - 1 - i;
            bits.push(((limbs[pos / 64] >> (pos % 64)) & 1) as u8);
        }
        Dyadic { bits }.normalized()
    }

    /// Exact `m * x mod 1`. The bit length never grows.
    pub fn mul_mod1(&self, m: u64) -> Dyadic {
        let len = self.bits.len();
        if len == 0 || m == 0 {
            return Dyadic::zero();
        }
        let limbs = self.limbs(len);
        let mut out = vec![0u64; limbs.len()];
        let mut carry: u128 = 0;
        for (i, &l) in limbs.iter().enumerate() {
            let prod = l as u128 * m as u128 + carry;
            out[i] = prod as u64;
            carry = prod >> 64;
        }
        // Mask to len bits: everything above is the integer part.
        let top = len % 64;
        if top != 0 {
            let last = len / 64;
            out[last] &= (1u64 << top) - 1;
        }
        Dyadic::from_limbs(&out, len)
    }

    /// Exact `floor(m * x)`; always < m.
    pub fn floor_mul(&self, m: u64) -> u64 {
        let len = self.bits.len();
        if len == 0 || m == 0 {
            return 0;
        }
        let limbs = self.limbs(len);
        // Full product m * X in limbs, one extra for the carry.
        let mut prod = vec![0u64; limbs.len() + 1];
        let mut carry: u128 = 0;
        for (i, &l) in limbs.iter().enumerate() {
            let p = l as u128 * m as u128 + carry;
            prod[i] = p as u64;
            carry = p >> 64;
        }
        *prod.last_mut().unwrap() = carry as u64;
        // floor(m * x) = product >> len; the result is < m, so it fits u64.
        let word = len / 64;
        let off = len % 64;
        if off == 0 {
            prod[word]
        } else {
            let lo = prod[word] >> off;
            let hi = prod.get(word + 1).copied().unwrap_or(0) << (64 - off);
            lo | hi
        }
    }

    /// Approximate value for diagnostics and statistical tests (exact for
    /// up to 53 significant bits).
    pub fn to_f64(&self) -> f64 {
        let mut acc = 0.0;
        let mut scale = 0.5;
        for &b in self.bits.iter().take(64) {
            if b == 1 {
                acc += scale;
            }
            scale *= 0.5;
        }
        acc
    }

    /// Hex rendering of the bit string (padded to nibbles) with the exact
    /// length, e.g. `c@4` for 0.1100.
    pub fn to_hex(&self) -> String {
        if self.bits.is_empty() {
            return "0@0".into();
        }
        let mut s = String::new();
        for chunk in self.bits.chunks(4) {
            let mut nibble = 0u8;
            for (i, &b) in chunk.iter().enumerate() {
                nibble |= b << (3 - i);
            }
            s.push(char::from_digit(nibble as u32, 16).unwrap());
        }
        format!("{s}@{}", self.bits.len())
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_hex())
    }
}

/// Round-robin bit de-interleave: coordinate r (1-based) of the output takes
/// bits r, r+d, r+2d, ... of `x`, whose bit length is padded to a multiple
/// of d. Bijective and measure preserving on dyadics.
pub fn zeta(d: usize, x: &Dyadic) -> Vec<Dyadic> {
    assert!(d >= 1);
    let len = x.bits().len().div_ceil(d) * d;
    let padded = x.padded_bits(len);
    let mut coords = vec![Vec::with_capacity(len / d); d];
    for (i, &b) in padded.iter().enumerate() {
        coords[i % d].push(b);
    }
    coords.into_iter().map(|bits| Dyadic::from_bits(&bits)).collect()
}

/// Exact inverse of [`zeta`] on dyadics: interleaves the coordinates after
/// padding them to a common length.
pub fn zeta_inv(d: usize, coords: &[Dyadic]) -> Dyadic {
    assert_eq!(coords.len(), d);
    assert!(d >= 1);
    let len = coords.iter().map(|c| c.bits().len()).max().unwrap_or(0);
    let padded: Vec<Vec<u8>> = coords.iter().map(|c| c.padded_bits(len)).collect();
    let mut bits = Vec::with_capacity(len * d);
    for i in 0..len {
        for p in padded.iter() {
            bits.push(p[i]);
        }
    }
    Dyadic::from_bits(&bits)
}

/// A point `(q + c*sqrt(2)) mod 1`. Since sqrt(2) is irrational, two points
/// are equal exactly when the pairs `(q, c)` are equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TorusCoord {
    pub q: Dyadic,
    pub c: i64,
}

impl TorusCoord {
    pub fn from_dyadic(q: Dyadic) -> TorusCoord {
        TorusCoord { q, c: 0 }
    }

    /// `self + sqrt(2) mod 1`.
    pub fn add_sqrt2(&self) -> TorusCoord {
        TorusCoord {
            q: self.q.clone(),
            c: self.c + 1,
        }
    }

    /// Value in `[0, 1)` for diagnostics.
    pub fn to_f64(&self) -> f64 {
        let v = self.q.to_f64() + self.c as f64 * std::f64::consts::SQRT_2;
        v.rem_euclid(1.0)
    }
}

impl fmt::Display for TorusCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.c == 0 {
            write!(f, "{}", self.q)
        } else {
            write!(f, "{}+{}r2", self.q, self.c)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngCore, SeedableRng};

    fn dy(bits: &[u8]) -> Dyadic {
        Dyadic::from_bits(bits)
    }

    #[test]
    fn normalization_trims_trailing_zeros() {
        assert_eq!(dy(&[1, 1, 0, 0]), dy(&[1, 1]));
        assert_eq!(dy(&[0, 0]), Dyadic::zero());
    }

    #[test]
    fn zeta_splits_three_quarters() {
        // 0.1100 = 3/4 with d = 2: coordinates (0.10, 0.10) = (1/2, 1/2).
        let x = dy(&[1, 1, 0, 0]);
        let parts = zeta(2, &x);
        assert_eq!(parts, vec![dy(&[1]), dy(&[1])]);
    }

    #[test]
    fn zeta_roundtrip_on_random_64bit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for d in 1..=6 {
            for _ in 0..200 {
                let x = Dyadic::from_u64(rng.next_u64());
                assert_eq!(zeta_inv(d, &zeta(d, &x)), x, "d = {d}");
            }
        }
    }

    #[test]
    fn mul_mod1_matches_integer_arithmetic() {
        // 1/4 * 3 = 3/4.
        assert_eq!(dy(&[0, 1]).mul_mod1(3), dy(&[1, 1]));
        // 3/4 * 2 = 3/2 mod 1 = 1/2.
        assert_eq!(dy(&[1, 1]).mul_mod1(2), dy(&[1]));
        // Random cross-check against u128 arithmetic at 64 bits.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let raw = rng.next_u64();
            let m = (rng.next_u64() % 1000) + 1;
            let x = Dyadic::from_u64(raw);
            let expect = (raw as u128 * m as u128) as u64; // mod 2^64
            assert_eq!(x.mul_mod1(m), Dyadic::from_u64(expect));
        }
    }

    #[test]
    fn floor_mul_matches_integer_arithmetic() {
        // floor(5 * 5/8) = 3.
        assert_eq!(dy(&[1, 0, 1]).floor_mul(5), 3);
        assert_eq!(Dyadic::zero().floor_mul(7), 0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        for _ in 0..500 {
            let raw = rng.next_u64();
            let m = rng.next_u64() % 100_000;
            let x = Dyadic::from_u64(raw);
            let expect = ((raw as u128 * m as u128) >> 64) as u64;
            assert_eq!(x.floor_mul(m), expect, "raw={raw} m={m}");
        }
    }

    #[test]
    fn floor_mul_on_long_fractions() {
        // 96-bit fraction: x = 2^-96 scaled integer; floor(m*x) checked via
        // the definition for a handful of structured cases.
        let mut bits = vec![0u8; 96];
        bits[0] = 1; // 1/2
        bits[95] = 1; // + 2^-96
        let x = Dyadic::from_bits(&bits);
        assert_eq!(x.floor_mul(4), 2);
        assert_eq!(x.floor_mul(2), 1);
        assert_eq!(x.floor_mul(1), 0);
    }

    #[test]
    fn torus_equality_is_pairwise() {
        let a = TorusCoord::from_dyadic(dy(&[1]));
        let b = a.add_sqrt2();
        assert_ne!(a, b);
        assert_eq!(b, TorusCoord { q: dy(&[1]), c: 1 });
        assert!((b.to_f64() - (0.5 + std::f64::consts::SQRT_2).rem_euclid(1.0)).abs() < 1e-12);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

        #[test]
        fn zeta_preserves_total_bits(raw in proptest::prelude::any::<u64>(), d in 1usize..=6) {
            let x = Dyadic::from_u64(raw);
            let parts = zeta(d, &x);
            let total: usize = parts.iter().map(|p| p.bits().len()).sum();
            // De-interleaving never invents bits.
            proptest::prop_assert!(total <= x.bits().len().div_ceil(d) * d);
            proptest::prop_assert_eq!(zeta_inv(d, &parts), x);
        }
    }
}
