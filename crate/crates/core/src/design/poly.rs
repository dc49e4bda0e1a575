//! Polynomial hash family over the Mersenne prime field `GF(2^61 - 1)`.
//!
//! A uniformly random polynomial with `d` coefficients is `d`-wise
//! independent on the field. Reducing the field value modulo `t_len` adds a
//! bias of at most `t_len / p` per bucket probability, which is below `2^-40`
//! for every table size used here.

use alloc::vec::Vec;
use rand::Rng;

use crate::key::RandomnessKey;

pub const MERSENNE_61: u64 = (1 << 61) - 1;

#[inline]
fn mul_mod(a: u64, b: u64) -> u64 {
    let prod = a as u128 * b as u128;
    let lo = (prod as u64) & MERSENNE_61;
    let hi = (prod >> 61) as u64;
    let s = lo + hi;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[inline]
fn add_mod(a: u64, b: u64) -> u64 {
    let s = a + b;
    if s >= MERSENNE_61 {
        s - MERSENNE_61
    } else {
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyHash {
    coeffs: Vec<u64>,
    range: u64,
}

impl PolyHash {
    /// `degree` coefficients drawn from `key`; values land in `[0, range)`.
    pub fn sample(degree: usize, range: usize, key: &RandomnessKey) -> Self {
        debug_assert!(degree >= 1 && range >= 1);
        let mut rng = key.rng();
        let coeffs = (0..degree).map(|_| rng.gen_range(0..MERSENNE_61)).collect();
        PolyHash {
            coeffs,
            range: range as u64,
        }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// Evaluation by Horner's rule: `O(degree)` multiplications.
    #[inline]
    pub fn hash(&self, x: usize) -> usize {
        let x = x as u64 % MERSENNE_61;
        let mut acc = 0u64;
        for &c in self.coeffs.iter().rev() {
            acc = add_mod(mul_mod(acc, x), c);
        }
        (acc % self.range) as usize
    }

    /// Coefficients plus the modulus and range.
    pub fn storage_words(&self) -> usize {
        self.coeffs.len() + 2
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mul_mod_matches_wide_arithmetic() {
        let cases = [
            (0, 5),
            (1, MERSENNE_61 - 1),
            (MERSENNE_61 - 1, MERSENNE_61 - 1),
            (123_456_789_012, 987_654_321_098),
        ];
        for (a, b) in cases {
            let want = ((a as u128 * b as u128) % MERSENNE_61 as u128) as u64;
            assert_eq!(mul_mod(a, b), want);
        }
    }

    #[test]
    fn constant_polynomial_is_constant() {
        let h = PolyHash {
            coeffs: alloc::vec![17],
            range: 5,
        };
        assert!((0..100).all(|x| h.hash(x) == 2));
    }

    #[test]
    fn horner_matches_direct_evaluation() {
        let h = PolyHash {
            coeffs: alloc::vec![3, 5, 7],
            range: 1 << 40,
        };
        for x in 0..50u64 {
            assert_eq!(h.hash(x as usize) as u64, 3 + 5 * x + 7 * x * x);
        }
    }
}
