//! Keyed bijection on `[0, 2^bits)` from a balanced 4-round Feistel network.
//!
//! The network runs on `2 * ceil(bits / 2)` bits; for odd `bits` outputs
//! outside the domain are re-encrypted (cycle walking), which keeps the map a
//! bijection of the smaller domain. Storage is the round keys plus the width.

use rand::Rng;

use crate::key::{mix64, RandomnessKey};

const ROUNDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeistelPermutation {
    bits: u32,
    half: u32,
    keys: [u64; ROUNDS],
}

impl FeistelPermutation {
    pub fn sample(bits: u32, key: &RandomnessKey) -> Self {
        assert!(bits <= 62, "domain too large");
        let mut rng = key.rng();
        let mut keys = [0u64; ROUNDS];
        for k in &mut keys {
            *k = rng.gen();
        }
        FeistelPermutation {
            bits,
            half: bits.div_ceil(2),
            keys,
        }
    }

    pub fn domain(&self) -> usize {
        1usize << self.bits
    }

    #[inline]
    fn round(&self, i: usize, x: u64) -> u64 {
        mix64(self.keys[i] ^ x.wrapping_mul(0x9e37_79b9_7f4a_7c15)) & ((1u64 << self.half) - 1)
    }

    #[inline]
    fn encrypt(&self, x: u64) -> u64 {
        let mask = (1u64 << self.half) - 1;
        let (mut left, mut right) = (x >> self.half, x & mask);
        for i in 0..ROUNDS {
            let next = left ^ self.round(i, right);
            left = right;
            right = next;
        }
        (left << self.half) | right
    }

    #[inline]
    fn decrypt(&self, x: u64) -> u64 {
        let mask = (1u64 << self.half) - 1;
        let (mut left, mut right) = (x >> self.half, x & mask);
        for i in (0..ROUNDS).rev() {
            let prev = right ^ self.round(i, left);
            right = left;
            left = prev;
        }
        (left << self.half) | right
    }

    #[inline]
    pub fn permute(&self, x: usize) -> usize {
        debug_assert!(x < self.domain());
        if self.bits == 0 {
            return 0;
        }
        let mut y = self.encrypt(x as u64);
        while y >> self.bits != 0 {
            y = self.encrypt(y);
        }
        y as usize
    }

    pub fn invert(&self, y: usize) -> usize {
        debug_assert!(y < self.domain());
        if self.bits == 0 {
            return 0;
        }
        let mut x = self.decrypt(y as u64);
        while x >> self.bits != 0 {
            x = self.decrypt(x);
        }
        x as usize
    }

    pub fn storage_words(&self) -> usize {
        ROUNDS + 1
    }
}
