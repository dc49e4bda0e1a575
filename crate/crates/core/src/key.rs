//! Keyed, counter-based randomness.
//!
//! Every random draw in a design or a noisy evaluation is addressed by a
//! `(seed, stream, counter)` triple and computed by a stateless mixing
//! function, so results do not depend on evaluation order, thread count or
//! platform. Streams that need many draws (placement tables, shuffles) seed a
//! ChaCha8 generator from the same triple.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
#[inline]
pub(crate) const fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// What a stream of draws is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Purpose {
    Root,
    Defectives,
    Placement,
    Noise,
}

impl Purpose {
    fn tag(self) -> u64 {
        match self {
            Purpose::Root => 0,
            Purpose::Defectives => 1,
            Purpose::Placement => 2,
            Purpose::Noise => 3,
        }
    }
}

/// Substream address: tree level, repetition index and purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Stream {
    pub level: u32,
    pub rep: u32,
    pub purpose: Purpose,
}

impl Stream {
    pub const ROOT: Stream = Stream {
        level: 0,
        rep: 0,
        purpose: Purpose::Root,
    };

    pub const fn placement(level: u32, rep: u32) -> Stream {
        Stream {
            level,
            rep,
            purpose: Purpose::Placement,
        }
    }

    /// Noise stream for one global test index.
    pub const fn noise(test: usize) -> Stream {
        Stream {
            level: (test >> 32) as u32,
            rep: test as u32,
            purpose: Purpose::Noise,
        }
    }

    pub const fn defectives() -> Stream {
        Stream {
            level: 0,
            rep: 0,
            purpose: Purpose::Defectives,
        }
    }
}

/// A seed plus a stream address. Identical keys always produce identical draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RandomnessKey {
    pub seed: u64,
    pub stream: Stream,
}

impl RandomnessKey {
    pub const fn new(seed: u64) -> Self {
        RandomnessKey {
            seed,
            stream: Stream::ROOT,
        }
    }

    /// Root key of trial `trial` under `base_seed`.
    pub const fn for_trial(base_seed: u64, trial: u64) -> Self {
        RandomnessKey::new(mix64(base_seed ^ mix64(trial.wrapping_add(GOLDEN))))
    }

    pub const fn with_stream(self, stream: Stream) -> Self {
        RandomnessKey {
            seed: self.seed,
            stream,
        }
    }

    /// Key used for the noise flip of global test `test`.
    pub const fn for_test(self, test: usize) -> Self {
        self.with_stream(Stream::noise(test))
    }

    fn state(&self) -> u64 {
        let s = &self.stream;
        let mut h = mix64(self.seed.wrapping_add(GOLDEN));
        h = mix64(h ^ s.purpose.tag().wrapping_mul(GOLDEN));
        h = mix64(h ^ (s.level as u64).wrapping_add(0x632b_e59b_d9b4_e019));
        mix64(h ^ (s.rep as u64).wrapping_add(0x8cb9_2ba7_2f3d_8dd7))
    }

    /// The `counter`-th 64-bit draw of this stream.
    pub fn draw(&self, counter: u64) -> u64 {
        mix64(self.state() ^ mix64(counter.wrapping_mul(GOLDEN).wrapping_add(1)))
    }

    /// The `counter`-th draw mapped to `[0, 1)` with 53 bits of precision.
    pub fn uniform(&self, counter: u64) -> f64 {
        (self.draw(counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// A sequential generator for bulk draws on this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        for (i, chunk) in seed.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&self.draw(u64::MAX - i as u64).to_le_bytes());
        }
        ChaCha8Rng::from_seed(seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn identical_keys_identical_draws() {
        let a = RandomnessKey::new(7).with_stream(Stream::placement(3, 1));
        let b = RandomnessKey::new(7).with_stream(Stream::placement(3, 1));
        assert_eq!(a.draw(0), b.draw(0));
        assert_eq!(a.rng().gen::<u64>(), b.rng().gen::<u64>());
    }

    #[test]
    fn draws_are_pinned_across_platforms() {
        // Pure integer arithmetic; frozen so a change to the mixing is noticed.
        let k = RandomnessKey::new(1);
        assert_eq!(k.draw(0), RandomnessKey::new(1).draw(0));
        assert_eq!(mix64(0), 0);
        assert_eq!(mix64(1), 0x5692_161d_100b_05e5);
    }

    #[test]
    fn distinct_streams_differ() {
        let base = RandomnessKey::new(42);
        let mut seen = alloc::collections::BTreeSet::new();
        for level in 0..8 {
            for rep in 0..8 {
                for purpose in [Purpose::Placement, Purpose::Noise, Purpose::Defectives] {
                    let k = base.with_stream(Stream { level, rep, purpose });
                    assert!(seen.insert(k.draw(0)));
                }
            }
        }
        assert_ne!(
            RandomnessKey::for_trial(1, 0).seed,
            RandomnessKey::for_trial(1, 1).seed
        );
    }

    #[test]
    fn uniform_is_in_unit_interval_with_sane_mean() {
        let k = RandomnessKey::new(3).for_test(11);
        let m = 100_000;
        let mean: f64 = (0..m).map(|c| k.uniform(c)).sum::<f64>() / m as f64;
        assert!((mean - 0.5).abs() < 5.0 * (1.0f64 / 12.0 / m as f64).sqrt());
        assert!((0..1000).all(|c| (0.0..1.0).contains(&k.uniform(c))));
    }
}
