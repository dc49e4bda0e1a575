//! Problem instances, the outcome channel and rounding conventions.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::key::RandomnessKey;
use crate::math::{is_pow2, next_pow2, prev_pow2};

/// Sizes after rounding `n` and `k` up and `rho` down to powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundedInstance {
    pub n: usize,
    pub k: usize,
    pub rho: Option<usize>,
}

/// Rounds raw sizes to the power-of-two grid the designs work on.
///
/// Extra items introduced by rounding `n` up are dummies at the top of the id
/// range and are never defective.
pub fn round_instance(n_raw: usize, k_raw: usize, rho_raw: Option<usize>) -> Result<RoundedInstance> {
    if n_raw < 2 {
        return Err(Error::invalid("n", format!("need n >= 2, got {n_raw}")));
    }
    if k_raw == 0 {
        return Err(Error::invalid("k", "need k >= 1"));
    }
    if k_raw > n_raw {
        return Err(Error::invalid("k", format!("k = {k_raw} exceeds n = {n_raw}")));
    }
    if rho_raw == Some(0) {
        return Err(Error::invalid("rho", "need rho >= 1"));
    }
    let n = next_pow2(n_raw);
    let k = next_pow2(k_raw).min(n);
    Ok(RoundedInstance {
        n,
        k,
        rho: rho_raw.map(prev_pow2),
    })
}

/// `n` items, a defective-count bound `k` and the hidden defective set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemInstance {
    n: usize,
    k: usize,
    defectives: Vec<usize>,
}

impl ProblemInstance {
    /// `defectives` may be in any order but must be duplicate-free.
    pub fn new(n: usize, k: usize, mut defectives: Vec<usize>) -> Result<Self> {
        if !is_pow2(n) || n < 2 {
            return Err(Error::invalid("n", format!("{n} is not a power of two >= 2")));
        }
        if !is_pow2(k) || k >= n {
            return Err(Error::invalid(
                "k",
                format!("{k} must be a power of two below n = {n}"),
            ));
        }
        defectives.sort_unstable();
        if let Some(&item) = defectives.iter().find(|&&d| d >= n) {
            return Err(Error::ItemOutOfRange { item, n });
        }
        if defectives.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("defectives", "duplicate item id"));
        }
        if defectives.len() > k {
            return Err(Error::invalid(
                "defectives",
                format!("{} defectives exceed the bound k = {k}", defectives.len()),
            ));
        }
        Ok(ProblemInstance { n, k, defectives })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Sorted defective ids.
    pub fn defectives(&self) -> &[usize] {
        &self.defectives
    }

    pub fn is_defective(&self, item: usize) -> bool {
        self.defectives.binary_search(&item).is_ok()
    }
}

/// Independent outcome flips: `p01` turns a negative into a positive, `p10` the reverse.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseChannel {
    p01: f64,
    p10: f64,
}

impl NoiseChannel {
    pub const NOISELESS: NoiseChannel = NoiseChannel { p01: 0.0, p10: 0.0 };

    pub fn new(p01: f64, p10: f64) -> Result<Self> {
        for (name, p) in [("p01", p01), ("p10", p10)] {
            if !(0.0..0.5).contains(&p) {
                return Err(Error::invalid(name, format!("{p} must lie in [0, 0.5)")));
            }
        }
        Ok(NoiseChannel { p01, p10 })
    }

    pub fn symmetric(p: f64) -> Result<Self> {
        Self::new(p, p)
    }

    /// Any flip probabilities in `[0, 1]`, for exercising degenerate channels in tests.
    pub fn unchecked(p01: f64, p10: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p01) || !(0.0..=1.0).contains(&p10) {
            return Err(Error::invalid("channel", "flip probabilities must lie in [0, 1]"));
        }
        Ok(NoiseChannel { p01, p10 })
    }

    pub fn p01(&self) -> f64 {
        self.p01
    }

    pub fn p10(&self) -> f64 {
        self.p10
    }

    pub fn is_noiseless(&self) -> bool {
        self.p01 == 0.0 && self.p10 == 0.0
    }

    /// Passes a noiseless outcome through the channel using the first draw of `key`.
    #[inline]
    pub fn transmit(&self, clean: bool, key: &RandomnessKey) -> bool {
        let p = if clean { self.p10 } else { self.p01 };
        if p == 0.0 {
            return clean;
        }
        clean ^ (key.uniform(0) < p)
    }
}

/// Outcome of one test pooling `members`: the OR of their defectivity, passed
/// through `channel` with the flip drawn from `key`.
pub fn compute_outcome(
    members: &[usize],
    instance: &ProblemInstance,
    channel: &NoiseChannel,
    key: &RandomnessKey,
) -> Result<bool> {
    let mut clean = false;
    for &m in members {
        if m >= instance.n() {
            return Err(Error::ItemOutOfRange {
                item: m,
                n: instance.n(),
            });
        }
        clean |= instance.is_defective(m);
    }
    Ok(channel.transmit(clean, key))
}
