//! Node-to-test placement primitives shared by all splitting designs.
//!
//! A placement maps each node of one tree level to exactly one test in a
//! sequence of `t_len` tests. Placements are either stored explicitly (one word
//! per node) or computed on demand from a short key:
//!
//! | constructor                    | backing               | storage words |
//! |--------------------------------|-----------------------|---------------|
//! | [`place_uniform`]              | explicit table        | `num_nodes`   |
//! | [`place_hashed`]               | polynomial hash       | `degree + 2`  |
//! | [`place_balanced`]             | explicit permutation  | `num_nodes`   |
//! | [`place_truncated_permutation`]| Feistel + truncation  | 5             |

mod balanced;
mod feistel;
mod poly;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use rand::Rng;

use crate::error::{Error, Result};
use crate::key::RandomnessKey;

pub use balanced::{place_balanced, place_truncated_permutation, BalancedBacking, BalancedPlacement};
pub use feistel::FeistelPermutation;
pub use poly::{PolyHash, MERSENNE_61};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LevelBacking {
    ExplicitTable(Vec<u32>),
    PolynomialHash(PolyHash),
}

/// Independent (or limited-independence) assignment of nodes to tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LevelPlacement {
    num_nodes: usize,
    t_len: usize,
    backing: LevelBacking,
}

impl LevelPlacement {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn backing(&self) -> &LevelBacking {
        &self.backing
    }

    #[inline]
    pub fn test_of(&self, node: usize) -> usize {
        debug_assert!(node < self.num_nodes);
        match &self.backing {
            LevelBacking::ExplicitTable(t) => t[node] as usize,
            LevelBacking::PolynomialHash(h) => h.hash(node),
        }
    }

    pub fn storage_cost(&self) -> usize {
        match &self.backing {
            LevelBacking::ExplicitTable(t) => t.len(),
            LevelBacking::PolynomialHash(h) => h.storage_words(),
        }
    }
}

fn check_t_len(t_len: usize) -> Result<()> {
    if t_len == 0 {
        return Err(Error::invalid("t_len", "need at least one test"));
    }
    if t_len > u32::MAX as usize {
        return Err(Error::invalid("t_len", "sequence too long"));
    }
    Ok(())
}

/// Every node goes to an independent uniformly random test.
pub fn place_uniform(num_nodes: usize, t_len: usize, key: &RandomnessKey) -> Result<LevelPlacement> {
    check_t_len(t_len)?;
    let mut rng = key.rng();
    let table = (0..num_nodes).map(|_| rng.gen_range(0..t_len as u32)).collect();
    Ok(LevelPlacement {
        num_nodes,
        t_len,
        backing: LevelBacking::ExplicitTable(table),
    })
}

/// Node-to-test map drawn from a `independence_degree`-wise independent
/// polynomial family.
pub fn place_hashed(
    num_nodes: usize,
    t_len: usize,
    independence_degree: usize,
    key: &RandomnessKey,
) -> Result<LevelPlacement> {
    check_t_len(t_len)?;
    if independence_degree < 2 {
        return Err(Error::invalid(
            "independence_degree",
            format!("need at least pairwise independence, got {independence_degree}"),
        ));
    }
    Ok(LevelPlacement {
        num_nodes,
        t_len,
        backing: LevelBacking::PolynomialHash(PolyHash::sample(independence_degree, t_len, key)),
    })
}

/// Any placement a design level can use.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Placement {
    /// Node `j` alone in test `j`.
    Identity { num_nodes: usize },
    Uniform(LevelPlacement),
    Balanced(BalancedPlacement),
}

impl Placement {
    pub fn num_nodes(&self) -> usize {
        match self {
            Placement::Identity { num_nodes } => *num_nodes,
            Placement::Uniform(p) => p.num_nodes(),
            Placement::Balanced(p) => p.num_nodes(),
        }
    }

    pub fn t_len(&self) -> usize {
        match self {
            Placement::Identity { num_nodes } => *num_nodes,
            Placement::Uniform(p) => p.t_len(),
            Placement::Balanced(p) => p.t_len(),
        }
    }

    #[inline]
    pub fn test_of(&self, node: usize) -> usize {
        match self {
            Placement::Identity { .. } => node,
            Placement::Uniform(p) => p.test_of(node),
            Placement::Balanced(p) => p.test_of(node),
        }
    }

    /// Identity placements are implicit and cost nothing.
    pub fn storage_cost(&self) -> usize {
        match self {
            Placement::Identity { .. } => 0,
            Placement::Uniform(p) => p.storage_cost(),
            Placement::Balanced(p) => p.storage_cost(),
        }
    }
}

/// How placements are backed for one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum HashMode {
    /// Explicit tables, fully independent placements.
    #[default]
    Full,
    /// `k`-wise independent polynomial hashing for independent levels.
    KWise,
    /// Pairwise independent polynomial hashing for independent levels.
    Pairwise,
    /// Low-storage keyed permutations; independent levels fall back to pairwise hashing.
    Permutation,
}

/// Independence degree used by [`HashMode::KWise`] when the caller has no better choice.
pub const DEFAULT_KWISE_DEGREE: usize = 4;

impl HashMode {
    pub const ALL: [HashMode; 4] = [
        HashMode::Full,
        HashMode::KWise,
        HashMode::Pairwise,
        HashMode::Permutation,
    ];

    pub fn is_low_storage(self) -> bool {
        self != HashMode::Full
    }

    pub fn as_str(self) -> &'static str {
        match self {
            HashMode::Full => "full",
            HashMode::KWise => "kwise",
            HashMode::Pairwise => "pairwise",
            HashMode::Permutation => "permutation",
        }
    }

    /// Placement for a level whose nodes go to independent random tests.
    pub fn place_independent(
        self,
        num_nodes: usize,
        t_len: usize,
        kwise_degree: usize,
        key: &RandomnessKey,
    ) -> Result<Placement> {
        let p = match self {
            HashMode::Full => place_uniform(num_nodes, t_len, key)?,
            HashMode::KWise => place_hashed(num_nodes, t_len, kwise_degree.max(2), key)?,
            HashMode::Pairwise | HashMode::Permutation => place_hashed(num_nodes, t_len, 2, key)?,
        };
        Ok(Placement::Uniform(p))
    }

    /// Placement for a level with exact row weight and column weight one.
    /// Polynomial hashes cannot guarantee exact loads, so every low-storage
    /// mode uses the truncated permutation here.
    pub fn place_balanced(self, num_nodes: usize, t_len: usize, key: &RandomnessKey) -> Result<Placement> {
        let p = match self {
            HashMode::Full => place_balanced(num_nodes, t_len, key)?,
            _ => place_truncated_permutation(num_nodes, t_len, key)?,
        };
        Ok(Placement::Balanced(p))
    }
}

impl fmt::Display for HashMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HashMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(HashMode::Full),
            "kwise" => Ok(HashMode::KWise),
            "pairwise" => Ok(HashMode::Pairwise),
            "permutation" => Ok(HashMode::Permutation),
            other => Err(Error::invalid(
                "hash-mode",
                format!("unknown mode {other:?} (expected full, kwise, pairwise or permutation)"),
            )),
        }
    }
}
