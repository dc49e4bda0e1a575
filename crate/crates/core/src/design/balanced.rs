use alloc::format;
use alloc::vec::Vec;
use rand::seq::SliceRandom;

use super::feistel::FeistelPermutation;
use crate::error::{Error, Result};
use crate::key::RandomnessKey;
use crate::math::{is_pow2, log2_exact};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BalancedBacking {
    /// `slot[node]`: position of the node in a random permutation.
    Explicit(Vec<u32>),
    /// Keyed permutation; the test is the permuted id with its low bits dropped.
    TruncatedPermutation { perm: FeistelPermutation, shift: u32 },
}

/// Column weight exactly one, row weight exactly `num_nodes / t_len`.
///
/// Nodes are laid out in permuted order and chunked into consecutive blocks
/// of `row_weight`; block `t` is test `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedPlacement {
    num_nodes: usize,
    t_len: usize,
    row_weight: usize,
    backing: BalancedBacking,
}

impl BalancedPlacement {
    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn t_len(&self) -> usize {
        self.t_len
    }

    pub fn row_weight(&self) -> usize {
        self.row_weight
    }

    pub fn backing(&self) -> &BalancedBacking {
        &self.backing
    }

    #[inline]
    pub fn test_of(&self, node: usize) -> usize {
        debug_assert!(node < self.num_nodes);
        match &self.backing {
            BalancedBacking::Explicit(slot) => slot[node] as usize / self.row_weight,
            BalancedBacking::TruncatedPermutation { perm, shift } => perm.permute(node) >> shift,
        }
    }

    pub fn storage_cost(&self) -> usize {
        match &self.backing {
            BalancedBacking::Explicit(slot) => slot.len(),
            BalancedBacking::TruncatedPermutation { perm, .. } => perm.storage_words(),
        }
    }
}

/// Uniformly random balanced assignment; requires `t_len | num_nodes`.
pub fn place_balanced(num_nodes: usize, t_len: usize, key: &RandomnessKey) -> Result<BalancedPlacement> {
    if t_len == 0 || !num_nodes.is_multiple_of(t_len) {
        return Err(Error::invalid(
            "t_len",
            format!("{t_len} tests do not evenly divide {num_nodes} nodes"),
        ));
    }
    if num_nodes > u32::MAX as usize {
        return Err(Error::invalid("num_nodes", "too many nodes for an explicit table"));
    }
    let mut order: Vec<u32> = (0..num_nodes as u32).collect();
    order.shuffle(&mut key.rng());
    let mut slot = alloc::vec![0u32; num_nodes];
    for (pos, &node) in order.iter().enumerate() {
        slot[node as usize] = pos as u32;
    }
    Ok(BalancedPlacement {
        num_nodes,
        t_len,
        row_weight: num_nodes / t_len,
        backing: BalancedBacking::Explicit(slot),
    })
}

/// Constant-storage balanced assignment: a keyed bijection on
/// `[0, num_nodes)` followed by dropping the low `log2(num_nodes / t_len)` bits.
pub fn place_truncated_permutation(
    num_nodes: usize,
    t_len: usize,
    key: &RandomnessKey,
) -> Result<BalancedPlacement> {
    if !is_pow2(num_nodes) || !is_pow2(t_len) || t_len > num_nodes {
        return Err(Error::invalid(
            "sizes",
            format!("need powers of two with t_len <= num_nodes, got {num_nodes} nodes and {t_len} tests"),
        ));
    }
    let perm = FeistelPermutation::sample(log2_exact(num_nodes), key);
    let row_weight = num_nodes / t_len;
    Ok(BalancedPlacement {
        num_nodes,
        t_len,
        row_weight,
        backing: BalancedBacking::TruncatedPermutation {
            perm,
            shift: log2_exact(row_weight),
        },
    })
}
