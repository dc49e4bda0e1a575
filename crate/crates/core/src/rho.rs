//! Scheme for tests that may pool at most `rho` items.
//!
//! Level 0 has `n / rho` nodes of `rho` items, each tested alone. Levels
//! `1..C` shrink nodes by a factor `branch = rho^(1/C)` per level; each level
//! uses `N` balanced matrices with `n / rho` tests, so a test always pools
//! exactly `rho` items. The leaves use `C'` balanced matrices. A candidate
//! survives a middle level only if all `N` of its tests are positive.

use alloc::format;
use alloc::vec::Vec;

use crate::design::{HashMode, Placement};
use crate::error::{Error, Result};
use crate::key::{RandomnessKey, Stream};
use crate::layout::{Design, OutcomeVector, TestLayout};
use crate::math::{is_pow2, log2_exact};
use crate::report::{DecodeReport, ReadTracker};

pub const DEFAULT_DEPTH: u32 = 2;
pub const DEFAULT_REPS: u32 = 3;
pub const DEFAULT_FINAL_REPS: u32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RhoParams {
    pub n: usize,
    pub k: usize,
    pub rho: usize,
    /// Tree depth `C` after adjustment to a divisor of `log2 rho`.
    pub c_depth: u32,
    pub requested_depth: u32,
    /// `N`: balanced matrices per middle level.
    pub n_reps: u32,
    /// `C'`: balanced matrices at the leaf level.
    pub c_final: u32,
    /// `rho^(1/C)`.
    pub branch: usize,
    /// `rho >= n / k`: outside the regime where the test count beats `k log n`.
    pub outside_regime: bool,
}

impl RhoParams {
    pub fn tests_per_matrix(&self) -> usize {
        self.n / self.rho
    }

    /// Node size `rho^(1 - l/C)` at level `l`.
    pub fn node_size_at(&self, level: u32) -> usize {
        self.branch.pow(self.c_depth - level)
    }

    pub fn nodes_at(&self, level: u32) -> usize {
        self.n / self.node_size_at(level)
    }

    /// `(1 + N (C - 1) + C') n / rho`.
    pub fn total_tests(&self) -> usize {
        (1 + self.n_reps as usize * (self.c_depth as usize - 1) + self.c_final as usize) * self.tests_per_matrix()
    }
}

/// Validates sizes and lowers `c_depth` to the largest divisor of `log2 rho`
/// not exceeding it, so every level has an integral power-of-two fan-out.
pub fn rho_params(n: usize, k: usize, rho: usize, c_depth: u32, n_reps: u32, c_final: u32) -> Result<RhoParams> {
    if !is_pow2(n) || !is_pow2(k) || k >= n {
        return Err(Error::invalid(
            "instance",
            format!("need powers of two with k < n, got n = {n}, k = {k}"),
        ));
    }
    if !is_pow2(rho) || rho < 2 {
        return Err(Error::invalid("rho", format!("{rho} must be a power of two >= 2")));
    }
    if rho > n {
        return Err(Error::invalid("rho", format!("rho = {rho} exceeds n = {n}")));
    }
    if c_depth == 0 {
        return Err(Error::invalid("depth", "need depth >= 1"));
    }
    if n_reps == 0 || c_final == 0 {
        return Err(Error::invalid("reps", "repetition counts must be at least 1"));
    }
    let lg = log2_exact(rho);
    let depth = (1..=c_depth.min(lg)).rev().find(|d| lg.is_multiple_of(*d)).unwrap_or(1);
    Ok(RhoParams {
        n,
        k,
        rho,
        c_depth: depth,
        requested_depth: c_depth,
        n_reps,
        c_final,
        branch: 1 << (lg / depth),
        outside_regime: rho >= n / k,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RhoDesign {
    params: RhoParams,
    layout: TestLayout,
    hash_mode: HashMode,
}

impl RhoDesign {
    pub fn params(&self) -> &RhoParams {
        &self.params
    }

    pub fn hash_mode(&self) -> HashMode {
        self.hash_mode
    }
}

impl Design for RhoDesign {
    fn layout(&self) -> &TestLayout {
        &self.layout
    }
}

/// Segment order: level 0, then `N` matrices for each of levels `1..C`, then `C'` leaf matrices.
pub fn build_rho_design(params: &RhoParams, key: &RandomnessKey, hash_mode: HashMode) -> Result<RhoDesign> {
    let p = params;
    let tests = p.tests_per_matrix();
    let mut layout = TestLayout::new(p.n);
    layout.push(0, 0, p.rho, Placement::Identity { num_nodes: tests })?;
    for level in 1..p.c_depth {
        for rep in 0..p.n_reps {
            let k = key.with_stream(Stream::placement(level, rep));
            let placement = hash_mode.place_balanced(p.nodes_at(level), tests, &k)?;
            layout.push(level, rep, p.node_size_at(level), placement)?;
        }
    }
    for rep in 0..p.c_final {
        let k = key.with_stream(Stream::placement(p.c_depth, rep));
        let placement = hash_mode.place_balanced(p.n, tests, &k)?;
        layout.push(p.c_depth, rep, 1, placement)?;
    }
    Ok(RhoDesign {
        params: p.clone(),
        layout,
        hash_mode,
    })
}

pub fn decode_rho(design: &RhoDesign, outcomes: &OutcomeVector) -> Result<DecodeReport> {
    let layout = &design.layout;
    outcomes.check_matches(layout)?;
    let p = &design.params;
    let b = p.branch;
    let reps = p.n_reps as usize;
    let mut report = DecodeReport::default();
    let mut reads = ReadTracker::default();

    let top = layout.segment(0);
    let mut candidates = Vec::new();
    for node in 0..p.tests_per_matrix() {
        report.nodes_visited += 1;
        if reads.read(outcomes, top.test_of(node)) {
            candidates.extend(node * b..(node + 1) * b);
        }
    }
    report.peak_candidates = candidates.len();

    for level in 1..p.c_depth {
        let first = 1 + (level as usize - 1) * reps;
        let segs = &layout.segments()[first..first + reps];
        let mut next = Vec::new();
        for &node in &candidates {
            report.nodes_visited += 1;
            let mut all_positive = true;
            for seg in segs {
                if !reads.read(outcomes, seg.test_of(node)) {
                    all_positive = false;
                    break;
                }
            }
            if all_positive {
                next.extend(node * b..(node + 1) * b);
            }
        }
        candidates = next;
        report.peak_candidates = report.peak_candidates.max(candidates.len());
    }

    let leaves = &layout.segments()[1 + (p.c_depth as usize - 1) * reps..];
    let mut estimate = Vec::new();
    for &item in &candidates {
        report.nodes_visited += 1;
        let mut clean = true;
        for seg in leaves {
            if !reads.read(outcomes, seg.test_of(item)) {
                clean = false;
                break;
            }
        }
        if clean {
            estimate.push(item);
        }
    }
    estimate.sort_unstable();
    report.estimate = estimate;
    reads.fill(&mut report);
    report.storage_words = layout.storage_words() + report.peak_candidates;
    Ok(report)
}
