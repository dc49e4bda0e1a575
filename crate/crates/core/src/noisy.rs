//! Binary splitting for outcomes corrupted by random flips.
//!
//! Levels `log2 k .. log2 n - 1` of a binary tree each get `N` random test
//! sequences of length `T_len = C k`. A node's *intermediate label* is the
//! majority of its `N` outcomes. Its *final label* is positive iff some path
//! of `r` descendants below it carries more than `r / 2` positive
//! intermediate labels. Paths that reach the leaves are padded with labels
//! from successive batches of `N` leaf-level sequences, of which there are
//! `C' N log2 n`. Surviving leaves are accepted by a majority over all
//! `C' log2 n` batch labels.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec::Vec;

use crate::design::{HashMode, DEFAULT_KWISE_DEGREE};
use crate::error::{Error, Result};
use crate::key::{RandomnessKey, Stream};
use crate::layout::{Design, OutcomeVector, TestLayout};
use crate::math::{ceil_tol, is_pow2, log2_exact};
use crate::report::{DecodeReport, ReadTracker};

/// Repetitions per level used by practice mode unless overridden.
pub const PRACTICE_REPS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum NoisyMode {
    /// Every constant from its closed-form bound.
    Theory,
    /// Smaller calibrated constants; the structural inequalities still hold.
    #[default]
    Practice,
}

impl NoisyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoisyMode::Theory => "theory",
            NoisyMode::Practice => "practice",
        }
    }
}

impl core::str::FromStr for NoisyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "theory" => Ok(NoisyMode::Theory),
            "practice" => Ok(NoisyMode::Practice),
            other => Err(Error::invalid("mode", format!("unknown mode {other:?} (expected theory or practice)"))),
        }
    }
}

/// Practice-mode overrides; `None` keeps the mode's default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct NoisyOverrides {
    pub c_const: Option<u32>,
    pub n_reps: Option<u32>,
    pub r: Option<u32>,
    pub c_final: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyParams {
    pub n: usize,
    pub k: usize,
    /// Noise level the constants are designed for.
    pub p: f64,
    pub t: f64,
    pub epsilon: f64,
    pub c_const: u32,
    /// `N`, always odd.
    pub n_reps: u32,
    /// Lookahead depth.
    pub r: u32,
    /// `C'`.
    pub c_final: u32,
    /// `C k`.
    pub t_len: usize,
    /// `(k log2(n/k))^(1 - epsilon t)`.
    pub beta_n: f64,
    pub mode: NoisyMode,
}

impl NoisyParams {
    pub fn top_level(&self) -> u32 {
        log2_exact(self.k)
    }

    pub fn leaf_level(&self) -> u32 {
        log2_exact(self.n)
    }

    /// Number of `N`-sequence batches at the leaf level: `C' log2 n`.
    pub fn leaf_batches(&self) -> usize {
        self.c_final as usize * self.leaf_level() as usize
    }

    /// `C N k log2(n/k) + C C' N k log2 n`.
    pub fn total_tests(&self) -> usize {
        let c = self.c_const as usize;
        let nr = self.n_reps as usize;
        let mid_levels = (self.leaf_level() - self.top_level()) as usize;
        c * nr * self.k * mid_levels + c * self.c_final as usize * nr * self.k * self.leaf_level() as usize
    }
}

/// `C = ceil(2 / (1 - 2p)) + 1`, the smallest constant keeping `1/2 - p - 1/C > 0`.
pub fn min_c_const(p: f64) -> u32 {
    ceil_tol(2.0 / (1.0 - 2.0 * p)) as u32 + 1
}

/// `N >= (2 t ln 2 + ln 16) / (2 (1/2 - p - 1/C)^2)`.
pub fn reps_bound(p: f64, t: f64, c_const: u32) -> f64 {
    let gap = 0.5 - p - 1.0 / c_const as f64;
    (2.0 * t * core::f64::consts::LN_2 + libm::log(16.0)) / (2.0 * gap * gap)
}

/// Smallest odd integer at or above [`reps_bound`].
pub fn theory_reps(p: f64, t: f64, c_const: u32) -> u32 {
    let n = ceil_tol(reps_bound(p, t, c_const)) as u32;
    n | 1
}

/// `r = ceil((1/t) log2(3 (k log2(n/k))^(epsilon t)))`.
pub fn theory_lookahead(n: usize, k: usize, t: f64, epsilon: f64) -> u32 {
    let mass = k as f64 * (log2_exact(n) - log2_exact(k)) as f64;
    let r = ceil_tol(libm::log2(3.0 * libm::pow(mass, epsilon * t)) / t);
    (r as u32).max(1)
}

/// Smallest `C'` with `C' log2 n >= r` and `t C' > 1`.
pub fn min_c_final(n: usize, r: u32, t: f64) -> u32 {
    let lg = log2_exact(n);
    let by_padding = r.div_ceil(lg);
    let by_union = libm::floor(1.0 / t) as u32 + 1;
    by_padding.max(by_union).max(1)
}

pub fn noisy_params(
    n: usize,
    k: usize,
    p: f64,
    t: f64,
    epsilon: f64,
    mode: NoisyMode,
    overrides: NoisyOverrides,
) -> Result<NoisyParams> {
    if !is_pow2(n) || !is_pow2(k) || k >= n {
        return Err(Error::invalid(
            "instance",
            format!("need powers of two with k < n, got n = {n}, k = {k}"),
        ));
    }
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::invalid("p", "p must lie in (0, 0.5)"));
    }
    if !(t > 0.0) {
        return Err(Error::invalid("t", format!("{t} must be positive")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid("epsilon", format!("{epsilon} must lie in (0, 1)")));
    }
    if epsilon * t <= 1.0 {
        return Err(Error::invalid(
            "epsilon",
            format!("need epsilon * t > 1, got {epsilon} * {t} = {}", epsilon * t),
        ));
    }
    if mode == NoisyMode::Theory && overrides != NoisyOverrides::default() {
        return Err(Error::invalid("mode", "theory mode takes no constant overrides"));
    }

    let c_min = min_c_const(p);
    let c_const = overrides.c_const.unwrap_or(c_min);
    if c_const < c_min {
        return Err(Error::invalid(
            "c_const",
            format!("C = {c_const} is below ceil(2/(1-2p)) + 1 = {c_min}"),
        ));
    }
    let n_reps = match (mode, overrides.n_reps) {
        (NoisyMode::Theory, _) => theory_reps(p, t, c_const),
        (NoisyMode::Practice, Some(nr)) => nr,
        (NoisyMode::Practice, None) => PRACTICE_REPS,
    };
    if n_reps % 2 == 0 {
        return Err(Error::invalid("reps", format!("N = {n_reps} must be odd")));
    }
    let r = overrides.r.unwrap_or_else(|| theory_lookahead(n, k, t, epsilon));
    if r == 0 {
        return Err(Error::invalid("r", "lookahead depth must be at least 1"));
    }
    let lg = log2_exact(n);
    let c_final = overrides.c_final.unwrap_or_else(|| min_c_final(n, r, t));
    if (c_final as u64) * (lg as u64) < r as u64 {
        return Err(Error::invalid(
            "final-reps",
            format!("C' log2 n = {} is below r = {r}", c_final * lg),
        ));
    }
    if !(t * c_final as f64 > 1.0) {
        return Err(Error::invalid("final-reps", format!("need t C' > 1, got {t} * {c_final}")));
    }
    let mass = k as f64 * (lg - log2_exact(k)) as f64;
    Ok(NoisyParams {
        n,
        k,
        p,
        t,
        epsilon,
        c_const,
        n_reps,
        r,
        c_final,
        t_len: c_const as usize * k,
        beta_n: libm::pow(mass, 1.0 - epsilon * t),
        mode,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisyDesign {
    params: NoisyParams,
    layout: TestLayout,
    hash_mode: HashMode,
}

impl NoisyDesign {
    pub fn params(&self) -> &NoisyParams {
        &self.params
    }

    pub fn hash_mode(&self) -> HashMode {
        self.hash_mode
    }

    #[inline]
    fn mid_segment(&self, level: u32, rep: u32) -> usize {
        let p = &self.params;
        (level - p.top_level()) as usize * p.n_reps as usize + rep as usize
    }

    #[inline]
    fn leaf_segment(&self, batch: usize, rep: u32) -> usize {
        let p = &self.params;
        let base = (p.leaf_level() - p.top_level()) as usize * p.n_reps as usize;
        base + batch * p.n_reps as usize + rep as usize
    }
}

impl Design for NoisyDesign {
    fn layout(&self) -> &TestLayout {
        &self.layout
    }
}

/// Segment order: `N` sequences per level from `log2 k` upward, then the
/// `C' N log2 n` leaf sequences (batch `j` is sequences `jN .. jN + N - 1`).
pub fn build_noisy_design(params: &NoisyParams, key: &RandomnessKey, hash_mode: HashMode) -> Result<NoisyDesign> {
    let p = params;
    let leaf = p.leaf_level();
    let mut layout = TestLayout::new(p.n);
    for level in p.top_level()..leaf {
        let nodes = 1usize << level;
        for rep in 0..p.n_reps {
            let k = key.with_stream(Stream::placement(level, rep));
            let placement = hash_mode.place_independent(nodes, p.t_len, DEFAULT_KWISE_DEGREE, &k)?;
            layout.push(level, rep, p.n / nodes, placement)?;
        }
    }
    let leaf_seqs = p.leaf_batches() * p.n_reps as usize;
    for rep in 0..leaf_seqs {
        let k = key.with_stream(Stream::placement(leaf, rep as u32));
        let placement = hash_mode.place_independent(p.n, p.t_len, DEFAULT_KWISE_DEGREE, &k)?;
        layout.push(leaf, rep as u32, 1, placement)?;
    }
    Ok(NoisyDesign {
        params: p.clone(),
        layout,
        hash_mode,
    })
}

/// Memo of majority-vote labels for one decode, plus work counters.
///
/// Keys are `(level, node)` for tree levels below the leaves and
/// `(leaf_level + 1 + batch, item)` for leaf batch labels.
#[derive(Debug, Clone, Default)]
pub struct LabelCache {
    labels: BTreeMap<(u32, usize), bool>,
    enabled: bool,
    computed: usize,
    reads: ReadTracker,
}

impl LabelCache {
    pub fn new() -> Self {
        LabelCache {
            enabled: true,
            ..Default::default()
        }
    }

    /// Recomputes every label on every request; for differential testing.
    pub fn disabled() -> Self {
        LabelCache::default()
    }

    /// Label evaluations performed (cache misses when enabled).
    pub fn computed(&self) -> usize {
        self.computed
    }

    /// Outcome checks performed so far.
    pub fn outcomes_read(&self) -> usize {
        self.reads.checks()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn lookup(&mut self, key: (u32, usize), eval: impl FnOnce(&mut Self) -> bool) -> bool {
        if self.enabled {
            if let Some(&v) = self.labels.get(&key) {
                return v;
            }
        }
        self.computed += 1;
        let v = eval(self);
        if self.enabled {
            self.labels.insert(key, v);
        }
        v
    }
}

fn majority(design: &NoisyDesign, outcomes: &OutcomeVector, cache: &mut LabelCache, segs: impl Iterator<Item = usize>, node: usize) -> bool {
    let layout = design.layout();
    let mut positives = 0u32;
    for s in segs {
        positives += cache.reads.read(outcomes, layout.segment(s).test_of(node)) as u32;
    }
    2 * positives > design.params.n_reps
}

/// Majority vote over the `N` tests of `node` at tree level `level`
/// (`log2 k <= level < log2 n`).
pub fn intermediate_label(
    node: usize,
    level: u32,
    design: &NoisyDesign,
    outcomes: &OutcomeVector,
    cache: &mut LabelCache,
) -> bool {
    let reps = design.params.n_reps;
    cache.lookup((level, node), |c| {
        majority(design, outcomes, c, (0..reps).map(|r| design.mid_segment(level, r)), node)
    })
}

/// Majority vote over leaf batch `batch` for singleton `item`.
pub fn batch_label(item: usize, batch: usize, design: &NoisyDesign, outcomes: &OutcomeVector, cache: &mut LabelCache) -> bool {
    let reps = design.params.n_reps;
    let key = (design.params.leaf_level() + 1 + batch as u32, item);
    cache.lookup(key, |c| {
        majority(design, outcomes, c, (0..reps).map(|r| design.leaf_segment(batch, r)), item)
    })
}

/// Depth-first search for a length-`r` descendant path with more than `r / 2`
/// positive labels. `(level, node)` is the current path end; when
/// `level == leaf`, the path continues through the same singleton using
/// batch `next_batch`.
#[allow(clippy::too_many_arguments)]
fn path_search(
    design: &NoisyDesign,
    outcomes: &OutcomeVector,
    cache: &mut LabelCache,
    level: u32,
    node: usize,
    next_batch: usize,
    depth: u32,
    positives: u32,
) -> bool {
    let r = design.params.r;
    if 2 * positives > r {
        return true;
    }
    if depth == r || 2 * (positives + r - depth) <= r {
        return false;
    }
    let leaf = design.params.leaf_level();
    if level == leaf {
        let label = batch_label(node, next_batch, design, outcomes, cache);
        return path_search(design, outcomes, cache, leaf, node, next_batch + 1, depth + 1, positives + label as u32);
    }
    for child in [2 * node, 2 * node + 1] {
        let found = if level + 1 == leaf {
            let label = batch_label(child, 0, design, outcomes, cache);
            path_search(design, outcomes, cache, leaf, child, 1, depth + 1, positives + label as u32)
        } else {
            let label = intermediate_label(child, level + 1, design, outcomes, cache);
            path_search(design, outcomes, cache, level + 1, child, 0, depth + 1, positives + label as u32)
        };
        if found {
            return true;
        }
    }
    false
}

/// Lookahead decision for `node` at `level` (`log2 k <= level < log2 n`).
/// Evaluates at most `2 + 4 + ... + 2^r < 2^(r+1)` labels.
pub fn final_label(
    node: usize,
    level: u32,
    design: &NoisyDesign,
    outcomes: &OutcomeVector,
    cache: &mut LabelCache,
) -> bool {
    path_search(design, outcomes, cache, level, node, 0, 0, 0)
}

pub fn decode_noisy(design: &NoisyDesign, outcomes: &OutcomeVector) -> Result<DecodeReport> {
    decode_noisy_with_cache(design, outcomes, &mut LabelCache::new())
}

pub fn decode_noisy_with_cache(
    design: &NoisyDesign,
    outcomes: &OutcomeVector,
    cache: &mut LabelCache,
) -> Result<DecodeReport> {
    outcomes.check_matches(design.layout())?;
    let p = &design.params;
    let mut report = DecodeReport::default();
    let mut candidates: Vec<usize> = (0..p.k).collect();
    report.peak_candidates = candidates.len();
    for level in p.top_level()..p.leaf_level() {
        let mut next = Vec::new();
        for &node in &candidates {
            report.nodes_visited += 1;
            if final_label(node, level, design, outcomes, cache) {
                next.push(2 * node);
                next.push(2 * node + 1);
            }
        }
        candidates = next;
        report.peak_candidates = report.peak_candidates.max(candidates.len());
    }
    let batches = p.leaf_batches();
    let mut estimate = Vec::new();
    for &item in &candidates {
        report.nodes_visited += 1;
        let positives = (0..batches)
            .filter(|&j| batch_label(item, j, design, outcomes, cache))
            .count();
        if 2 * positives > batches {
            estimate.push(item);
        }
    }
    estimate.sort_unstable();
    report.estimate = estimate;
    cache.reads.fill(&mut report);
    report.labels_computed = cache.computed();
    report.storage_words = design.layout().storage_words() + report.peak_candidates;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVec;
    use crate::layout::evaluate_design;
    use crate::model::{NoiseChannel, ProblemInstance};
    use alloc::vec;

    fn theory(n: usize, k: usize, p: f64, t: f64, eps: f64) -> NoisyParams {
        noisy_params(n, k, p, t, eps, NoisyMode::Theory, NoisyOverrides::default()).unwrap()
    }

    fn practice(n: usize, k: usize, p: f64) -> NoisyParams {
        noisy_params(n, k, p, 2.0, 0.6, NoisyMode::Practice, NoisyOverrides::default()).unwrap()
    }

    #[test]
    fn theory_constants() {
        assert_eq!(min_c_const(0.1), 4);
        assert_eq!(min_c_const(0.25), 5);
        let bound = reps_bound(0.1, 2.0, 4);
        assert!((bound - 123.2265).abs() < 1e-3, "{bound}");
        assert_eq!(theory_reps(0.1, 2.0, 4), 125);
        assert_eq!(theory_lookahead(1 << 12, 8, 2.0, 0.6), 5);

        let p = theory(1 << 12, 8, 0.1, 2.0, 0.6);
        assert_eq!((p.c_const, p.n_reps, p.r), (4, 125, 5));
        assert_eq!(p.n_reps % 2, 1);
        assert!(p.n_reps as f64 >= reps_bound(0.1, 2.0, 4));
        assert_eq!(p.c_final, 1);
        assert!(p.c_final * 12 >= p.r && 2.0 * p.c_final as f64 > 1.0);
        assert_eq!(p.t_len, 32);
    }

    #[test]
    fn c_final_takes_the_larger_constraint() {
        // t C' > 1 with t = 1 needs C' = 2 even when the padding needs 1.
        assert_eq!(min_c_final(1 << 12, 5, 1.0), 2);
        assert_eq!(min_c_final(1 << 12, 5, 1.5), 1);
        assert_eq!(min_c_final(16, 9, 4.0), 3);
    }

    #[test]
    fn rejects_bad_parameters() {
        let ok = NoisyOverrides::default();
        let e = noisy_params(1 << 10, 4, 0.6, 2.0, 0.6, NoisyMode::Practice, ok).unwrap_err();
        assert!(alloc::format!("{e}").contains("p must lie in (0, 0.5)"));
        assert!(noisy_params(1 << 10, 4, 0.5, 2.0, 0.6, NoisyMode::Practice, ok).is_err());
        assert!(noisy_params(1 << 10, 4, 0.1, 1.5, 0.6, NoisyMode::Practice, ok).is_err());
        assert!(noisy_params(1 << 10, 4, 0.1, 2.0, 0.5, NoisyMode::Practice, ok).is_err());
        let even = NoisyOverrides { n_reps: Some(6), ..ok };
        assert!(noisy_params(1 << 10, 4, 0.1, 2.0, 0.6, NoisyMode::Practice, even).is_err());
        let short = NoisyOverrides { r: Some(21), c_final: Some(2), ..ok };
        assert!(noisy_params(1 << 10, 4, 0.1, 2.0, 0.6, NoisyMode::Practice, short).is_err());
        let low_c = NoisyOverrides { c_const: Some(3), ..ok };
        assert!(noisy_params(1 << 10, 4, 0.1, 2.0, 0.6, NoisyMode::Practice, low_c).is_err());
        let tweak = NoisyOverrides { n_reps: Some(9), ..ok };
        assert!(noisy_params(1 << 10, 4, 0.1, 2.0, 0.6, NoisyMode::Theory, tweak).is_err());
    }

    #[test]
    fn practice_defaults() {
        let p = practice(1 << 12, 8, 0.05);
        assert_eq!((p.c_const, p.n_reps, p.r, p.c_final), (4, 7, 5, 1));
    }

    #[test]
    fn test_count_identity() {
        for (n, k, pn) in [(1usize << 12, 8usize, 0.05), (1 << 10, 1, 0.1), (1 << 8, 64, 0.2)] {
            let p = practice(n, k, pn);
            let d = build_noisy_design(&p, &RandomnessKey::new(3), HashMode::Full).unwrap();
            let lg = n.trailing_zeros() as usize;
            let lk = k.trailing_zeros() as usize;
            let expected = p.n_reps as usize * p.t_len * (lg - lk) + p.c_final as usize * p.n_reps as usize * lg * p.t_len;
            assert_eq!(d.num_tests(), expected);
            assert_eq!(p.total_tests(), expected);
        }
    }

    /// One mid level (`k = n / 2`) with `N = 3`; the outcome bits are written by hand.
    fn hand_outcomes(design: &NoisyDesign, node: usize, bits: &[bool]) -> OutcomeVector {
        let layout = design.layout();
        let mut v = BitVec::zeros(layout.num_tests());
        for (rep, &b) in bits.iter().enumerate() {
            let s = design.mid_segment(design.params.top_level(), rep as u32);
            v.set(layout.segment(s).test_of(node), b);
        }
        OutcomeVector::new(v, layout.infos()).unwrap()
    }

    #[test]
    fn intermediate_label_is_strict_majority() {
        let ov = NoisyOverrides { n_reps: Some(3), r: Some(1), c_final: Some(1), c_const: Some(64) };
        let p = noisy_params(16, 8, 0.05, 2.0, 0.6, NoisyMode::Practice, ov).unwrap();
        let d = build_noisy_design(&p, &RandomnessKey::new(9), HashMode::Full).unwrap();
        // With 512 tests per sequence and 8 nodes, use a node whose tests no other node shares.
        let node = (0..8)
            .find(|&v| {
                (0..3).all(|r| {
                    let seg = d.layout().segment(d.mid_segment(3, r));
                    (0..8).filter(|&u| seg.test_of(u) == seg.test_of(v)).count() == 1
                })
            })
            .unwrap();
        let pos = hand_outcomes(&d, node, &[true, true, false]);
        assert!(intermediate_label(node, 3, &d, &pos, &mut LabelCache::new()));
        let neg = hand_outcomes(&d, node, &[false, false, true]);
        assert!(!intermediate_label(node, 3, &d, &neg, &mut LabelCache::new()));
    }

    #[test]
    fn defective_node_always_labelled_positive_without_noise() {
        let p = practice(1 << 8, 4, 0.05);
        for seed in 0..20 {
            let key = RandomnessKey::new(seed);
            let d = build_noisy_design(&p, &key, HashMode::Full).unwrap();
            let inst = ProblemInstance::new(1 << 8, 4, vec![(seed as usize * 37) % 256]).unwrap();
            let out = evaluate_design(&d, &inst, &NoiseChannel::NOISELESS, &key).unwrap();
            let item = inst.defectives()[0];
            let mut cache = LabelCache::new();
            for level in p.top_level()..p.leaf_level() {
                let node = item >> (p.leaf_level() - level);
                assert!(intermediate_label(node, level, &d, &out, &mut cache));
                assert!(final_label(node, level, &d, &out, &mut cache));
            }
        }
    }

    #[test]
    fn lookahead_work_is_bounded() {
        let p = practice(1 << 10, 4, 0.1);
        let bound = 1usize << (p.r + 1);
        let channel = NoiseChannel::symmetric(0.3).unwrap();
        for seed in 0..10 {
            let key = RandomnessKey::new(seed);
            let d = build_noisy_design(&p, &key, HashMode::Full).unwrap();
            let inst = ProblemInstance::new(1 << 10, 4, vec![1, 500]).unwrap();
            let out = evaluate_design(&d, &inst, &channel, &key).unwrap();
            for level in p.top_level()..p.leaf_level() {
                for node in (0..1usize << level).step_by(7) {
                    let mut cache = LabelCache::disabled();
                    final_label(node, level, &d, &out, &mut cache);
                    assert!(cache.computed() <= bound);
                }
            }
        }
    }

    #[test]
    fn empty_set_decodes_empty_within_budget() {
        let p = practice(1 << 12, 8, 0.05);
        let key = RandomnessKey::new(4);
        let d = build_noisy_design(&p, &key, HashMode::Full).unwrap();
        let inst = ProblemInstance::new(1 << 12, 8, vec![]).unwrap();
        let out = evaluate_design(&d, &inst, &NoiseChannel::NOISELESS, &key).unwrap();
        let rep = decode_noisy(&d, &out).unwrap();
        assert!(rep.estimate.is_empty());
        assert!(rep.labels_computed <= 8 << (p.r + 1));
        assert!(rep.outcomes_read <= d.num_tests());
        assert!(rep.distinct_outcomes_read <= rep.outcomes_read);
    }

    #[test]
    fn zero_noise_superset_and_cache_differential() {
        let p = practice(1 << 10, 4, 0.05);
        for seed in 0..30u64 {
            let key = RandomnessKey::new(seed);
            let d = build_noisy_design(&p, &key, HashMode::Full).unwrap();
            let defs = vec![(seed as usize * 131) % 1024, (seed as usize * 977 + 5) % 1024];
            let mut defs2 = defs.clone();
            defs2.dedup();
            let inst = ProblemInstance::new(1 << 10, 4, defs2).unwrap();
            let out = evaluate_design(&d, &inst, &NoiseChannel::NOISELESS, &key).unwrap();
            let rep = decode_noisy(&d, &out).unwrap();
            assert_eq!(rep.false_negatives(inst.defectives()), 0);

            let noisy = evaluate_design(&d, &inst, &NoiseChannel::symmetric(0.1).unwrap(), &key).unwrap();
            let a = decode_noisy(&d, &noisy).unwrap();
            let b = decode_noisy_with_cache(&d, &noisy, &mut LabelCache::disabled()).unwrap();
            assert_eq!(a.estimate, b.estimate);
            assert!(a.labels_computed <= b.labels_computed);
        }
    }

    #[test]
    fn layout_mismatch_is_rejected() {
        let p = practice(1 << 8, 4, 0.05);
        let d = build_noisy_design(&p, &RandomnessKey::new(1), HashMode::Full).unwrap();
        let other = practice(1 << 9, 4, 0.05);
        let d2 = build_noisy_design(&other, &RandomnessKey::new(1), HashMode::Full).unwrap();
        let inst = ProblemInstance::new(1 << 9, 4, vec![]).unwrap();
        let out = evaluate_design(&d2, &inst, &NoiseChannel::NOISELESS, &RandomnessKey::new(1)).unwrap();
        assert!(decode_noisy(&d, &out).is_err());
    }
}
