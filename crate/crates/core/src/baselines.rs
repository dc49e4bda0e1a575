//! Non-adaptive reference decoders (COMP and a thresholded noisy COMP) and
//! exhaustive oracles for tiny instances.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitVec;
use crate::design::{HashMode, DEFAULT_KWISE_DEGREE};
use crate::error::{Error, Result};
use crate::key::{RandomnessKey, Stream};
use crate::layout::TestLayout;
use crate::math::{is_pow2, log2_exact};
use crate::model::{compute_outcome, NoiseChannel, ProblemInstance};

/// Largest `n` the oracles enumerate over.
pub const ORACLE_MAX_N: usize = 20;
/// Largest `k` the oracles enumerate over.
pub const ORACLE_MAX_K: usize = 4;

/// A design given as explicit member lists, one per test.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatDesign {
    n: usize,
    tests: Vec<Vec<usize>>,
}

impl FlatDesign {
    pub fn new(n: usize, tests: Vec<Vec<usize>>) -> Result<Self> {
        for t in &tests {
            if let Some(&item) = t.iter().find(|&&i| i >= n) {
                return Err(Error::ItemOutOfRange { item, n });
            }
        }
        Ok(FlatDesign { n, tests })
    }

    pub fn from_layout(layout: &TestLayout) -> Self {
        FlatDesign {
            n: layout.n(),
            tests: layout.test_members(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_tests(&self) -> usize {
        self.tests.len()
    }

    pub fn tests(&self) -> &[Vec<usize>] {
        &self.tests
    }

    /// Tests containing each item.
    pub fn memberships(&self) -> Vec<Vec<usize>> {
        let mut m = vec![Vec::new(); self.n];
        for (t, members) in self.tests.iter().enumerate() {
            for &i in members {
                m[i].push(t);
            }
        }
        m
    }

    /// Outcome vector, test `t` drawing its flip from `key.for_test(t)`.
    pub fn evaluate(&self, instance: &ProblemInstance, channel: &NoiseChannel, key: &RandomnessKey) -> Result<BitVec> {
        if instance.n() != self.n {
            return Err(Error::invalid(
                "instance",
                format!("design has n = {} but instance has n = {}", self.n, instance.n()),
            ));
        }
        let mut bits = BitVec::zeros(self.tests.len());
        for (t, members) in self.tests.iter().enumerate() {
            bits.set(t, compute_outcome(members, instance, channel, &key.for_test(t))?);
        }
        Ok(bits)
    }

    /// Noiseless outcomes of `set`.
    pub fn pattern(&self, set: &[usize]) -> BitVec {
        let mut bits = BitVec::zeros(self.tests.len());
        for (t, members) in self.tests.iter().enumerate() {
            bits.set(t, members.iter().any(|m| set.contains(m)));
        }
        bits
    }

    fn check_outcomes(&self, outcomes: &BitVec) -> Result<()> {
        if outcomes.len() != self.tests.len() {
            return Err(Error::LayoutMismatch {
                expected: self.tests.len(),
                found: outcomes.len(),
            });
        }
        Ok(())
    }
}

/// Items that appear in no negative test.
pub fn decode_comp(design: &FlatDesign, outcomes: &BitVec) -> Result<Vec<usize>> {
    design.check_outcomes(outcomes)?;
    let mut cleared = vec![false; design.n];
    for (t, members) in design.tests.iter().enumerate() {
        if !outcomes.get(t) {
            for &i in members {
                cleared[i] = true;
            }
        }
    }
    Ok((0..design.n).filter(|&i| !cleared[i]).collect())
}

/// Items whose fraction of negative tests is at most `threshold`.
pub fn decode_ncomp(design: &FlatDesign, outcomes: &BitVec, threshold: f64) -> Result<Vec<usize>> {
    design.check_outcomes(outcomes)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::invalid("threshold", format!("{threshold} is not in [0, 1]")));
    }
    let mut total = vec![0usize; design.n];
    let mut negative = vec![0usize; design.n];
    for (t, members) in design.tests.iter().enumerate() {
        let neg = !outcomes.get(t);
        for &i in members {
            total[i] += 1;
            negative[i] += neg as usize;
        }
    }
    if let Some(item) = total.iter().position(|&c| c == 0) {
        return Err(Error::invalid("design", format!("item {item} is in no test")));
    }
    Ok((0..design.n)
        .filter(|&i| negative[i] as f64 <= threshold * total[i] as f64)
        .collect())
}

fn oracle_budget(design: &FlatDesign, k: usize) -> Result<()> {
    if design.n > ORACLE_MAX_N {
        return Err(Error::BudgetExceeded {
            what: "oracle n",
            limit: ORACLE_MAX_N,
            requested: design.n,
        });
    }
    if k > ORACLE_MAX_K {
        return Err(Error::BudgetExceeded {
            what: "oracle k",
            limit: ORACLE_MAX_K,
            requested: k,
        });
    }
    Ok(())
}

/// Calls `f(set, pattern)` for every subset of size at most `k`, in
/// lexicographic order of the sorted id lists.
fn for_each_subset(design: &FlatDesign, k: usize, mut f: impl FnMut(&[usize], &BitVec)) {
    let masks: Vec<BitVec> = {
        let mut m = vec![BitVec::zeros(design.tests.len()); design.n];
        for (t, members) in design.tests.iter().enumerate() {
            for &i in members {
                m[i].set(t, true);
            }
        }
        m
    };
    fn rec(
        masks: &[BitVec],
        k: usize,
        start: usize,
        set: &mut Vec<usize>,
        pattern: &BitVec,
        f: &mut dyn FnMut(&[usize], &BitVec),
    ) {
        f(set, pattern);
        if set.len() == k {
            return;
        }
        for i in start..masks.len() {
            let mut next = pattern.clone();
            next.or_assign(&masks[i]);
            set.push(i);
            rec(masks, k, i + 1, set, &next, f);
            set.pop();
        }
    }
    let empty = BitVec::zeros(design.tests.len());
    rec(&masks, k, 0, &mut Vec::new(), &empty, &mut f);
}

/// Every set of at most `k` items whose noiseless outcomes equal `outcomes`.
pub fn oracle_consistent_sets(design: &FlatDesign, outcomes: &BitVec, k: usize) -> Result<Vec<Vec<usize>>> {
    design.check_outcomes(outcomes)?;
    oracle_budget(design, k)?;
    let mut found = Vec::new();
    for_each_subset(design, k, |set, pattern| {
        if pattern == outcomes {
            found.push(set.to_vec());
        }
    });
    Ok(found)
}

/// The set of at most `k` items whose noiseless outcomes are Hamming-nearest
/// to `outcomes` (maximum likelihood for a symmetric channel with `p < 1/2`),
/// smallest id list first among ties.
pub fn oracle_ml(design: &FlatDesign, outcomes: &BitVec, k: usize, p: f64) -> Result<Vec<usize>> {
    design.check_outcomes(outcomes)?;
    if !(p > 0.0 && p < 0.5) {
        return Err(Error::invalid("p", "p must lie in (0, 0.5)"));
    }
    oracle_budget(design, k)?;
    let mut best: Option<(usize, Vec<usize>)> = None;
    for_each_subset(design, k, |set, pattern| {
        let d = pattern.hamming(outcomes);
        let better = match &best {
            None => true,
            Some((bd, bs)) => d < *bd || (d == *bd && set < bs.as_slice()),
        };
        if better {
            best = Some((d, set.to_vec()));
        }
    });
    Ok(best.map(|(_, s)| s).unwrap_or_default())
}

/// `reps` sequences of `t_len` tests, each item placed in one test per
/// sequence. This is the random design the COMP baselines decode.
pub fn build_sequence_design(
    n: usize,
    reps: u32,
    t_len: usize,
    key: &RandomnessKey,
    hash_mode: HashMode,
) -> Result<TestLayout> {
    if !is_pow2(n) {
        return Err(Error::invalid("n", format!("{n} is not a power of two")));
    }
    if reps == 0 || t_len == 0 {
        return Err(Error::invalid("design", "need at least one sequence of at least one test"));
    }
    let level = log2_exact(n);
    let mut layout = TestLayout::new(n);
    for rep in 0..reps {
        let k = key.with_stream(Stream::placement(level, rep));
        layout.push(level, rep, 1, hash_mode.place_independent(n, t_len, DEFAULT_KWISE_DEGREE, &k)?)?;
    }
    Ok(layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layout::evaluate_design;

    fn flat(n: usize, tests: &[&[usize]]) -> FlatDesign {
        FlatDesign::new(n, tests.iter().map(|t| t.to_vec()).collect()).unwrap()
    }

    #[test]
    fn comp_examples() {
        let d = flat(4, &[&[0, 1], &[2, 3]]);
        assert_eq!(decode_comp(&d, &BitVec::from_bools(&[true, false])).unwrap(), vec![0, 1]);
        assert!(decode_comp(&d, &BitVec::from_bools(&[false, false])).unwrap().is_empty());
        let none = flat(4, &[]);
        assert_eq!(decode_comp(&none, &BitVec::zeros(0)).unwrap(), vec![0, 1, 2, 3]);
        assert!(decode_comp(&d, &BitVec::zeros(3)).is_err());
        assert!(FlatDesign::new(4, vec![vec![4]]).is_err());
    }

    #[test]
    fn ncomp_examples() {
        let tests: Vec<Vec<usize>> = (0..10).map(|_| vec![0]).collect();
        let d = FlatDesign::new(1, tests).unwrap();
        let mut bits = BitVec::from_bools(&[true; 10]);
        bits.set(3, false);
        assert_eq!(decode_ncomp(&d, &bits, 0.2).unwrap(), vec![0]);
        assert!(decode_ncomp(&d, &bits, 0.05).unwrap().is_empty());
        assert!(decode_ncomp(&d, &bits, 1.5).is_err());
        let gap = flat(3, &[&[0, 1]]);
        assert!(decode_ncomp(&gap, &BitVec::zeros(1), 0.1).is_err());
    }

    #[test]
    fn oracle_examples() {
        let d = flat(4, &[&[0, 1], &[2, 3], &[0]]);
        let out = BitVec::from_bools(&[true, false, false]);
        assert_eq!(oracle_consistent_sets(&d, &out, 1).unwrap(), vec![vec![1]]);
        let zeros = BitVec::zeros(3);
        assert_eq!(oracle_consistent_sets(&d, &zeros, 2).unwrap(), vec![Vec::<usize>::new()]);
        // Test 2 positive but test 0 negative cannot happen.
        let bad = BitVec::from_bools(&[false, false, true]);
        assert!(oracle_consistent_sets(&d, &bad, 2).unwrap().is_empty());
    }

    #[test]
    fn oracle_budget_is_enforced() {
        let big = FlatDesign::new(21, vec![vec![0]]).unwrap();
        assert!(matches!(
            oracle_consistent_sets(&big, &BitVec::zeros(1), 1),
            Err(Error::BudgetExceeded { .. })
        ));
        let small = flat(4, &[&[0]]);
        assert!(oracle_ml(&small, &BitVec::zeros(1), 5, 0.1).is_err());
        assert!(oracle_ml(&small, &BitVec::zeros(1), 1, 0.5).is_err());
    }

    #[test]
    fn ml_tie_prefers_lexicographically_smaller() {
        // Items 0 and 1 are indistinguishable.
        let d = flat(2, &[&[0, 1]]);
        assert_eq!(oracle_ml(&d, &BitVec::from_bools(&[true]), 1, 0.1).unwrap(), vec![0]);
        assert_eq!(oracle_ml(&d, &BitVec::from_bools(&[false]), 1, 0.1).unwrap(), Vec::<usize>::new());
    }

    #[test]
    fn ml_recovers_truth_under_single_flips_when_unique() {
        let layout = build_sequence_design(8, 6, 4, &RandomnessKey::new(5), HashMode::Full).unwrap();
        let d = FlatDesign::from_layout(&layout);
        for s in 0..8usize {
            let clean = d.pattern(&[s]);
            assert_eq!(oracle_ml(&d, &clean, 1, 0.1).unwrap(), vec![s]);
            for flip in 0..d.num_tests() {
                let mut noisy = clean.clone();
                noisy.set(flip, !noisy.get(flip));
                let dists: Vec<(usize, Vec<usize>)> = core::iter::once(Vec::new())
                    .chain((0..8).map(|i| vec![i]))
                    .map(|set| (d.pattern(&set).hamming(&noisy), set))
                    .collect();
                let own = dists.iter().find(|(_, set)| set == &vec![s]).unwrap().0;
                let unique = dists.iter().filter(|(dist, _)| *dist <= own).count() == 1;
                if unique {
                    assert_eq!(oracle_ml(&d, &noisy, 1, 0.1).unwrap(), vec![s]);
                }
            }
        }
    }

    #[test]
    fn flat_evaluation_matches_layout_evaluation() {
        let key = RandomnessKey::new(12);
        let layout = build_sequence_design(64, 5, 16, &key, HashMode::Full).unwrap();
        let d = FlatDesign::from_layout(&layout);
        let inst = ProblemInstance::new(64, 4, vec![3, 40]).unwrap();
        let ch = NoiseChannel::symmetric(0.2).unwrap();
        let a = evaluate_design(&layout, &inst, &ch, &key).unwrap();
        let b = d.evaluate(&inst, &ch, &key).unwrap();
        assert_eq!(a.bits(), &b);
    }

    #[test]
    fn comp_superset_and_ncomp_reduction() {
        for seed in 0..100u64 {
            let key = RandomnessKey::new(seed);
            let layout = build_sequence_design(256, 4, 24, &key, HashMode::Full).unwrap();
            let d = FlatDesign::from_layout(&layout);
            let defs = vec![(seed as usize * 11) % 256, (seed as usize * 101 + 7) % 256];
            let mut defs = defs;
            defs.sort_unstable();
            defs.dedup();
            let inst = ProblemInstance::new(256, 4, defs.clone()).unwrap();
            let clean = d.evaluate(&inst, &NoiseChannel::NOISELESS, &key).unwrap();
            let est = decode_comp(&d, &clean).unwrap();
            assert!(defs.iter().all(|x| est.contains(x)));
            let noisy = d.evaluate(&inst, &NoiseChannel::symmetric(0.1).unwrap(), &key).unwrap();
            assert_eq!(decode_ncomp(&d, &noisy, 0.0).unwrap(), decode_comp(&d, &noisy).unwrap());
        }
    }
}
