use alloc::collections::BTreeSet;
use alloc::vec::Vec;

use crate::layout::OutcomeVector;

/// Decoder output plus the cost counters the benchmarks aggregate.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeReport {
    /// Sorted estimate of the defective set.
    pub estimate: Vec<usize>,
    /// Test outcome checks performed; a test checked for two candidates counts twice.
    pub outcomes_read: usize,
    /// Distinct tests whose outcome was checked; never exceeds the test count.
    pub distinct_outcomes_read: usize,
    /// Tree nodes whose fate the decoder decided.
    pub nodes_visited: usize,
    /// Majority-vote labels evaluated (noisy decoder only).
    pub labels_computed: usize,
    /// Largest possibly-defective list held at any level.
    pub peak_candidates: usize,
    /// Placement words plus `peak_candidates`.
    pub storage_words: usize,
    /// Filled in by callers that time the decode; decoders leave it at zero.
    pub wall_nanos: u64,
}

impl DecodeReport {
    pub fn exact_match(&self, defectives: &[usize]) -> bool {
        self.estimate == defectives
    }

    /// Estimated items that are not defective.
    pub fn false_positives(&self, defectives: &[usize]) -> usize {
        self.estimate
            .iter()
            .filter(|i| defectives.binary_search(i).is_err())
            .count()
    }

    /// Defectives the estimate missed.
    pub fn false_negatives(&self, defectives: &[usize]) -> usize {
        defectives
            .iter()
            .filter(|i| self.estimate.binary_search(i).is_err())
            .count()
    }
}

/// Counts a decoder's outcome checks, in total and per distinct test.
#[derive(Debug, Clone, Default)]
pub(crate) struct ReadTracker {
    checks: usize,
    seen: BTreeSet<usize>,
}

impl ReadTracker {
    pub(crate) fn read(&mut self, outcomes: &OutcomeVector, test: usize) -> bool {
        self.checks += 1;
        self.seen.insert(test);
        outcomes.get(test)
    }

    pub(crate) fn checks(&self) -> usize {
        self.checks
    }

    pub(crate) fn fill(&self, report: &mut DecodeReport) {
        report.outcomes_read = self.checks;
        report.distinct_outcomes_read = self.seen.len();
    }
}
