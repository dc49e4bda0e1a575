//! Test layouts shared by every design, and outcome evaluation.
//!
//! A layout is an ordered list of segments. Each segment is one test sequence
//! for one `(level, repetition)` of a tree: the level's nodes are contiguous
//! item ranges of `node_size` items, and a [`Placement`] sends every node to
//! one test of the sequence. Global test ids are segment offset plus local id.

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::BitVec;
use crate::design::Placement;
use crate::error::{Error, Result};
use crate::key::RandomnessKey;
use crate::model::{NoiseChannel, ProblemInstance};

/// `(level, repetition, length)` of one segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SegmentInfo {
    pub level: u32,
    pub rep: u32,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub level: u32,
    pub rep: u32,
    pub node_size: usize,
    pub offset: usize,
    pub placement: Placement,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.placement.t_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn info(&self) -> SegmentInfo {
        SegmentInfo {
            level: self.level,
            rep: self.rep,
            len: self.len(),
        }
    }

    /// Global id of the test holding `node`.
    #[inline]
    pub fn test_of(&self, node: usize) -> usize {
        self.offset + self.placement.test_of(node)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestLayout {
    n: usize,
    segments: Vec<Segment>,
    total: usize,
}

impl TestLayout {
    pub fn new(n: usize) -> Self {
        TestLayout {
            n,
            segments: Vec::new(),
            total: 0,
        }
    }

    /// Appends a segment and returns its index. The level's nodes must tile `[0, n)`.
    pub fn push(&mut self, level: u32, rep: u32, node_size: usize, placement: Placement) -> Result<usize> {
        if node_size == 0 || node_size * placement.num_nodes() != self.n {
            return Err(Error::invalid(
                "segment",
                alloc::format!(
                    "{} nodes of size {node_size} do not tile {} items",
                    placement.num_nodes(),
                    self.n
                ),
            ));
        }
        let offset = self.total;
        self.total += placement.t_len();
        self.segments.push(Segment {
            level,
            rep,
            node_size,
            offset,
            placement,
        });
        Ok(self.segments.len() - 1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_tests(&self) -> usize {
        self.total
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn segment(&self, idx: usize) -> &Segment {
        &self.segments[idx]
    }

    pub fn infos(&self) -> Vec<SegmentInfo> {
        self.segments.iter().map(Segment::info).collect()
    }

    /// Machine words retained by all placements.
    pub fn storage_words(&self) -> usize {
        self.segments.iter().map(|s| s.placement.storage_cost()).sum()
    }

    /// Noiseless outcomes: test `t` is positive iff it pools a defective.
    /// Costs `O(|defectives| * segments + T / 64)`.
    pub fn noiseless_positives(&self, defectives: &[usize]) -> BitVec {
        let mut bits = BitVec::zeros(self.total);
        for seg in &self.segments {
            for &d in defectives {
                bits.set(seg.test_of(d / seg.node_size), true);
            }
        }
        bits
    }

    /// Calls `f(test, item)` for every membership in the design.
    pub fn for_each_membership(&self, mut f: impl FnMut(usize, usize)) {
        for seg in &self.segments {
            for node in 0..seg.placement.num_nodes() {
                let t = seg.test_of(node);
                let start = node * seg.node_size;
                for item in start..start + seg.node_size {
                    f(t, item);
                }
            }
        }
    }

    /// Explicit member lists of every test, each sorted.
    pub fn test_members(&self) -> Vec<Vec<usize>> {
        let mut tests = vec![Vec::new(); self.total];
        self.for_each_membership(|t, item| tests[t].push(item));
        for t in &mut tests {
            t.sort_unstable();
        }
        tests
    }

    /// Number of tests each item participates in, counted membership by membership.
    pub fn item_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0usize; self.n];
        self.for_each_membership(|_, item| deg[item] += 1);
        deg
    }

    /// Number of items pooled in each test.
    pub fn test_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.total];
        for seg in &self.segments {
            for node in 0..seg.placement.num_nodes() {
                sizes[seg.test_of(node)] += seg.node_size;
            }
        }
        sizes
    }
}

/// Anything that lays out non-adaptive tests over `n` items.
pub trait Design {
    fn layout(&self) -> &TestLayout;

    fn num_tests(&self) -> usize {
        self.layout().num_tests()
    }
}

impl Design for TestLayout {
    fn layout(&self) -> &TestLayout {
        self
    }
}

/// One bit per test, annotated with the segment structure that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutcomeVector {
    bits: BitVec,
    layout: Vec<SegmentInfo>,
    offsets: Vec<usize>,
}

impl OutcomeVector {
    pub fn new(bits: BitVec, layout: Vec<SegmentInfo>) -> Result<Self> {
        let mut offsets = Vec::with_capacity(layout.len());
        let mut total = 0;
        for s in &layout {
            offsets.push(total);
            total += s.len;
        }
        if total != bits.len() {
            return Err(Error::LayoutMismatch {
                expected: total,
                found: bits.len(),
            });
        }
        Ok(OutcomeVector {
            bits,
            layout,
            offsets,
        })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, test: usize) -> bool {
        self.bits.get(test)
    }

    /// Bit at local index `local` of the `(level, rep)` segment, if it exists.
    pub fn get_at(&self, level: u32, rep: u32, local: usize) -> Option<bool> {
        let idx = self
            .layout
            .iter()
            .position(|s| s.level == level && s.rep == rep)?;
        (local < self.layout[idx].len).then(|| self.bits.get(self.offsets[idx] + local))
    }

    pub fn bits(&self) -> &BitVec {
        &self.bits
    }

    pub fn layout(&self) -> &[SegmentInfo] {
        &self.layout
    }

    pub fn to_bools(&self) -> Vec<bool> {
        self.bits.to_bools()
    }

    /// Errors unless this vector has exactly the segment structure of `layout`.
    pub fn check_matches(&self, layout: &TestLayout) -> Result<()> {
        let same = self.layout.len() == layout.segments().len()
            && self.layout.iter().zip(layout.segments()).all(|(a, b)| *a == b.info());
        if same {
            Ok(())
        } else {
            Err(Error::LayoutMismatch {
                expected: layout.num_tests(),
                found: self.len(),
            })
        }
    }
}

/// Runs every test of `design` against `instance` through `channel`.
///
/// The flip of test `t` uses `key.for_test(t)`, so bit `t` equals
/// [`compute_outcome`](crate::compute_outcome) on that test's members with that key.
pub fn evaluate_design<D: Design + ?Sized>(
    design: &D,
    instance: &ProblemInstance,
    channel: &NoiseChannel,
    key: &RandomnessKey,
) -> Result<OutcomeVector> {
    let layout = design.layout();
    if layout.n() != instance.n() {
        return Err(Error::invalid(
            "instance",
            alloc::format!("design has n = {} but instance has n = {}", layout.n(), instance.n()),
        ));
    }
    let mut bits = layout.noiseless_positives(instance.defectives());
    if !channel.is_noiseless() {
        for t in 0..bits.len() {
            let clean = bits.get(t);
            bits.set(t, channel.transmit(clean, &key.for_test(t)));
        }
    }
    OutcomeVector::new(bits, layout.infos())
}
