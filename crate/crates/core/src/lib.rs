//! Splitting-based non-adaptive group testing.
//!
//! Three tree-structured test designs with decoders whose running time scales
//! with the number of defectives rather than the number of items:
//!
//! * [`gamma`]: every item participates in at most `gamma` tests.
//! * [`rho`]: every test pools at most `rho` items.
//! * [`noisy`]: binary splitting with repeated tests, majority-vote labels and
//!   an `r`-level lookahead, robust to random outcome flips.
//!
//! [`baselines`] holds the COMP/NCOMP reference decoders and exhaustive
//! oracles used to cross-check the splitting decoders on tiny instances.
//!
//! The crate is `no_std` and only needs `alloc`. IO, timing and the CLI live in
//! the companion `splitgt` crate.

#![cfg_attr(not(test), no_std)]
#![deny(rust_2018_idioms)]

extern crate alloc;

mod bits;
mod error;
mod math;

pub mod baselines;
pub mod design;
pub mod gamma;
pub mod key;
pub mod layout;
pub mod model;
pub mod noisy;
pub mod report;
pub mod rho;

pub use bits::BitVec;
pub use error::{Error, Result};
pub use key::{Purpose, RandomnessKey, Stream};
pub use layout::{evaluate_design, Design, OutcomeVector, Segment, SegmentInfo, TestLayout};
pub use model::{compute_outcome, round_instance, NoiseChannel, ProblemInstance, RoundedInstance};
pub use report::DecodeReport;
