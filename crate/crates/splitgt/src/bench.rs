//! Monte-Carlo trial runner.
//!
//! Trial `i` of a config derives every random choice (defective set,
//! placements, noise flips) from `RandomnessKey::for_trial(seed, i)`, so a
//! result depends only on the config. Trials may run in parallel; they are
//! aggregated in index order.

use std::time::Instant;

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use splitgt_core::baselines::{build_sequence_design, decode_comp, decode_ncomp, FlatDesign};
use splitgt_core::design::HashMode;
use splitgt_core::gamma::{build_gamma_design, decode_gamma, gamma_params, GammaParams, DEFAULT_C_CONST};
use splitgt_core::noisy::{build_noisy_design, decode_noisy, noisy_params, NoisyMode, NoisyOverrides, NoisyParams};
use splitgt_core::rho::{build_rho_design, decode_rho, rho_params, RhoParams};
use splitgt_core::{
    evaluate_design, round_instance, DecodeReport, NoiseChannel, ProblemInstance, RandomnessKey, Stream,
};

use crate::error::BenchError;

/// Exponent `e` in the default `beta_n = (log2 n)^(-e)`.
pub const DEFAULT_BETA_EXP: f64 = 2.0;
pub const DEFAULT_T: f64 = 2.0;
pub const DEFAULT_EPSILON: f64 = 0.6;
/// NCOMP negative-fraction threshold, from a grid search at n = 1024, k = 4, p = 0.05.
pub const DEFAULT_NCOMP_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Gamma,
    Rho,
    Noisy,
    Comp,
    Ncomp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Gamma => "gamma",
            Algorithm::Rho => "rho",
            Algorithm::Noisy => "noisy",
            Algorithm::Comp => "comp",
            Algorithm::Ncomp => "ncomp",
        }
    }
}

/// Constant overrides; `None` keeps each scheme's default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Overrides {
    pub gamma_prime: Option<u32>,
    /// `beta_n = (log2 n)^(-beta_exp)` for the gamma scheme and COMP.
    pub beta_exp: Option<f64>,
    /// `C` of the gamma scheme (real) or the noisy scheme (integer).
    pub c_const: Option<f64>,
    pub depth: Option<u32>,
    /// `N` for rho and noisy; sequence count for NCOMP.
    pub reps: Option<u32>,
    /// `C'` for rho and noisy.
    pub final_reps: Option<u32>,
    /// Noisy lookahead depth `r`.
    pub lookahead: Option<u32>,
    /// Noise level the noisy design is built for, when it differs from the channel's.
    pub design_p: Option<f64>,
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub algorithm: Algorithm,
    /// Raw sizes; rounded up to powers of two before building designs.
    pub n: usize,
    pub k: usize,
    pub gamma: Option<u32>,
    pub rho: Option<usize>,
    /// Symmetric flip probability of the channel.
    pub p: f64,
    pub t: f64,
    pub epsilon: f64,
    pub mode: NoisyModeSer,
    pub overrides: Overrides,
    pub hash_mode: HashModeSer,
    pub trials: usize,
    pub seed: u64,
    /// Fixed defective set used in every trial instead of a fresh draw.
    pub defectives: Option<Vec<usize>>,
}

/// Serde-friendly mirror of [`NoisyMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoisyModeSer {
    Theory,
    #[default]
    Practice,
}

impl From<NoisyModeSer> for NoisyMode {
    fn from(m: NoisyModeSer) -> Self {
        match m {
            NoisyModeSer::Theory => NoisyMode::Theory,
            NoisyModeSer::Practice => NoisyMode::Practice,
        }
    }
}

/// Serde-friendly mirror of [`HashMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HashModeSer {
    #[default]
    Full,
    Kwise,
    Pairwise,
    Permutation,
}

impl From<HashModeSer> for HashMode {
    fn from(m: HashModeSer) -> Self {
        match m {
            HashModeSer::Full => HashMode::Full,
            HashModeSer::Kwise => HashMode::KWise,
            HashModeSer::Pairwise => HashMode::Pairwise,
            HashModeSer::Permutation => HashMode::Permutation,
        }
    }
}

impl TrialConfig {
    pub fn new(algorithm: Algorithm, n: usize, k: usize) -> Self {
        TrialConfig {
            algorithm,
            n,
            k,
            gamma: None,
            rho: None,
            p: 0.0,
            t: DEFAULT_T,
            epsilon: DEFAULT_EPSILON,
            mode: NoisyModeSer::Practice,
            overrides: Overrides::default(),
            hash_mode: HashModeSer::Full,
            trials: 100,
            seed: 0,
            defectives: None,
        }
    }
}

/// Success rate with a 95% Wilson interval plus cost counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub algorithm: Algorithm,
    pub n: usize,
    pub k: usize,
    pub gamma: Option<u32>,
    pub gamma_prime: Option<u32>,
    pub rho: Option<usize>,
    pub p: f64,
    #[serde(rename = "T")]
    pub tests: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub mean_outcomes_read: f64,
    pub max_outcomes_read: usize,
    pub mean_labels: f64,
    /// Largest per-trial auxiliary storage.
    pub storage_words: usize,
    pub seed: u64,
    pub hash_mode: HashModeSer,
    pub mean_nodes_visited: f64,
    pub max_peak_candidates: usize,
    pub mean_false_positives: f64,
    pub mean_false_negatives: f64,
    /// Trials whose estimate contained every defective.
    pub superset_trials: usize,
    /// Largest number of distinct tests checked in one trial (at most `T`).
    pub max_distinct_outcomes_read: usize,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let phat = successes as f64 / n;
    let denom = 1.0 + z * z / n;
    let centre = (phat + z * z / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    // The bounds are exactly 0 and 1 at the extremes; avoid rounding residue.
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

/// Scheme parameters resolved from a config, shared by all its trials.
#[derive(Debug, Clone)]
enum Scheme {
    Gamma(GammaParams),
    Rho(RhoParams),
    Noisy(NoisyParams),
    Comp { gamma: u32, t_len: usize },
    Ncomp { reps: u32, t_len: usize, threshold: f64 },
}

/// A validated config: rounded sizes and resolved scheme parameters.
#[derive(Debug, Clone)]
pub struct Prepared {
    config: TrialConfig,
    n: usize,
    k: usize,
    scheme: Scheme,
    channel: NoiseChannel,
}

fn beta_n(n: usize, overrides: &Overrides) -> f64 {
    let e = overrides.beta_exp.unwrap_or(DEFAULT_BETA_EXP);
    (n.trailing_zeros() as f64).powf(-e)
}

fn need_gamma(config: &TrialConfig) -> Result<u32, BenchError> {
    config
        .gamma
        .ok_or_else(|| BenchError::Usage(format!("{} needs --gamma", config.algorithm.as_str())))
}

impl Prepared {
    pub fn new(config: &TrialConfig) -> Result<Self, BenchError> {
        let rounded = round_instance(config.n, config.k, config.rho)?;
        let (n, k) = (rounded.n, rounded.k);
        let channel = NoiseChannel::symmetric(config.p)?;
        let o = &config.overrides;
        let scheme = match config.algorithm {
            Algorithm::Gamma => {
                let c = o.c_const.unwrap_or(DEFAULT_C_CONST);
                Scheme::Gamma(gamma_params(n, k, need_gamma(config)?, o.gamma_prime, beta_n(n, o), c)?)
            }
            Algorithm::Rho => {
                let rho = rounded
                    .rho
                    .ok_or_else(|| BenchError::Usage("rho needs --rho".into()))?;
                let depth = o.depth.unwrap_or(splitgt_core::rho::DEFAULT_DEPTH);
                let reps = o.reps.unwrap_or(splitgt_core::rho::DEFAULT_REPS);
                let fin = o.final_reps.unwrap_or(splitgt_core::rho::DEFAULT_FINAL_REPS);
                Scheme::Rho(rho_params(n, k, rho, depth, reps, fin)?)
            }
            Algorithm::Noisy => {
                let c_const = match o.c_const {
                    None => None,
                    Some(c) if c.fract() == 0.0 && c >= 1.0 => Some(c as u32),
                    Some(c) => return Err(BenchError::Usage(format!("noisy --c-const must be an integer, got {c}"))),
                };
                let ov = NoisyOverrides {
                    c_const,
                    n_reps: o.reps,
                    r: o.lookahead,
                    c_final: o.final_reps,
                };
                let design_p = o.design_p.unwrap_or(config.p);
                Scheme::Noisy(noisy_params(n, k, design_p, config.t, config.epsilon, config.mode.into(), ov)?)
            }
            Algorithm::Comp => {
                let gamma = need_gamma(config)?;
                let len = k as f64 * (n as f64 / beta_n(n, o)).powf(1.0 / gamma as f64);
                Scheme::Comp {
                    gamma,
                    t_len: len.ceil() as usize,
                }
            }
            Algorithm::Ncomp => {
                let threshold = o.threshold.unwrap_or(DEFAULT_NCOMP_THRESHOLD);
                if !(0.0..=1.0).contains(&threshold) {
                    return Err(BenchError::Usage(format!("threshold {threshold} is not in [0, 1]")));
                }
                Scheme::Ncomp {
                    reps: o.reps.unwrap_or(2 * n.trailing_zeros()),
                    t_len: 2 * k,
                    threshold,
                }
            }
        };
        if let Some(defs) = &config.defectives {
            if defs.len() > config.k {
                return Err(BenchError::Usage(format!(
                    "{} fixed defectives exceed k = {}",
                    defs.len(),
                    config.k
                )));
            }
            if let Some(&d) = defs.iter().find(|&&d| d >= config.n) {
                return Err(BenchError::Usage(format!("defective {d} is not below n = {}", config.n)));
            }
        }
        Ok(Prepared {
            config: config.clone(),
            n,
            k,
            scheme,
            channel,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total_tests(&self) -> usize {
        match &self.scheme {
            Scheme::Gamma(p) => p.total_tests(),
            Scheme::Rho(p) => p.total_tests(),
            Scheme::Noisy(p) => p.total_tests(),
            Scheme::Comp { gamma, t_len } => *gamma as usize * t_len,
            Scheme::Ncomp { reps, t_len, .. } => *reps as usize * t_len,
        }
    }

    pub fn rho_outside_regime(&self) -> bool {
        matches!(&self.scheme, Scheme::Rho(p) if p.outside_regime)
    }

    fn defectives(&self, key: &RandomnessKey) -> Vec<usize> {
        if let Some(d) = &self.config.defectives {
            let mut d = d.clone();
            d.sort_unstable();
            d.dedup();
            return d;
        }
        let mut rng = key.with_stream(Stream::defectives()).rng();
        let mut d = sample(&mut rng, self.config.n, self.config.k).into_vec();
        d.sort_unstable();
        d
    }

    /// Runs trial `index`, returning its report and the instance's defectives.
    pub fn run_trial(&self, index: usize) -> Result<(DecodeReport, Vec<usize>), BenchError> {
        self.run_trial_inner(index)
            .map_err(|e| e.in_trial(index))
    }

    fn run_trial_inner(&self, index: usize) -> Result<(DecodeReport, Vec<usize>), BenchError> {
        let key = RandomnessKey::for_trial(self.config.seed, index as u64);
        let defs = self.defectives(&key);
        let inst = ProblemInstance::new(self.n, self.k, defs.clone())?;
        let hash_mode: HashMode = self.config.hash_mode.into();
        let ch = &self.channel;
        let mut report = match &self.scheme {
            Scheme::Gamma(p) => {
                let d = build_gamma_design(p, &key, hash_mode)?;
                let out = evaluate_design(&d, &inst, ch, &key)?;
                timed(|| decode_gamma(&d, &out))?
            }
            Scheme::Rho(p) => {
                let d = build_rho_design(p, &key, hash_mode)?;
                let out = evaluate_design(&d, &inst, ch, &key)?;
                timed(|| decode_rho(&d, &out))?
            }
            Scheme::Noisy(p) => {
                let d = build_noisy_design(p, &key, hash_mode)?;
                let out = evaluate_design(&d, &inst, ch, &key)?;
                timed(|| decode_noisy(&d, &out))?
            }
            Scheme::Comp { gamma, t_len } => {
                let layout = build_sequence_design(self.n, *gamma, *t_len, &key, hash_mode)?;
                let out = evaluate_design(&layout, &inst, ch, &key)?;
                let flat = FlatDesign::from_layout(&layout);
                timed(|| Ok(flat_report(decode_comp(&flat, out.bits())?, &layout)))?
            }
            Scheme::Ncomp { reps, t_len, threshold } => {
                let layout = build_sequence_design(self.n, *reps, *t_len, &key, hash_mode)?;
                let out = evaluate_design(&layout, &inst, ch, &key)?;
                let flat = FlatDesign::from_layout(&layout);
                timed(|| Ok(flat_report(decode_ncomp(&flat, out.bits(), *threshold)?, &layout)))?
            }
        };
        // Rounding pads the id range with dummy items; they are ordinary
        // non-defectives and a decoder may still (wrongly) report them.
        report.estimate.sort_unstable();
        Ok((report, defs))
    }
}

fn flat_report(estimate: Vec<usize>, layout: &splitgt_core::TestLayout) -> DecodeReport {
    DecodeReport {
        outcomes_read: layout.num_tests(),
        distinct_outcomes_read: layout.num_tests(),
        nodes_visited: layout.n(),
        peak_candidates: estimate.len(),
        storage_words: layout.storage_words() + estimate.len(),
        estimate,
        ..Default::default()
    }
}

fn timed(f: impl FnOnce() -> splitgt_core::Result<DecodeReport>) -> Result<DecodeReport, BenchError> {
    let start = Instant::now();
    let mut r = f()?;
    r.wall_nanos = start.elapsed().as_nanos() as u64;
    Ok(r)
}

/// Aggregate plus the summed decode wall time, which is kept out of
/// [`AggregateResult`] so that results are reproducible byte for byte.
#[derive(Debug, Clone, PartialEq)]
pub struct TimedResult {
    pub result: AggregateResult,
    pub decode_nanos: u64,
}

pub fn run_trials(config: &TrialConfig) -> Result<AggregateResult, BenchError> {
    run_trials_timed(config, None).map(|t| t.result)
}

/// Runs every trial of `config`, on at most `jobs` threads when given.
pub fn run_trials_timed(config: &TrialConfig, jobs: Option<usize>) -> Result<TimedResult, BenchError> {
    let prepared = Prepared::new(config)?;
    let run = || -> Vec<Result<(DecodeReport, Vec<usize>), BenchError>> {
        (0..config.trials)
            .into_par_iter()
            .map(|i| prepared.run_trial(i))
            .collect()
    };
    let outcomes = match jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .map_err(|e| BenchError::Harness(e.to_string()))?
            .install(run),
        None => run(),
    };
    let mut agg = Accumulator::default();
    for o in outcomes {
        let (report, defs) = o?;
        agg.add(&report, &defs);
    }
    Ok(TimedResult {
        decode_nanos: agg.nanos,
        result: agg.finish(&prepared),
    })
}

#[derive(Default)]
struct Accumulator {
    trials: usize,
    successes: usize,
    superset: usize,
    outcomes_read: u128,
    max_outcomes_read: usize,
    max_distinct: usize,
    labels: u128,
    storage: usize,
    nodes: u128,
    peak: usize,
    fp: u128,
    fneg: u128,
    nanos: u64,
}

impl Accumulator {
    fn add(&mut self, r: &DecodeReport, defs: &[usize]) {
        self.trials += 1;
        self.successes += r.exact_match(defs) as usize;
        let missed = r.false_negatives(defs);
        self.superset += (missed == 0) as usize;
        self.outcomes_read += r.outcomes_read as u128;
        self.max_outcomes_read = self.max_outcomes_read.max(r.outcomes_read);
        self.max_distinct = self.max_distinct.max(r.distinct_outcomes_read);
        self.labels += r.labels_computed as u128;
        self.storage = self.storage.max(r.storage_words);
        self.nodes += r.nodes_visited as u128;
        self.peak = self.peak.max(r.peak_candidates);
        self.fp += r.false_positives(defs) as u128;
        self.fneg += missed as u128;
        self.nanos += r.wall_nanos;
    }

    fn finish(&self, prep: &Prepared) -> AggregateResult {
        let mean = |x: u128| if self.trials == 0 { 0.0 } else { x as f64 / self.trials as f64 };
        let (ci_lo, ci_hi) = wilson_interval(self.successes, self.trials);
        let cfg = &prep.config;
        let (gamma, gamma_prime, rho) = match &prep.scheme {
            Scheme::Gamma(p) => (Some(p.gamma), Some(p.gamma_prime), None),
            Scheme::Rho(p) => (None, None, Some(p.rho)),
            Scheme::Comp { gamma, .. } => (Some(*gamma), None, None),
            _ => (None, None, None),
        };
        AggregateResult {
            algorithm: cfg.algorithm,
            n: prep.n,
            k: prep.k,
            gamma,
            gamma_prime,
            rho,
            p: cfg.p,
            tests: prep.total_tests(),
            trials: self.trials,
            successes: self.successes,
            success_rate: if self.trials == 0 { 0.0 } else { self.successes as f64 / self.trials as f64 },
            ci_lo,
            ci_hi,
            mean_outcomes_read: mean(self.outcomes_read),
            max_outcomes_read: self.max_outcomes_read,
            mean_labels: mean(self.labels),
            storage_words: self.storage,
            seed: cfg.seed,
            hash_mode: cfg.hash_mode,
            mean_nodes_visited: mean(self.nodes),
            max_peak_candidates: self.peak,
            mean_false_positives: mean(self.fp),
            mean_false_negatives: mean(self.fneg),
            superset_trials: self.superset,
            max_distinct_outcomes_read: self.max_distinct,
        }
    }
}

/// Runs each config in order. A failing cell is reported in place and the
/// sweep moves on.
pub fn sweep(grid: &[TrialConfig], jobs: Option<usize>) -> Result<Vec<Result<TimedResult, BenchError>>, BenchError> {
    if grid.is_empty() {
        return Err(BenchError::Usage("sweep grid is empty".into()));
    }
    Ok(grid.iter().map(|c| run_trials_timed(c, jobs)).collect())
}
