//! Command-line front end.
//!
//! Run commands (`gamma`, `rho`, `noisy`, `comp`, `ncomp`) take their
//! settings from flags, from a JSON `--config` file whose keys are the flag
//! names in snake_case, or both (flags win). The seed falls back to the
//! `GT_SEED` environment variable, then to 0.
//!
//! Exit status: 0 on success, 1 when a trial or output write fails, 2 on a
//! usage or parameter error.

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{Map, Value};

use crate::bench::{
    run_trials_timed, sweep, AggregateResult, Algorithm, HashModeSer, NoisyModeSer, Overrides, Prepared,
    TimedResult, TrialConfig, DEFAULT_EPSILON, DEFAULT_T,
};
use crate::error::BenchError;
use crate::eta::eta_curve;
use crate::output::{write_eta, write_results, Format};

pub const DEFAULT_TRIALS: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "splitgt", version, about = "Splitting decoders for non-adaptive group testing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Scheme where each item joins at most gamma tests.
    Gamma(RunOptions),
    /// Scheme where each test pools at most rho items.
    Rho(RunOptions),
    /// Scheme for outcomes flipped with probability p.
    Noisy(RunOptions),
    /// COMP on gamma random sequences.
    Comp(RunOptions),
    /// Thresholded COMP for noisy outcomes.
    Ncomp(RunOptions),
    /// Runs every cell of a JSON grid.
    Sweep(SweepArgs),
    /// Asymptotic efficiency exponent of splitting versus COMP.
    EtaCurve(EtaArgs),
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunOptions {
    /// Scheme to run; only read from sweep cells and config files.
    #[arg(skip)]
    pub algorithm: Option<Algorithm>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub gamma: Option<u32>,
    #[arg(long)]
    pub gamma_prime: Option<u32>,
    #[arg(long)]
    pub rho: Option<usize>,
    #[arg(long)]
    pub depth: Option<u32>,
    #[arg(long)]
    pub reps: Option<u32>,
    #[arg(long)]
    pub final_reps: Option<u32>,
    /// Lookahead depth r of the noisy decoder.
    #[arg(long)]
    pub lookahead: Option<u32>,
    /// Channel flip probability.
    #[arg(long)]
    pub p: Option<f64>,
    /// Flip probability the noisy design is built for (defaults to --p).
    #[arg(long)]
    pub design_p: Option<f64>,
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub beta_exp: Option<f64>,
    #[arg(long)]
    pub c_const: Option<f64>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub hash_mode: Option<HashArg>,
    /// Fixed defective ids, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub defectives: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Maximum number of trials run at once.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Theory,
    Practice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum HashArg {
    Full,
    Kwise,
    Pairwise,
    Permutation,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// JSON file with `cells`, or `base` plus a `grid` of value lists.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct EtaArgs {
    /// Splitting heights to compare, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "4,10")]
    pub gamma: Vec<u32>,
    #[arg(long, default_value_t = 9)]
    pub theta_steps: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

macro_rules! merge_fields {
    ($a:expr, $b:expr; $($f:ident),*) => {
        $( if $a.$f.is_none() { $a.$f = $b.$f; } )*
    };
}

impl RunOptions {
    /// Fills every unset field from `other`.
    pub fn merge(&mut self, other: RunOptions) {
        merge_fields!(self, other; algorithm, n, k, gamma, gamma_prime, rho, depth, reps, final_reps,
            lookahead, p, design_p, t, epsilon, mode, beta_exp, c_const, threshold, trials, seed,
            hash_mode, defectives, format, jobs);
    }

    fn load_file(path: &Path) -> Result<RunOptions, BenchError> {
        let text = fs::read_to_string(path).map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| BenchError::Usage(format!("{}: {e}", path.display())))
    }

    /// Validated trial config; `GT_SEED` stands in for a missing seed.
    pub fn to_config(&self, algorithm: Algorithm) -> Result<TrialConfig, BenchError> {
        let n = self.n.ok_or_else(|| BenchError::Usage("missing required --n".into()))?;
        let k = self.k.ok_or_else(|| BenchError::Usage("missing required --k".into()))?;
        let seed = match self.seed {
            Some(s) => s,
            None => match std::env::var("GT_SEED") {
                Ok(v) => v
                    .trim()
                    .parse()
                    .map_err(|_| BenchError::Usage(format!("GT_SEED={v:?} is not an unsigned integer")))?,
                Err(_) => 0,
            },
        };
        let p = self.p.unwrap_or(0.0);
        if algorithm == Algorithm::Noisy && self.design_p.is_none() && !(p > 0.0 && p < 0.5) {
            return Err(BenchError::Usage("p must lie in (0, 0.5)".into()));
        }
        if !(0.0..0.5).contains(&p) {
            return Err(BenchError::Usage("p must lie in [0, 0.5)".into()));
        }
        let trials = self.trials.unwrap_or(DEFAULT_TRIALS);
        Ok(TrialConfig {
            algorithm,
            n,
            k,
            gamma: self.gamma,
            rho: self.rho,
            p,
            t: self.t.unwrap_or(DEFAULT_T),
            epsilon: self.epsilon.unwrap_or(DEFAULT_EPSILON),
            mode: match self.mode {
                Some(ModeArg::Theory) => NoisyModeSer::Theory,
                _ => NoisyModeSer::Practice,
            },
            overrides: Overrides {
                gamma_prime: self.gamma_prime,
                beta_exp: self.beta_exp,
                c_const: self.c_const,
                depth: self.depth,
                reps: self.reps,
                final_reps: self.final_reps,
                lookahead: self.lookahead,
                design_p: self.design_p,
                threshold: self.threshold,
            },
            hash_mode: match self.hash_mode {
                None | Some(HashArg::Full) => HashModeSer::Full,
                Some(HashArg::Kwise) => HashModeSer::Kwise,
                Some(HashArg::Pairwise) => HashModeSer::Pairwise,
                Some(HashArg::Permutation) => HashModeSer::Permutation,
            },
            trials,
            seed,
            defectives: self.defectives.clone(),
        })
    }
}

/// Parses `argv` into a trial config for a run command, applying the
/// config file, defaults and checks. Sweep and eta-curve return `None`.
pub fn parse_args<I, T>(argv: I) -> Result<Option<TrialConfig>, BenchError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| BenchError::Usage(e.to_string()))?;
    match cli.command {
        Command::Sweep(_) | Command::EtaCurve(_) => Ok(None),
        other => {
            let (alg, opts) = run_options(other).expect("run command");
            let opts = resolve_options(opts)?;
            let cfg = opts.to_config(alg)?;
            Prepared::new(&cfg).map_err(usage)?;
            Ok(Some(cfg))
        }
    }
}

fn run_options(cmd: Command) -> Option<(Algorithm, RunOptions)> {
    match cmd {
        Command::Gamma(o) => Some((Algorithm::Gamma, o)),
        Command::Rho(o) => Some((Algorithm::Rho, o)),
        Command::Noisy(o) => Some((Algorithm::Noisy, o)),
        Command::Comp(o) => Some((Algorithm::Comp, o)),
        Command::Ncomp(o) => Some((Algorithm::Ncomp, o)),
        _ => None,
    }
}

fn resolve_options(mut opts: RunOptions) -> Result<RunOptions, BenchError> {
    if let Some(path) = opts.config.clone() {
        opts.merge(RunOptions::load_file(&path)?);
    }
    Ok(opts)
}

fn usage(e: BenchError) -> BenchError {
    match e {
        BenchError::Core(c) => BenchError::Usage(c.to_string()),
        other => other,
    }
}

/// Rounding notes and regime warnings for a config.
fn warn_about(cfg: &TrialConfig) {
    if let (Algorithm::Rho, Some(rho)) = (cfg.algorithm, cfg.rho) {
        if rho > 0 && !rho.is_power_of_two() {
            let down = 1usize << (usize::BITS - 1 - rho.leading_zeros());
            log::warn!("rho rounded down from {rho} to {down}");
        }
    }
    if !cfg.n.is_power_of_two() {
        log::warn!("n rounded up from {} to {}; the extra items are never defective", cfg.n, cfg.n.next_power_of_two());
    }
    if cfg.k > 0 && !cfg.k.is_power_of_two() {
        log::warn!("k rounded up from {} to {}", cfg.k, cfg.k.next_power_of_two());
    }
    if let Ok(prep) = Prepared::new(cfg) {
        if prep.rho_outside_regime() {
            log::warn!("rho >= n/k lies outside the regime the rho scheme is built for; expect poor recovery");
        }
    }
}

/// Runs `argv` (including the program name) and returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_usage() {
                2
            } else {
                1
            }
        }
    }
}

fn execute(cmd: Command) -> Result<(), BenchError> {
    match cmd {
        Command::Sweep(args) => execute_sweep(args),
        Command::EtaCurve(args) => {
            let pts = eta_curve(&args.gamma, args.theta_steps)?;
            emit(args.out.as_deref(), |w| write_eta(&pts, args.format.unwrap_or_default(), w))
        }
        other => {
            let (alg, opts) = run_options(other).expect("run command");
            let opts = resolve_options(opts)?;
            let cfg = opts.to_config(alg)?;
            warn_about(&cfg);
            Prepared::new(&cfg).map_err(usage)?;
            let res = run_trials_timed(&cfg, opts.jobs)?;
            print_summary(std::slice::from_ref(&res), opts.out.is_none());
            let format = opts.format.unwrap_or_default();
            emit(opts.out.as_deref(), |w| write_results(std::slice::from_ref(&res.result), format, w))
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepFile {
    #[serde(default)]
    base: Map<String, Value>,
    #[serde(default)]
    grid: Map<String, Value>,
    #[serde(default)]
    cells: Vec<Map<String, Value>>,
}

/// Expands a sweep file into cells: explicit `cells` first, each merged over
/// `base`, then the Cartesian product of `grid` (keys in sorted order, last
/// key varying fastest) merged over `base`.
pub fn expand_sweep(text: &str) -> Result<Vec<RunOptions>, BenchError> {
    let file: SweepFile = serde_json::from_str(text).map_err(|e| BenchError::Usage(format!("sweep config: {e}")))?;
    let mut raw: Vec<Map<String, Value>> = Vec::new();
    for cell in &file.cells {
        let mut m = file.base.clone();
        m.extend(cell.clone());
        raw.push(m);
    }
    if !file.grid.is_empty() {
        let mut combos = vec![file.base.clone()];
        for (key, values) in &file.grid {
            let values = values
                .as_array()
                .ok_or_else(|| BenchError::Usage(format!("grid entry {key:?} must be a list")))?;
            let mut next = Vec::new();
            for c in &combos {
                for v in values {
                    let mut m = c.clone();
                    m.insert(key.clone(), v.clone());
                    next.push(m);
                }
            }
            combos = next;
        }
        raw.extend(combos);
    }
    if raw.is_empty() {
        return Err(BenchError::Usage("sweep grid is empty".into()));
    }
    raw.into_iter()
        .map(|m| serde_json::from_value(Value::Object(m)).map_err(|e| BenchError::Usage(format!("sweep cell: {e}"))))
        .collect()
}

fn execute_sweep(args: SweepArgs) -> Result<(), BenchError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| BenchError::Usage(format!("{}: {e}", args.config.display())))?;
    let cells = expand_sweep(&text)?;
    let mut configs = Vec::with_capacity(cells.len());
    for c in &cells {
        let alg = c
            .algorithm
            .ok_or_else(|| BenchError::Usage("every sweep cell needs an algorithm".into()))?;
        configs.push(c.to_config(alg)?);
    }
    let results = sweep(&configs, args.jobs)?;
    let mut ok = Vec::new();
    let mut failed = 0;
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(t) => ok.push(t),
            Err(e) => {
                failed += 1;
                eprintln!("error: sweep cell {i}: {e}");
            }
        }
    }
    print_summary(&ok, args.out.is_none());
    let rows: Vec<AggregateResult> = ok.iter().map(|t| t.result.clone()).collect();
    emit(args.out.as_deref(), |w| write_results(&rows, args.format.unwrap_or_default(), w))?;
    if failed > 0 {
        return Err(BenchError::Harness(format!("{failed} sweep cell(s) failed")));
    }
    Ok(())
}

fn emit(out: Option<&Path>, write: impl FnOnce(&mut dyn Write) -> Result<(), BenchError>) -> Result<(), BenchError> {
    match out {
        Some(path) => {
            let io_err = |e| BenchError::Io {
                path: path.display().to_string(),
                source: e,
            };
            let mut f = io::BufWriter::new(fs::File::create(path).map_err(io_err)?);
            write(&mut f)?;
            f.flush().map_err(io_err)
        }
        None => write(&mut io::stdout().lock()),
    }
}

/// Human-readable table; goes to stderr when the data itself goes to stdout.
fn print_summary(results: &[TimedResult], to_stderr: bool) {
    let mut text = format!(
        "{:<6} {:>8} {:>5} {:>8} {:>7} {:>8} {:>17} {:>12} {:>9} {:>11}\n",
        "alg", "n", "k", "T", "trials", "success", "95% CI", "mean_reads", "storage", "decode_ms"
    );
    for t in results {
        let r = &t.result;
        let ms = if r.trials == 0 { 0.0 } else { t.decode_nanos as f64 / r.trials as f64 / 1e6 };
        text.push_str(&format!(
            "{:<6} {:>8} {:>5} {:>8} {:>7} {:>8.4} {:>8.4}-{:<8.4} {:>12.1} {:>9} {:>11.3}\n",
            r.algorithm.as_str(),
            r.n,
            r.k,
            r.tests,
            r.trials,
            r.success_rate,
            r.ci_lo,
            r.ci_hi,
            r.mean_outcomes_read,
            r.storage_words,
            ms
        ));
    }
    if to_stderr {
        eprint!("{text}");
    } else {
        print!("{text}");
    }
}
