//! CSV and JSON encodings of benchmark results.
//!
//! Result CSV columns, in order: `algorithm, n, k, gamma, gamma_prime, rho,
//! p, T, trials, successes, success_rate, ci_lo, ci_hi, mean_outcomes_read,
//! max_outcomes_read, mean_labels, storage_words, seed, hash_mode`, followed
//! by the supplementary `mean_nodes_visited, max_peak_candidates,
//! mean_false_positives, mean_false_negatives, superset_trials,
//! max_distinct_outcomes_read`. Columns
//! that do not apply to an algorithm are empty. Floats are written in the
//! shortest form that parses back to the same value.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::bench::AggregateResult;
use crate::error::BenchError;
use crate::eta::EtaPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

pub const RESULT_COLUMNS: [&str; 25] = [
    "algorithm",
    "n",
    "k",
    "gamma",
    "gamma_prime",
    "rho",
    "p",
    "T",
    "trials",
    "successes",
    "success_rate",
    "ci_lo",
    "ci_hi",
    "mean_outcomes_read",
    "max_outcomes_read",
    "mean_labels",
    "storage_words",
    "seed",
    "hash_mode",
    "mean_nodes_visited",
    "max_peak_candidates",
    "mean_false_positives",
    "mean_false_negatives",
    "superset_trials",
    "max_distinct_outcomes_read",
];

fn write_csv<T: Serialize>(rows: &[T], header: &[&str], out: impl Write) -> Result<(), BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| BenchError::Io {
        path: "<output>".into(),
        source: e,
    })?;
    Ok(())
}

pub fn write_results(results: &[AggregateResult], format: Format, mut out: impl Write) -> Result<(), BenchError> {
    match format {
        Format::Csv => write_csv(results, &RESULT_COLUMNS, out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, results)?;
            writeln!(out).map_err(|e| BenchError::Io {
                path: "<output>".into(),
                source: e,
            })
        }
    }
}

pub fn read_results_json(text: &str) -> Result<Vec<AggregateResult>, BenchError> {
    Ok(serde_json::from_str(text)?)
}

pub fn read_results_csv(text: &str) -> Result<Vec<AggregateResult>, BenchError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

pub fn write_eta(points: &[EtaPoint], format: Format, mut out: impl Write) -> Result<(), BenchError> {
    match format {
        Format::Csv => write_csv(points, &["theta", "variant", "eta_hat"], out),
        Format::Json => {
            serde_json::to_writer_pretty(&mut out, points)?;
            writeln!(out).map_err(|e| BenchError::Io {
                path: "<output>".into(),
                source: e,
            })
        }
    }
}
