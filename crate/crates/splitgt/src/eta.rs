//! The test-count efficiency exponent `eta = ln(n/k) / (gamma ln(T / (gamma k)))`.

use serde::{Deserialize, Serialize};
use splitgt_core::gamma::{objective, select_gamma_prime};

use crate::error::BenchError;

/// Finite-`n` value of the exponent for a design with `T` tests.
pub fn eta_hat(n: f64, k: f64, gamma: u32, tests: f64) -> Result<f64, BenchError> {
    let g = gamma as f64;
    if !(n > k && k > 0.0) {
        return Err(BenchError::Usage(format!("need n > k > 0, got n = {n}, k = {k}")));
    }
    if !(tests > g * k) {
        return Err(BenchError::Usage(format!("need T > gamma k = {}, got T = {tests}", g * k)));
    }
    Ok((n / k).ln() / (g * (tests / (g * k)).ln()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    pub theta: f64,
    pub variant: String,
    pub eta_hat: f64,
}

/// Limits as `n` grows with `k = n^theta`, for `theta = i / (steps + 1)`.
///
/// The splitting scheme uses `T = gamma k n^e` with `e` the optimized height
/// objective, giving `(1 - theta) / (gamma e)`. COMP needs `T = gamma k n^(1/gamma)`,
/// giving `1 - theta` for every `gamma`.
pub fn eta_curve(gammas: &[u32], steps: usize) -> Result<Vec<EtaPoint>, BenchError> {
    if gammas.is_empty() || steps == 0 {
        return Err(BenchError::Usage("eta-curve needs at least one gamma and one step".into()));
    }
    let mut points = Vec::new();
    for i in 1..=steps {
        let theta = i as f64 / (steps + 1) as f64;
        points.push(EtaPoint {
            theta,
            variant: "comp".into(),
            eta_hat: 1.0 - theta,
        });
        for &g in gammas {
            let gp = select_gamma_prime(g, theta)?;
            let e = objective(g, gp, theta);
            points.push(EtaPoint {
                theta,
                variant: format!("splitting_gamma{g}"),
                eta_hat: (1.0 - theta) / (g as f64 * e),
            });
        }
    }
    Ok(points)
}
