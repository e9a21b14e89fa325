//! Special functions needed for state construction and rasterization.
//!
//! Everything here is evaluated so that no intermediate overflows: factorials
//! are only ever handled as logarithms, and oscillator eigenfunctions come from
//! the normalized three-term recurrence instead of Hermite polynomials.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Relative size of a series term, against the partial sum, below which the
/// `I_q` series is considered converged.
pub const BESSEL_TAIL_THRESHOLD: f64 = 1e-17;

/// Hard cap on the number of `I_q` series terms.
pub const BESSEL_MAX_TERMS: usize = 10_000;

const EXACT_FACTORIAL_LIMIT: u64 = 20;

/// `ln(n!)`.
///
/// Exact (integer accumulated) for `n <= 20`, Stirling series beyond, where the
/// first omitted term is below `1e-15` relative.
pub fn log_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_LIMIT {
        let fact: u64 = (2..=n).product();
        return (fact as f64).ln();
    }
    let x = n as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/(12x) - 1/(360x^3) + 1/(1260x^5) - 1/(1680x^7)
    let correction = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * PI * x).ln() + correction
}

/// Modified Bessel function of the first kind `I_q(x)` for integer order.
///
/// Sums the ascending series `sum_k (x/2)^(2k+q) / (k! (k+q)!)`; the leading
/// term is formed in log space so large orders do not overflow prematurely.
pub fn bessel_i(q: u32, x: f64) -> Result<f64> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("bessel_i needs finite x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(if q == 0 { 1.0 } else { 0.0 });
    }
    let half = 0.5 * x;
    let lead = (q as f64 * half.ln() - log_factorial(q as u64)).exp();
    if !lead.is_finite() {
        return Err(Error::BesselOverflow { order: q, x });
    }
    let quarter_sq = half * half;
    let mut term = lead;
    let mut sum = lead;
    for k in 0..BESSEL_MAX_TERMS {
        let k = k as f64;
        term *= quarter_sq / ((k + 1.0) * (k + 1.0 + q as f64));
        sum += term;
        if !sum.is_finite() {
            return Err(Error::BesselOverflow { order: q, x });
        }
        if term < BESSEL_TAIL_THRESHOLD * sum {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNotConverged {
        order: q,
        x,
        terms: BESSEL_MAX_TERMS,
    })
}

/// Normalized harmonic-oscillator eigenfunctions `phi_0(x) .. phi_nmax(x)` at a
/// single coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct WavefunctionColumn {
    pub x: f64,
    pub values: Vec<f64>,
}

impl WavefunctionColumn {
    pub fn n_max(&self) -> usize {
        self.values.len() - 1
    }
}

/// Evaluates `phi_n(x)` for `n = 0..=n_max` by the normalized upward recurrence
/// `phi_{n+1} = sqrt(2/(n+1)) x phi_n - sqrt(n/(n+1)) phi_{n-1}`.
pub fn oscillator_column(x: f64, n_max: usize) -> WavefunctionColumn {
    let mut values = Vec::with_capacity(n_max + 1);
    let ground = PI.powf(-0.25) * (-0.5 * x * x).exp();
    values.push(ground);
    if n_max >= 1 {
        values.push(2f64.sqrt() * x * ground);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * values[n] - (nf / (nf + 1.0)).sqrt() * values[n - 1];
        values.push(next);
    }
    WavefunctionColumn { x, values }
}
