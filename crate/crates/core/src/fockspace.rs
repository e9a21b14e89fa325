//! Pair coherent and pair cat states on the charge-`q` Fock ladder.
//!
//! A two-mode state with a fixed number difference lives entirely on the
//! ladder `|n, n+q>`, `n = 0, 1, ...`, so it is stored as a single coefficient
//! vector indexed by `n`. The first mode carries `n` quanta, the second `n+q`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_i, log_factorial};

/// Smallest ladder truncation ever used.
pub const MIN_TRUNCATION: usize = 16;

/// Default ceiling for [`choose_truncation`].
pub const DEFAULT_TRUNCATION_CAP: usize = 4096;

/// Largest tail mass a [`PairCatSpec`] may request.
pub const MAX_TAIL_EPSILON: f64 = 1e-6;

const DEGENERATE_NORM_SQR: f64 = 1e-30;

/// Physical parameters of a pair cat state plus its truncation tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCatSpec {
    pub xi: Complex64,
    pub q: u32,
    pub phi: f64,
    pub tail_epsilon: f64,
}

/// Result of folding a possibly negative charge onto `q >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargeReduction {
    pub spec: PairCatSpec,
    /// True when the two mode labels were exchanged.
    pub modes_swapped: bool,
}

impl PairCatSpec {
    pub fn new(xi: Complex64, q: u32, phi: f64, tail_epsilon: f64) -> Result<Self> {
        let spec = PairCatSpec {
            xi,
            q,
            phi,
            tail_epsilon,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Accepts a signed charge. Negative `q` is mapped to `|q|` by exchanging
    /// the two modes; since `(-xi)^n` picks up an extra `(-1)^|q|` under the
    /// index shift `n -> n + |q|`, the relative cat phase moves by `|q| pi`.
    pub fn with_signed_charge(xi: Complex64, q: i64, phi: f64, tail_epsilon: f64) -> Result<ChargeReduction> {
        let magnitude = u32::try_from(q.unsigned_abs())
            .map_err(|_| Error::InvalidArgument(format!("charge {q} out of range")))?;
        let swapped = q < 0;
        let phi = if swapped && magnitude % 2 == 1 { phi + PI } else { phi };
        Ok(ChargeReduction {
            spec: PairCatSpec::new(xi, magnitude, phi, tail_epsilon)?,
            modes_swapped: swapped,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi.re.is_finite() && self.xi.im.is_finite()) {
            return Err(Error::InvalidArgument(format!("xi must be finite, got {}", self.xi)));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidArgument(format!("phi must be finite, got {}", self.phi)));
        }
        if !(self.tail_epsilon > 0.0 && self.tail_epsilon <= MAX_TAIL_EPSILON) {
            return Err(Error::InvalidArgument(format!(
                "tail_epsilon must lie in (0, {MAX_TAIL_EPSILON:e}], got {:e}",
                self.tail_epsilon
            )));
        }
        Ok(())
    }
}

/// Amplitudes of `|n, n+q>` for `n = 0..=n_max`.
///
/// Serializes as `{"q": .., "coeffs": [[re, im], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderState {
    pub q: u32,
    pub coeffs: Vec<Complex64>,
}

impl LadderState {
    /// The Fock state `|n, n+q>` on a ladder truncated at `n_max`.
    pub fn fock(q: u32, n: usize, n_max: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max.max(n) + 1];
        coeffs[n] = Complex64::new(1.0, 0.0);
        LadderState { q, coeffs }
    }

    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Photon-number weights `|c_n|^2`.
    pub fn weights(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Euclidean distance to another ladder state of the same charge; the
    /// shorter vector is padded with zeros.
    pub fn distance(&self, other: &LadderState) -> f64 {
        let len = self.coeffs.len().max(other.coeffs.len());
        let zero = Complex64::new(0.0, 0.0);
        (0..len)
            .map(|n| {
                let a = self.coeffs.get(n).copied().unwrap_or(zero);
                let b = other.coeffs.get(n).copied().unwrap_or(zero);
                (a - b).norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, factor: Complex64) -> LadderState {
        LadderState {
            q: self.q,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Ladder cut-off together with the bound on the probability it discards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Truncation {
    pub n_max: usize,
    /// Certified upper bound on the discarded probability.
    pub tail_bound: f64,
}

/// `ln(|xi|^(2n) / (n! (n+q)!))`, the log of the unnormalized pair coherent weight.
fn log_weight(abs_xi: f64, q: u32, n: usize) -> f64 {
    2.0 * n as f64 * abs_xi.ln() - log_factorial(n as u64) - log_factorial(n as u64 + q as u64)
}

/// Smallest `N >= 16` whose discarded pair coherent probability is certified
/// below `tail_epsilon`.
pub fn choose_truncation(xi: Complex64, q: u32, tail_epsilon: f64) -> Result<Truncation> {
    choose_truncation_capped(xi, q, tail_epsilon, DEFAULT_TRUNCATION_CAP)
}

/// [`choose_truncation`] with an explicit ceiling on `N`.
///
/// Weights are kept relative to the running maximum so nothing overflows. Once
/// the successive ratio `r_n = |xi|^2 / ((n+1)(n+1+q))` drops below one it only
/// keeps decreasing, so the tail beyond `N` is dominated by the geometric series
/// `w_{N+1} / (1 - r_{N+1})`.
pub fn choose_truncation_capped(xi: Complex64, q: u32, tail_epsilon: f64, cap: usize) -> Result<Truncation> {
    if !(tail_epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("tail_epsilon must be positive, got {tail_epsilon:e}")));
    }
    let abs_xi = xi.norm();
    if abs_xi == 0.0 {
        return Ok(Truncation {
            n_max: MIN_TRUNCATION,
            tail_bound: 0.0,
        });
    }
    let ratio = |n: usize| abs_xi * abs_xi / ((n as f64 + 1.0) * (n as f64 + 1.0 + q as f64));

    let mut reference = log_weight(abs_xi, q, 0);
    let mut mass = 1.0;
    let mut last_tail = f64::INFINITY;
    for n in 0..=cap {
        let lw = log_weight(abs_xi, q, n);
        if n > 0 {
            if lw > reference {
                mass *= (reference - lw).exp();
                reference = lw;
            }
            mass += (lw - reference).exp();
        }
        if n < MIN_TRUNCATION {
            continue;
        }
        let r_next = ratio(n + 1);
        if r_next >= 1.0 {
            continue;
        }
        let next_weight = (log_weight(abs_xi, q, n + 1) - reference).exp();
        let tail = next_weight / (1.0 - r_next);
        let relative = tail / (mass + tail);
        last_tail = relative;
        if relative < tail_epsilon {
            return Ok(Truncation {
                n_max: n,
                tail_bound: relative,
            });
        }
    }
    Err(Error::TruncationUnreachable {
        xi: abs_xi,
        q,
        cap,
        tail: last_tail,
    })
}

/// `N_q = [|xi|^-q I_q(2|xi|)]^(-1/2)`, with the `xi -> 0` limit `sqrt(q!)`.
pub fn pair_coherent_normalization(xi: Complex64, q: u32) -> Result<f64> {
    let abs_xi = xi.norm();
    if abs_xi == 0.0 {
        return Ok((0.5 * log_factorial(q as u64)).exp());
    }
    let bessel = bessel_i(q, 2.0 * abs_xi)?;
    Ok((abs_xi.powi(q as i32) / bessel).sqrt())
}

/// Unnormalized log-domain amplitudes `xi^n / sqrt(n! (n+q)!)` scaled by a
/// common factor so the largest has unit modulus.
fn scaled_pair_amplitudes(xi: Complex64, q: u32, n_max: usize) -> Vec<Complex64> {
    let abs_xi = xi.norm();
    if abs_xi == 0.0 {
        let mut out = vec![Complex64::new(0.0, 0.0); n_max + 1];
        out[0] = Complex64::new(1.0, 0.0);
        return out;
    }
    let arg = xi.arg();
    let half_logs: Vec<f64> = (0..=n_max).map(|n| 0.5 * log_weight(abs_xi, q, n)).collect();
    let peak = half_logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    half_logs
        .iter()
        .enumerate()
        .map(|(n, lw)| Complex64::from_polar((lw - peak).exp(), n as f64 * arg))
        .collect()
}

fn normalize(mut coeffs: Vec<Complex64>) -> Vec<Complex64> {
    let norm = coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    for c in &mut coeffs {
        *c /= norm;
    }
    coeffs
}

/// Pair coherent state `|xi, q>` on the ladder truncated at `n_max`,
/// renormalized over the retained window.
pub fn pair_coherent(xi: Complex64, q: u32, n_max: usize) -> LadderState {
    LadderState {
        q,
        coeffs: normalize(scaled_pair_amplitudes(xi, q, n_max)),
    }
}

/// `e^{i phi}` with exact values at multiples of `pi/2`, so parity selection
/// rules hold exactly rather than up to `1e-16`.
pub fn unit_phase(phi: f64) -> Complex64 {
    let quarter = phi / (0.5 * PI);
    let nearest = quarter.round();
    if (quarter - nearest).abs() <= 4.0 * f64::EPSILON * nearest.abs().max(1.0) {
        return match (nearest as i64).rem_euclid(4) {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
    }
    Complex64::from_polar(1.0, phi)
}

/// Factor `1 + (-1)^n e^{i phi}` that combines `|xi,q>` and `|-xi,q>`.
fn cat_factor(n: usize, phase: Complex64) -> Complex64 {
    if n % 2 == 0 {
        Complex64::new(1.0, 0.0) + phase
    } else {
        Complex64::new(1.0, 0.0) - phase
    }
}

/// Pair cat state `N_phi (|xi,q> + e^{i phi} |-xi,q>)`.
pub fn pair_cat(spec: &PairCatSpec) -> Result<LadderState> {
    pair_cat_truncated(spec).map(|(state, _)| state)
}

/// [`pair_cat`] together with the truncation that was certified for it.
///
/// The pair coherent cut is extended further when the cat interference makes
/// the retained mass small relative to the tail (e.g. odd cats at small `xi`).
pub fn pair_cat_truncated(spec: &PairCatSpec) -> Result<(LadderState, Truncation)> {
    spec.validate()?;
    let phase = unit_phase(spec.phi);
    let mut truncation = choose_truncation(spec.xi, spec.q, spec.tail_epsilon)?;
    loop {
        let pc = pair_coherent(spec.xi, spec.q, truncation.n_max);
        let raw: Vec<Complex64> = pc
            .coeffs
            .iter()
            .enumerate()
            .map(|(n, c)| c * cat_factor(n, phase))
            .collect();
        let norm_sqr: f64 = raw.iter().map(|c| c.norm_sqr()).sum();
        if norm_sqr < DEGENERATE_NORM_SQR {
            return Err(Error::DegenerateState { norm_sqr });
        }
        // The cat factor is at most 2 in modulus, so the discarded cat mass is
        // at most 4x the discarded pair coherent mass.
        let cat_tail = 4.0 * truncation.tail_bound / (norm_sqr + 4.0 * truncation.tail_bound);
        if cat_tail < spec.tail_epsilon {
            let state = LadderState {
                q: spec.q,
                coeffs: normalize(raw),
            };
            return Ok((
                state,
                Truncation {
                    n_max: truncation.n_max,
                    tail_bound: cat_tail,
                },
            ));
        }
        let tighter = (spec.tail_epsilon * norm_sqr / 8.0).max(f64::MIN_POSITIVE);
        let next = choose_truncation(spec.xi, spec.q, tighter)?;
        if next.n_max <= truncation.n_max {
            return Err(Error::TruncationUnreachable {
                xi: spec.xi.norm(),
                q: spec.q,
                cap: truncation.n_max,
                tail: cat_tail,
            });
        }
        truncation = next;
    }
}

/// Closed-form cat normalization `N_phi`, summing the alternating series
/// directly. Only reliable for moderate `|xi|` (roughly `<= 8`) where the
/// alternating sum does not cancel catastrophically.
pub fn cat_normalization_closed_form(xi: Complex64, q: u32, phi: f64) -> Result<f64> {
    let abs_xi = xi.norm();
    let nq = pair_coherent_normalization(xi, q)?;
    let x2 = abs_xi * abs_xi;
    let mut term = (-log_factorial(q as u64)).exp();
    let mut alternating = term;
    for n in 1..10_000usize {
        term *= -x2 / (n as f64 * (n as f64 + q as f64));
        alternating += term;
        if term.abs() < 1e-18 * alternating.abs().max(1e-300) {
            break;
        }
    }
    let inner = 1.0 + nq * nq * unit_phase(phi).re * alternating;
    Ok(std::f64::consts::FRAC_1_SQRT_2 / inner.sqrt())
}

/// Applies the pair annihilation operator `a b` on the ladder:
/// `out[n] = sqrt((n+1)(n+1+q)) c[n+1]`, `out[N] = 0`. Not renormalized.
pub fn apply_pair_annihilation(state: &LadderState) -> LadderState {
    let n_max = state.n_max();
    let q = state.q as f64;
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n_max + 1];
    for n in 0..n_max {
        let nf = n as f64;
        coeffs[n] = ((nf + 1.0) * (nf + 1.0 + q)).sqrt() * state.coeffs[n + 1];
    }
    LadderState { q: state.q, coeffs }
}

/// Number difference carried by the ladder. It is fixed by the representation.
pub fn number_difference(state: &LadderState) -> i64 {
    state.q as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn spec(xi: f64, q: u32, phi: f64) -> PairCatSpec {
        PairCatSpec::new(c(xi), q, phi, 1e-12).unwrap()
    }

    /// Direct weight summation in plain floats until terms underflow to zero.
    fn exhaustive_tail(xi: f64, q: u32, n_max: usize) -> f64 {
        let weights: Vec<f64> = (0..2000)
            .map(|n| (2.0 * n as f64 * xi.ln() - log_factorial(n) - log_factorial(n + q as u64)).exp())
            .collect();
        let total: f64 = weights.iter().sum();
        weights[n_max + 1..].iter().sum::<f64>() / total
    }

    #[test]
    fn vacuum_uses_the_floor() {
        let t = choose_truncation(c(0.0), 0, 1e-12).unwrap();
        assert_eq!(t.n_max, 16);
        assert_eq!(t.tail_bound, 0.0);
    }

    #[test]
    fn truncation_is_certified_and_minimal() {
        let mut previous = 0;
        for &xi in &[10.0, 20.0] {
            let t = choose_truncation(c(xi), 1, 1e-12).unwrap();
            assert!(t.n_max >= 10);
            assert!(t.n_max > previous);
            previous = t.n_max;
            let actual = exhaustive_tail(xi, 1, t.n_max);
            assert!(actual < 1e-12, "xi = {xi}: tail {actual}");
            assert!(t.tail_bound >= actual * (1.0 - 1e-9));
            // one step shorter would not be certified by the exact tail either
            let shorter = exhaustive_tail(xi, 1, t.n_max - 1);
            assert!(shorter > 1e-14, "xi = {xi}: N = {} far from minimal", t.n_max);
        }
    }

    #[test]
    fn truncation_cap_is_reported() {
        let err = choose_truncation_capped(c(200.0), 0, 1e-12, 64).unwrap_err();
        assert!(matches!(err, Error::TruncationUnreachable { cap: 64, .. }));
        assert!(choose_truncation(c(1.0), 0, 0.0).is_err());
    }

    #[test]
    fn zero_xi_is_the_ladder_floor() {
        let s = pair_coherent(c(0.0), 3, 16);
        assert_eq!(s.coeffs[0], c(1.0));
        assert!(s.coeffs[1..].iter().all(|z| *z == c(0.0)));
    }

    #[test]
    fn coefficient_ratio_follows_the_expansion() {
        let xi = Complex64::new(1.7, -0.6);
        let s = pair_coherent(xi, 2, 30);
        for n in 0..20 {
            let ratio = s.coeffs[n + 1] / s.coeffs[n];
            let want = xi / (((n + 1) * (n + 3)) as f64).sqrt();
            assert!((ratio - want).norm() < 1e-12 * want.norm());
        }
    }

    #[test]
    fn leading_coefficient_is_the_normalization() {
        let s = pair_coherent(c(1.0), 0, 24);
        // mpmath besseli(0, 2) ** -0.5
        assert!((s.coeffs[0].re - 0.662_326_414_871_888_3).abs() < 1e-14);
        let nq = pair_coherent_normalization(c(1.0), 0).unwrap();
        assert!((nq - 0.662_326_414_871_888_3).abs() < 1e-14);
    }

    #[test]
    fn normalization_limit_at_zero() {
        let nq = pair_coherent_normalization(c(0.0), 4).unwrap();
        assert!((nq * nq - 24.0).abs() < 1e-12);
    }

    #[test]
    fn vacuum_cat() {
        let s = pair_cat(&spec(0.0, 2, 0.0)).unwrap();
        assert_eq!(s.q, 2);
        assert!((s.coeffs[0] - c(1.0)).norm() < 1e-15);
        assert!(s.coeffs[1..].iter().all(|z| z.norm() == 0.0));
        let n_phi = cat_normalization_closed_form(c(0.0), 2, 0.0).unwrap();
        assert!((n_phi - 0.5).abs() < 1e-15);
    }

    #[test]
    fn odd_cat_has_no_even_terms() {
        let s = pair_cat(&spec(1.0, 0, PI)).unwrap();
        for n in (0..s.coeffs.len()).step_by(2) {
            assert_eq!(s.coeffs[n], c(0.0));
        }
        let even = pair_cat(&spec(1.0, 0, 0.0)).unwrap();
        for n in (1..even.coeffs.len()).step_by(2) {
            assert_eq!(even.coeffs[n], c(0.0));
        }
    }

    #[test]
    fn quarter_phase_cat_matches_extended_precision() {
        // mpmath, 40 digits: each entry is (a + i b) with |a| = |b|.
        let expected = [
            0.468_335_499_314_886_84,
            0.468_335_499_314_886_84,
            0.234_167_749_657_443_42,
            0.078_055_916_552_481_14,
            0.019_513_979_138_120_285,
            0.003_902_795_827_624_057,
        ];
        let s = pair_cat(&spec(1.0, 0, PI / 2.0)).unwrap();
        for (n, want) in expected.iter().enumerate() {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            let z = s.coeffs[n];
            assert!((z.re - want).abs() < 1e-15, "n = {n}");
            assert!((z.im - sign * want).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn cat_normalization_agrees_with_closed_form() {
        for &xi in &[0.3, 1.0, 2.5, 5.0, 8.0] {
            for &q in &[0u32, 1, 3, 7] {
                for &phi in &[0.0, PI / 3.0, PI / 2.0, 2.0] {
                    let sp = spec(xi, q, phi);
                    let (state, trunc) = pair_cat_truncated(&sp).unwrap();
                    // recover N_phi N_q from the leading retained coefficient
                    let pc = pair_coherent(c(xi), q, trunc.n_max);
                    let factor = cat_factor(0, unit_phase(phi));
                    let n_phi_numeric = (state.coeffs[0] / (pc.coeffs[0] * factor)).norm();
                    let n_phi = cat_normalization_closed_form(c(xi), q, phi).unwrap();
                    assert!(
                        ((n_phi_numeric - n_phi) / n_phi).abs() < 1e-10,
                        "xi={xi} q={q} phi={phi}: {n_phi_numeric} vs {n_phi}"
                    );
                }
            }
        }
    }

    #[test]
    fn degenerate_superposition_is_rejected() {
        let err = pair_cat(&spec(0.0, 1, PI)).unwrap_err();
        assert!(matches!(err, Error::DegenerateState { .. }));
    }

    #[test]
    fn pair_annihilation_eigenvalue() {
        for &xi in &[0.5, 2.0, 5.0] {
            // the residual is ~ |xi| |c_N|, so the 1e-8 bound needs a tight tail
            let t = choose_truncation(c(xi), 3, 1e-20).unwrap();
            let pc = pair_coherent(c(xi), 3, t.n_max);
            let lowered = apply_pair_annihilation(&pc);
            assert!(lowered.distance(&pc.scaled(c(xi))) < 1e-8);
        }
        let floor = LadderState::fock(4, 0, 16);
        assert!(apply_pair_annihilation(&floor).norm_sqr() == 0.0);
    }

    #[test]
    fn charge_is_structural() {
        assert_eq!(number_difference(&pair_cat(&spec(1.0, 5, PI / 2.0)).unwrap()), 5);
        let pc = pair_coherent(c(3.0), 0, 30);
        assert_eq!(number_difference(&pc), 0);
    }

    #[test]
    fn negative_charge_swaps_modes() {
        let r = PairCatSpec::with_signed_charge(c(1.0), -3, 0.25, 1e-12).unwrap();
        assert!(r.modes_swapped);
        assert_eq!(r.spec.q, 3);
        assert!((r.spec.phi - (0.25 + PI)).abs() < 1e-15);
        let even = PairCatSpec::with_signed_charge(c(1.0), -2, 0.25, 1e-12).unwrap();
        assert_eq!(even.spec.phi, 0.25);
        let plain = PairCatSpec::with_signed_charge(c(1.0), 2, 0.25, 1e-12).unwrap();
        assert!(!plain.modes_swapped);
    }

    #[test]
    fn spec_validation() {
        assert!(PairCatSpec::new(c(1.0), 0, 0.0, 0.0).is_err());
        assert!(PairCatSpec::new(c(1.0), 0, 0.0, 1e-5).is_err());
        assert!(PairCatSpec::new(c(f64::NAN), 0, 0.0, 1e-8).is_err());
        assert!(PairCatSpec::new(c(1.0), 0, 0.0, 1e-6).is_ok());
    }

    #[test]
    fn serializes_as_pairs() {
        let s = LadderState {
            q: 1,
            coeffs: vec![c(0.6), Complex64::new(0.0, 0.8)],
        };
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"q":1,"coeffs":[[0.6,0.0],[0.0,0.8]]}"#);
        let back: LadderState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
