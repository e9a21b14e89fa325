//! Evolution of the ion's internal state jointly with the two vibrational modes
//! under `H(t) = lambda(t) H0`, `H0 = a1^dag a2 sigma_- + a2^dag a1 sigma_+`.
//!
//! `H0` is time independent, so the propagator is `exp(-i alpha(t) H0)` with the
//! pulse area `alpha(t) = int_0^t lambda`. It couples `|e, n1, n2>` only to
//! `|g, n1+1, n2-1>` with strength `sqrt((n1+1) n2)`, which makes it a direct sum
//! of 2x2 rotations plus a few one-dimensional stationary states. That block
//! form is [`evolve_analytic`]; [`evolve_oracle`] rebuilds `H0` from ladder
//! operator matrix elements and integrates it without using the block form.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::LadderState;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Time dependence of the coupling `lambda(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CouplingProfile {
    Constant { lambda: f64 },
    /// `lambda sinh(varpi t)`.
    Sinh { lambda: f64, varpi: f64 },
    /// Linear interpolation between `(t, lambda)` knots, starting at `t = 0`.
    Piecewise { knots: Vec<(f64, f64)> },
}

impl CouplingProfile {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match self {
            CouplingProfile::Constant { lambda } => positive("lambda", *lambda),
            CouplingProfile::Sinh { lambda, varpi } => {
                positive("lambda", *lambda)?;
                positive("varpi", *varpi)
            }
            CouplingProfile::Piecewise { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidArgument("piecewise profile needs at least two knots".into()));
                }
                if knots[0].0 != 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "piecewise profile must start at t = 0, got {}",
                        knots[0].0
                    )));
                }
                if knots.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
                    return Err(Error::InvalidArgument("piecewise knots must be finite".into()));
                }
                if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::InvalidArgument("piecewise knot times must be strictly increasing".into()));
                }
                Ok(())
            }
        }
    }

    /// Scale used for the dimensionless time axis `lambda t`.
    pub fn reference_lambda(&self) -> f64 {
        match self {
            CouplingProfile::Constant { lambda } | CouplingProfile::Sinh { lambda, .. } => *lambda,
            CouplingProfile::Piecewise { .. } => 1.0,
        }
    }

    /// `lambda(t)`.
    pub fn coupling(&self, t: f64) -> Result<f64> {
        match self {
            CouplingProfile::Constant { lambda } => Ok(*lambda),
            CouplingProfile::Sinh { lambda, varpi } => Ok(lambda * (varpi * t).sinh()),
            CouplingProfile::Piecewise { knots } => {
                let seg = piecewise_segment(knots, t)?;
                let (t0, v0) = knots[seg];
                let (t1, v1) = knots[seg + 1];
                Ok(v0 + (v1 - v0) * (t - t0) / (t1 - t0))
            }
        }
    }

    /// Upper bound of `|lambda|` over `[a, b]`; exact for these profiles since
    /// each is monotone or piecewise linear.
    fn coupling_bound(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            CouplingProfile::Piecewise { knots } => {
                let mut bound = self.coupling(a)?.abs().max(self.coupling(b)?.abs());
                for &(t, v) in knots {
                    if t > a && t < b {
                        bound = bound.max(v.abs());
                    }
                }
                Ok(bound)
            }
            _ => Ok(self.coupling(a)?.abs().max(self.coupling(b)?.abs())),
        }
    }

    /// Restarts the profile at `t0`: the returned profile at `t` equals this
    /// one at `t0 + t`. Only piecewise profiles can represent every shift, so
    /// other profiles are sampled onto `knots` extra nodes up to `t1`.
    pub fn restarted_piecewise(&self, t0: f64, t1: f64, knots: usize) -> Result<CouplingProfile> {
        let count = knots.max(2);
        let mut out = Vec::with_capacity(count);
        for k in 0..count {
            let t = t0 + (t1 - t0) * k as f64 / (count - 1) as f64;
            out.push((t - t0, self.coupling(t)?));
        }
        Ok(CouplingProfile::Piecewise { knots: out })
    }
}

fn piecewise_segment(knots: &[(f64, f64)], t: f64) -> Result<usize> {
    let start = knots[0].0;
    let end = knots[knots.len() - 1].0;
    if !(t >= start && t <= end) {
        return Err(Error::OutOfRange { t, start, end });
    }
    let seg = knots.partition_point(|(k, _)| *k <= t).saturating_sub(1);
    Ok(seg.min(knots.len() - 2))
}

/// `alpha(t) = int_0^t lambda(t') dt'`.
pub fn pulse_area(profile: &CouplingProfile, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidArgument(format!("time must be >= 0, got {t}")));
    }
    match profile {
        CouplingProfile::Constant { lambda } => Ok(lambda * t),
        CouplingProfile::Sinh { lambda, varpi } => Ok(lambda * ((varpi * t).cosh() - 1.0) / varpi),
        CouplingProfile::Piecewise { knots } => {
            let seg = piecewise_segment(knots, t)?;
            let mut area = 0.0;
            for w in knots[..=seg].windows(2) {
                area += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
            }
            let (t0, v0) = knots[seg];
            let vt = profile.coupling(t)?;
            area += 0.5 * (v0 + vt) * (t - t0);
            Ok(area)
        }
    }
}

/// Internal level of the ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Internal {
    Excited,
    Ground,
}

/// One basis vector `|internal, n1, n2>` of the joint space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub internal: Internal,
    pub n1: usize,
    pub n2: usize,
}

/// Joint ion/vibration state confined to the invariant subspace of charge `q`:
///
/// * `e_amp[n]` multiplies `|e, n, n+q>`,
/// * `g_amp[n]` multiplies `|g, n+1, n+q-1>` (absent for `n = 0` when `q = 0`),
/// * `ground_floor` multiplies the stationary `|g, 0, q-2>` (only when `q >= 2`).
///
/// `e_amp[n]` and `g_amp[n]` form the 2x2 block rotated by `H0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointState {
    pub q: u32,
    pub e_amp: Vec<Complex64>,
    pub g_amp: Vec<Complex64>,
    pub ground_floor: Complex64,
}

impl JointState {
    /// Ion excited, modes in `ladder`.
    pub fn excited(ladder: &LadderState) -> Self {
        JointState {
            q: ladder.q,
            e_amp: ladder.coeffs.clone(),
            g_amp: vec![ZERO; ladder.coeffs.len()],
            ground_floor: ZERO,
        }
    }

    /// Ion in the ground level, modes in `ladder`.
    ///
    /// `|g, n, n+q>` is the ground member of the block with charge `q + 2` and
    /// index `n - 1`; the `n = 0` component is the stationary floor state.
    pub fn ground(ladder: &LadderState) -> Self {
        let len = ladder.coeffs.len();
        let mut g_amp = vec![ZERO; len];
        g_amp[..len - 1].copy_from_slice(&ladder.coeffs[1..]);
        JointState {
            q: ladder.q + 2,
            e_amp: vec![ZERO; len],
            g_amp,
            ground_floor: ladder.coeffs[0],
        }
    }

    pub fn prepare(ladder: &LadderState, internal: Internal) -> Self {
        match internal {
            Internal::Excited => JointState::excited(ladder),
            Internal::Ground => JointState::ground(ladder),
        }
    }

    pub fn blocks(&self) -> usize {
        self.e_amp.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.e_amp.iter().chain(&self.g_amp).map(|c| c.norm_sqr()).sum::<f64>() + self.ground_floor.norm_sqr()
    }

    pub fn excited_label(&self, n: usize) -> BasisLabel {
        BasisLabel {
            internal: Internal::Excited,
            n1: n,
            n2: n + self.q as usize,
        }
    }

    /// `None` when `|g, n+1, n+q-1>` does not exist (`q = 0`, `n = 0`).
    pub fn ground_label(&self, n: usize) -> Option<BasisLabel> {
        (n + self.q as usize).checked_sub(1).map(|n2| BasisLabel {
            internal: Internal::Ground,
            n1: n + 1,
            n2,
        })
    }

    pub fn floor_label(&self) -> Option<BasisLabel> {
        (self.q as usize).checked_sub(2).map(|n2| BasisLabel {
            internal: Internal::Ground,
            n1: 0,
            n2,
        })
    }

    /// Every representable basis vector with its amplitude, in storage order.
    pub fn components(&self) -> Vec<(BasisLabel, Complex64)> {
        let mut out = Vec::with_capacity(2 * self.blocks() + 1);
        for (n, amp) in self.e_amp.iter().enumerate() {
            out.push((self.excited_label(n), *amp));
        }
        for (n, amp) in self.g_amp.iter().enumerate() {
            if let Some(label) = self.ground_label(n) {
                out.push((label, *amp));
            }
        }
        if let Some(label) = self.floor_label() {
            out.push((label, self.ground_floor));
        }
        out
    }

    /// Checks that unrepresentable slots hold no amplitude and that the vectors
    /// have matching lengths.
    pub fn validate(&self) -> Result<()> {
        if self.e_amp.len() != self.g_amp.len() || self.e_amp.is_empty() {
            return Err(Error::InvalidArgument("excited and ground amplitude vectors differ in length".into()));
        }
        if self.q == 0 && self.g_amp[0] != ZERO {
            return Err(Error::InvalidArgument("q = 0 has no |g, 1, -1> component".into()));
        }
        if self.q < 2 && self.ground_floor != ZERO {
            return Err(Error::InvalidArgument("floor state |g, 0, q-2> needs q >= 2".into()));
        }
        Ok(())
    }

    /// Euclidean distance between two states of the same shape.
    pub fn distance(&self, other: &JointState) -> f64 {
        assert_eq!(self.q, other.q, "states live in different charge sectors");
        assert_eq!(self.blocks(), other.blocks(), "states have different truncations");
        let d: f64 = self
            .e_amp
            .iter()
            .zip(&other.e_amp)
            .chain(self.g_amp.iter().zip(&other.g_amp))
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (d + (self.ground_floor - other.ground_floor).norm_sqr()).sqrt()
    }
}

/// Block frequency `sqrt((n+1)(n+q))` of the `n`-th 2x2 block.
pub fn block_frequency(q: u32, n: usize) -> f64 {
    ((n as f64 + 1.0) * (n as f64 + q as f64)).sqrt()
}

/// Applies `exp(-i alpha H0)` block by block.
pub fn evolve_by_area(initial: &JointState, alpha: f64) -> JointState {
    let mut out = initial.clone();
    for n in 0..initial.blocks() {
        let theta = alpha * block_frequency(initial.q, n);
        let (s, c) = theta.sin_cos();
        let e = initial.e_amp[n];
        let g = initial.g_amp[n];
        let mis = Complex64::new(0.0, -s);
        out.e_amp[n] = c * e + mis * g;
        out.g_amp[n] = mis * e + c * g;
    }
    out
}

/// Closed-form propagation to time `t` under `profile`.
pub fn evolve_analytic(initial: &JointState, profile: &CouplingProfile, t: f64) -> Result<JointState> {
    Ok(evolve_by_area(initial, pulse_area(profile, t)?))
}

/// `H0` on an explicit basis, assembled from ladder-operator matrix elements.
#[derive(Debug, Clone)]
pub struct DenseGenerator {
    pub q: u32,
    pub basis: Vec<BasisLabel>,
    /// Non-zero entries `(row, col, value)`; real symmetric.
    pub entries: Vec<(usize, usize, f64)>,
}

impl DenseGenerator {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let mut m = DMatrix::from_element(self.dim(), self.dim(), ZERO);
        for &(r, c, v) in &self.entries {
            m[(r, c)] += Complex64::new(v, 0.0);
        }
        m
    }

    pub fn to_dense_real(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for &(r, c, v) in &self.entries {
            m[(r, c)] += v;
        }
        m
    }

    /// `y = scale * H0 x`.
    fn apply(&self, x: &[Complex64], scale: Complex64, y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = ZERO);
        for &(r, c, v) in &self.entries {
            y[r] += scale * v * x[c];
        }
    }

    /// Largest row sum of `|H0|`, an upper bound on its spectral radius.
    pub fn norm_bound(&self) -> f64 {
        let mut rows = vec![0.0; self.dim()];
        for &(r, _, v) in &self.entries {
            rows[r] += v.abs();
        }
        rows.into_iter().fold(0.0, f64::max)
    }

    pub fn to_vector(&self, state: &JointState) -> DVector<Complex64> {
        let lookup: HashMap<BasisLabel, Complex64> = state.components().into_iter().collect();
        DVector::from_iterator(
            self.dim(),
            self.basis.iter().map(|label| lookup.get(label).copied().unwrap_or(ZERO)),
        )
    }

    /// Inverse of [`to_vector`](Self::to_vector) for a state of the given shape.
    pub fn from_vector(&self, template: &JointState, v: &[Complex64]) -> JointState {
        let index: HashMap<BasisLabel, usize> = self.basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
        let mut out = template.clone();
        for n in 0..template.blocks() {
            out.e_amp[n] = v[index[&template.excited_label(n)]];
            out.g_amp[n] = template.ground_label(n).map(|l| v[index[&l]]).unwrap_or(ZERO);
        }
        out.ground_floor = template.floor_label().map(|l| v[index[&l]]).unwrap_or(ZERO);
        out
    }
}

/// Builds `H0` on the joint basis of charge `q` with `n_max + 1` blocks.
///
/// Each basis vector is acted on by `a1^dag a2 sigma_-` and `a2^dag a1 sigma_+`
/// using the bosonic matrix elements `a|n> = sqrt(n)|n-1>`,
/// `a^dag|n> = sqrt(n+1)|n+1>`.
pub fn build_dense_generator(q: u32, n_max: usize) -> DenseGenerator {
    let shape = JointState {
        q,
        e_amp: vec![ZERO; n_max + 1],
        g_amp: vec![ZERO; n_max + 1],
        ground_floor: ZERO,
    };
    let basis: Vec<BasisLabel> = shape.components().into_iter().map(|(l, _)| l).collect();
    let index: HashMap<BasisLabel, usize> = basis.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let mut entries = Vec::new();
    for (col, label) in basis.iter().enumerate() {
        let image = match label.internal {
            // a1^dag a2 sigma_- |e, n1, n2>
            Internal::Excited if label.n2 > 0 => Some((
                BasisLabel {
                    internal: Internal::Ground,
                    n1: label.n1 + 1,
                    n2: label.n2 - 1,
                },
                ((label.n1 + 1) as f64).sqrt() * (label.n2 as f64).sqrt(),
            )),
            // a2^dag a1 sigma_+ |g, n1, n2>
            Internal::Ground if label.n1 > 0 => Some((
                BasisLabel {
                    internal: Internal::Excited,
                    n1: label.n1 - 1,
                    n2: label.n2 + 1,
                },
                (label.n1 as f64).sqrt() * ((label.n2 + 1) as f64).sqrt(),
            )),
            _ => None,
        };
        if let Some((target, value)) = image {
            match index.get(&target) {
                Some(&row) => entries.push((row, col, value)),
                None => debug_assert!(false, "H0 maps {label:?} outside the invariant subspace"),
            }
        }
    }
    DenseGenerator { q, basis, entries }
}

/// Largest tolerated deviation of the norm during oracle integration.
pub const NORM_DRIFT_LIMIT: f64 = 1e-7;

/// Largest tolerated disagreement between the two oracle paths.
pub const ORACLE_AGREEMENT: f64 = 1e-9;

/// Minimum number of integration steps per unit of pulse area.
pub const MIN_STEPS_PER_AREA: usize = 1000;

/// Step count per unit pulse area with `|lambda| h Omega_max <= 5e-3`; over a
/// pulse area of 30 the RK4 error stays near `5e-11` for `N <= 40`.
pub fn recommended_steps(q: u32, n_max: usize) -> usize {
    let omega = block_frequency(q, n_max).max(block_frequency(q + 2, n_max));
    MIN_STEPS_PER_AREA.max((omega / 5e-3).ceil() as usize)
}

/// Integrates `i d psi/dt = lambda(t) H0 psi` with classic fourth-order
/// Runge-Kutta, reporting the state at each of the sorted `times`.
///
/// The step is chosen so that `|lambda| h <= 1 / steps_per_area` over every step.
pub fn integrate_rk4(
    generator: &DenseGenerator,
    initial: &JointState,
    profile: &CouplingProfile,
    times: &[f64],
    steps_per_area: usize,
) -> Result<Vec<JointState>> {
    profile.validate()?;
    if steps_per_area < MIN_STEPS_PER_AREA {
        return Err(Error::InvalidArgument(format!(
            "oracle needs at least {MIN_STEPS_PER_AREA} steps per unit area, got {steps_per_area}"
        )));
    }
    if times.iter().any(|t| !(*t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("oracle times must be non-negative and sorted".into()));
    }
    let dim = generator.dim();
    let mut psi: Vec<Complex64> = generator.to_vector(initial).iter().copied().collect();
    let start_norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    let area_step = 1.0 / steps_per_area as f64;
    let minus_i = Complex64::new(0.0, -1.0);

    let mut k1 = vec![ZERO; dim];
    let mut k2 = vec![ZERO; dim];
    let mut k3 = vec![ZERO; dim];
    let mut k4 = vec![ZERO; dim];
    let mut tmp = vec![ZERO; dim];

    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            // grow h only while the coupling bound over [t, t+h] allows it
            let mut h = target - t;
            loop {
                let bound = profile.coupling_bound(t, t + h)?;
                if bound * h <= area_step || bound == 0.0 {
                    break;
                }
                h = (area_step / bound).min(0.5 * h);
            }
            if target - t - h < 1e-12 * target.max(1.0) {
                h = target - t;
            }
            // Use the step actually representable between t and t + h, so the
            // steps sum to t exactly instead of drifting over ~1e6 additions.
            let t_next = t + h;
            let h = t_next - t;
            let l0 = profile.coupling(t)?;
            let lm = profile.coupling(t + 0.5 * h)?;
            let l1 = profile.coupling(t + h)?;

            generator.apply(&psi, minus_i * l0, &mut k1);
            for i in 0..dim {
                tmp[i] = psi[i] + 0.5 * h * k1[i];
            }
            generator.apply(&tmp, minus_i * lm, &mut k2);
            for i in 0..dim {
                tmp[i] = psi[i] + 0.5 * h * k2[i];
            }
            generator.apply(&tmp, minus_i * lm, &mut k3);
            for i in 0..dim {
                tmp[i] = psi[i] + h * k3[i];
            }
            generator.apply(&tmp, minus_i * l1, &mut k4);
            for i in 0..dim {
                psi[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t = t_next;

            let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            let drift = (norm - start_norm).abs();
            if drift > NORM_DRIFT_LIMIT {
                return Err(Error::NormDrift {
                    drift,
                    limit: NORM_DRIFT_LIMIT,
                    t,
                });
            }
        }
        out.push(generator.from_vector(initial, &psi));
    }
    Ok(out)
}

/// `exp(A)` by scaling and squaring a truncated Taylor series.
pub fn expm(a: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let n = a.nrows();
    let norm1 = (0..n)
        .map(|c| a.column(c).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > 0.5 { (norm1 / 0.5).log2().ceil() as i32 } else { 0 };
    let scaled = a / Complex64::new(2f64.powi(squarings), 0.0);

    let identity = DMatrix::<Complex64>::identity(n, n);
    let mut result = identity.clone();
    let mut term = identity;
    for k in 1..=30 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
        let size = term.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if size < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// Second oracle path: `exp(-i alpha H0) psi` with a dense matrix exponential.
pub fn evolve_expm(generator: &DenseGenerator, initial: &JointState, alpha: f64) -> JointState {
    let h = generator.to_dense();
    let u = expm(&(h * Complex64::new(0.0, -alpha)));
    let v = u * generator.to_vector(initial);
    generator.from_vector(initial, v.as_slice())
}

/// Both oracle results at one time.
#[derive(Debug, Clone)]
pub struct OracleSample {
    pub t: f64,
    pub alpha: f64,
    pub rk4: JointState,
    pub expm: JointState,
    pub disagreement: f64,
}

/// Runs both oracle paths at each of the sorted `times`, failing if they ever
/// differ by more than [`ORACLE_AGREEMENT`].
pub fn oracle_samples(
    initial: &JointState,
    profile: &CouplingProfile,
    times: &[f64],
    steps_per_area: usize,
) -> Result<Vec<OracleSample>> {
    initial.validate()?;
    let generator = build_dense_generator(initial.q, initial.blocks() - 1);
    let integrated = integrate_rk4(&generator, initial, profile, times, steps_per_area)?;
    let mut out = Vec::with_capacity(times.len());
    for (&t, rk4) in times.iter().zip(integrated) {
        let alpha = pulse_area(profile, t)?;
        let expm = evolve_expm(&generator, initial, alpha);
        let disagreement = rk4.distance(&expm);
        if !(disagreement <= ORACLE_AGREEMENT) {
            return Err(Error::OracleDisagreement {
                difference: disagreement,
                limit: ORACLE_AGREEMENT,
            });
        }
        out.push(OracleSample {
            t,
            alpha,
            rk4,
            expm,
            disagreement,
        });
    }
    Ok(out)
}

/// Brute-force reference propagation. Integrates with RK4 and cross-checks
/// against the dense matrix exponential before returning the integrated state.
pub fn evolve_oracle(initial: &JointState, profile: &CouplingProfile, t: f64, steps_per_area: usize) -> Result<JointState> {
    let mut samples = oracle_samples(initial, profile, &[t], steps_per_area)?;
    Ok(samples.pop().map(|s| s.rk4).expect("one sample requested"))
}

/// Quantities conserved by `H0`, used to certify propagators.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservedQuantities {
    /// Probability of each total quanta number `n1 + n2`.
    pub total_quanta: BTreeMap<usize, f64>,
    /// `n2 - [excited]` for each block index, `None` for the floor state.
    pub block_charges: Vec<(Option<usize>, i64)>,
    /// True when every member of every block carries the same `n2 - [excited]`.
    pub charge_consistent: bool,
}

/// Distribution of `n1 + n2` and the per-block `n2 - [excited]` check.
pub fn conserved_quantities(state: &JointState) -> ConservedQuantities {
    let mut total_quanta = BTreeMap::new();
    let mut block_charges = Vec::new();
    let mut consistent = true;
    for n in 0..state.blocks() {
        let e = state.excited_label(n);
        let e_charge = e.n2 as i64 - 1;
        *total_quanta.entry(e.n1 + e.n2).or_insert(0.0) += state.e_amp[n].norm_sqr();
        if let Some(g) = state.ground_label(n) {
            *total_quanta.entry(g.n1 + g.n2).or_insert(0.0) += state.g_amp[n].norm_sqr();
            consistent &= g.n2 as i64 == e_charge;
        }
        block_charges.push((Some(n), e_charge));
    }
    if let Some(f) = state.floor_label() {
        *total_quanta.entry(f.n1 + f.n2).or_insert(0.0) += state.ground_floor.norm_sqr();
        block_charges.push((None, f.n2 as i64));
    }
    ConservedQuantities {
        total_quanta,
        block_charges,
        charge_consistent: consistent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{pair_cat, PairCatSpec};
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn cat_state(xi: f64, q: u32, phi: f64) -> JointState {
        let spec = PairCatSpec::new(c(xi, 0.0), q, phi, 1e-12).unwrap();
        JointState::excited(&pair_cat(&spec).unwrap())
    }

    #[test]
    fn pulse_area_closed_forms() {
        assert_eq!(pulse_area(&CouplingProfile::Constant { lambda: 1.0 }, 2.5).unwrap(), 2.5);
        assert_eq!(pulse_area(&CouplingProfile::Sinh { lambda: 1.0, varpi: 1.0 }, 0.0).unwrap(), 0.0);
        let ramp = CouplingProfile::Piecewise {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        };
        assert_eq!(pulse_area(&ramp, 1.0).unwrap(), 0.5);
        assert!((pulse_area(&ramp, 0.5).unwrap() - 0.125).abs() < 1e-15);
        assert!(matches!(pulse_area(&ramp, 1.5), Err(Error::OutOfRange { .. })));
        assert!(pulse_area(&ramp, -0.1).is_err());
    }

    #[test]
    fn sinh_area_matches_quadrature() {
        let p = CouplingProfile::Sinh { lambda: 1.3, varpi: 0.7 };
        let t = 2.4;
        let n = 20_000;
        let h = t / n as f64;
        let simpson: f64 = (0..=n)
            .map(|k| {
                let w = if k == 0 || k == n { 1.0 } else if k % 2 == 1 { 4.0 } else { 2.0 };
                w * p.coupling(k as f64 * h).unwrap()
            })
            .sum::<f64>()
            * h
            / 3.0;
        assert!((pulse_area(&p, t).unwrap() - simpson).abs() < 1e-12);
    }

    #[test]
    fn profile_validation() {
        assert!(CouplingProfile::Constant { lambda: 0.0 }.validate().is_err());
        assert!(CouplingProfile::Sinh { lambda: 1.0, varpi: -1.0 }.validate().is_err());
        let bad = CouplingProfile::Piecewise {
            knots: vec![(0.0, 1.0), (1.0, 1.0), (1.0, 2.0)],
        };
        assert!(bad.validate().is_err());
        let late = CouplingProfile::Piecewise {
            knots: vec![(0.5, 1.0), (1.0, 1.0)],
        };
        assert!(late.validate().is_err());
    }

    #[test]
    fn stationary_vacuum() {
        let s = JointState::excited(&LadderState::fock(0, 0, 16));
        let out = evolve_analytic(&s, &CouplingProfile::Constant { lambda: 1.0 }, 3.7).unwrap();
        assert_eq!(out, s);
    }

    #[test]
    fn single_block_rabi() {
        let s = JointState::excited(&LadderState::fock(1, 0, 16));
        for &t in &[0.3, 1.0, 2.2] {
            let out = evolve_analytic(&s, &CouplingProfile::Constant { lambda: 1.0 }, t).unwrap();
            assert!((out.e_amp[0] - c(t.cos(), 0.0)).norm() < 1e-15);
            assert!((out.g_amp[0] - c(0.0, -t.sin())).norm() < 1e-15);
        }
    }

    #[test]
    fn generator_small_cases() {
        let g = build_dense_generator(1, 0);
        assert_eq!(g.dim(), 2);
        let m = g.to_dense_real();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));

        let g = build_dense_generator(0, 5);
        let m = g.to_dense_real();
        let vac = g
            .basis
            .iter()
            .position(|l| *l == BasisLabel { internal: Internal::Excited, n1: 0, n2: 0 })
            .unwrap();
        assert!(m.row(vac).iter().all(|v| *v == 0.0));
        assert!(m.column(vac).iter().all(|v| *v == 0.0));
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn generator_spectrum() {
        let g = build_dense_generator(2, 3);
        let mut eig: Vec<f64> = g.to_dense_real().symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want: Vec<f64> = (0..4usize)
            .flat_map(|n| {
                let w = (((n + 1) * (n + 2)) as f64).sqrt();
                [w, -w]
            })
            .collect();
        // the floor state |g, 0, 0> contributes a zero eigenvalue
        want.push(0.0);
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(eig.len(), want.len());
        for (a, b) in eig.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn oracle_quarter_period() {
        let s = JointState::excited(&LadderState::fock(1, 0, 0));
        let p = CouplingProfile::Constant { lambda: 1.0 };
        let out = evolve_oracle(&s, &p, PI / 2.0, 20_000).unwrap();
        assert!(out.e_amp[0].norm() < 1e-10);
        assert!((out.g_amp[0] - c(0.0, -1.0)).norm() < 1e-10);
    }

    #[test]
    fn oracle_identity_at_zero() {
        let s = cat_state(2.0, 1, PI / 2.0);
        let out = evolve_oracle(&s, &CouplingProfile::Constant { lambda: 1.0 }, 0.0, 1000).unwrap();
        assert_eq!(out, s);
        let e = evolve_expm(&build_dense_generator(s.q, s.blocks() - 1), &s, 0.0);
        assert!(e.distance(&s) < 1e-15);
    }

    #[test]
    fn oracle_rejects_coarse_steps() {
        let s = cat_state(2.0, 1, 0.0);
        let p = CouplingProfile::Constant { lambda: 1.0 };
        assert!(matches!(evolve_oracle(&s, &p, 1.0, 10), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn oracle_paths_agree_for_sinh() {
        let s = cat_state(10.0, 1, PI / 2.0);
        let p = CouplingProfile::Sinh { lambda: 1.0, varpi: 0.5 };
        let steps = recommended_steps(s.q, s.blocks() - 1);
        let samples = oracle_samples(&s, &p, &[2.0], steps).unwrap();
        assert!(samples[0].disagreement < 1e-9);
        let analytic = evolve_analytic(&s, &p, 2.0).unwrap();
        assert!(analytic.distance(&samples[0].rk4) < 1e-8);
    }

    #[test]
    fn analytic_matches_oracle_for_cat() {
        let s = cat_state(10.0, 1, PI / 2.0);
        let p = CouplingProfile::Constant { lambda: 1.0 };
        let steps = recommended_steps(s.q, s.blocks() - 1);
        let times = [0.1, 1.0, 5.0];
        for sample in oracle_samples(&s, &p, &times, steps).unwrap() {
            let analytic = evolve_analytic(&s, &p, sample.t).unwrap();
            assert!(analytic.distance(&sample.rk4) < 1e-8, "t = {}", sample.t);
        }
    }

    #[test]
    fn ground_start_uses_the_shifted_sector() {
        let ladder = crate::fockspace::pair_coherent(c(1.5, 0.0), 1, 20);
        let s = JointState::ground(&ladder);
        assert_eq!(s.q, 3);
        assert_eq!(s.ground_floor, ladder.coeffs[0]);
        assert_eq!(s.floor_label(), Some(BasisLabel { internal: Internal::Ground, n1: 0, n2: 1 }));
        // |g, n, n+1> sits in block n-1
        assert_eq!(s.ground_label(2), Some(BasisLabel { internal: Internal::Ground, n1: 3, n2: 4 }));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-14);
        let p = CouplingProfile::Constant { lambda: 1.0 };
        let steps = recommended_steps(s.q, s.blocks() - 1);
        let oracle = evolve_oracle(&s, &p, 1.3, steps).unwrap();
        let analytic = evolve_analytic(&s, &p, 1.3).unwrap();
        assert!(analytic.distance(&oracle) < 1e-8);
        assert_eq!(analytic.ground_floor, s.ground_floor);
    }

    #[test]
    fn conserved_quantities_are_preserved() {
        let s = cat_state(5.0, 2, 0.3);
        let before = conserved_quantities(&s);
        assert!(before.charge_consistent);
        let after = evolve_analytic(&s, &CouplingProfile::Constant { lambda: 1.0 }, 7.3).unwrap();
        let after = conserved_quantities(&after);
        for (k, v) in &before.total_quanta {
            assert!((v - after.total_quanta[k]).abs() < 1e-14);
        }

        let fock = JointState::excited(&LadderState::fock(3, 2, 10));
        let cq = conserved_quantities(&fock);
        assert_eq!(cq.block_charges[2], (Some(2), 2 + 3 - 1));
    }

    #[test]
    fn invalid_joint_states() {
        let mut s = JointState::excited(&LadderState::fock(0, 0, 4));
        s.g_amp[0] = c(1.0, 0.0);
        assert!(s.validate().is_err());
        let mut s = JointState::excited(&LadderState::fock(1, 0, 4));
        s.ground_floor = c(1.0, 0.0);
        assert!(s.validate().is_err());
    }

    #[test]
    fn expm_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[ZERO, c(0.0, -3.0), c(0.0, -3.0), ZERO]);
        let u = expm(&a);
        assert!((u[(0, 0)] - c(3f64.cos(), 0.0)).norm() < 1e-14);
        assert!((u[(0, 1)] - c(0.0, -(3f64.sin()))).norm() < 1e-14);
    }
}
