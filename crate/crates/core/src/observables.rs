//! Atomic inversion, reduced densities and entanglement entropies.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Internal, JointState};
use crate::error::{Error, Result};

/// Eigenvalues within this distance of `[0, 1]` are clamped onto it.
pub const EIGEN_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Natural,
    Two,
}

impl LogBase {
    fn ln_scale(self) -> f64 {
        match self {
            LogBase::Natural => 1.0,
            LogBase::Two => std::f64::consts::LN_2,
        }
    }
}

/// Which population difference is reported as the inversion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignConvention {
    /// `P_e - P_g`, so a fully excited ion reads `+1`.
    #[default]
    ExcitedMinusGround,
    GroundMinusExcited,
}

impl SignConvention {
    pub fn apply(self, excited_minus_ground: f64) -> f64 {
        match self {
            SignConvention::ExcitedMinusGround => excited_minus_ground,
            SignConvention::GroundMinusExcited => -excited_minus_ground,
        }
    }
}

/// Reduced 2x2 density matrix of the ion, in the `(e, g)` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitDensity {
    pub ee: f64,
    pub gg: f64,
    /// `<e| rho |g>`.
    pub eg: Complex64,
}

impl QubitDensity {
    pub fn trace(&self) -> f64 {
        self.ee + self.gg
    }

    /// Eigenvalues `(larger, smaller)`. The smaller one comes from
    /// `det / larger` so it keeps full relative precision near zero.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let tr = self.trace();
        let diff = self.ee - self.gg;
        let disc = (diff * diff + 4.0 * self.eg.norm_sqr()).sqrt();
        let plus = 0.5 * (tr + disc);
        let det = self.ee * self.gg - self.eg.norm_sqr();
        let minus = if plus > 0.0 { det / plus } else { 0.5 * (tr - disc) };
        (plus, minus)
    }

    fn clamped_eigenvalues(&self) -> (f64, f64) {
        let (p, m) = self.eigenvalues();
        (p.clamp(0.0, 1.0), m.clamp(0.0, 1.0))
    }

    pub fn is_valid(&self) -> bool {
        let (p, m) = self.eigenvalues();
        (self.trace() - 1.0).abs() <= 1e-12 && m >= -EIGEN_CLAMP && p <= 1.0 + EIGEN_CLAMP
    }
}

/// `W = P_e - P_g`.
pub fn atomic_inversion(state: &JointState) -> f64 {
    let rho = reduced_atom(state);
    rho.ee - rho.gg
}

/// Partial trace over the vibrational modes.
///
/// The coherence pairs excited and ground components that share a vibrational
/// label. Within one charge sector they never do, so it comes out zero, but it
/// is computed from the labels rather than assumed.
pub fn reduced_atom(state: &JointState) -> QubitDensity {
    let mut ee = 0.0;
    let mut gg = 0.0;
    let mut ground: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    let comps = state.components();
    for (label, amp) in &comps {
        if label.internal == Internal::Ground {
            gg += amp.norm_sqr();
            ground.insert((label.n1, label.n2), *amp);
        }
    }
    let mut eg = Complex64::new(0.0, 0.0);
    for (label, amp) in &comps {
        if label.internal == Internal::Excited {
            ee += amp.norm_sqr();
            if let Some(g) = ground.get(&(label.n1, label.n2)) {
                eg += amp * g.conj();
            }
        }
    }
    QubitDensity { ee, gg, eg }
}

/// Entropy of the spectrum `(1 +- x) / 2`. Near maximal mixing the value is
/// `ln 2 - g(x)` with `g` summed as a series, so it stays monotone in `x` down
/// to eigenvalue differences far below one ulp of `ln 2`.
fn entropy_from_gap(x: f64, spectrum: (f64, f64), base: LogBase) -> f64 {
    let s = if x <= 0.5 {
        // g(x) = sum_k x^(2k) / (2k (2k - 1))
        let x2 = x * x;
        let mut power = x2;
        let mut g = 0.0;
        let mut k = 1.0;
        loop {
            let add = power / (2.0 * k * (2.0 * k - 1.0));
            g += add;
            if add <= g * 1e-17 || add == 0.0 {
                break;
            }
            power *= x2;
            k += 1.0;
        }
        std::f64::consts::LN_2 - g
    } else {
        let term = |v: f64| if v > 0.0 { -v * v.ln() } else { 0.0 };
        term(spectrum.0) + term(spectrum.1)
    };
    s / base.ln_scale()
}

/// Trace-normalized eigenvalue gap `(lambda_+ - lambda_-) / Tr rho` in `[0, 1]`,
/// and the clamped normalized eigenvalues.
fn normalized_spectrum(rho: &QubitDensity) -> (f64, (f64, f64)) {
    let tr = rho.trace();
    if !(tr > 0.0) {
        return (1.0, (1.0, 0.0));
    }
    let (p, m) = rho.clamped_eigenvalues();
    let diff = rho.ee - rho.gg;
    let gap = (diff * diff + 4.0 * rho.eg.norm_sqr()).sqrt() / tr;
    (gap.clamp(0.0, 1.0), (p / tr, m / tr))
}

/// `-sum lambda log lambda` over the clamped spectrum, `0 log 0 = 0`.
pub fn von_neumann_entropy(rho: &QubitDensity, base: LogBase) -> f64 {
    let (x, spectrum) = normalized_spectrum(rho);
    entropy_from_gap(x, spectrum, base)
}

/// `1 - Tr rho^n` for `n >= 2`. Bounded by `1 - 2^(1-n)` for a qubit.
///
/// Evaluated as `1 - 2^(1-n) sum_{k even} C(n, k) x^k`, a polynomial in the
/// squared gap, so it orders states exactly as [`von_neumann_entropy`] does.
pub fn linear_entropy(rho: &QubitDensity, order: u32) -> Result<f64> {
    if order < 2 {
        return Err(Error::InvalidOrder(order));
    }
    let (x, (p, m)) = normalized_spectrum(rho);
    if order > 64 {
        let n = order as i32;
        return Ok(1.0 - p.powi(n) - m.powi(n));
    }
    let n = order as f64;
    let x2 = x * x;
    let mut binom = 1.0;
    let mut power = 1.0;
    let mut sum = 1.0;
    let mut k = 0.0;
    while k + 2.0 <= n {
        binom *= (n - k) * (n - k - 1.0) / ((k + 1.0) * (k + 2.0));
        power *= x2;
        sum += binom * power;
        k += 2.0;
    }
    Ok(1.0 - sum * 2f64.powi(1 - order as i32))
}

/// Spectrum of the reduced field state restricted to its populated support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSpectrum {
    /// Two largest eigenvalues (all others vanish for a pure joint state).
    pub eigenvalues: (f64, f64),
    /// Largest deviation from the ion's reduced spectrum.
    pub mismatch: f64,
}

/// Field-side spectrum from the Gram matrix of the two conditional field
/// vectors `<e|psi>` and `<g|psi>`; their nonzero eigenvalues coincide with
/// those of `Tr_atom |psi><psi|`.
pub fn field_spectrum(state: &JointState) -> FieldSpectrum {
    let mut excited: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    let mut ground: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (label, amp) in state.components() {
        let target = match label.internal {
            Internal::Excited => &mut excited,
            Internal::Ground => &mut ground,
        };
        *target.entry((label.n1, label.n2)).or_insert(Complex64::new(0.0, 0.0)) += amp;
    }
    let ee: f64 = excited.values().map(|a| a.norm_sqr()).sum();
    let gg: f64 = ground.values().map(|a| a.norm_sqr()).sum();
    // <v_g | v_e>
    let overlap: Complex64 = excited
        .iter()
        .filter_map(|(k, e)| ground.get(k).map(|g| g.conj() * e))
        .sum();
    let gram = QubitDensity { ee, gg, eg: overlap };
    let field = gram.eigenvalues();
    let atom = reduced_atom(state).eigenvalues();
    let mismatch = (field.0 - atom.0).abs().max((field.1 - atom.1).abs());
    FieldSpectrum {
        eigenvalues: field,
        mismatch,
    }
}

/// Von Neumann entropy of the vibrational modes (natural log).
pub fn field_entropy(state: &JointState) -> f64 {
    let (p, m) = field_spectrum(state).eigenvalues;
    let gram = QubitDensity {
        ee: p,
        gg: m,
        eg: Complex64::new(0.0, 0.0),
    };
    von_neumann_entropy(&gram, LogBase::Natural)
}

/// Reduced field density matrix on the populated vibrational labels, built
/// densely and diagonalized. Quadratic in the support size; for tests.
pub fn field_density_eigenvalues(state: &JointState) -> Vec<f64> {
    let comps = state.components();
    let mut labels: Vec<(usize, usize)> = comps.iter().map(|(l, _)| (l.n1, l.n2)).collect();
    labels.sort_unstable();
    labels.dedup();
    let index: BTreeMap<(usize, usize), usize> = labels.iter().enumerate().map(|(i, l)| (*l, i)).collect();
    let dim = labels.len();
    let mut per_internal = [vec![Complex64::new(0.0, 0.0); dim], vec![Complex64::new(0.0, 0.0); dim]];
    for (label, amp) in &comps {
        let slot = match label.internal {
            Internal::Excited => 0,
            Internal::Ground => 1,
        };
        per_internal[slot][index[&(label.n1, label.n2)]] += amp;
    }
    let mut rho = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
    for v in &per_internal {
        for i in 0..dim {
            for j in 0..dim {
                rho[(i, j)] += v[i] * v[j].conj();
            }
        }
    }
    let mut eig: Vec<f64> = rho.symmetric_eigen().eigenvalues.iter().copied().collect();
    eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    eig
}
