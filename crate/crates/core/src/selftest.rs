//! Built-in consistency checks, runnable from the command line.

use std::f64::consts::PI;
use std::time::Instant;

use num_complex::Complex64;

use crate::dynamics::{evolve_by_area, oracle_samples, recommended_steps, CouplingProfile, JointState};
use crate::error::{Error, Result};
use crate::fockspace::{
    apply_pair_annihilation, cat_normalization_closed_form, choose_truncation, pair_cat_truncated, pair_coherent,
    PairCatSpec,
};
use crate::observables::{field_density_eigenvalues, reduced_atom, von_neumann_entropy, LogBase};
use crate::quadrature::{quadrature_distribution, GridSpec};
use crate::runner::{presets, run, with_threads};
use crate::specfun::bessel_i;

pub struct Check {
    pub name: &'static str,
    pub description: &'static str,
    /// Part of the quick subset.
    pub quick: bool,
    run: fn(bool) -> Result<String>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "bessel-recurrence",
        description: "I_{q-1}(x) - I_{q+1}(x) = (2q/x) I_q(x)",
        quick: true,
        run: bessel_recurrence,
    },
    Check {
        name: "normalization",
        description: "closed-form cat normalization matches the summed ladder",
        quick: true,
        run: normalization,
    },
    Check {
        name: "eigenstate",
        description: "pair coherent states are eigenstates of ab",
        quick: true,
        run: eigenstate,
    },
    Check {
        name: "oracle",
        description: "block propagator matches RK4 and dense expm on the full generator",
        quick: true,
        run: oracle,
    },
    Check {
        name: "entropy-bounds",
        description: "0 <= S <= ln 2 and S_atom = S_field along a run",
        quick: true,
        run: entropy_bounds,
    },
    Check {
        name: "rank",
        description: "dense field density matrix has rank <= 2 with the ion's spectrum",
        quick: true,
        run: rank,
    },
    Check {
        name: "quadrature-norm",
        description: "quadrature distributions integrate to one",
        quick: false,
        run: quadrature_norm,
    },
    Check {
        name: "determinism",
        description: "time series are identical for 1 and 4 threads",
        quick: false,
        run: determinism,
    },
];

fn fail(message: String) -> Result<String> {
    Err(Error::InvalidArgument(message))
}

fn bessel_recurrence(_quick: bool) -> Result<String> {
    let mut worst = 0.0f64;
    for q in 1..12u32 {
        for &x in &[0.1, 1.0, 5.0, 20.0, 60.0] {
            let lhs = bessel_i(q - 1, x)? - bessel_i(q + 1, x)?;
            let rhs = 2.0 * q as f64 / x * bessel_i(q, x)?;
            worst = worst.max(((lhs - rhs) / rhs).abs());
        }
    }
    if worst > 1e-12 {
        return fail(format!("relative residual {worst:e}"));
    }
    Ok(format!("max relative residual {worst:.1e}"))
}

fn normalization(_quick: bool) -> Result<String> {
    let mut worst = 0.0f64;
    for q in [0u32, 1, 3] {
        for xi in [0.5, 2.0, 6.0] {
            for phi in [0.0, PI / 2.0, PI] {
                let xi = Complex64::new(xi, 0.0);
                let closed = cat_normalization_closed_form(xi, q, phi)?;
                let n_max = choose_truncation(xi, q, 1e-16)?.n_max;
                let plus = pair_coherent(xi, q, n_max);
                let minus = pair_coherent(-xi, q, n_max);
                let phase = Complex64::from_polar(1.0, phi);
                let raw: f64 = plus
                    .coeffs
                    .iter()
                    .zip(&minus.coeffs)
                    .map(|(a, b)| (a + phase * b).norm_sqr())
                    .sum();
                // pair_coherent is normalized over the window; the tail is below 1e-16.
                let summed = 1.0 / raw.sqrt();
                worst = worst.max((closed - summed).abs() / summed);
            }
        }
    }
    if worst > 1e-10 {
        return fail(format!("relative mismatch {worst:e}"));
    }
    Ok(format!("max relative mismatch {worst:.1e}"))
}

fn eigenstate(_quick: bool) -> Result<String> {
    let mut worst = 0.0f64;
    for q in [0u32, 2, 5] {
        for xi in [1.0, 5.0] {
            let xi = Complex64::new(xi, 0.3 * xi);
            let n_max = choose_truncation(xi, q, 1e-20)?.n_max;
            let state = pair_coherent(xi, q, n_max);
            let lowered = apply_pair_annihilation(&state);
            let residual = lowered.distance(&state.scaled(xi));
            worst = worst.max(residual / (1.0 + xi.norm()));
        }
    }
    if worst > 1e-8 {
        return fail(format!("scaled residual {worst:e}"));
    }
    Ok(format!("max |ab psi - xi psi| / (1 + |xi|) = {worst:.1e}"))
}

fn oracle(quick: bool) -> Result<String> {
    let (xi, t_max) = if quick { (2.0, 3.0) } else { (10.0, 10.0) };
    let spec = PairCatSpec::new(Complex64::new(xi, 0.0), 1, PI / 2.0, 1e-12)?;
    let (ladder, truncation) = pair_cat_truncated(&spec)?;
    let initial = JointState::excited(&ladder);
    let profile = CouplingProfile::Constant { lambda: 1.0 };
    let times: Vec<f64> = (1..=5).map(|k| t_max * k as f64 / 5.0).collect();
    let steps = recommended_steps(initial.q, truncation.n_max);
    let samples = oracle_samples(&initial, &profile, &times, steps)?;
    let mut worst = 0.0f64;
    for s in &samples {
        let analytic = evolve_by_area(&initial, s.alpha);
        worst = worst.max(analytic.distance(&s.rk4)).max(analytic.distance(&s.expm));
    }
    if worst > 1e-9 {
        return fail(format!("analytic and oracle differ by {worst:e}"));
    }
    Ok(format!("max distance {worst:.1e} (xi = {xi}, N = {})", truncation.n_max))
}

fn fig5a(samples: usize) -> Result<crate::runner::config::ExperimentConfig> {
    let mut c = presets::find("fig5a")?.config()?;
    c.time_axis.samples = samples;
    Ok(c)
}

fn entropy_bounds(quick: bool) -> Result<String> {
    let series = run(&fig5a(if quick { 301 } else { 3001 })?)?;
    let ln2 = 2f64.ln();
    let mut gap = 0.0f64;
    for s in &series.samples {
        if !(s.s_vn_atom >= -1e-12 && s.s_vn_atom <= ln2 + 1e-12) {
            return fail(format!("S = {} at lambda t = {}", s.s_vn_atom, s.lambda_t));
        }
        if !(s.s_lin_2 >= -1e-12 && s.s_lin_2 <= 0.5 + 1e-12) {
            return fail(format!("S_L = {} at lambda t = {}", s.s_lin_2, s.lambda_t));
        }
        gap = gap.max((s.s_vn_atom - s.s_vn_field).abs());
    }
    if gap > 1e-9 {
        return fail(format!("|S_atom - S_field| = {gap:e}"));
    }
    Ok(format!("{} samples, max |S_atom - S_field| = {gap:.1e}", series.samples.len()))
}

fn rank(_quick: bool) -> Result<String> {
    let spec = PairCatSpec::new(Complex64::new(3.0, 0.0), 1, PI / 2.0, 1e-12)?;
    let (ladder, _) = pair_cat_truncated(&spec)?;
    let initial = JointState::excited(&ladder);
    let mut worst = 0.0f64;
    for alpha in [0.3, 1.7, 4.2] {
        let state = evolve_by_area(&initial, alpha);
        let mut eig = field_density_eigenvalues(&state);
        eig.sort_by(|a, b| b.total_cmp(a));
        let (p, m) = reduced_atom(&state).eigenvalues();
        worst = worst.max((eig[0] - p).abs()).max((eig[1] - m).abs());
        worst = worst.max(eig[2..].iter().fold(0.0f64, |acc, v| acc.max(v.abs())));
        let s = von_neumann_entropy(&reduced_atom(&state), LogBase::Natural);
        if !(s.is_finite()) {
            return fail(format!("entropy not finite at alpha = {alpha}"));
        }
    }
    if worst > 1e-10 {
        return fail(format!("spectrum mismatch {worst:e}"));
    }
    Ok(format!("max eigenvalue mismatch {worst:.1e}"))
}

fn quadrature_norm(_quick: bool) -> Result<String> {
    let grid = GridSpec::default();
    let mut worst = 0.0f64;
    for name in ["fig1b", "fig2c", "fig3c"] {
        let (spec, _) = presets::find(name)?.config()?.state.to_spec()?;
        let (ladder, _) = pair_cat_truncated(&spec)?;
        let raster = quadrature_distribution(&ladder, &grid)?;
        worst = worst.max((raster.norm_estimate - 1.0).abs());
    }
    if worst > 1e-3 {
        return fail(format!("norm error {worst:e}"));
    }
    Ok(format!("max |norm - 1| = {worst:.1e}"))
}

fn determinism(_quick: bool) -> Result<String> {
    let c = fig5a(601)?;
    let one = with_threads(Some(1), || run(&c))??;
    let four = with_threads(Some(4), || run(&c))??;
    if one.samples != four.samples {
        return fail("series differ between thread counts".into());
    }
    Ok(format!("{} samples bitwise identical", one.samples.len()))
}

/// Runs the selected checks in order. Failures are reported, not propagated.
pub fn run_checks(quick: bool) -> Vec<Outcome> {
    CHECKS
        .iter()
        .filter(|c| !quick || c.quick)
        .map(|c| {
            let started = Instant::now();
            let result = (c.run)(quick);
            let seconds = started.elapsed().as_secs_f64();
            match result {
                Ok(detail) => Outcome {
                    name: c.name,
                    passed: true,
                    detail,
                    seconds,
                },
                Err(e) => Outcome {
                    name: c.name,
                    passed: false,
                    detail: match e {
                        Error::InvalidArgument(message) => message,
                        other => other.to_string(),
                    },
                    seconds,
                },
            }
        })
        .collect()
}
