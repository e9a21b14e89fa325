//! Experiment execution: configuration in, time series or rasters out.

pub mod config;
pub mod export;
pub mod presets;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{evolve_by_area, pulse_area, Internal, JointState, NORM_DRIFT_LIMIT};
use crate::error::{Error, Result};
use crate::fockspace::{pair_cat_truncated, LadderState, Truncation};
use crate::observables::{
    atomic_inversion, field_spectrum, linear_entropy, reduced_atom, von_neumann_entropy, QubitDensity,
};
use crate::quadrature::{quadrature_distribution, GridSpec, Raster};

pub use config::{load_config, ExperimentConfig, SweepParameter};

pub const TOOL_NAME: &str = "paircat";

/// Column order of every time series.
pub const COLUMNS: [&str; 8] = [
    "lambda_t",
    "alpha",
    "inversion",
    "s_vn_atom",
    "s_vn_field",
    "s_lin_2",
    "s_lin_3",
    "norm_error",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub lambda_t: f64,
    pub alpha: f64,
    pub inversion: f64,
    pub s_vn_atom: f64,
    pub s_vn_field: f64,
    pub s_lin_2: f64,
    pub s_lin_3: f64,
    /// `| <psi|psi> - 1 |`.
    pub norm_error: f64,
}

impl Sample {
    pub fn values(&self) -> [f64; 8] {
        [
            self.lambda_t,
            self.alpha,
            self.inversion,
            self.s_vn_atom,
            self.s_vn_field,
            self.s_lin_2,
            self.s_lin_3,
            self.norm_error,
        ]
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    /// Canonical configuration text; feeding it back reproduces the run.
    pub config: String,
    pub n_max: usize,
    pub tail_bound: f64,
    /// Charge sector the evolution runs in (`q + 2` for a ground-state start).
    pub sector_charge: u32,
    pub modes_swapped: bool,
    pub notes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl RunManifest {
    fn new(config: &ExperimentConfig, prepared: &Prepared) -> Self {
        let mut notes = Vec::new();
        if let Some(eta) = config.eta {
            notes.push(format!(
                "eta = {eta} only rescales lambda; results are reported against lambda t and do not depend on it"
            ));
        }
        if prepared.modes_swapped {
            notes.push(format!(
                "q = {} was run as q = {} with the two modes relabelled",
                config.state.q,
                config.state.q.unsigned_abs()
            ));
        }
        let f = config.frequencies;
        if f.omega0.is_some() || f.omega1.is_some() || f.omega2.is_some() {
            notes.push(
                "omega0, omega1, omega2 are recorded only; the resonant interaction-picture coupling does not involve them"
                    .into(),
            );
        }
        if config.initial_internal == Internal::Ground {
            notes.push("ion starts in the ground level".into());
        }
        RunManifest {
            tool: TOOL_NAME.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config: config.to_config_text(),
            n_max: prepared.truncation.n_max,
            tail_bound: prepared.truncation.tail_bound,
            sector_charge: prepared.initial.q,
            modes_swapped: prepared.modes_swapped,
            notes,
            wall_time_s: None,
        }
    }

    /// Same manifest without the timing, for byte-stable outputs.
    pub fn without_timing(&self) -> RunManifest {
        RunManifest {
            wall_time_s: None,
            ..self.clone()
        }
    }
}

/// Time series produced by [`run`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub manifest: RunManifest,
    pub samples: Vec<Sample>,
}

/// Initial state of a run.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub ladder: LadderState,
    pub truncation: Truncation,
    pub modes_swapped: bool,
    pub initial: JointState,
}

pub fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    let (spec, modes_swapped) = config.state.to_spec()?;
    let (ladder, truncation) = pair_cat_truncated(&spec)?;
    let initial = JointState::prepare(&ladder, config.initial_internal);
    Ok(Prepared {
        ladder,
        truncation,
        modes_swapped,
        initial,
    })
}

fn observe(config: &ExperimentConfig, state: &JointState, lambda_t: f64, alpha: f64) -> Result<Sample> {
    let norm_error = (state.norm_sqr() - 1.0).abs();
    if norm_error > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift {
            drift: norm_error,
            limit: NORM_DRIFT_LIMIT,
            t: lambda_t,
        });
    }
    let rho = reduced_atom(state);
    let (p, m) = field_spectrum(state).eigenvalues;
    let field = QubitDensity {
        ee: p,
        gg: m,
        eg: Default::default(),
    };
    Ok(Sample {
        lambda_t,
        alpha,
        inversion: config.sign_convention.apply(atomic_inversion(state)),
        s_vn_atom: von_neumann_entropy(&rho, config.log_base),
        s_vn_field: von_neumann_entropy(&field, config.log_base),
        s_lin_2: linear_entropy(&rho, 2)?,
        s_lin_3: linear_entropy(&rho, 3)?,
        norm_error,
    })
}

/// Evaluates the observables on the configured time axis. Samples are
/// independent and computed in parallel; the output does not depend on the
/// thread count.
pub fn run(config: &ExperimentConfig) -> Result<Series> {
    if config.sweep.is_some() {
        return Err(Error::InvalidArgument("configuration describes a sweep; use sweep()".into()));
    }
    let started = Instant::now();
    let prepared = prepare(config)?;
    let lambda_ref = config.profile.reference_lambda();
    let samples = config
        .time_axis
        .scaled_times()
        .into_par_iter()
        .map(|tau| {
            let alpha = pulse_area(&config.profile, tau / lambda_ref)?;
            let state = evolve_by_area(&prepared.initial, alpha);
            observe(config, &state, tau, alpha)
        })
        .collect::<Result<Vec<Sample>>>()?;
    let mut manifest = RunManifest::new(config, &prepared);
    manifest.wall_time_s = Some(started.elapsed().as_secs_f64());
    Ok(Series { manifest, samples })
}

/// Runs `f` on a dedicated pool of `threads` workers (all cores when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::InvalidArgument("thread count must be >= 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::InvalidArgument(format!("cannot start {n} worker threads: {e}"))),
    }
}

/// One point of a parameter sweep.
#[derive(Debug)]
pub struct SweepPoint {
    pub parameter: SweepParameter,
    pub value: f64,
    pub result: Result<Series>,
}

impl SweepPoint {
    /// File-name friendly label such as `xi=10`.
    pub fn label(&self) -> String {
        format!("{}={}", self.parameter.name(), self.value)
    }
}

/// Runs every point of the configured sweep in order. A failing point does
/// not stop the others.
pub fn sweep(config: &ExperimentConfig) -> Result<Vec<SweepPoint>> {
    let sweep = config
        .sweep
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("configuration has no [sweep] section".into()))?;
    Ok(sweep
        .values
        .iter()
        .map(|&value| SweepPoint {
            parameter: sweep.parameter,
            value,
            result: config.with_parameter(sweep.parameter, value).and_then(|c| run(&c)),
        })
        .collect())
}

/// Quadrature distribution of the configured initial cat state.
pub fn quadrature(config: &ExperimentConfig, grid: Option<&GridSpec>) -> Result<Raster> {
    let grid = grid.copied().or(config.grid).unwrap_or_default();
    let prepared = prepare(config)?;
    quadrature_of(&prepared.ladder, prepared.modes_swapped, &grid)
}

/// Quadrature distribution of `ladder`; with `modes_swapped` the folded state
/// is rasterized on the transposed grid and the axes are exchanged back.
pub fn quadrature_of(ladder: &LadderState, modes_swapped: bool, grid: &GridSpec) -> Result<Raster> {
    if !modes_swapped {
        return quadrature_distribution(ladder, grid);
    }
    let flipped = GridSpec {
        x_min: grid.y_min,
        x_max: grid.y_max,
        y_min: grid.x_min,
        y_max: grid.x_max,
        nx: grid.ny,
        ny: grid.nx,
    };
    let raster = quadrature_distribution(ladder, &flipped)?;
    let mut values = vec![0.0; grid.nx * grid.ny];
    for i in 0..grid.nx {
        for j in 0..grid.ny {
            values[i * grid.ny + j] = raster.at(j, i);
        }
    }
    Ok(Raster {
        grid: *grid,
        values,
        norm_estimate: raster.norm_estimate,
    })
}

/// Reads either a configuration file or a manifest written by a previous run.
pub fn load_config_or_manifest(text: &str) -> Result<ExperimentConfig> {
    if text.trim_start().starts_with('{') {
        let manifest: RunManifest = serde_json::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("not a valid run manifest: {e}")))?;
        load_config(&manifest.config)
    } else {
        load_config(text)
    }
}
