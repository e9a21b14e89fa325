//! Experiment configuration files.
//!
//! Flat INI-style text: `[section]` headers, one `key = value` per line, `#`
//! starts a comment. Reals accept plain numbers and multiples of pi such as
//! `pi/2`, `-pi`, `3*pi/4`. Every problem in a file is reported, not only the
//! first one.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dynamics::{CouplingProfile, Internal};
use crate::error::{ConfigIssue, Error, Result};
use crate::fockspace::{PairCatSpec, MAX_TAIL_EPSILON};
use crate::observables::{LogBase, SignConvention};
use crate::quadrature::GridSpec;

pub const DEFAULT_TAIL_EPSILON: f64 = 1e-12;
pub const DEFAULT_VARPI: f64 = 0.5;

/// State parameters as written in a config; `q` may be negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateConfig {
    pub xi: Complex64,
    pub q: i64,
    pub phi: f64,
    pub tail_epsilon: f64,
}

impl StateConfig {
    /// Folds the charge onto `q >= 0`, see [`PairCatSpec::with_signed_charge`].
    pub fn to_spec(&self) -> Result<(PairCatSpec, bool)> {
        let r = PairCatSpec::with_signed_charge(self.xi, self.q, self.phi, self.tail_epsilon)?;
        Ok((r.spec, r.modes_swapped))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    /// End of the axis in units of `1/lambda`.
    pub t_max: f64,
    pub samples: usize,
}

impl TimeAxis {
    /// Scaled times `lambda t`, evenly spaced from 0 to `t_max`.
    pub fn scaled_times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.t_max * k as f64 / last).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outputs {
    pub inversion: bool,
    pub entropies: bool,
    pub quadrature: bool,
}

impl Outputs {
    pub fn wants_series(&self) -> bool {
        self.inversion || self.entropies
    }
}

/// Angular frequencies recorded in the manifest; they drop out of every output.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Frequencies {
    pub omega0: Option<f64>,
    pub omega1: Option<f64>,
    pub omega2: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepParameter {
    Xi,
    Q,
    Phi,
    Varpi,
}

impl SweepParameter {
    pub fn name(self) -> &'static str {
        match self {
            SweepParameter::Xi => "xi",
            SweepParameter::Q => "q",
            SweepParameter::Phi => "phi",
            SweepParameter::Varpi => "varpi",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "xi" => Some(SweepParameter::Xi),
            "q" => Some(SweepParameter::Q),
            "phi" => Some(SweepParameter::Phi),
            "varpi" => Some(SweepParameter::Varpi),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
}

/// A fully validated experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub state: StateConfig,
    pub initial_internal: Internal,
    pub profile: CouplingProfile,
    /// Lamb-Dicke parameter; only rescales `lambda`, which the scaled time absorbs.
    pub eta: Option<f64>,
    pub frequencies: Frequencies,
    pub time_axis: TimeAxis,
    pub outputs: Outputs,
    pub grid: Option<GridSpec>,
    pub sweep: Option<Sweep>,
    pub log_base: LogBase,
    pub sign_convention: SignConvention,
}

impl ExperimentConfig {
    /// A copy with one parameter replaced and the sweep removed.
    pub fn with_parameter(&self, parameter: SweepParameter, value: f64) -> Result<ExperimentConfig> {
        let mut out = self.clone();
        out.sweep = None;
        match parameter {
            SweepParameter::Xi => out.state.xi = Complex64::new(value, self.state.xi.im),
            SweepParameter::Q => {
                if value.fract() != 0.0 {
                    return Err(Error::InvalidArgument(format!("q must be an integer, got {value}")));
                }
                out.state.q = value as i64;
            }
            SweepParameter::Phi => out.state.phi = value,
            SweepParameter::Varpi => match &mut out.profile {
                CouplingProfile::Sinh { varpi, .. } => *varpi = value,
                _ => return Err(Error::InvalidArgument("varpi sweeps need a sinh profile".into())),
            },
        }
        Ok(out)
    }

    /// Canonical text form; parsing it gives back an equal config.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[state]");
        let _ = writeln!(s, "xi = {:?}", self.state.xi.re);
        if self.state.xi.im != 0.0 {
            let _ = writeln!(s, "xi_im = {:?}", self.state.xi.im);
        }
        let _ = writeln!(s, "q = {}", self.state.q);
        let _ = writeln!(s, "phi = {:?}", self.state.phi);
        let _ = writeln!(s, "tail_epsilon = {:?}", self.state.tail_epsilon);
        let _ = writeln!(s, "\n[ion]");
        let _ = writeln!(s, "initial = {}", internal_name(self.initial_internal));
        let _ = writeln!(s, "sign_convention = {}", sign_name(self.sign_convention));
        let _ = writeln!(s, "\n[coupling]");
        match &self.profile {
            CouplingProfile::Constant { lambda } => {
                let _ = writeln!(s, "profile = constant\nlambda = {lambda:?}");
            }
            CouplingProfile::Sinh { lambda, varpi } => {
                let _ = writeln!(s, "profile = sinh\nlambda = {lambda:?}\nvarpi = {varpi:?}");
            }
            CouplingProfile::Piecewise { knots } => {
                let list: Vec<String> = knots.iter().map(|(t, v)| format!("{t:?}:{v:?}")).collect();
                let _ = writeln!(s, "profile = piecewise\nknots = {}", list.join(", "));
            }
        }
        if let Some(eta) = self.eta {
            let _ = writeln!(s, "eta = {eta:?}");
        }
        for (name, value) in [
            ("omega0", self.frequencies.omega0),
            ("omega1", self.frequencies.omega1),
            ("omega2", self.frequencies.omega2),
        ] {
            if let Some(v) = value {
                let _ = writeln!(s, "{name} = {v:?}");
            }
        }
        let _ = writeln!(s, "\n[time]");
        let _ = writeln!(s, "t_max = {:?}", self.time_axis.t_max);
        let _ = writeln!(s, "samples = {}", self.time_axis.samples);
        let _ = writeln!(s, "\n[output]");
        let mut obs = Vec::new();
        if self.outputs.inversion {
            obs.push("inversion");
        }
        if self.outputs.entropies {
            obs.push("entropies");
        }
        if self.outputs.quadrature {
            obs.push("quadrature");
        }
        let _ = writeln!(s, "observables = {}", obs.join(", "));
        let _ = writeln!(
            s,
            "log_base = {}",
            match self.log_base {
                LogBase::Natural => "natural",
                LogBase::Two => "two",
            }
        );
        if let Some(g) = &self.grid {
            let _ = writeln!(s, "\n[grid]");
            let _ = writeln!(s, "x_min = {:?}\nx_max = {:?}", g.x_min, g.x_max);
            let _ = writeln!(s, "y_min = {:?}\ny_max = {:?}", g.y_min, g.y_max);
            let _ = writeln!(s, "nx = {}\nny = {}", g.nx, g.ny);
        }
        if let Some(sweep) = &self.sweep {
            let _ = writeln!(s, "\n[sweep]");
            let _ = writeln!(s, "parameter = {}", sweep.parameter.name());
            let values: Vec<String> = sweep.values.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(s, "values = {}", values.join(", "));
        }
        s
    }
}

fn internal_name(i: Internal) -> &'static str {
    match i {
        Internal::Excited => "excited",
        Internal::Ground => "ground",
    }
}

fn sign_name(s: SignConvention) -> &'static str {
    match s {
        SignConvention::ExcitedMinusGround => "excited_minus_ground",
        SignConvention::GroundMinusExcited => "ground_minus_excited",
    }
}

/// Accepted keys per section.
const SCHEMA: &[(&str, &[&str])] = &[
    ("state", &["xi", "xi_im", "q", "phi", "tail_epsilon"]),
    ("ion", &["initial", "sign_convention"]),
    ("coupling", &["profile", "lambda", "varpi", "knots", "eta", "omega0", "omega1", "omega2"]),
    ("time", &["t_max", "samples"]),
    ("output", &["observables", "log_base"]),
    ("grid", &["x_min", "x_max", "y_min", "y_max", "nx", "ny"]),
    ("sweep", &["parameter", "values"]),
];

/// Parses a real, allowing `pi` multiples: `pi`, `-pi/2`, `3*pi/4`, `0.5pi`.
pub fn parse_real(text: &str) -> Option<f64> {
    let t = text.trim();
    if let Ok(v) = t.parse::<f64>() {
        return Some(v);
    }
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim().parse::<f64>().ok()?),
        None => (t, 1.0),
    };
    let coef_text = num.strip_suffix("pi")?.trim_end().trim_end_matches('*').trim();
    let coef = match coef_text {
        "" | "+" => 1.0,
        "-" => -1.0,
        other => other.parse::<f64>().ok()?,
    };
    Some(coef * PI / den)
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader {
    entries: BTreeMap<(String, String), Entry>,
    sections_seen: HashMap<String, usize>,
    issues: Vec<ConfigIssue>,
}

impl Reader {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn raw(&self, section: &str, key: &str) -> Option<(&str, usize)> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|e| (e.value.as_str(), e.line))
    }

    fn real(&mut self, section: &str, key: &str) -> Option<(f64, usize)> {
        let (text, line) = self.raw(section, key)?;
        let text = text.to_string();
        match parse_real(&text) {
            Some(v) if v.is_finite() => Some((v, line)),
            _ => {
                self.issue(Some(line), format!("{section}.{key}: expected a finite real, got `{text}`"));
                None
            }
        }
    }

    fn integer(&mut self, section: &str, key: &str) -> Option<(i64, usize)> {
        let (text, line) = self.raw(section, key)?;
        let text = text.to_string();
        match text.trim().parse::<i64>() {
            Ok(v) => Some((v, line)),
            Err(_) => {
                self.issue(Some(line), format!("{section}.{key}: expected an integer, got `{text}`"));
                None
            }
        }
    }

    fn word(&self, section: &str, key: &str) -> Option<(String, usize)> {
        self.raw(section, key).map(|(v, l)| (v.trim().to_ascii_lowercase(), l))
    }
}

/// Reads and validates a configuration.
pub fn load_config(text: &str) -> Result<ExperimentConfig> {
    let mut r = Reader {
        entries: BTreeMap::new(),
        sections_seen: HashMap::new(),
        issues: Vec::new(),
    };
    let mut section: Option<String> = None;
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']') else {
                r.issue(Some(line_no), format!("malformed section header `{line}`"));
                section = None;
                continue;
            };
            let name = name.trim().to_ascii_lowercase();
            if !SCHEMA.iter().any(|(s, _)| *s == name) {
                r.issue(Some(line_no), format!("unknown section [{name}]"));
                section = None;
                continue;
            }
            if let Some(first) = r.sections_seen.insert(name.clone(), line_no) {
                r.issue(Some(line_no), format!("section [{name}] repeated (first at line {first})"));
            }
            section = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            r.issue(Some(line_no), format!("expected `key = value`, got `{line}`"));
            continue;
        };
        let key = key.trim().to_ascii_lowercase();
        let Some(sec) = section.clone() else {
            r.issue(Some(line_no), format!("key `{key}` outside of a known section"));
            continue;
        };
        let allowed = SCHEMA.iter().find(|(s, _)| *s == sec).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key.as_str()) {
            r.issue(Some(line_no), format!("unknown key `{key}` in [{sec}]"));
            continue;
        }
        let entry = Entry {
            value: value.trim().to_string(),
            line: line_no,
        };
        if let Some(prev) = r.entries.insert((sec.clone(), key.clone()), entry) {
            r.issue(Some(line_no), format!("{sec}.{key} assigned twice (first at line {})", prev.line));
        }
    }

    // [state]
    let xi_re = r.real("state", "xi");
    if r.raw("state", "xi").is_none() {
        r.issue(None, "state.xi is required");
    }
    let xi_im = r.real("state", "xi_im").map(|v| v.0).unwrap_or(0.0);
    let q = r.integer("state", "q");
    if r.raw("state", "q").is_none() {
        r.issue(None, "state.q is required");
    }
    let phi = r.real("state", "phi");
    if r.raw("state", "phi").is_none() {
        r.issue(None, "state.phi is required");
    }
    let tail_epsilon = match r.real("state", "tail_epsilon") {
        Some((v, line)) => {
            if !(v > 0.0 && v <= MAX_TAIL_EPSILON) {
                r.issue(Some(line), format!("state.tail_epsilon must lie in (0, {MAX_TAIL_EPSILON:e}], got {v:e}"));
            }
            v
        }
        None => DEFAULT_TAIL_EPSILON,
    };
    if let Some((v, line)) = q {
        if v.unsigned_abs() > u32::MAX as u64 / 2 {
            r.issue(Some(line), format!("state.q = {v} is out of range"));
        }
    }

    // [ion]
    let initial_internal = match r.word("ion", "initial") {
        None => Internal::Excited,
        Some((w, line)) => match w.as_str() {
            "excited" => Internal::Excited,
            "ground" => Internal::Ground,
            _ => {
                r.issue(Some(line), format!("ion.initial must be `excited` or `ground`, got `{w}`"));
                Internal::Excited
            }
        },
    };
    let sign_convention = match r.word("ion", "sign_convention") {
        None => SignConvention::ExcitedMinusGround,
        Some((w, line)) => match w.as_str() {
            "excited_minus_ground" => SignConvention::ExcitedMinusGround,
            "ground_minus_excited" => SignConvention::GroundMinusExcited,
            _ => {
                r.issue(
                    Some(line),
                    format!("ion.sign_convention must be `excited_minus_ground` or `ground_minus_excited`, got `{w}`"),
                );
                SignConvention::ExcitedMinusGround
            }
        },
    };

    // [coupling]
    let lambda = r.real("coupling", "lambda");
    let varpi = r.real("coupling", "varpi");
    let kind = r.word("coupling", "profile").unwrap_or(("constant".into(), 0));
    let profile = match kind.0.as_str() {
        "constant" => Some(CouplingProfile::Constant {
            lambda: lambda.map(|v| v.0).unwrap_or(1.0),
        }),
        "sinh" => Some(CouplingProfile::Sinh {
            lambda: lambda.map(|v| v.0).unwrap_or(1.0),
            varpi: varpi.map(|v| v.0).unwrap_or(DEFAULT_VARPI),
        }),
        "piecewise" => match r.raw("coupling", "knots") {
            None => {
                r.issue(Some(kind.1), "piecewise profile needs coupling.knots");
                None
            }
            Some((text, line)) => {
                let mut knots = Vec::new();
                let mut ok = true;
                for item in text.split(',') {
                    let parsed = item
                        .split_once(':')
                        .and_then(|(t, v)| Some((parse_real(t)?, parse_real(v)?)));
                    match parsed {
                        Some(k) => knots.push(k),
                        None => ok = false,
                    }
                }
                if ok {
                    Some(CouplingProfile::Piecewise { knots })
                } else {
                    let text = text.to_string();
                    r.issue(Some(line), format!("coupling.knots must be `t:value` pairs separated by commas, got `{text}`"));
                    None
                }
            }
        },
        other => {
            r.issue(
                Some(kind.1),
                format!("coupling.profile must be constant, sinh or piecewise, got `{other}`"),
            );
            None
        }
    };
    if let Some(p) = &profile {
        if let Err(e) = p.validate() {
            let line = r.raw("coupling", "profile").map(|v| v.1);
            r.issue(line, format!("coupling: {e}"));
        }
        if !matches!(p, CouplingProfile::Sinh { .. }) {
            if let Some((_, line)) = varpi {
                r.issue(Some(line), "coupling.varpi only applies to the sinh profile");
            }
        }
        if matches!(p, CouplingProfile::Piecewise { .. }) {
            if let Some((_, line)) = lambda {
                r.issue(Some(line), "coupling.lambda does not apply to the piecewise profile; use knots");
            }
        }
    }
    let eta = match r.real("coupling", "eta") {
        Some((v, line)) => {
            if !(v > 0.0) {
                r.issue(Some(line), format!("coupling.eta must be positive, got {v}"));
            }
            Some(v)
        }
        None => None,
    };
    let frequencies = Frequencies {
        omega0: r.real("coupling", "omega0").map(|v| v.0),
        omega1: r.real("coupling", "omega1").map(|v| v.0),
        omega2: r.real("coupling", "omega2").map(|v| v.0),
    };

    // [time]
    let t_max = match r.real("time", "t_max") {
        Some((v, line)) => {
            if !(v > 0.0) {
                r.issue(Some(line), format!("time.t_max must be positive, got {v}"));
            }
            v
        }
        None => 30.0,
    };
    let samples = match r.integer("time", "samples") {
        Some((v, line)) => {
            if v < 2 {
                r.issue(Some(line), format!("time.samples must be >= 2, got {v}"));
            }
            v.max(2) as usize
        }
        None => 3001,
    };
    if let (Some(CouplingProfile::Piecewise { knots }), Some(lambda_ref)) = (&profile, Some(1.0)) {
        let end = knots.last().map(|k| k.0).unwrap_or(0.0);
        if t_max / lambda_ref > end {
            let line = r.raw("time", "t_max").map(|v| v.1);
            r.issue(line, format!("time.t_max = {t_max} runs past the last piecewise knot at {end}"));
        }
    }

    // [output]
    let mut outputs = Outputs {
        inversion: true,
        entropies: true,
        quadrature: false,
    };
    if let Some((text, line)) = r.raw("output", "observables").map(|(t, l)| (t.to_string(), l)) {
        outputs = Outputs {
            inversion: false,
            entropies: false,
            quadrature: false,
        };
        for item in text.split(',').map(|s| s.trim().to_ascii_lowercase()) {
            match item.as_str() {
                "inversion" => outputs.inversion = true,
                "entropies" => outputs.entropies = true,
                "quadrature" => outputs.quadrature = true,
                "" => {}
                other => r.issue(
                    Some(line),
                    format!("unknown observable `{other}` (expected inversion, entropies, quadrature)"),
                ),
            }
        }
        if !(outputs.inversion || outputs.entropies || outputs.quadrature) {
            r.issue(Some(line), "output.observables selects nothing");
        }
    }
    let log_base = match r.word("output", "log_base") {
        None => LogBase::Natural,
        Some((w, line)) => match w.as_str() {
            "natural" | "e" => LogBase::Natural,
            "two" | "2" => LogBase::Two,
            _ => {
                r.issue(Some(line), format!("output.log_base must be `natural` or `two`, got `{w}`"));
                LogBase::Natural
            }
        },
    };

    // [grid]
    let grid = if r.sections_seen.contains_key("grid") {
        let default = GridSpec::default();
        let mut g = default;
        for (key, slot) in [("x_min", &mut g.x_min), ("x_max", &mut g.x_max), ("y_min", &mut g.y_min), ("y_max", &mut g.y_max)] {
            if let Some((v, _)) = r.real("grid", key) {
                *slot = v;
            }
        }
        for (key, slot) in [("nx", &mut g.nx), ("ny", &mut g.ny)] {
            if let Some((v, line)) = r.integer("grid", key) {
                if v < 2 {
                    r.issue(Some(line), format!("grid.{key} must be >= 2, got {v}"));
                }
                *slot = v.max(2) as usize;
            }
        }
        if let Err(e) = g.validate() {
            let line = r.sections_seen.get("grid").copied();
            r.issue(line, format!("grid: {e}"));
        }
        Some(g)
    } else {
        None
    };

    // [sweep]
    let sweep = if r.sections_seen.contains_key("sweep") {
        let header = r.sections_seen.get("sweep").copied();
        let parameter = match r.word("sweep", "parameter") {
            None => {
                r.issue(header, "sweep.parameter is required in [sweep]");
                None
            }
            Some((w, line)) => {
                let p = SweepParameter::parse(&w);
                if p.is_none() {
                    r.issue(Some(line), format!("sweep.parameter must be one of xi, q, phi, varpi, got `{w}`"));
                }
                p
            }
        };
        let values = match r.raw("sweep", "values").map(|(t, l)| (t.to_string(), l)) {
            None => {
                r.issue(header, "sweep.values is required in [sweep]");
                None
            }
            Some((text, line)) => {
                let parsed: Vec<Option<f64>> = text
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(parse_real)
                    .collect();
                if parsed.is_empty() {
                    r.issue(Some(line), "sweep.values must not be empty");
                    None
                } else if parsed.iter().any(|v| v.map_or(true, |x| !x.is_finite())) {
                    r.issue(Some(line), format!("sweep.values must be finite reals, got `{text}`"));
                    None
                } else {
                    let vals: Vec<f64> = parsed.into_iter().flatten().collect();
                    if parameter == Some(SweepParameter::Q) && vals.iter().any(|v| v.fract() != 0.0) {
                        r.issue(Some(line), "sweep over q needs integer values");
                    }
                    if parameter == Some(SweepParameter::Varpi) {
                        if vals.iter().any(|v| !(*v > 0.0)) {
                            r.issue(Some(line), "sweep over varpi needs positive values");
                        }
                        if !matches!(profile, Some(CouplingProfile::Sinh { .. })) {
                            r.issue(Some(line), "sweep over varpi needs coupling.profile = sinh");
                        }
                    }
                    Some(vals)
                }
            }
        };
        match (parameter, values) {
            (Some(parameter), Some(values)) => Some(Sweep { parameter, values }),
            _ => None,
        }
    } else {
        None
    };

    if !r.issues.is_empty() {
        return Err(Error::Config(r.issues));
    }
    let state = StateConfig {
        xi: Complex64::new(xi_re.map(|v| v.0).unwrap_or(0.0), xi_im),
        q: q.map(|v| v.0).unwrap_or(0),
        phi: phi.map(|v| v.0).unwrap_or(0.0),
        tail_epsilon,
    };
    Ok(ExperimentConfig {
        state,
        initial_internal,
        profile: profile.expect("profile issues were reported above"),
        eta,
        frequencies,
        time_axis: TimeAxis { t_max, samples },
        outputs,
        grid,
        sweep,
        log_base,
        sign_convention,
    })
}
