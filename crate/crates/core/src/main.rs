use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

use paircat::error::{Error, ErrorClass, Result};
use paircat::quadrature::GridSpec;
use paircat::runner::config::{load_config, ExperimentConfig};
use paircat::runner::export::{write_manifest, write_series_csv, write_series_json};
use paircat::runner::{load_config_or_manifest, presets, quadrature, run, sweep, with_threads, Series};
use paircat::selftest;

#[derive(Parser)]
#[command(name = "paircat", version, about = "Pair cat states of a trapped ion's two vibrational modes")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
#[group(required = false, multiple = false)]
struct Source {
    /// Built-in configuration, see `paircat presets`.
    #[arg(long)]
    preset: Option<String>,
    /// Configuration file, or a manifest from an earlier run.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Quadrature distribution P(x, y) of a pair cat state.
    Quad {
        #[command(flatten)]
        source: Source,
        #[arg(long, allow_hyphen_values = true, conflicts_with_all = ["preset", "config"], requires_all = ["q", "phi"])]
        xi: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        q: Option<i64>,
        /// Cat phase; accepts forms like `pi/2`.
        #[arg(long, allow_hyphen_values = true)]
        phi: Option<String>,
        /// Square grid `min:max:nodes` on both axes.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
        /// Output file (stdout when absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = QuadFormat::Matrix)]
        format: QuadFormat,
        /// Print the configuration text and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Time series of inversion and entropies.
    Evolve {
        #[command(flatten)]
        source: Source,
        /// Output file; a directory for sweeps.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Manifest file (stdout when absent).
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = SeriesFormat::Csv)]
        format: SeriesFormat,
        /// Print the configuration text and exit.
        #[arg(long)]
        print_config: bool,
    },
    /// Built-in consistency checks.
    Selftest {
        /// Only the fast subset.
        #[arg(long)]
        quick: bool,
        /// List the checks without running them.
        #[arg(long)]
        list: bool,
    },
    /// List the built-in configurations.
    Presets,
}

#[derive(Clone, Copy, ValueEnum)]
enum QuadFormat {
    Matrix,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum SeriesFormat {
    Csv,
    Json,
}

impl SeriesFormat {
    fn extension(self) -> &'static str {
        match self {
            SeriesFormat::Csv => "csv",
            SeriesFormat::Json => "json",
        }
    }
}

enum Failure {
    /// Message plus the subcommand whose usage should be shown.
    Usage(String, &'static str),
    Run(Error),
    Checks,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Run(e)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let threads = cli.threads;
    let outcome = match with_threads(threads, move || dispatch(cli.command)) {
        Ok(r) => r,
        Err(e) => Err(Failure::Run(e)),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(message, subcommand)) => {
            eprintln!("error: {message}\n");
            let mut cmd = Cli::command();
            cmd.build();
            if let Some(sub) = cmd.find_subcommand_mut(subcommand) {
                eprintln!("{}", sub.render_usage());
            }
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Checks) => ExitCode::from(2),
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Validation => 1,
        ErrorClass::Numerical => 2,
        ErrorClass::Io => 3,
    }
}

fn dispatch(command: Command) -> std::result::Result<(), Failure> {
    match command {
        Command::Quad {
            source,
            xi,
            q,
            phi,
            grid,
            out,
            format,
            print_config,
        } => {
            let (config, text) = match xi {
                Some(xi) => {
                    let text = format!(
                        "[state]\nxi = {xi:?}\nq = {}\nphi = {}\n\n[output]\nobservables = quadrature\n",
                        q.unwrap_or(0),
                        phi.as_deref().unwrap_or("0")
                    );
                    (load_config(&text)?, text)
                }
                None => resolve(&source)?,
            };
            if print_config {
                return emit(&text).map_err(Failure::from);
            }
            let grid = grid.as_deref().map(parse_grid).transpose()?;
            let raster = quadrature(&config, grid.as_ref())?;
            let label = format!(
                "xi={} q={} phi={}",
                config.state.xi, config.state.q, config.state.phi
            );
            write_to(out.as_deref(), |w| {
                match format {
                    QuadFormat::Matrix => raster.write_matrix(w, &label)?,
                    QuadFormat::Csv => raster.write_csv(w)?,
                }
                Ok(())
            })?;
            Ok(())
        }
        Command::Evolve {
            source,
            out,
            manifest,
            format,
            print_config,
        } => {
            let (config, text) = resolve(&source)?;
            if print_config {
                return emit(&text).map_err(Failure::from);
            }
            let Some(out) = out else {
                return Err(Failure::Usage("evolve needs --out".into(), "evolve"));
            };
            if !config.outputs.wants_series() {
                return Err(Error::InvalidArgument(
                    "configuration selects no time-series observables; use `paircat quad`".into(),
                )
                .into());
            }
            if config.sweep.is_some() {
                return evolve_sweep(&config, &out, format);
            }
            let series = run(&config)?;
            write_to(Some(&out), |w| write_series(&series, format, w))?;
            write_to(manifest.as_deref(), |w| write_manifest(&series.manifest, w))?;
            Ok(())
        }
        Command::Selftest { quick, list } => {
            if list {
                let mut text = String::new();
                for c in selftest::CHECKS {
                    let tag = if c.quick { "quick" } else { "full" };
                    text.push_str(&format!("{:<18} {:<6} {}\n", c.name, tag, c.description));
                }
                return emit(&text).map_err(Failure::from);
            }
            let outcomes = selftest::run_checks(quick);
            let mut text = String::new();
            for o in &outcomes {
                let status = if o.passed { "PASS" } else { "FAIL" };
                text.push_str(&format!("{status}  {:<18} {:>7.2}s  {}\n", o.name, o.seconds, o.detail));
            }
            let passed = outcomes.iter().filter(|o| o.passed).count();
            text.push_str(&format!("{passed}/{} checks passed\n", outcomes.len()));
            emit(&text)?;
            if passed == outcomes.len() {
                Ok(())
            } else {
                Err(Failure::Checks)
            }
        }
        Command::Presets => {
            let mut text = String::new();
            for p in presets::PRESETS {
                text.push_str(&format!("{:<13} {}\n", p.name, p.description()));
            }
            emit(&text).map_err(Failure::from)
        }
    }
}

fn resolve(source: &Source) -> Result<(ExperimentConfig, String)> {
    match (&source.preset, &source.config) {
        (Some(name), _) => {
            let preset = presets::find(name)?;
            Ok((preset.config()?, preset.text.to_string()))
        }
        (None, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            Ok((load_config_or_manifest(&text)?, text))
        }
        (None, None) => Err(Error::InvalidArgument("give --preset or --config".into())),
    }
}

fn parse_grid(text: &str) -> Result<GridSpec> {
    let bad = || Error::InvalidArgument(format!("--grid expects min:max:nodes, got `{text}`"));
    let parts: Vec<&str> = text.split(':').collect();
    let [min, max, nodes] = parts.as_slice() else {
        return Err(bad());
    };
    let min: f64 = min.trim().parse().map_err(|_| bad())?;
    let max: f64 = max.trim().parse().map_err(|_| bad())?;
    let nodes: usize = nodes.trim().parse().map_err(|_| bad())?;
    let grid = GridSpec::square(min, max, nodes);
    grid.validate()?;
    Ok(grid)
}

fn write_series<W: Write>(series: &Series, format: SeriesFormat, w: W) -> Result<()> {
    match format {
        SeriesFormat::Csv => write_series_csv(series, w),
        SeriesFormat::Json => write_series_json(series, w),
    }
}

fn write_to(path: Option<&Path>, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let with_path = |e: Error| match (e, path) {
        (Error::Io(m), Some(p)) => Error::Io(format!("{}: {m}", p.display())),
        (e, _) => e,
    };
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| with_path(e.into()))?;
            let mut w = BufWriter::new(file);
            body(&mut w).map_err(with_path)?;
            w.flush().map_err(|e| with_path(e.into()))
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            let result = body(&mut w).and_then(|_| w.flush().map_err(Error::from));
            match result {
                // A closed pipe (`| head`) is a normal way for a reader to stop.
                Err(Error::Io(m)) if m.contains("Broken pipe") => Ok(()),
                other => other,
            }
        }
    }
}

fn emit(text: &str) -> Result<()> {
    write_to(None, |w| w.write_all(text.as_bytes()).map_err(Error::from))
}

/// Writes `<label>.<ext>` and `<label>.manifest.json` per point into `dir`.
fn evolve_sweep(config: &ExperimentConfig, dir: &Path, format: SeriesFormat) -> std::result::Result<(), Failure> {
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let mut first_error = None;
    for point in sweep(config)? {
        let label = point.label();
        match point.result {
            Ok(series) => {
                let data = dir.join(format!("{label}.{}", format.extension()));
                write_to(Some(&data), |w| write_series(&series, format, w))?;
                let manifest = dir.join(format!("{label}.manifest.json"));
                write_to(Some(&manifest), |w| write_manifest(&series.manifest, w))?;
                eprintln!("{label}: ok");
            }
            Err(e) => {
                eprintln!("{label}: error: {e}");
                first_error.get_or_insert(e);
            }
        }
    }
    match first_error {
        None => Ok(()),
        Some(e) => Err(Failure::Run(e)),
    }
}
