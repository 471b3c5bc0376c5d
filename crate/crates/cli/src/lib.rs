//! Command implementations behind the `matern-sg` binary.
//!
//! Every command takes a [`RunConfig`] assembled from an optional config
//! file overlaid with command-line flags, and returns its text output so
//! it can be tested without spawning a process.

use std::ffi::OsString;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use matern_sg::bounds::{dasg_bound, lisg_bound};
use matern_sg::config::{BoundKind, KeyValues};
use matern_sg::experiments::{level_sweep, Termination};
use matern_sg::textio::{fit_from_samples, interpolant_from_text, interpolant_to_text, nodes_to_text, single_family, sweep_file_text};
use matern_sg::{DyadicPoint, Error, Family, RunConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PD_FAILURE: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const THREADS_ENV: &str = "MATERN_SG_THREADS";

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::PdFailure(_) => EXIT_PD_FAILURE,
            Error::Io(_) => EXIT_IO,
            Error::Parameter(_)
            | Error::Parse(_)
            | Error::Shape { .. }
            | Error::Domain(_)
            | Error::Hypothesis(_)
            | Error::DivergentSeries(_)
            | Error::SizeGuard { .. } => EXIT_USAGE,
            Error::Evaluation(_) | Error::DegenerateTarget => EXIT_FAILURE,
        };
        CliError { code, message: e.to_string() }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError { code: EXIT_IO, message: format!("{}: {e}", path.display()) }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

#[derive(Debug, Parser)]
#[command(name = "matern-sg", version, about = "Matérn kernel interpolation on sparse grids")]
pub struct Cli {
    /// Worker threads; defaults to all available cores.
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Node count, index-set sizes and optionally the node list.
    GridInfo {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also print every node as exact fractions.
        #[arg(long)]
        nodes: bool,
    },
    /// Convergence sweep; writes one data file per family.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, short, default_value = ".")]
        output: PathBuf,
        /// File name prefix; files are `<prefix>_<FAMILY>.dat`.
        #[arg(long, default_value = "sweep")]
        prefix: String,
    },
    /// Error-bound values over a level range, as `L value` lines.
    Bound {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Fits an interpolant to a sample file and writes it out.
    Fit {
        #[command(flatten)]
        config: ConfigArgs,
        /// Lines `c_1 ... c_d value`, one per grid node.
        #[arg(long)]
        samples: PathBuf,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Evaluates a saved interpolant at points read from stdin.
    Eval {
        #[arg(long)]
        interpolant: PathBuf,
    },
}

/// Config file plus per-key overrides; flags win over the file.
#[derive(Debug, Default, Args)]
pub struct ConfigArgs {
    /// `key = value` configuration file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Extra `key=value` overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[arg(long)]
    pub d: Option<String>,
    /// Comma list of ISG, ASG, LISG, DASG.
    #[arg(long)]
    pub family: Option<String>,
    /// Per-dimension regularity, e.g. `3/2*2,5/2*2`.
    #[arg(long)]
    pub nu: Option<String>,
    #[arg(long)]
    pub p: Option<String>,
    #[arg(long)]
    pub r: Option<String>,
    #[arg(long)]
    pub omega: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub level: Option<String>,
    #[arg(long)]
    pub level_min: Option<String>,
    #[arg(long)]
    pub level_max: Option<String>,
    #[arg(long)]
    pub max_level: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub realisations: Option<String>,
    #[arg(long)]
    pub mc_samples: Option<String>,
    #[arg(long)]
    pub n_cap: Option<String>,
    /// Node cap 10^5 and 10 realisations unless set explicitly.
    #[arg(long)]
    pub full_scale: bool,
    /// `dasg` or `lisg`.
    #[arg(long)]
    pub bound: Option<String>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut kv = match &self.config {
            Some(path) => KeyValues::parse(&read_file(path)?)?,
            None => KeyValues::new(),
        };
        let flags = [
            ("d", &self.d),
            ("family", &self.family),
            ("nu", &self.nu),
            ("p", &self.p),
            ("r", &self.r),
            ("omega", &self.omega),
            ("alpha", &self.alpha),
            ("sigma", &self.sigma),
            ("level", &self.level),
            ("level_min", &self.level_min),
            ("level_max", &self.level_max),
            ("max_level", &self.max_level),
            ("seed", &self.seed),
            ("realisations", &self.realisations),
            ("mc_samples", &self.mc_samples),
            ("n_cap", &self.n_cap),
            ("bound", &self.bound),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                kv.set(key, v.clone());
            }
        }
        if self.full_scale {
            kv.set("full_scale", "true");
        }
        for item in &self.set {
            let (k, v) = item.split_once('=').ok_or_else(|| CliError {
                code: EXIT_USAGE,
                message: format!("--set expects KEY=VALUE, got {item:?}"),
            })?;
            kv.set(k.trim(), v.trim());
        }
        Ok(RunConfig::from_kv(&kv)?)
    }
}

/// Sizes of the grid of every configured family at `config.level`.
pub fn cmd_grid_info(config: &RunConfig, list_nodes: bool) -> Result<String, CliError> {
    let mut out = String::new();
    for &family in &config.families {
        let spec = config.spec(family, config.level)?;
        let blocks = spec.contributing_blocks();
        out.push_str(&format!("# {family} L={}\n", config.level));
        out.push_str(&format!("N={}\n", spec.node_count()));
        out.push_str(&format!("index_set={}\n", spec.index_set().len()));
        out.push_str(&format!("active_set={}\n", spec.active_set().len()));
        out.push_str(&format!("nonzero_coefficients={}\n", blocks.len()));
        if list_nodes {
            out.push_str(&nodes_to_text(&spec));
        }
    }
    Ok(out)
}

/// `L value` lines for `level_min ..= level_max`.
pub fn cmd_bound(config: &RunConfig) -> Result<String, CliError> {
    let mut out = String::new();
    for level in config.level_min..=config.level_max {
        let params = config.bound_params(level)?;
        let value = match config.bound {
            BoundKind::Dasg => dasg_bound(&params)?,
            BoundKind::Lisg => lisg_bound(&params)?,
        };
        out.push_str(&format!("{level} {}\n", value.value));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub family: Family,
    pub path: PathBuf,
    pub records: usize,
    pub termination: Termination,
}

/// Runs the sweep of every configured family and writes its data file.
/// A family whose very first level fails to factorise still gets a file
/// (header only) and makes the command exit with [`EXIT_PD_FAILURE`].
pub fn cmd_sweep(config: &RunConfig, dir: &Path, prefix: &str, parallel: bool) -> Result<Vec<SweepSummary>, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let mut summaries = Vec::new();
    for &family in &config.families {
        let outcome = level_sweep(&config.sweep(family, parallel)?)?;
        let path = dir.join(format!("{prefix}_{family}.dat"));
        write_file(&path, &sweep_file_text(config, family, &outcome))?;
        summaries.push(SweepSummary { family, path, records: outcome.records.len(), termination: outcome.termination });
    }
    Ok(summaries)
}

pub fn cmd_fit(config: &RunConfig, samples: &Path, output: &Path) -> Result<usize, CliError> {
    let family = single_family(config)?;
    let spec = config.spec(family, config.level)?;
    let interp = fit_from_samples(&spec, &read_file(samples)?)?;
    write_file(output, &interpolant_to_text(&interp))?;
    Ok(interp.len())
}

fn parse_coordinate(s: &str) -> Result<f64, CliError> {
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    s.parse::<DyadicPoint>().map(|p| p.value()).map_err(|_| CliError {
        code: EXIT_USAGE,
        message: format!("cannot parse coordinate {s:?}"),
    })
}

/// One output line per non-empty input line of whitespace-separated
/// coordinates.
pub fn cmd_eval(interpolant: &Path, input: &mut dyn BufRead, output: &mut dyn Write) -> Result<usize, CliError> {
    let interp = interpolant_from_text(&read_file(interpolant)?)?;
    let stdio = |e: std::io::Error| CliError { code: EXIT_IO, message: e.to_string() };
    let mut count = 0;
    for line in input.lines() {
        let line = line.map_err(stdio)?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let x = line.split_whitespace().map(parse_coordinate).collect::<Result<Vec<_>, _>>()?;
        let v = interp.evaluate(&x)?;
        writeln!(output, "{v}").map_err(stdio)?;
        count += 1;
    }
    Ok(count)
}

fn configure_threads(threads: Option<usize>) -> Result<usize, CliError> {
    let n = threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if n == 0 {
        return Err(CliError { code: EXIT_USAGE, message: "--threads must be positive".into() });
    }
    // A second call (from tests running several commands) keeps the first pool.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(n)
}

fn dispatch(cli: Cli, stdin: &mut dyn BufRead, stdout: &mut dyn Write) -> Result<(), CliError> {
    let threads = configure_threads(cli.threads)?;
    let stdio = |e: std::io::Error| CliError { code: EXIT_IO, message: e.to_string() };
    match cli.command {
        Command::GridInfo { config, nodes } => {
            let text = cmd_grid_info(&config.resolve()?, nodes)?;
            stdout.write_all(text.as_bytes()).map_err(stdio)
        }
        Command::Bound { config } => {
            let text = cmd_bound(&config.resolve()?)?;
            stdout.write_all(text.as_bytes()).map_err(stdio)
        }
        Command::Sweep { config, output, prefix } => {
            let summaries = cmd_sweep(&config.resolve()?, &output, &prefix, threads > 1)?;
            for s in &summaries {
                writeln!(stdout, "{} {} records {} {}", s.family, s.records, s.termination, s.path.display())
                    .map_err(stdio)?;
            }
            match summaries.iter().find(|s| s.records == 0 && s.termination == Termination::PdFailure) {
                Some(s) => Err(CliError {
                    code: EXIT_PD_FAILURE,
                    message: format!("{}: Gram matrix not positive definite at the first level", s.family),
                }),
                None => Ok(()),
            }
        }
        Command::Fit { config, samples, output } => {
            let n = cmd_fit(&config.resolve()?, &samples, &output)?;
            writeln!(stdout, "wrote {n} weights to {}", output.display()).map_err(stdio)
        }
        Command::Eval { interpolant } => cmd_eval(&interpolant, stdin, stdout).map(|_| ()),
    }
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code; diagnostics go to `stderr`.
pub fn run<I, T>(args: I, stdin: &mut dyn BufRead, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{e}");
                return EXIT_USAGE;
            }
            let _ = write!(stdout, "{e}");
            return EXIT_OK;
        }
    };
    match dispatch(cli, stdin, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use matern_sg::PdFailure;

    #[test]
    fn error_codes_are_distinct() {
        let pd = Error::PdFailure(PdFailure { dim: Some(0), level: Some(0), pivot: 0, size: 1 });
        let io = Error::Io(std::io::Error::other("x"));
        let codes = [
            CliError::from(pd).code,
            CliError::from(io).code,
            CliError::from(Error::Parse("x".into())).code,
        ];
        assert_eq!(codes, [EXIT_PD_FAILURE, EXIT_IO, EXIT_USAGE]);
    }

    #[test]
    fn coordinates_accept_decimal_and_dyadic() {
        assert_eq!(parse_coordinate("0.25").unwrap(), 0.25);
        assert_eq!(parse_coordinate("-3/2^2").unwrap(), -0.75);
        assert_eq!(parse_coordinate("x").unwrap_err().code, EXIT_USAGE);
    }
}
