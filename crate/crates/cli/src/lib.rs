//! Command-line front end: reads a design file, runs one analysis and
//! writes reports and CSV.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 numerical failure.

pub mod commands;
pub mod config;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use iontrap::analytic::AnalyticError;
use iontrap::model::PhysicalConstants;
use iontrap::pipeline;
use iontrap::trapchar::TrapError;

use config::{ConfigError, DesignFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}:{source}")]
    Config { path: String, source: ConfigError },
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("numerical failure in {stage}: {source}", stage = .source.stage())]
    Numerical {
        #[from]
        source: pipeline::Error,
    },
    #[error("numerical failure in analytic: {0}")]
    Analytic(#[from] AnalyticError),
}

impl From<TrapError> for CliError {
    fn from(e: TrapError) -> Self {
        CliError::Numerical { source: e.into() }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } | CliError::Analytic(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "iontrap", about = "Design and analysis of planar linear RF ion traps", disable_version_flag = true)]
struct Cli {
    /// Print the version and the physical constants in use.
    #[arg(short = 'V', long)]
    version: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
struct Common {
    /// Design file.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Directory for CSV and report files.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (0 uses every processor).
    #[arg(long, value_name = "N", default_value_t = 0)]
    jobs: usize,
    /// More log output on standard error (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Print the parsed design file in canonical form and exit.
    #[arg(long)]
    dump_config: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// 2D RF cross-section: field, multipoles, η, depth.
    Solve2d(Common),
    /// 3D static end-cap field: D coefficients, κ, ε.
    Solve3d(Common),
    /// Closed-form η, r_max and depth from the conformal map.
    Analytic(Common),
    /// Full characterization and one summary row of frequencies.
    Characterize(Common),
    /// Parameter sweep described by the [sweep] section.
    Sweep(Common),
    /// Cantilever mechanics, RF dissipation and heating estimates.
    Engineering(Common),
}

pub fn version_text() -> String {
    let mut s = format!("iontrap {}\nconstants (CODATA 2018):\n", env!("CARGO_PKG_VERSION"));
    for (name, value, unit) in PhysicalConstants::CODATA_2018.table() {
        s.push_str(&format!("  {name} = {value:e} {unit}\n"));
    }
    s
}

pub fn load(path: &Path) -> Result<DesignFile, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    DesignFile::parse(&text).map_err(|source| CliError::Config { path: path.display().to_string(), source })
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let _ = env_logger::Builder::new().filter_level(level).target(env_logger::Target::Stderr).try_init();
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(stderr, "{}", e.render());
                return 1;
            }
            let _ = write!(stdout, "{}", e.render());
            return 0;
        }
    };
    if cli.version {
        let _ = write!(stdout, "{}", version_text());
        return 0;
    }
    let Some(command) = cli.command else {
        let _ = writeln!(stderr, "error: a subcommand is required (try --help)");
        return 1;
    };
    match execute(command, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (common, action): (Common, fn(&DesignFile, usize) -> Result<commands::Output, CliError>) = match command {
        Command::Solve2d(c) => (c, |f, _| commands::solve2d(f)),
        Command::Solve3d(c) => (c, |f, _| commands::solve3d(f)),
        Command::Analytic(c) => (c, |f, _| commands::analytic(f)),
        Command::Characterize(c) => (c, |f, _| commands::characterize(f)),
        Command::Sweep(c) => (c, commands::sweep),
        Command::Engineering(c) => (c, |f, _| commands::engineering(f)),
    };
    init_logging(common.verbose);
    let file = load(&common.config)?;
    if common.dump_config {
        stdout.write_all(file.dump().as_bytes())?;
        return Ok(());
    }
    let out = action(&file, common.jobs)?;
    stdout.write_all(out.stdout.as_bytes())?;
    if let Some(dir) = &common.out {
        fs::create_dir_all(dir)?;
        for (name, contents) in &out.files {
            fs::write(dir.join(name), contents)?;
            log::info!("wrote {}", dir.join(name).display());
        }
    }
    Ok(())
}
