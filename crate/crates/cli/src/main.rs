//! `ringdefect`: command-line front end for the defect-ring solver.
//!
//! Exit codes: 0 success, 1 configuration error, 2 solver or I/O error,
//! 3 oracle comparison outside tolerance.

mod config;
mod figures;
mod run;
mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{ConfigError, Format, LogRange, Mode, RawConfig};
use figures::{Figure, FigureOptions};
use table::ResultTable;

#[derive(Parser, Debug)]
#[command(
    name = "ringdefect",
    version,
    about = "Quantum walk on a ring with site defects"
)]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true, env = "DEFECT_CHAIN_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Defect-free ring: moments, long-time values and t*.
    Free(RunArgs),
    /// One defect of finite strength.
    Single(RunArgs),
    /// One defect of infinite strength.
    Infq(RunArgs),
    /// Two defects.
    Two(RunArgs),
    /// Compare analytic results against exact diagonalization.
    OracleCheck(RunArgs),
    /// Classical walk with a slow bond.
    Classical(RunArgs),
    /// Write the data bundle for a figure panel.
    Figure(FigureArgs),
    /// Run from a TOML configuration file.
    Run(FileArgs),
}

#[derive(Args, Debug, Default)]
struct RunArgs {
    /// Ring size (repeatable in free mode).
    #[arg(long = "N", value_name = "N")]
    sites: Vec<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Start site.
    #[arg(long)]
    n0: Vec<usize>,
    /// Defect site (repeatable).
    #[arg(long)]
    nd: Vec<usize>,
    /// Defect strength (repeatable).
    #[arg(long, allow_negative_numbers = true)]
    q: Vec<f64>,
    /// Log-spaced strength sweep.
    #[arg(long = "q-log", value_name = "MIN:MAX:COUNT")]
    q_log: Option<String>,
    #[arg(long)]
    tmax: Option<f64>,
    #[arg(long)]
    tsteps: Option<usize>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Allowed analytic/oracle difference.
    #[arg(long)]
    tolerance: Option<f64>,
    #[arg(long = "tstar-threshold")]
    tstar_threshold: Option<f64>,
    /// Classical hop rate F.
    #[arg(long = "bulk-rate")]
    bulk_rate: Option<f64>,
    /// Classical slow-bond rate f (repeatable).
    #[arg(long = "barrier-rate")]
    barrier_rates: Vec<f64>,
    /// Index r of the slow bond (r, r+1).
    #[arg(long)]
    barrier: Option<usize>,
}

#[derive(Args, Debug)]
struct FigureArgs {
    #[arg(value_enum)]
    figure: Figure,
    /// Output directory, one file per panel.
    #[arg(long, default_value = "figures")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Strength sweep for the inset panels.
    #[arg(long, value_name = "MIN:MAX:COUNT", default_value = "0.01:100:41")]
    sweep: String,
    #[arg(long = "tstar-threshold")]
    tstar_threshold: Option<f64>,
}

#[derive(Args, Debug)]
struct FileArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the output path in the file.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Solver(String),
    Breach(f64, f64),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Breach(..) => 3,
        }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Config(e.to_string())
    }
}

impl From<run::RunError> for Failure {
    fn from(e: run::RunError) -> Self {
        Failure::Solver(e.to_string())
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Solver(format!("i/o error: {e}"))
    }
}

impl RunArgs {
    fn into_raw(self, mode: Mode) -> Result<RawConfig, ConfigError> {
        Ok(RawConfig {
            schema_version: None,
            mode: Some(mode),
            sites: self.sites,
            gamma: self.gamma,
            n0: self.n0,
            nd: self.nd,
            q: self.q,
            q_log: self.q_log.as_deref().map(LogRange::parse).transpose()?,
            tmax: self.tmax,
            tsteps: self.tsteps,
            out: self.out,
            format: self.format,
            tolerance: self.tolerance,
            tstar_threshold: self.tstar_threshold,
            bulk_rate: self.bulk_rate,
            barrier_rates: self.barrier_rates,
            barrier: self.barrier,
        })
    }
}

fn write_table(
    table: &ResultTable,
    out: Option<&Path>,
    format: Format,
    mode: &str,
) -> io::Result<()> {
    match out {
        Some(p) => {
            let mut w = BufWriter::new(File::create(p)?);
            table.write(&mut w, format, mode)?;
            w.flush()
        }
        None => {
            let stdout = io::stdout();
            let mut w = stdout.lock();
            table.write(&mut w, format, mode)?;
            w.flush()
        }
    }
}

fn execute(raw: RawConfig) -> Result<(), Failure> {
    let cfg = raw.validate()?;
    let outcome = run::run(&cfg)?;
    write_table(
        &outcome.table,
        cfg.out.as_deref(),
        cfg.format,
        cfg.mode.name(),
    )?;
    if outcome.breach {
        return Err(Failure::Breach(outcome.table.max_abs_diff(), cfg.tolerance));
    }
    Ok(())
}

fn figure(args: FigureArgs) -> Result<(), Failure> {
    let sweep = LogRange::parse(&args.sweep)?;
    sweep.validate()?;
    if !(args.gamma > 0.0 && args.gamma.is_finite()) {
        return Err(ConfigError::new("gamma", "must be positive and finite").into());
    }
    let opts = FigureOptions {
        gamma: args.gamma,
        sweep,
        tstar_threshold: args
            .tstar_threshold
            .unwrap_or(config::DEFAULT_TSTAR_THRESHOLD),
    };
    std::fs::create_dir_all(&args.out)?;
    let ext = match args.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    for (name, table) in figures::bundle(args.figure, &opts)? {
        let path = args.out.join(format!("{name}.{ext}"));
        write_table(&table, Some(&path), args.format, args.figure.name())?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ConfigError::new("threads", "must be at least 1").into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::Solver(format!("thread pool: {e}")))?;
    }
    let (mode, args) = match cli.command {
        Command::Free(a) => (Mode::Free, a),
        Command::Single(a) => (Mode::Single, a),
        Command::Infq(a) => (Mode::Infq, a),
        Command::Two(a) => (Mode::Two, a),
        Command::OracleCheck(a) => (Mode::OracleCheck, a),
        Command::Classical(a) => (Mode::Classical, a),
        Command::Figure(a) => return figure(a),
        Command::Run(a) => {
            let mut raw = RawConfig::from_toml_file(&a.config)?;
            if a.out.is_some() {
                raw.out = a.out;
            }
            return execute(raw);
        }
    };
    execute(args.into_raw(mode)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) | Failure::Solver(m) => eprintln!("error: {m}"),
                Failure::Breach(d, tol) => {
                    eprintln!("error: oracle difference {d:.3e} exceeds tolerance {tol:.3e}")
                }
            }
            ExitCode::from(f.code())
        }
    }
}
