//! `sftlab`: spectral statistics reports for subshifts of finite type.
//!
//! Exit codes: 0 success, 2 input validation, 3 numeric non-convergence,
//! 4 capability limit (caps, non-lattice observables), 1 i/o failure.

use std::path::PathBuf;
use std::process::exit;

use clap::{Parser, Subcommand};
use sftlab_cli::error::{CliError, Result};
use sftlab_cli::{build, parse_description, BuiltSystem, ReportBundle};

#[derive(Parser)]
#[command(
    name = "sftlab",
    version,
    about = "Spectral statistics reports for subshifts of finite type",
    propagate_version = true
)]
struct Cli {
    /// Cap the worker-thread pool; outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory for report files (created if missing).
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,

    /// Write one JSON envelope to stdout instead of files.
    #[arg(long, global = true)]
    stdio: bool,

    /// Accept description fields outside the schema instead of rejecting.
    #[arg(long, global = true)]
    allow_unknown: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral solve: eigendata, gap, and cylinder-ratio bounds.
    Analyze {
        /// System description JSON file.
        #[arg(long)]
        system: PathBuf,
        /// Largest cylinder length in the ratio scan.
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Built-in reproduction of the published golden-mean constant table.
    DemoGoldenMean,
    /// Asymptotic variance of an observable by independent routes.
    Variance {
        #[arg(long)]
        system: PathBuf,
        /// Observable name; may be omitted when exactly one is defined.
        #[arg(long)]
        observable: Option<String>,
    },
    /// Autocorrelation sequence with a fitted geometric envelope.
    Correlations {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        observable: Option<String>,
        /// Largest lag computed.
        #[arg(long)]
        nmax: Option<usize>,
    },
    /// Monte-Carlo central-limit check of normalised Birkhoff sums.
    Clt {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        observable: Option<String>,
        /// Orbit length per chain.
        #[arg(long)]
        n: Option<usize>,
        /// Number of independent chains.
        #[arg(long)]
        chains: Option<usize>,
        /// Root seed; identical seeds reproduce reports byte for byte.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exact lattice distribution of Birkhoff sums by dynamic programming.
    Exactdist {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        observable: Option<String>,
        /// Birkhoff sum length.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Large-deviation rate function, curvature, and tail comparison.
    Ldp {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        observable: Option<String>,
        /// Tilting range [-tmax, tmax].
        #[arg(long)]
        tmax: Option<f64>,
        /// Number of cumulant grid points.
        #[arg(long)]
        grid: Option<usize>,
        /// Deviation level for the tail comparison table.
        #[arg(long)]
        a: Option<f64>,
        /// Half-width of the deviation window around a.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Coboundary decision: cycle obstructions and zero-variance check.
    Livsic {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        observable: Option<String>,
    },
}

fn load(path: &PathBuf, allow_unknown: bool) -> Result<BuiltSystem> {
    let text = std::fs::read_to_string(path)?;
    build(parse_description(&text, allow_unknown)?)
}

fn run(cli: &Cli) -> Result<ReportBundle> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(CliError::Validation("--threads must be at least 1".into()));
        }
        // Ignore the error from a pool that is already set: the cap is
        // best-effort and never affects report content.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let allow = cli.allow_unknown;
    match &cli.command {
        Command::Analyze { system, nmax } => {
            sftlab_cli::cmd_analyze(&load(system, allow)?, *nmax)
        }
        Command::DemoGoldenMean => sftlab_cli::cmd_demo(),
        Command::Variance { system, observable } => {
            sftlab_cli::cmd_variance(&load(system, allow)?, observable.as_deref())
        }
        Command::Correlations {
            system,
            observable,
            nmax,
        } => sftlab_cli::cmd_correlations(&load(system, allow)?, observable.as_deref(), *nmax),
        Command::Clt {
            system,
            observable,
            n,
            chains,
            seed,
        } => sftlab_cli::cmd_clt(
            &load(system, allow)?,
            observable.as_deref(),
            *n,
            *chains,
            *seed,
        ),
        Command::Exactdist {
            system,
            observable,
            n,
        } => sftlab_cli::cmd_exactdist(&load(system, allow)?, observable.as_deref(), *n),
        Command::Ldp {
            system,
            observable,
            tmax,
            grid,
            a,
            eps,
        } => sftlab_cli::cmd_ldp(
            &load(system, allow)?,
            observable.as_deref(),
            *tmax,
            *grid,
            *a,
            *eps,
        ),
        Command::Livsic { system, observable } => {
            sftlab_cli::cmd_livsic(&load(system, allow)?, observable.as_deref())
        }
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(bundle) => {
            if let Err(e) = bundle.emit(&cli.out, cli.stdio) {
                eprintln!("error: {e}");
                exit(1);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.exit_code());
        }
    }
}
