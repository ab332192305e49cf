//! `mdswpir`: enumerate strategy sets, dump query tables, sweep the
//! leakage/rate trade-off, verify retrievability and simulate retrievals.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::InstanceConfig;

#[derive(Parser, Debug)]
#[command(name = "mdswpir", version, about = "Weakly-private information retrieval from MDS-coded storage")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the strategy alphabet and its cardinality.
    Enumerate {
        #[command(flatten)]
        common: Common,
        /// List members only when there are at most this many.
        #[arg(long, default_value_t = commands::ELIDE_ABOVE)]
        limit: usize,
    },
    /// Dump the conditional query table seen by one server as CSV.
    Table {
        #[command(flatten)]
        common: Common,
        /// 1-based server index.
        #[arg(long)]
        server: Option<usize>,
    },
    /// Sweep the download-cost grid and write the trade-off curve as CSV.
    Tradeoff {
        #[command(flatten)]
        common: Common,
        /// Number of download-cost targets.
        #[arg(long)]
        grid: Option<usize>,
        /// Also write a matplotlib script that plots the CSV.
        #[arg(long)]
        plot_script: Option<PathBuf>,
        /// Solve the full LP instead of the symmetry-reduced one.
        #[arg(long)]
        no_symmetry: bool,
    },
    /// Check retrievability and the leakage/cost bookkeeping.
    Verify {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        mode: Mode,
        /// Test hook: duplicate a generator column so the code is not MDS.
        #[arg(long, hide = true)]
        corrupt_generator: bool,
    },
    /// Run sampled retrievals under a strategy PMF.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Number of retrievals.
        #[arg(long)]
        samples: Option<usize>,
        /// Strategy PMF: `uniform` or comma-separated weights in alphabet order.
        #[arg(long)]
        pmf: Option<String>,
        /// Always retrieve this file instead of a uniformly drawn one.
        #[arg(long)]
        file: Option<usize>,
        #[arg(long, value_enum)]
        transport: Option<TransportKind>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// `key = value` file applied before the command-line flags.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scheme: Option<String>,
    /// Number of files M.
    #[arg(long)]
    files: Option<usize>,
    /// Number of servers N.
    #[arg(long)]
    servers: Option<usize>,
    /// Code dimension K.
    #[arg(long)]
    dim: Option<usize>,
    /// Prime field size (default: smallest prime >= N).
    #[arg(long)]
    field: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[group(multiple = false)]
struct Mode {
    /// Run every (file, strategy, shift) combination (the default).
    #[arg(long)]
    exhaustive: bool,
    /// Run this many seeded random combinations instead.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TransportKind {
    Inproc,
    Tcp,
}

/// Failure classes, mapped onto exit codes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags, config or parameters: exit 2.
    Usage(String),
    /// A check failed or a computation broke down: exit 1.
    Verification(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Verification(_) => 1,
        }
    }
}

impl From<mdswpir::Error> for Failure {
    fn from(e: mdswpir::Error) -> Self {
        use mdswpir::Error as E;
        match e {
            E::NotPrime(_)
            | E::InvalidParams(_)
            | E::OutOfRange { .. }
            | E::FieldTooSmall { .. }
            | E::TooLarge { .. }
            | E::InvalidPmf(_)
            | E::Parse(_)
            | E::UnknownStrategy(_)
            | E::Io(_) => Failure::Usage(e.to_string()),
            other => Failure::Verification(other.to_string()),
        }
    }
}

fn resolve(common: &Common, extra: &[(&str, Option<String>)]) -> Result<InstanceConfig, Failure> {
    let mut cfg = InstanceConfig::default();
    if let Some(path) = &common.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        cfg.apply_file(&text)?;
    }
    let flags = [
        ("scheme", common.scheme.clone()),
        ("files", common.files.map(|v| v.to_string())),
        ("servers", common.servers.map(|v| v.to_string())),
        ("dim", common.dim.map(|v| v.to_string())),
        ("field", common.field.map(|v| v.to_string())),
        ("seed", common.seed.map(|v| v.to_string())),
    ];
    for (key, value) in flags.iter().chain(extra) {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &common.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Enumerate { common, limit } => commands::enumerate(&resolve(&common, &[])?, limit),
        Command::Table { common, server } => {
            commands::table(&resolve(&common, &[("server", server.map(|v| v.to_string()))])?)
        }
        Command::Tradeoff {
            common,
            grid,
            plot_script,
            no_symmetry,
        } => {
            let mut extra = vec![("grid", grid.map(|v| v.to_string()))];
            if no_symmetry {
                extra.push(("symmetry", Some("false".into())));
            }
            if let Some(p) = plot_script {
                extra.push(("plot_script", Some(p.display().to_string())));
            }
            commands::tradeoff(&resolve(&common, &extra)?)
        }
        Command::Verify {
            common,
            mode,
            corrupt_generator,
        } => {
            let mut cfg = resolve(&common, &[("samples", mode.samples.map(|v| v.to_string()))])?;
            if mode.exhaustive {
                cfg.samples = None;
            }
            commands::verify(&cfg, corrupt_generator)
        }
        Command::Simulate {
            common,
            samples,
            pmf,
            file,
            transport,
        } => {
            let transport = transport.map(|t| match t {
                TransportKind::Inproc => "inproc".to_string(),
                TransportKind::Tcp => "tcp".to_string(),
            });
            let cfg = resolve(
                &common,
                &[
                    ("samples", samples.map(|v| v.to_string())),
                    ("pmf", pmf),
                    ("file", file.map(|v| v.to_string())),
                    ("transport", transport),
                ],
            )?;
            commands::simulate(&cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Verification(msg) => eprintln!("failed: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}
