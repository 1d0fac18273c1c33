use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gols_cli::spec::{parse_arch, ScanBatch};
use gols_cli::{cmd_compare, cmd_scan, cmd_train, CliError, ExperimentSpec};

/// Line-search SGD experiments with CSV output.
#[derive(Parser)]
#[command(name = "gols", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every (resolver, repeat) pair; writes per-run traces and a summary.
    Train(Common),
    /// Scan F and F' along one descent direction at several batch sizes.
    Scan(ScanArgs),
    /// Mean function evaluations and information calls per iteration.
    Compare(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// iris, blobs, noisy-quadratic, or a CSV path.
    #[arg(long)]
    dataset: Option<String>,
    /// Hidden widths, e.g. 3 or 3,3.
    #[arg(long, value_parser = parse_arch)]
    arch: Option<Vec<usize>>,
    /// Resolver spec (gs, arls, bgols, igols, fixed:<alpha>); repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    resolver: Vec<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// resample, fixed-batch or full-batch.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    /// Batch sizes to scan, e.g. 1,10,30,full.
    #[arg(long, value_delimiter = ',')]
    scan_batch_sizes: Vec<ScanBatch>,
    /// Scans per batch size.
    #[arg(long)]
    scan_repeats: Option<usize>,
}

impl Common {
    fn spec(self) -> Result<ExperimentSpec, CliError> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(v) = self.dataset {
            spec.dataset = v;
        }
        if let Some(v) = self.arch {
            spec.hidden = v;
        }
        if !self.resolver.is_empty() {
            spec.resolvers = self.resolver;
        }
        if let Some(v) = self.repeats {
            spec.repeats = v;
        }
        if let Some(v) = self.iterations {
            spec.iterations = v;
        }
        if let Some(v) = self.batch_size {
            spec.batch_size = v;
        }
        if let Some(v) = self.seed {
            spec.seed = v;
        }
        if let Some(v) = self.policy {
            spec.policy = v;
        }
        if let Some(v) = self.out {
            spec.out = v;
        }
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(c) => cmd_train(&c.spec()?),
        Command::Compare(c) => cmd_compare(&c.spec()?),
        Command::Scan(s) => {
            let mut spec = s.common.spec()?;
            if !s.scan_batch_sizes.is_empty() {
                spec.scan.batch_sizes = s.scan_batch_sizes;
            }
            if let Some(v) = s.scan_repeats {
                spec.scan.repeats = v;
            }
            cmd_scan(&spec)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("gols: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
