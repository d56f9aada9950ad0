use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mpsched::harness::commands::{
    cmd_compare, cmd_presets, cmd_run, cmd_validate, CompareArgs, RunArgs, Source, ValidateArgs,
    EXIT_CONFIG, SEEDS_ENV,
};
use mpsched::harness::oracle::Fault;
use mpsched::scenarios::preset;

#[derive(Parser)]
#[command(name = "mpsched", version, about = "Multipath scheduler simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SourceArgs {
    /// Built-in scenario name (see `mpsched presets`).
    #[arg(long)]
    preset: Option<String>,
    /// JSON scenario file.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl SourceArgs {
    fn source(self) -> Source {
        match (self.preset, self.config) {
            (Some(name), _) => Source::Preset(name),
            (None, Some(path)) => Source::Config(path),
            (None, None) => unreachable!("clap enforces one source"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scheduler over a seed list, writing traces and a summary.
    Run {
        #[command(flatten)]
        source: SourceArgs,
        /// Overrides the scheduler named in the scenario.
        #[arg(long)]
        scheduler: Option<String>,
        /// Seed list, e.g. `7`, `1,2,3` or `1..10`. Overrides $MPSCHED_SEEDS.
        #[arg(long)]
        seeds: Option<String>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Compare schedulers on one scenario; the first is the baseline.
    Compare {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        scheduler: Vec<String>,
        #[arg(long)]
        seeds: Option<String>,
        /// Directory for the comparison CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in oracle checks.
    Validate {
        /// Subsampled grids and shorter runs.
        #[arg(long)]
        quick: bool,
        #[arg(long, hide = true)]
        inject_fault: Option<FaultArg>,
    },
    /// List the built-in scenarios, or print one as JSON.
    Presets {
        #[arg(long, value_name = "NAME")]
        dump: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    FlipTieBreak,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let env_seeds = std::env::var(SEEDS_ENV).ok();
    let mut out = io::stdout().lock();
    let mut err = io::stderr().lock();
    let code = match cli.command {
        Command::Run {
            source,
            scheduler,
            seeds,
            out: dir,
        } => cmd_run(
            &RunArgs {
                source: source.source(),
                scheduler,
                seeds,
                env_seeds,
                out: dir,
            },
            &mut out,
            &mut err,
        ),
        Command::Compare {
            source,
            scheduler,
            seeds,
            out: dir,
        } => cmd_compare(
            &CompareArgs {
                source: source.source(),
                schedulers: scheduler,
                seeds,
                env_seeds,
                out: dir,
            },
            &mut out,
            &mut err,
        ),
        Command::Validate {
            quick,
            inject_fault,
        } => cmd_validate(
            &ValidateArgs {
                quick,
                fault: inject_fault.map(|FaultArg::FlipTieBreak| Fault::FlipTieBreak),
            },
            &mut out,
        ),
        Command::Presets { dump: None } => cmd_presets(&mut out),
        Command::Presets { dump: Some(name) } => match preset(&name) {
            Ok(cfg) => {
                use io::Write;
                let _ = writeln!(out, "{}", cfg.to_json());
                0
            }
            Err(e) => {
                use io::Write;
                let _ = writeln!(err, "error: {e}");
                EXIT_CONFIG
            }
        },
    };
    ExitCode::from(code as u8)
}
