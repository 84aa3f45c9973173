use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fiberae::commands::{self, Context, DetectorKind, Source};
use fiberae::config::RunConfig;
use fiberae::core::eval::power_grid;
use fiberae::{Error, Result};

/// Autoencoder learning over a memoryless nonlinear fiber channel.
#[derive(Parser)]
#[command(name = "fiberae", version)]
struct Cli {
    /// Run configuration (TOML); defaults apply to missing keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed, overriding channel.seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory, overriding paths.outputs.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Powers {
    /// Launch power in dBm; repeatable.
    #[arg(long = "power", allow_negative_numbers = true)]
    power: Vec<f64>,
    /// Inclusive grid start:step:stop in dBm.
    #[arg(long = "powers", allow_hyphen_values = true)]
    powers: Option<String>,
}

impl Powers {
    fn resolve(&self) -> Result<Vec<f64>> {
        let mut out = self.power.clone();
        if let Some(spec) = &self.powers {
            let parts: Vec<f64> = spec
                .split(':')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Usage(format!("--powers {spec:?}: {e}")))?;
            let [start, step, stop] = parts[..] else {
                return Err(Error::Usage(format!("--powers {spec:?}: expected start:step:stop")));
            };
            out.extend(power_grid(start, step, stop)?);
        }
        if out.is_empty() {
            return Err(Error::Usage("give --power or --powers".into()));
        }
        Ok(out)
    }

    fn single(&self) -> Result<f64> {
        match self.resolve()?[..] {
            [p] => Ok(p),
            _ => Err(Error::Usage("this command takes exactly one power".into())),
        }
    }
}

#[derive(ValueEnum, Clone, Copy)]
enum SourceArg {
    Qam,
    Ae,
}

#[derive(ValueEnum, Clone, Copy)]
enum DetectorArg {
    Ae,
    Ml,
    Mindist,
}

impl From<SourceArg> for Source {
    fn from(s: SourceArg) -> Self {
        match s {
            SourceArg::Qam => Source::Qam,
            SourceArg::Ae => Source::Ae,
        }
    }
}

impl From<DetectorArg> for DetectorKind {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Ae => DetectorKind::Ae,
            DetectorArg::Ml => DetectorKind::Ml,
            DetectorArg::Mindist => DetectorKind::MinDistance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train one autoencoder per power and write checkpoints.
    Train {
        #[command(flatten)]
        powers: Powers,
    },
    /// Symbol error rate sweep.
    Ser {
        #[command(flatten)]
        powers: Powers,
        #[arg(long, value_enum, default_value = "qam")]
        source: SourceArg,
        #[arg(long, value_enum, default_value = "ml")]
        detector: DetectorArg,
        /// Directory for reusable oracle sample clouds.
        #[arg(long)]
        oracle_cache: Option<PathBuf>,
    },
    /// Achievable information rate of trained models.
    Air {
        #[command(flatten)]
        powers: Powers,
        /// External curves merged into air_overlay.csv.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Mutual information under the likelihood oracle.
    Mi {
        #[command(flatten)]
        powers: Powers,
        #[arg(long, value_enum, default_value = "qam")]
        source: SourceArg,
        #[arg(long)]
        oracle_cache: Option<PathBuf>,
    },
    /// Rasterize decision regions at one power.
    Regions {
        #[command(flatten)]
        powers: Powers,
        #[arg(long, value_enum, default_value = "ae")]
        source: SourceArg,
        #[arg(long, value_enum, default_value = "ae")]
        detector: DetectorArg,
        #[arg(long)]
        oracle_cache: Option<PathBuf>,
    },
    /// Finite-difference check of every gradient path.
    Gradcheck,
    /// Write the constellation of the model trained at one power.
    ExportConstellation {
        #[command(flatten)]
        powers: Powers,
    },
    /// Print the resolved configuration.
    Config,
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let mut ctx = Context::new(config, cli.seed, cli.out, cli.threads)?;
    let print = |paths: &[PathBuf]| paths.iter().for_each(|p| println!("{}", p.display()));
    match cli.command {
        Command::Train { powers } => print(&commands::cmd_train(&ctx, &powers.resolve()?)?),
        Command::Ser { powers, source, detector, oracle_cache } => {
            ctx.oracle_cache = oracle_cache;
            print(&[commands::cmd_ser(&ctx, source.into(), detector.into(), &powers.resolve()?)?])
        }
        Command::Air { powers, overlay } => print(&commands::cmd_air(&ctx, &powers.resolve()?, overlay.as_deref())?),
        Command::Mi { powers, source, oracle_cache } => {
            ctx.oracle_cache = oracle_cache;
            print(&[commands::cmd_mi(&ctx, source.into(), &powers.resolve()?)?])
        }
        Command::Regions { powers, source, detector, oracle_cache } => {
            ctx.oracle_cache = oracle_cache;
            print(&commands::cmd_regions(&ctx, source.into(), detector.into(), powers.single()?)?)
        }
        Command::Gradcheck => {
            let result = commands::cmd_gradcheck(&ctx);
            if let Ok((path, checks)) = &result {
                print!("{}", commands::gradcheck_report(checks));
                println!("{}", path.display());
            }
            result?;
        }
        Command::ExportConstellation { powers } => {
            print(&[commands::cmd_export_constellation(&ctx, powers.single()?)?])
        }
        Command::Config => print!("{}", ctx.config.to_toml()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
