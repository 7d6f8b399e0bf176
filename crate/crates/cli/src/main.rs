use std::path::PathBuf;
use std::process::ExitCode;

use cartan::job::{self, Format, JobConfig, JobKind};
use cartan::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cartan", version, about = "Classifying Lie algebroids, prolongations and realizations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Job configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct Output {
    /// Seed for every randomized check.
    #[arg(long)]
    seed: Option<u64>,
    /// Write the JSON report here.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a flat algebroid and tabulate its isotropy.
    CheckAlgebroid(Common),
    /// Prolongation tower of a matrix Lie algebra.
    Prolong(Common),
    /// Invariants and classifying algebroid of a coframe.
    Coframe(Common),
    /// Generalized Maurer-Cartan residual of an algebroid-valued form.
    McCheck(Common),
    /// Algebroid of a G-structure realization problem.
    Gstructure(Common),
    /// Finite-difference check of a realization.
    VerifyRealization {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Maurer-Cartan realization of an anchor-zero fiber.
    Realize {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Base point as name=value pairs, e.g. `k=1`.
        #[arg(long)]
        fiber: Option<String>,
        /// Half-width of the exponential chart.
        #[arg(long = "box")]
        half_width: Option<f64>,
        #[command(flatten)]
        out: Output,
    },
    /// Numeric same-orbit search.
    Orbit(Common),
    /// Isotropy algebras at given points.
    Isotropy(Common),
}

fn is_config_error(e: &Error) -> bool {
    matches!(
        e,
        Error::Config(_)
            | Error::Syntax { .. }
            | Error::UndeclaredVariable(_)
            | Error::InvalidChart(_)
            | Error::Io(_)
            | Error::Dimension(_)
            | Error::OutsideChart(_)
    )
}

fn load(kind: JobKind, common: &Common) -> Result<JobConfig, Error> {
    job::load_config(&common.config, Some(kind))
}

fn prepare(cli: Cli) -> Result<(JobConfig, Output), Error> {
    let kind_of = |c: &Command| match c {
        Command::CheckAlgebroid(_) => JobKind::CheckAlgebroid,
        Command::Prolong(_) => JobKind::Prolong,
        Command::Coframe(_) => JobKind::Coframe,
        Command::McCheck(_) => JobKind::McCheck,
        Command::Gstructure(_) => JobKind::Gstructure,
        Command::VerifyRealization { .. } => JobKind::VerifyRealization,
        Command::Realize { .. } => JobKind::Realize,
        Command::Orbit(_) => JobKind::Orbit,
        Command::Isotropy(_) => JobKind::Isotropy,
    };
    let kind = kind_of(&cli.command);
    match cli.command {
        Command::CheckAlgebroid(c)
        | Command::Prolong(c)
        | Command::Coframe(c)
        | Command::McCheck(c)
        | Command::Gstructure(c)
        | Command::Orbit(c)
        | Command::Isotropy(c) => Ok((load(kind, &c)?, c.out)),
        Command::VerifyRealization { common, samples } => {
            let mut cfg = load(kind, &common)?;
            if let Some(n) = samples {
                cfg.set_samples(n)?;
            }
            Ok((cfg, common.out))
        }
        Command::Realize {
            config,
            fiber,
            half_width,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => job::load_config(&p, Some(kind))?,
                None => JobConfig::default_realize(),
            };
            if let Some(f) = fiber {
                cfg.set_fiber(&job::parse_assignments(&f)?)?;
            }
            if let Some(w) = half_width {
                cfg.set_box(w)?;
            }
            Ok((cfg, out))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut cfg, out) = match prepare(cli) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("cartan: {e}");
            return ExitCode::from(3);
        }
    };
    if let Some(seed) = out.seed {
        cfg.seed = seed;
    }
    for w in &cfg.warnings {
        eprintln!("warning: {w}");
    }
    let report = match job::run_job(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cartan {}: {e}", cfg.kind());
            return ExitCode::from(if is_config_error(&e) { 3 } else { 1 });
        }
    };
    print!("{}", report.to_markdown());
    if let Some(path) = out.json {
        if let Err(e) = job::emit_report(&report, Format::Json, &path) {
            eprintln!("cartan: {e}");
            return ExitCode::from(3);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
