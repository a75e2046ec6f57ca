use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use anosov_lab::config::{ExperimentConfig, Format};
use anosov_lab::run::{run, Command, RunOptions};
use anosov_lab::LabError;

#[derive(Parser)]
#[command(name = "anosov-lab", version, about = "Numerical experiments on discrete subgroups of products of SL(d, R)")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Word radius, overriding the config.
    #[arg(long, global = true)]
    radius: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Functional name from the config.
    #[arg(long, global = true)]
    phi: Option<String>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Subcommand, Clone, Copy)]
enum Cmd {
    /// Ball statistics, faithfulness audit, ping-pong certificate.
    Group,
    /// Cartan projections of the ball.
    Kappa,
    /// Critical exponents per functional.
    Exponent,
    /// Partial sums of the Poincaré series by radius.
    Poincare,
    /// Patterson measure atoms and cocycle residuals.
    Measure,
    /// Cusp graph, hyperbolicity and distance comparisons.
    Cusp,
    /// Critical exponent of a rational integral.
    Integral,
    /// Limit cone and functional positivity.
    Cone,
    /// The analyses listed in the config, checked against its expectations.
    Report,
}

#[derive(ValueEnum, Clone, Copy)]
enum FormatArg {
    Csv,
    Json,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::Group => Command::Group,
            Cmd::Kappa => Command::Kappa,
            Cmd::Exponent => Command::Exponent,
            Cmd::Poincare => Command::Poincare,
            Cmd::Measure => Command::Measure,
            Cmd::Cusp => Command::Cusp,
            Cmd::Integral => Command::Integral,
            Cmd::Cone => Command::Cone,
            Cmd::Report => Command::Report,
        }
    }
}

fn execute(cli: Cli) -> Result<(), LabError> {
    let path = cli.config.ok_or_else(|| LabError::Config("--config is required".into()))?;
    let cfg = ExperimentConfig::load(&path)?;
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| LabError::Config(e.to_string()))?;
    }
    let opts = RunOptions {
        radius: cli.radius,
        seed: cli.seed,
        phi: cli.phi,
    };
    let outcome = run(cli.command.into(), &cfg, &opts)?;
    let format = match cli.format {
        Some(FormatArg::Csv) => Format::Csv,
        Some(FormatArg::Json) => Format::Json,
        None => cfg.output.format,
    };
    match cli.out.or_else(|| cfg.output.dir.as_ref().map(PathBuf::from)) {
        Some(dir) => {
            outcome.write(&dir, format)?;
        }
        None => outcome.write_stdout(format, std::io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = e.exit_code();
            let body = serde_json::json!({ "error": e.kind(), "message": e.to_string(), "exit_code": code });
            let _ = writeln!(std::io::stderr(), "{body}");
            ExitCode::from(code as u8)
        }
    }
}
