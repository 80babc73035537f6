use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

mod commands;
mod output;

use output::{CliError, Format};

#[derive(Parser, Debug)]
#[command(
    name = "qdp",
    version,
    about = "Resource estimates and pricing oracles for amplitude-estimation derivative pricing"
)]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file; defaults to stdout, or to <QDP_OUT_DIR>/<command>.<ext> when that is set.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
    #[arg(long, global = true, env = "QDP_OUT_DIR", hide_env_values = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo price of a contract under GBM.
    PriceMc,
    /// Exact expectation over the discretized path lattice.
    PriceExact,
    /// End-to-end T-count, T-depth and qubit estimates.
    EstimateResources {
        #[arg(long)]
        method: Option<String>,
    },
    /// Error-budget breakdown per method.
    ErrorBudget {
        #[arg(long)]
        method: Option<String>,
    },
    /// Oracle-call scaling of simulated amplitude estimation vs classical sampling.
    IqaeDemo,
    /// Train the Ry-CNOT Gaussian loader over a grid of sizes and depths.
    TrainLoader,
    /// Costs of the arithmetic primitives for one register format.
    Qarith,
    /// Both benchmark contracts under every method, beside the published table.
    Table1 {
        #[arg(long)]
        method: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::PriceMc => "price-mc",
            Command::PriceExact => "price-exact",
            Command::EstimateResources { .. } => "estimate-resources",
            Command::ErrorBudget { .. } => "error-budget",
            Command::IqaeDemo => "iqae-demo",
            Command::TrainLoader => "train-loader",
            Command::Qarith => "qarith",
            Command::Table1 { .. } => "table1",
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let format = match cli.format {
        FormatArg::Json => Format::Json,
        FormatArg::Csv => Format::Csv,
    };
    let name = cli.command.name();
    let config = output::RawConfig::load(cli.config.as_deref())?;
    let report = match &cli.command {
        Command::PriceMc => commands::price_mc(&config, cli.seed)?,
        Command::PriceExact => commands::price_exact(&config)?,
        Command::EstimateResources { method } => {
            commands::estimate_resources(&config, method.as_deref())?
        }
        Command::ErrorBudget { method } => commands::error_budget(&config, method.as_deref())?,
        Command::IqaeDemo => commands::iqae_demo(&config, cli.seed)?,
        Command::TrainLoader => commands::train_loader(&config, cli.seed)?,
        Command::Qarith => commands::qarith(&config)?,
        Command::Table1 { method } => commands::table1(&config, method.as_deref())?,
    };
    let target = output::destination(cli.out, cli.out_dir, name, format);
    output::emit(name, cli.seed, &config, report, format, target.as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
