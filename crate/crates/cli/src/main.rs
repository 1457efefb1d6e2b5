use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use modaldyn_core::scenarios::DEFAULT_COUPLING;

mod commands;
mod error;
mod schema;

use commands::{Format, Mode, ScenarioParams};
use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(
    name = "modaldyn",
    version,
    about = "Open-system dynamics, epistemic states and ontic trajectories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigen-decompose a (sub)system state at one or more times.
    Epistemic(EpistemicCmd),
    /// Conditional-probability table between a parent and its blocks.
    Conditional(ConditionalCmd),
    /// Sample ontic-state trajectories and compare with the eigenvalues.
    Sample(SampleCmd),
    /// Check complete positivity and trace preservation of a channel file.
    VerifyChannel(VerifyCmd),
    /// Write a scenario as JSON.
    Scenario(DumpCmd),
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    /// Built-in name (epr-bohm, ghz, dephasing, damping, von-neumann) or a scenario JSON file.
    #[arg(long)]
    scenario: String,
    /// Rate for the dephasing and damping scenarios.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// Initial qubit state for dephasing/damping: zero, one or plus.
    #[arg(long)]
    rho0: Option<String>,
    /// Environment qubits in the von Neumann scenario.
    #[arg(long, default_value_t = 8)]
    n_env: usize,
    /// Real amplitude of |0> in the von Neumann scenario.
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2, allow_negative_numbers = true)]
    alpha: f64,
    /// Pointer-environment rotation angle in the von Neumann scenario.
    #[arg(long, default_value_t = DEFAULT_COUPLING)]
    coupling: f64,
}

impl ScenarioArgs {
    fn params(&self) -> ScenarioParams {
        ScenarioParams {
            scenario: self.scenario.clone(),
            gamma: self.gamma,
            rho0: self.rho0.clone(),
            n_env: self.n_env,
            alpha: self.alpha,
            coupling: self.coupling,
        }
    }
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Output file; stdout when absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EpistemicCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated labels; defaults to the scenario's first observable.
    #[arg(long, value_delimiter = ',')]
    subsystem: Vec<String>,
    /// Comma-separated times; defaults to the end of the scenario's schedule.
    #[arg(long, value_delimiter = ',')]
    time: Vec<f64>,
    #[arg(long, default_value_t = 1e-12)]
    threshold: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ConditionalCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Blocks separated by ',', labels within a block joined by '+'.
    #[arg(long)]
    blocks: Option<String>,
    #[arg(long, value_enum, default_value_t = Mode::Strict)]
    mode: Mode,
    /// Parent time; defaults to the end of the scenario's schedule.
    #[arg(long)]
    time: Option<f64>,
    /// Length of the evolution between parent and blocks.
    #[arg(long, default_value_t = 0.0)]
    interval: f64,
    #[arg(long, default_value_t = 1e-12)]
    threshold: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct SampleCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Final time of the grid starting at 0.
    #[arg(long = "t", default_value_t = 1.0)]
    t_final: f64,
    #[arg(long, default_value_t = 64)]
    steps: usize,
    /// Number of trajectories.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Base seed; trajectory k uses seed + k.
    #[arg(long, env = "MODALDYN_SEED")]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Strict)]
    mode: Mode,
    #[arg(long, default_value_t = 1e-12)]
    threshold: f64,
    /// Also write every trajectory to this file.
    #[arg(long)]
    trajectory_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct VerifyCmd {
    /// Channel JSON file.
    #[arg(long)]
    channel: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct DumpCmd {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long)]
    output: Option<PathBuf>,
}

fn run(cli: Cli) -> CliResult<u8> {
    match cli.command {
        Command::Epistemic(c) => {
            let scenario = commands::load_scenario(&c.scenario.params())?;
            let body = commands::epistemic(
                &scenario,
                &commands::EpistemicArgs {
                    subsystem: c.subsystem,
                    times: c.time,
                    threshold: c.threshold,
                    format: c.out.format,
                },
            )?;
            commands::emit(c.out.output.as_deref(), &body)?;
            Ok(0)
        }
        Command::Conditional(c) => {
            let scenario = commands::load_scenario(&c.scenario.params())?;
            let (body, normalized) = commands::conditional(
                &scenario,
                &commands::ConditionalArgs {
                    blocks: c
                        .blocks
                        .as_deref()
                        .map(commands::parse_blocks)
                        .unwrap_or_default(),
                    mode: c.mode,
                    time: c.time,
                    interval: c.interval,
                    threshold: c.threshold,
                    format: c.out.format,
                },
            )?;
            commands::emit(c.out.output.as_deref(), &body)?;
            if !normalized {
                return Err(CliError::Numerical(
                    "conditional table failed its normalization checks".into(),
                ));
            }
            Ok(0)
        }
        Command::Sample(c) => {
            let seed = c
                .seed
                .ok_or_else(|| CliError::Config("sampling needs --seed or MODALDYN_SEED".into()))?;
            let scenario = commands::load_scenario(&c.scenario.params())?;
            let (body, trajectories) = commands::sample(
                &scenario,
                &commands::SampleArgs {
                    t_final: c.t_final,
                    steps: c.steps,
                    n: c.n,
                    seed,
                    mode: c.mode,
                    threshold: c.threshold,
                    format: c.out.format,
                    trajectory_out: c.trajectory_out.clone(),
                },
            )?;
            commands::emit(c.out.output.as_deref(), &body)?;
            if let (Some(path), Some(text)) = (c.trajectory_out.as_deref(), trajectories) {
                commands::emit(Some(path), &text)?;
            }
            Ok(0)
        }
        Command::VerifyChannel(c) => {
            let (body, ok) = commands::verify_channel(&c.channel, c.tol, c.out.format)?;
            commands::emit(c.out.output.as_deref(), &body)?;
            Ok(if ok { 0 } else { 5 })
        }
        Command::Scenario(c) => {
            let scenario = commands::load_scenario(&c.scenario.params())?;
            commands::emit(c.output.as_deref(), &commands::dump_scenario(&scenario)?)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
