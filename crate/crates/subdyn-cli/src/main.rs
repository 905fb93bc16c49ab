//! `subdyn` — residual-check campaigns, jet transforms, and particle
//! simulation for submanifold dynamics.
//!
//! Exit codes: 0 success, 1 check failure, 2 usage/config error, 3 numeric
//! failure.

mod scenario;
mod transform;

use clap::{Parser, Subcommand};
use scenario::{OutputFormat, Scenario};
use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Error carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid usage, configuration, or payloads (exit 2).
    Usage(String),
    /// Numeric or runtime failure during computation (exit 3).
    Numeric(String),
}

impl CliError {
    pub fn usage(msg: String) -> Self {
        Self::Usage(msg)
    }

    fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Usage(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Numeric(msg) => f.write_str(msg),
        }
    }
}

impl From<subdyn::Error> for CliError {
    fn from(e: subdyn::Error) -> Self {
        match e {
            subdyn::Error::Config(_) => CliError::Usage(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Numeric(format!("i/o failure: {e}"))
    }
}

#[derive(Parser)]
#[command(name = "subdyn", version, about = "Lagrangian and Hamiltonian dynamics of submanifolds: identity checks, jet transforms, and trajectory integration")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ScenarioArgs {
    /// Scenario config JSON.
    #[arg(long)]
    config: PathBuf,
    /// Override the sampling seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the per-check sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Override every check tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Output path (report JSON, or trajectory file for `simulate`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Trajectory output format for `simulate`.
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the residual-check campaigns selected by the scenario.
    Check(ScenarioArgs),
    /// Apply a jet transformation law, lift, or projection to a jet payload.
    Transform {
        #[command(flatten)]
        args: transform::TransformArgs,
        /// Output path for the echo envelope (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate a particle worldline and write the trajectory.
    Simulate(ScenarioArgs),
    /// Audit forward-mode derivatives against finite differences.
    GradCheck(ScenarioArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Check(args) => cmd_check(&args),
        Command::Transform { args, out } => cmd_transform(&args, out.as_deref()),
        Command::Simulate(args) => cmd_simulate(&args),
        Command::GradCheck(args) => cmd_grad_check(&args),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn load_scenario(args: &ScenarioArgs) -> Result<Scenario, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.config.display())))?;
    let mut scenario = Scenario::from_json(&text)?;
    if let Some(seed) = args.seed {
        scenario.sampling.seed = seed;
    }
    if let Some(samples) = args.samples {
        scenario.sampling.count = samples;
    }
    Ok(scenario)
}

fn report_out_path(args: &ScenarioArgs, scenario: &Scenario) -> Option<PathBuf> {
    args.out
        .clone()
        .or_else(|| scenario.output.path.as_ref().map(PathBuf::from))
}

fn emit_report(report: &subdyn::check::Report, path: Option<&Path>) -> Result<ExitCode, CliError> {
    print!("{}", report.table());
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    if let Some(path) = path {
        fs::write(path, json + "\n")?;
    }
    Ok(if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_check(args: &ScenarioArgs) -> Result<ExitCode, CliError> {
    let scenario = load_scenario(args)?;
    let report = scenario.run_checks(args.tol)?;
    emit_report(&report, report_out_path(args, &scenario).as_deref())
}

fn cmd_grad_check(args: &ScenarioArgs) -> Result<ExitCode, CliError> {
    let mut scenario = load_scenario(args)?;
    scenario.checks = vec!["grad-audit".into()];
    let report = scenario.run_checks(args.tol)?;
    emit_report(&report, report_out_path(args, &scenario).as_deref())
}

fn cmd_transform(args: &transform::TransformArgs, out: Option<&Path>) -> Result<ExitCode, CliError> {
    let payload = if args.input == "-" {
        let mut buf = String::new();
        std::io::stdin().read_to_string(&mut buf)?;
        buf
    } else {
        fs::read_to_string(&args.input)
            .map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.input)))?
    };
    let envelope = transform::run(args, &payload)?;
    let text = serde_json::to_string_pretty(&envelope).expect("envelope serializes");
    match out {
        Some(path) => fs::write(path, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(args: &ScenarioArgs) -> Result<ExitCode, CliError> {
    let scenario = load_scenario(args)?;
    let trajectory = scenario.run_simulation()?;

    let momentum_note = momentum_drift(&scenario, &trajectory);
    println!(
        "integrated {} steps of {} (model {})",
        trajectory.samples.len() - 1,
        trajectory.step,
        trajectory.model
    );
    println!(
        "constraint drift: max pre-projection {:.3e}, {} projections applied",
        trajectory.drift.max_pre_projection, trajectory.drift.projections
    );
    if let Some(drift) = momentum_note {
        println!("momentum conservation: max component drift {drift:.3e}");
    }

    let format = args
        .format
        .or(scenario.output.format)
        .unwrap_or(OutputFormat::Csv);
    let path = report_out_path(args, &scenario);
    match (&path, format) {
        (Some(path), OutputFormat::Csv) => {
            let mut buf = Vec::new();
            trajectory.write_csv(&mut buf)?;
            fs::write(path, buf)?;
        }
        (Some(path), OutputFormat::Json) => {
            let json = serde_json::to_string_pretty(&trajectory.to_json()).expect("serializes");
            fs::write(path, json + "\n")?;
        }
        (None, OutputFormat::Csv) => {
            let mut stdout = std::io::stdout();
            trajectory.write_csv(&mut stdout)?;
        }
        (None, OutputFormat::Json) => {
            println!(
                "{}",
                serde_json::to_string_pretty(&trajectory.to_json()).expect("serializes")
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Max drift of the covariant momentum components along a free worldline
/// (they are exactly conserved by translation symmetry).
fn momentum_drift(scenario: &Scenario, trajectory: &subdyn::dynamics::Trajectory) -> Option<f64> {
    if scenario.model != "free-particle" {
        return None;
    }
    let metric = scenario.build_config().ok()?.metric;
    let first = trajectory.samples.first()?;
    let p0 = metric.g() * &first.v;
    let mut worst = 0.0f64;
    for s in &trajectory.samples {
        let p = metric.g() * &s.v;
        worst = worst.max((&p - &p0).abs().max());
    }
    Some(worst)
}
