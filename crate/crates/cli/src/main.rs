//! `berry` — experiments on exact and adiabatic geometric phases of the
//! two-level level-crossing model.
//!
//! One subcommand per experiment; parameters come from an optional JSON
//! config overridden by flags. Exit codes: 0 success, 2 configuration error,
//! 3 numeric error (degenerate point, undefined phase), 4 I/O error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use berry_core::experiments::{
    gnuplot_script, run_experiment, write_output, ExperimentConfig, ExperimentKind, OutputFormat,
};
use berry_core::propagator::Scheme;
use berry_core::Error;

#[derive(Parser)]
#[command(
    name = "berry",
    version,
    about = "Exact and adiabatic geometric phases near a two-level crossing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sweep grT and tabulate the exact minus-level geometric phase
    Sweep(RunArgs),
    /// Full phase report for a single circle
    Phase(RunArgs),
    /// Original-vs-effective propagation discrepancy over the bundled paths
    Equivalence(RunArgs),
    /// Real-plane loop eigenvector sign rule, adiabatic vs near-crossing
    #[command(name = "sign-rule")]
    SignRule(RunArgs),
    /// Finite-difference validation of the closed-form connection
    #[command(name = "connection-check")]
    ConnectionCheck(RunArgs),
    /// Rotated-picture phases: the geometric factor is trivial mod 2pi
    #[command(name = "c-basis")]
    CBasis(RunArgs),
}

impl Command {
    fn kind(&self) -> ExperimentKind {
        match self {
            Command::Sweep(_) => ExperimentKind::Sweep,
            Command::Phase(_) => ExperimentKind::Phase,
            Command::Equivalence(_) => ExperimentKind::Equivalence,
            Command::SignRule(_) => ExperimentKind::SignRule,
            Command::ConnectionCheck(_) => ExperimentKind::ConnectionCheck,
            Command::CBasis(_) => ExperimentKind::CBasis,
        }
    }

    fn args(&self) -> &RunArgs {
        match self {
            Command::Sweep(a)
            | Command::Phase(a)
            | Command::Equivalence(a)
            | Command::SignRule(a)
            | Command::ConnectionCheck(a)
            | Command::CBasis(a) => a,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment config; flags below override its fields
    #[arg(long)]
    config: Option<PathBuf>,

    /// Path radius |y|
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    /// Polar angle of the circle [rad]
    #[arg(long, allow_negative_numbers = true)]
    theta: Option<f64>,
    /// Sweep duration T
    #[arg(long = "T", visible_alias = "t-total", allow_negative_numbers = true)]
    t_total: Option<f64>,
    /// Azimuthal revolutions
    #[arg(long)]
    revolutions: Option<u32>,
    /// Common energy shift E(t) = e_shift
    #[arg(long, allow_negative_numbers = true)]
    e_shift: Option<f64>,
    /// Coupling constant g
    #[arg(long, allow_negative_numbers = true)]
    g: Option<f64>,
    /// Path sample count
    #[arg(long)]
    n_samples: Option<usize>,

    /// Integrator steps
    #[arg(long)]
    n_steps: Option<usize>,
    /// Stepping scheme: midpoint-exponential | naive-euler
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<Scheme>,

    /// Sweep control quantity (only "grT")
    #[arg(long)]
    quantity: Option<String>,
    /// log10 of the smallest control value
    #[arg(long, allow_negative_numbers = true)]
    log_min: Option<f64>,
    /// log10 of the largest control value
    #[arg(long, allow_negative_numbers = true)]
    log_max: Option<f64>,
    /// Sweep grid size
    #[arg(long)]
    points: Option<usize>,

    /// Output format: csv | json
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Output file; "-" streams to standard output
    #[arg(long)]
    output: Option<String>,
    /// Significant decimal digits in CSV floats
    #[arg(long)]
    precision: Option<usize>,
    /// Also write a companion gnuplot script here
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

fn parse_scheme(s: &str) -> Result<Scheme, String> {
    match s {
        "midpoint-exponential" => Ok(Scheme::MidpointExponential),
        "naive-euler" => Ok(Scheme::NaiveEuler),
        other => Err(format!(
            "unknown scheme '{other}', expected midpoint-exponential | naive-euler"
        )),
    }
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    match s {
        "csv" => Ok(OutputFormat::Csv),
        "json" => Ok(OutputFormat::Json),
        other => Err(format!("unknown format '{other}', expected csv | json")),
    }
}

fn build_config(kind: ExperimentKind, args: &RunArgs) -> Result<ExperimentConfig, Error> {
    let mut cfg = match &args.config {
        Some(file) => {
            let text = std::fs::read_to_string(file).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", file.display()))
            })?;
            let cfg = ExperimentConfig::from_json(&text)?;
            if cfg.experiment != kind {
                return Err(Error::Config(format!(
                    "config file selects experiment '{}' but the subcommand is '{}'",
                    cfg.experiment.tag(),
                    kind.tag()
                )));
            }
            cfg
        }
        None => ExperimentConfig::new(kind),
    };
    if let Some(v) = args.r {
        cfg.path.r = v;
    }
    if let Some(v) = args.theta {
        cfg.path.theta = v;
    }
    if let Some(v) = args.t_total {
        cfg.path.t_total = v;
    }
    if let Some(v) = args.revolutions {
        cfg.path.revolutions = v;
    }
    if let Some(v) = args.e_shift {
        cfg.path.e_shift = v;
    }
    if let Some(v) = args.g {
        cfg.path.g = v;
    }
    if let Some(v) = args.n_samples {
        cfg.path.n_samples = v;
    }
    if let Some(v) = args.n_steps {
        cfg.integrator.n_steps = v;
    }
    if let Some(v) = args.scheme {
        cfg.integrator.scheme = v;
    }
    if let Some(v) = &args.quantity {
        cfg.sweep.quantity = v.clone();
    }
    if let Some(v) = args.log_min {
        cfg.sweep.log_min = v;
    }
    if let Some(v) = args.log_max {
        cfg.sweep.log_max = v;
    }
    if let Some(v) = args.points {
        cfg.sweep.points = v;
    }
    if let Some(v) = args.format {
        cfg.output.format = v;
    }
    if let Some(v) = &args.output {
        cfg.output.file = Some(v.clone());
    }
    if let Some(v) = args.precision {
        cfg.output.precision = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), Error> {
    let kind = cli.command.kind();
    let args = cli.command.args();
    let cfg = build_config(kind, args)?;
    let output = run_experiment(&cfg)?;
    write_output(&cfg, &output)?;
    if let Some(gp) = &args.gnuplot {
        if kind != ExperimentKind::Sweep {
            return Err(Error::Config(
                "--gnuplot is only available for the sweep experiment".into(),
            ));
        }
        let data = cfg.output.file.clone().unwrap_or_else(|| "-".into());
        if data == "-" {
            return Err(Error::Config(
                "--gnuplot needs a file output, not standard output".into(),
            ));
        }
        std::fs::write(gp, gnuplot_script(&data, cfg.output.format))?;
    }
    Ok(())
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("berry: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
