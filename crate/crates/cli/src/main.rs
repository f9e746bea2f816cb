use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sqpc_core::harness::{
    equation_suite, estimate_detection_curve, render_curve, render_report, run_experiment,
    run_experiment_timed, Attack, ExperimentSpec, ReportFormat, SecretPolicy,
};
use sqpc_core::{HarnessError, ModePolicy, Participant, ProtocolKind};

const EXIT_VALIDATION: u8 = 1;
const EXIT_IO: u8 = 2;

/// Monte Carlo simulator for semi-quantum private comparison sessions.
#[derive(Parser, Debug)]
#[command(name = "sqpc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and write an aggregate report.
    Run(RunArgs),
    /// Check the exact-amplitude double C-NOT suite.
    VerifyEquations,
    /// Detection rate as a function of the number of attacked positions.
    DetectionCurve(CurveArgs),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long = "L", default_value_t = 32)]
    secret_len: usize,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// balanced | coin
    #[arg(long, default_value = "balanced")]
    mode_policy: ModePolicy,
    #[arg(long, default_value_t = 0.0)]
    threshold: f64,
    /// Attacked participant, or the malicious agent's victim.
    #[arg(long, default_value = "alice")]
    target: Participant,
    /// mixed | equal | independent
    #[arg(long, default_value = "mixed")]
    secrets: SecretPolicy,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long, default_value = "jiang")]
    scenario: ProtocolKind,
    #[arg(long, default_value = "none")]
    attack: Attack,
    /// Tap both participants' channels.
    #[arg(long)]
    attack_both: bool,
    /// Attack a random subset of this many positions.
    #[arg(long)]
    attacked_positions: Option<usize>,
    /// Include wall-clock start time and duration in the report.
    #[arg(long)]
    record_timing: bool,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug)]
struct CurveArgs {
    /// blocking | malicious-agent
    #[arg(long, default_value = "blocking")]
    attack: Attack,
    /// Comma-separated attacked-position counts.
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    k: Vec<usize>,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn spec(&self, scenario: ProtocolKind, attack: Attack) -> ExperimentSpec {
        ExperimentSpec {
            secret_len: self.secret_len,
            trials: self.trials,
            seed: self.seed,
            mode_policy: self.mode_policy,
            error_threshold: self.threshold,
            target: self.target,
            secrets: self.secrets,
            ..ExperimentSpec::new(scenario, attack)
        }
    }
}

fn write_output(out: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(args: RunArgs) -> Result<(), HarnessError> {
    let spec = ExperimentSpec {
        attack_both: args.attack_both,
        attacked_positions: args.attacked_positions,
        ..args.common.spec(args.scenario, args.attack)
    };
    let stats = if args.record_timing {
        run_experiment_timed(&spec)?
    } else {
        run_experiment(&spec)?
    };
    write_output(
        args.common.out.as_ref(),
        &render_report(&stats, args.common.format)?,
    )
}

fn detection_curve(args: CurveArgs) -> Result<(), HarnessError> {
    let spec = args.common.spec(ProtocolKind::Improved, args.attack);
    let points = estimate_detection_curve(&spec, &args.k)?;
    write_output(
        args.common.out.as_ref(),
        &render_curve(&spec, &points, args.common.format)?,
    )
}

fn verify_equations() -> ExitCode {
    let checks = equation_suite();
    let mut all = true;
    for c in &checks {
        all &= c.passed;
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    println!(
        "{}/{} checks passed",
        checks.iter().filter(|c| c.passed).count(),
        checks.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::DetectionCurve(args) => detection_curve(args),
        Command::VerifyEquations => return verify_equations(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_IO
            })
        }
    }
}
