use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use maslov_cli::{run, Command, JobSpec, Profile};

#[derive(Parser)]
#[command(name = "maslov", version, about = "Maslov, Kashiwara, Leray and Hormander indices and spectral flow")]
struct Cli {
    #[arg(value_enum)]
    command: CommandArg,
    /// JSON problem description.
    #[arg(long, short)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ProfileArg::Default)]
    tolerance_profile: ProfileArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Divides the maximal step between path samples.
    #[arg(long, default_value_t = 1.0, value_parser = at_least_one)]
    refine_factor: f64,
    /// CSV file for the eigenphase or eigenvalue trace.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CommandArg {
    Maslov,
    UnitaryMaslov,
    Crossings,
    Kashiwara,
    ComplexKashiwara,
    Leray,
    Hormander,
    PairMaslov,
    Reduce,
    SpectralFlow,
    VerifyCoincidence,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileArg {
    Strict,
    Default,
    Loose,
}

fn at_least_one(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v >= 1.0 => Ok(v),
        _ => Err(format!("expected a number >= 1, got {s}")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        CommandArg::Maslov => Command::Maslov,
        CommandArg::UnitaryMaslov => Command::UnitaryMaslov,
        CommandArg::Crossings => Command::Crossings,
        CommandArg::Kashiwara => Command::Kashiwara,
        CommandArg::ComplexKashiwara => Command::ComplexKashiwara,
        CommandArg::Leray => Command::Leray,
        CommandArg::Hormander => Command::Hormander,
        CommandArg::PairMaslov => Command::PairMaslov,
        CommandArg::Reduce => Command::Reduce,
        CommandArg::SpectralFlow => Command::SpectralFlow,
        CommandArg::VerifyCoincidence => Command::VerifyCoincidence,
    };
    let profile = match cli.tolerance_profile {
        ProfileArg::Strict => Profile::Strict,
        ProfileArg::Default => Profile::Default,
        ProfileArg::Loose => Profile::Loose,
    };
    let spec = JobSpec { command, input: cli.input, profile, seed: cli.seed, refine_factor: cli.refine_factor, trace: cli.trace };
    let out = run(&spec);
    println!("{}", out.report);
    ExitCode::from(out.code as u8)
}
