use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use presym::report::{
    build_report, exit, exit_code, load_model, render_checks_human, render_kernel_human, run_analysis,
    serialize_report, verification_exit_code, AnalysisOptions, FileOptions, Format,
};

#[derive(Parser)]
#[command(name = "presym", version, about = "Constraint analysis of singular Lagrangians")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full reduction and print the report.
    Analyze(Common),
    /// Run the verification suite and report pass/fail per identity.
    Check(Common),
    /// Print the kernel basis of the presymplectic form and its verification.
    Kernel(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Human,
    Structured,
}

#[derive(Args)]
struct Common {
    /// Model file.
    model: PathBuf,
    #[arg(long, value_enum, default_value = "human")]
    format: FormatArg,
    /// Maximum stabilization level [default: 10].
    #[arg(long)]
    max_levels: Option<usize>,
    /// Surface sample points per zero test [default: 10].
    #[arg(long)]
    samples: Option<usize>,
    /// Seed for sampling and certification points [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Reduce by the generators themselves instead of their squarefree parts.
    #[arg(long)]
    no_radical: bool,
}

fn run(command: Command) -> i32 {
    let (which, args) = match command {
        Command::Analyze(a) => ("analyze", a),
        Command::Check(a) => ("check", a),
        Command::Kernel(a) => ("kernel", a),
    };
    let loaded = match load_model(&args.model) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::MODEL_ERROR;
        }
    };
    let cli_options = FileOptions {
        max_levels: args.max_levels,
        samples: args.samples,
        seed: args.seed,
        radical: args.no_radical.then_some(false),
    };
    let options = AnalysisOptions::resolve(&cli_options, &loaded.options);
    let analysis = match run_analysis(&loaded.model, &options) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code(e.kind);
        }
    };
    let report = build_report(&analysis, Some(&loaded.lagrangian_text));
    let format = match args.format {
        FormatArg::Human => Format::Human,
        FormatArg::Structured => Format::Structured,
    };
    let text = match (which, format) {
        ("analyze", f) => serialize_report(&report, f),
        ("check", Format::Human) => render_checks_human(&report.verification),
        ("check", Format::Structured) => json(&report.verification),
        (_, Format::Human) => {
            let kernel_checks: Vec<_> = report
                .verification
                .iter()
                .filter(|c| analysis.kernel.checks.iter().any(|k| k.name == c.name))
                .cloned()
                .collect();
            format!("{}\n{}", render_kernel_human(&report.kernel), render_checks_human(&kernel_checks))
        }
        (_, Format::Structured) => json(&report.kernel),
    };
    print!("{text}");
    if which == "kernel" {
        verification_exit_code(&analysis.kernel.checks)
    } else {
        verification_exit_code(&analysis.checks)
    }
}

fn json<T: serde::Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(run(cli.command) as u8)
}
