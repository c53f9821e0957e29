use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use streamflow_cli::commands::{calibrate_cmd, experiment, presets_cmd, Options};
use streamflow_cli::experiment::Kind;

#[derive(Parser)]
#[command(name = "streamflow", version, about = "Transaction-level simulator for systolic-array GEMM offload")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Flags,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment the config describes (a single GEMM by default).
    Run,
    /// Sweep the `sweep.*` axes.
    Sweep,
    /// Simulated time against ideal compute rate.
    Roofline,
    /// Host memory against device memory over non-GEMM fractions.
    Crossover,
    /// Compare the tiled kernel with the reference on random shapes and fixtures.
    ValidateGemm,
    /// Fit knobs to a target file and write a knob file.
    Calibrate,
    /// List available presets.
    Presets,
}

#[derive(Args)]
struct Flags {
    /// Experiment or target file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Named preset from the preset directory.
    #[arg(long, global = true)]
    preset: Option<String>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for independent runs.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Knob file to apply, or for `calibrate` the file to write.
    #[arg(long, global = true)]
    knobs: Option<PathBuf>,
    /// Overwrite an existing knob file.
    #[arg(long, global = true)]
    force: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let f = cli.opts;
    let opts = Options { config: f.config, preset: f.preset, out: f.out, seed: f.seed, jobs: f.jobs, knobs: f.knobs, force: f.force };
    let result = match cli.command {
        Command::Run => experiment(None, &opts),
        Command::Sweep => experiment(Some(Kind::Sweep), &opts),
        Command::Roofline => experiment(Some(Kind::Roofline), &opts),
        Command::Crossover => experiment(Some(Kind::Crossover), &opts),
        Command::ValidateGemm => experiment(Some(Kind::ValidateGemm), &opts),
        Command::Calibrate => calibrate_cmd(&opts),
        Command::Presets => presets_cmd(),
    };
    match result {
        Ok(lines) => {
            for l in lines {
                println!("{l}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
