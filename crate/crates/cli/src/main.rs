use std::path::PathBuf;
use std::process::ExitCode;

use anoma_cli::{output, ExperimentConfig, Scenario};
use anoma_core::QuantizerCodebook;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "anoma",
    version,
    about = "Limited-feedback NOMA/ANOMA experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Uniform-quantizer expected rate over a range of feedback bits.
    Sweep(Overrides),
    /// Gradient ascent on the quantization levels from the uniform start.
    Optimize(Overrides),
    /// Per-bin rate report for a codebook pair.
    DumpCodebook {
        #[command(flatten)]
        overrides: Overrides,
        /// Level file for user 1 (uniform baseline when omitted).
        #[arg(long, requires = "codebook2")]
        codebook1: Option<PathBuf>,
        /// Level file for user 2.
        #[arg(long, requires = "codebook1")]
        codebook2: Option<PathBuf>,
    },
    /// Check the power-coefficient ordering on random gain pairs.
    CheckTheorem(Overrides),
    /// Closed form against Monte Carlo plus consistency checks.
    Validate(Overrides),
}

/// Every field is optional and overrides the config file, which in turn
/// overrides the built-in defaults.
#[derive(Args)]
struct Overrides {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    power: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    bits: Option<u32>,
    #[arg(long)]
    bits_min: Option<u32>,
    #[arg(long)]
    bits_max: Option<u32>,
    /// Comma-separated variant names.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    optimize_variants: Option<Vec<String>>,
    #[arg(long)]
    step_size: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    backtracking: Option<bool>,
    /// analytic or finite_difference
    #[arg(long)]
    gradient_mode: Option<String>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    theorem_samples: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// natural or binary
    #[arg(long)]
    log_base: Option<String>,
    #[arg(long)]
    quadrature_nodes: Option<usize>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl Overrides {
    fn resolve(self, scenario: Scenario) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.scenario = scenario;
        macro_rules! apply {
            ($($field:ident),*) => {$(
                if let Some(v) = self.$field { cfg.$field = v; }
            )*};
        }
        apply!(
            power,
            tau,
            lambda1,
            lambda2,
            bits,
            bits_min,
            bits_max,
            variants,
            optimize_variants,
            step_size,
            max_iterations,
            backtracking,
            gradient_mode,
            samples,
            theorem_samples,
            seed,
            log_base,
            quadrature_nodes,
            output
        );
        Ok(cfg)
    }
}

fn read_codebook(path: &PathBuf) -> Result<QuantizerCodebook> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    QuantizerCodebook::from_text(&text).with_context(|| format!("in {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    let (cfg, codebooks) = match cli.command {
        Command::Sweep(o) => (o.resolve(Scenario::BitsSweep)?, None),
        Command::Optimize(o) => (o.resolve(Scenario::OptimizerRun)?, None),
        Command::CheckTheorem(o) => (o.resolve(Scenario::TheoremCheck)?, None),
        Command::Validate(o) => (o.resolve(Scenario::MonteCarloValidate)?, None),
        Command::DumpCodebook {
            overrides,
            codebook1,
            codebook2,
        } => {
            let pair = match (codebook1, codebook2) {
                (Some(a), Some(b)) => Some((read_codebook(&a)?, read_codebook(&b)?)),
                _ => None,
            };
            (overrides.resolve(Scenario::CodebookDump)?, pair)
        }
    };
    output::run(&cfg, codebooks)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
