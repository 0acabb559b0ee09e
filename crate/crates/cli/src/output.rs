//! Writes scenario results into the configured output directory.

use std::fs;
use std::path::Path;

use anoma_core::QuantizerCodebook;
use anyhow::{bail, Context, Result};

use crate::config::{ExperimentConfig, Scenario};
use crate::plot;
use crate::scenarios::{self, ValidationReport};

fn write(dir: &Path, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
}

fn prepare(cfg: &ExperimentConfig) -> Result<&Path> {
    let dir = cfg.output.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    write(dir, "config.toml", cfg.to_toml())?;
    Ok(dir)
}

fn write_codebook_pair(
    dir: &Path,
    tag: &str,
    c1: &QuantizerCodebook,
    c2: &QuantizerCodebook,
) -> Result<()> {
    write(dir, &format!("codebook_{tag}_user1.txt"), c1.to_text())?;
    write(dir, &format!("codebook_{tag}_user2.txt"), c2.to_text())
}

/// Run the scenario named in `cfg` and write its outputs. `codebooks`
/// replaces the uniform baseline for the codebook dump.
///
/// Returns an error naming the failed checks when validation fails, after
/// the report has been written.
pub fn run(
    cfg: &ExperimentConfig,
    codebooks: Option<(QuantizerCodebook, QuantizerCodebook)>,
) -> Result<()> {
    cfg.validate()?;
    let dir = prepare(cfg)?;
    match cfg.scenario {
        Scenario::BitsSweep => {
            let rows = scenarios::run_bits_sweep(cfg)?;
            write(dir, "sweep.csv", scenarios::sweep_csv(&rows))?;
            write(dir, "sweep.gp", plot::sweep_script(&cfg.variant_list()?))?;
        }
        Scenario::OptimizerRun => {
            let runs = scenarios::run_optimizer_experiment(cfg)?;
            write(
                dir,
                "optimize_trace.csv",
                scenarios::optimizer_trace_csv(&runs),
            )?;
            write(
                dir,
                "optimize_summary.csv",
                scenarios::optimizer_summary_csv(&runs),
            )?;
            write(
                dir,
                "optimize_trace.gp",
                plot::optimizer_script(&cfg.optimize_variant_list()?),
            )?;
            for run in &runs {
                let mut buf = Vec::new();
                run.result.trace.write_csv(&mut buf)?;
                write(dir, &format!("trace_{}.csv", run.variant), buf)?;
                write_codebook_pair(
                    dir,
                    run.variant.name(),
                    &run.result.codebook1,
                    &run.result.codebook2,
                )?;
            }
        }
        Scenario::CodebookDump => {
            let dump = scenarios::run_dump_codebook(cfg, codebooks)?;
            write_codebook_pair(dir, "input", &dump.codebook1, &dump.codebook2)?;
            for report in &dump.reports {
                let mut buf = Vec::new();
                report.write_csv(&mut buf)?;
                write(dir, &format!("report_{}.csv", report.variant), buf)?;
            }
            let mut summary = String::from("variant,expected_rate,full_csi,distortion\n");
            for r in &dump.reports {
                summary.push_str(&format!(
                    "{},{},{},{}\n",
                    r.variant,
                    r.expected_maxmin,
                    r.full_csi.unwrap_or(f64::NAN),
                    r.distortion()?
                ));
            }
            write(dir, "report_summary.csv", summary)?;
        }
        Scenario::TheoremCheck => {
            let report = scenarios::run_theorem_check(cfg)?;
            write(dir, "theorem.csv", report.to_csv())?;
            if report.violations() > 0 {
                bail!(
                    "ordering chain violated on {} of {} samples",
                    report.violations(),
                    report.samples.len()
                );
            }
        }
        Scenario::MonteCarloValidate => {
            let report = scenarios::run_validation(cfg)?;
            write_validation(dir, &report)?;
            if !report.passed() {
                bail!("validation failed: {}", report.failing().join(", "));
            }
        }
    }
    Ok(())
}

fn write_validation(dir: &Path, report: &ValidationReport) -> Result<()> {
    write(dir, "validation.csv", report.to_csv())?;
    write(dir, "monte_carlo.csv", report.monte_carlo_csv())
}
