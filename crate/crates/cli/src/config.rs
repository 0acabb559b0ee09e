//! Flat key-value experiment configuration.
//!
//! A config file is TOML with only top-level scalar (or string list) keys.
//! Command-line flags override file values, and every run writes the
//! resolved config next to its outputs.

use std::path::{Path, PathBuf};

use anoma_core::{
    AllocationMethod, ChannelDistribution, GradientMode, LogBase, OptimizerConfig, QuadratureSpec,
    SystemParams,
};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    #[default]
    BitsSweep,
    OptimizerRun,
    CodebookDump,
    TheoremCheck,
    MonteCarloValidate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub power: f64,
    pub tau: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Bits per user for single-resolution scenarios.
    pub bits: u32,
    pub bits_min: u32,
    pub bits_max: u32,
    pub variants: Vec<String>,
    pub optimize_variants: Vec<String>,
    pub step_size: f64,
    pub max_iterations: usize,
    pub backtracking: bool,
    pub gradient_mode: String,
    pub samples: u64,
    pub theorem_samples: u64,
    pub seed: u64,
    /// Logarithm in the uniform quantizer's maximum-level equation.
    pub log_base: String,
    pub quadrature_nodes: usize,
    pub output: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            scenario: Scenario::BitsSweep,
            power: 10.0,
            tau: 0.5,
            lambda1: 0.5,
            lambda2: 1.0,
            bits: 3,
            bits_min: 1,
            bits_max: 8,
            variants: AllocationMethod::ALL
                .iter()
                .map(|m| m.name().to_string())
                .collect(),
            optimize_variants: vec!["noma".into(), "anoma_z05".into()],
            step_size: 0.05,
            max_iterations: 500,
            backtracking: true,
            gradient_mode: "analytic".into(),
            samples: 1_000_000,
            theorem_samples: 10_000,
            seed: 1,
            log_base: "natural".into(),
            quadrature_nodes: 512,
            output: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).context("parsing experiment config")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config fields are all serializable")
    }

    pub fn params(&self) -> Result<SystemParams> {
        Ok(SystemParams::new(self.power, self.tau)?)
    }

    pub fn distributions(&self) -> Result<(ChannelDistribution, ChannelDistribution)> {
        Ok((
            ChannelDistribution::new(self.lambda1)?,
            ChannelDistribution::new(self.lambda2)?,
        ))
    }

    fn parse_variants(list: &[String]) -> Result<Vec<AllocationMethod>> {
        if list.is_empty() {
            bail!("variant list is empty");
        }
        list.iter()
            .map(|s| s.parse::<AllocationMethod>().map_err(anyhow::Error::msg))
            .collect()
    }

    pub fn variant_list(&self) -> Result<Vec<AllocationMethod>> {
        Self::parse_variants(&self.variants)
    }

    pub fn optimize_variant_list(&self) -> Result<Vec<AllocationMethod>> {
        Self::parse_variants(&self.optimize_variants)
    }

    pub fn log_base(&self) -> Result<LogBase> {
        self.log_base.parse().map_err(anyhow::Error::msg)
    }

    pub fn quadrature(&self) -> QuadratureSpec {
        QuadratureSpec {
            nodes: self.quadrature_nodes,
            ..QuadratureSpec::default()
        }
    }

    pub fn optimizer(&self, variant: AllocationMethod) -> Result<OptimizerConfig> {
        let gradient_mode: GradientMode = self.gradient_mode.parse().map_err(anyhow::Error::msg)?;
        let cfg = OptimizerConfig {
            step_size: self.step_size,
            max_iterations: self.max_iterations,
            variant,
            gradient_mode,
            backtracking: self.backtracking,
            ..OptimizerConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Check every field that can be checked without running anything.
    pub fn validate(&self) -> Result<()> {
        self.params()?;
        self.distributions()?;
        self.variant_list()?;
        self.optimize_variant_list()?;
        self.log_base()?;
        self.optimizer(AllocationMethod::NomaClosedForm)?;
        if self.bits_min > self.bits_max {
            bail!("bits range is empty: {}..={}", self.bits_min, self.bits_max);
        }
        if self.bits_max > 16 || self.bits > 16 {
            bail!("at most 16 bits per user are supported");
        }
        if self.samples == 0 || self.theorem_samples == 0 {
            bail!("sample counts must be positive");
        }
        if self.quadrature_nodes < 2 {
            bail!("quadrature needs at least 2 nodes per axis");
        }
        Ok(())
    }
}
