//! Average max-min rate under exponential channel gains.
//!
//! With quantized feedback the rate only depends on which pair of bins the
//! two gains fall into, so the expectation is an exact finite sum over bin
//! pairs. The full-CSI rate has no closed form and is integrated
//! numerically; the Monte Carlo harness checks both and the outage-freedom
//! of the quantizer end to end.

mod monte_carlo;
pub mod quadrature;

use std::io::{self, Write};

use crate::allocation::{alpha_raw, maxmin_rate_raw, AllocationMethod, DEFAULT_EXACT_TOL};
use crate::error::{Error, Result};
use crate::model::SystemParams;
use crate::quantizer::QuantizerCodebook;

pub use monte_carlo::{
    monte_carlo, monte_carlo_mean, monte_carlo_with, MonteCarloConfig, MonteCarloResult,
    RNG_ALGORITHM,
};
pub use quadrature::QuadratureSpec;

/// Exponential law of a channel gain with rate `λ` (density `λe^{−λx}`,
/// mean `1/λ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelDistribution {
    rate_param: f64,
}

impl ChannelDistribution {
    pub fn new(rate_param: f64) -> Result<Self> {
        if rate_param.is_finite() && rate_param > 0.0 {
            Ok(Self { rate_param })
        } else {
            Err(Error::InvalidParameter {
                name: "lambda",
                value: rate_param,
                reason: "must be positive and finite",
            })
        }
    }

    pub fn rate_param(&self) -> f64 {
        self.rate_param
    }

    pub fn mean(&self) -> f64 {
        1.0 / self.rate_param
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            0.0
        } else {
            self.rate_param * (-self.rate_param * x).exp()
        }
    }

    /// `P(H > x)`; zero at `+∞`.
    pub fn survival(&self, x: f64) -> f64 {
        if x <= 0.0 {
            1.0
        } else {
            (-self.rate_param * x).exp()
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            -(-self.rate_param * x).exp_m1()
        }
    }

    /// Inverse CDF for `p ∈ [0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        -(-p).ln_1p() / self.rate_param
    }
}

/// One `(i, j)` term of the bin-pair sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinContribution {
    pub i: usize,
    pub j: usize,
    pub level1: f64,
    pub level2: f64,
    pub alpha: f64,
    /// `R*` at the two levels.
    pub rate: f64,
    /// Joint probability of the bin pair.
    pub mass: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub variant: AllocationMethod,
    pub expected_maxmin: f64,
    /// Full-CSI average, when computed.
    pub full_csi: Option<f64>,
    /// Row-major `(i, j)` contributions, `n1 × n2`.
    pub per_bin: Vec<BinContribution>,
    pub n1: usize,
    pub n2: usize,
}

impl RateReport {
    pub fn contribution(&self, i: usize, j: usize) -> &BinContribution {
        &self.per_bin[i * self.n2 + j]
    }

    pub fn with_full_csi(mut self, full_csi: f64) -> Self {
        self.full_csi = Some(full_csi);
        self
    }

    pub fn distortion(&self) -> Result<f64> {
        distortion(self)
    }

    /// CSV with header `i,j,level1,level2,alpha,rate,mass,contribution`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,level1,level2,alpha,rate,mass,contribution")?;
        for b in &self.per_bin {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                b.i, b.j, b.level1, b.level2, b.alpha, b.rate, b.mass, b.contribution
            )?;
        }
        Ok(())
    }
}

/// Closed-form `E[R*]` for the given codebooks: the sum over bin pairs of
/// `R*(q_i, q_j)` times the joint bin probability.
pub fn expected_rate(
    cb1: &QuantizerCodebook,
    cb2: &QuantizerCodebook,
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
) -> Result<RateReport> {
    let m1 = cb1.bin_masses(d1);
    let m2 = cb2.bin_masses(d2);
    let mut per_bin = Vec::with_capacity(m1.len() * m2.len());
    let mut total = 0.0;
    for (i, (&q1, &p1)) in cb1.levels().iter().zip(&m1).enumerate() {
        for (j, (&q2, &p2)) in cb2.levels().iter().zip(&m2).enumerate() {
            let (alpha, rate) = if q1 > 0.0 && q2 > 0.0 {
                let alpha = alpha_raw(variant, q1, q2, params, DEFAULT_EXACT_TOL)?;
                let rate = crate::model::strong_rate(q1.max(q2), alpha, params.total_power());
                (alpha, rate)
            } else {
                (0.0, 0.0)
            };
            let mass = p1 * p2;
            let contribution = rate * mass;
            total += contribution;
            per_bin.push(BinContribution {
                i,
                j,
                level1: q1,
                level2: q2,
                alpha,
                rate,
                mass,
                contribution,
            });
        }
    }
    Ok(RateReport {
        variant,
        expected_maxmin: total,
        full_csi: None,
        per_bin,
        n1: m1.len(),
        n2: m2.len(),
    })
}

/// `E[R*]` for raw level lists (first level 0, ascending); no report.
pub(crate) fn expected_rate_levels(
    levels1: &[f64],
    levels2: &[f64],
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
    exact_tol: f64,
) -> Result<f64> {
    let m1 = bin_masses_of(levels1, d1);
    let m2 = bin_masses_of(levels2, d2);
    let mut total = 0.0;
    for (&q1, &p1) in levels1.iter().zip(&m1) {
        for (&q2, &p2) in levels2.iter().zip(&m2) {
            if q1 > 0.0 && q2 > 0.0 {
                total += maxmin_rate_raw(variant, q1, q2, params, exact_tol)? * p1 * p2;
            }
        }
    }
    Ok(total)
}

pub(crate) fn bin_masses_of(levels: &[f64], dist: &ChannelDistribution) -> Vec<f64> {
    (0..levels.len())
        .map(|i| {
            let upper = levels.get(i + 1).copied().unwrap_or(f64::INFINITY);
            dist.survival(levels[i]) - dist.survival(upper)
        })
        .collect()
}

/// Full-CSI average with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureEstimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// Full-CSI average and the difference to the same rule at half the node
/// count, used as the error estimate.
pub fn full_csi_estimate(
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
    spec: &QuadratureSpec,
) -> Result<QuadratureEstimate> {
    full_csi_with(d1, d2, spec, |h1, h2| {
        maxmin_rate_raw(variant, h1, h2, params, DEFAULT_EXACT_TOL)
            .expect("exact allocation diverged inside quadrature")
    })
}

pub(crate) fn full_csi_with<F>(
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    spec: &QuadratureSpec,
    f: F,
) -> Result<QuadratureEstimate>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if spec.nodes < 2 || !(spec.tail_mass > 0.0 && spec.tail_mass < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "quadrature needs at least 2 nodes and tail mass in (0, 1), got {spec:?}"
        )));
    }
    let fine = quadrature::integrate_over_channels(d1, d2, spec.nodes, spec.tail_mass, &f);
    let coarse = quadrature::integrate_over_channels(d1, d2, spec.nodes / 2, spec.tail_mass, &f);
    let est = QuadratureEstimate {
        value: fine,
        error_estimate: (fine - coarse).abs(),
    };
    if est.error_estimate.is_nan() || est.error_estimate > spec.max_error {
        return Err(Error::QuadratureNotConverged {
            value: est.value,
            error_estimate: est.error_estimate,
            threshold: spec.max_error,
        });
    }
    Ok(est)
}

/// Average max-min rate with unquantized gains, the upper limit of any
/// finite-feedback scheme.
pub fn full_csi_rate(
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
    spec: &QuadratureSpec,
) -> Result<f64> {
    full_csi_estimate(d1, d2, params, variant, spec).map(|e| e.value)
}

/// Tolerance below zero accepted as rounding before a distortion is
/// reported as inconsistent.
const DISTORTION_SLACK: f64 = 1e-9;

/// `full_csi − expected_maxmin`.
pub fn distortion(report: &RateReport) -> Result<f64> {
    let full = report.full_csi.ok_or(Error::MissingFullCsi)?;
    let d = full - report.expected_maxmin;
    if d < -DISTORTION_SLACK {
        return Err(Error::NegativeDistortion {
            full_csi: full,
            expected: report.expected_maxmin,
        });
    }
    Ok(d.max(0.0))
}
