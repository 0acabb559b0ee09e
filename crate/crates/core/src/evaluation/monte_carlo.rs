//! Seeded Monte Carlo over channel realizations.
//!
//! Samples are drawn in fixed-size blocks; block `k` uses a ChaCha8 stream
//! seeded with `seed` on stream `k`, and block statistics are merged in
//! block order. The output therefore depends only on `(seed, n_samples,
//! block_size)`, not on how many threads run the blocks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use super::ChannelDistribution;
use crate::allocation::{alpha_raw, sic_user, AllocationMethod, User, DEFAULT_EXACT_TOL};
use crate::error::{Error, Result};
use crate::model::{strong_rate, weak_rate, SystemParams};
use crate::quantizer::QuantizerCodebook;

/// Name of the generator, recorded alongside seeded outputs.
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), one stream per block";

/// Relative slack when comparing a scheduled rate to the channel capacity.
const OUTAGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub n_samples: u64,
    pub seed: u64,
    pub block_size: u64,
}

impl MonteCarloConfig {
    pub fn new(n_samples: u64, seed: u64) -> Self {
        Self {
            n_samples,
            seed,
            block_size: 1 << 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloResult {
    /// Sample mean of the scheduled max-min rate `R*(H̃1, H̃2)`.
    pub estimate: f64,
    pub standard_error: f64,
    /// Transmissions whose scheduled rate exceeded the capacity of the
    /// user's true channel.
    pub outage_count: u64,
    /// Realizations where the SIC user chosen from quantized gains has the
    /// smaller true gain.
    pub order_mismatch_count: u64,
    pub n_samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
    outages: u64,
    mismatches: u64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * other.n as f64 / n as f64;
        let m2 = self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        Moments {
            n,
            mean,
            m2,
            outages: self.outages + other.outages,
            mismatches: self.mismatches + other.mismatches,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub fn monte_carlo(
    cb1: &QuantizerCodebook,
    cb2: &QuantizerCodebook,
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
    n_samples: u64,
    seed: u64,
) -> Result<MonteCarloResult> {
    monte_carlo_with(
        cb1,
        cb2,
        d1,
        d2,
        params,
        variant,
        &MonteCarloConfig::new(n_samples, seed),
    )
}

/// Draw gains, quantize them, let the base station allocate power and SIC
/// order from the quantized values, and compare the scheduled rates with
/// what the true channels support.
pub fn monte_carlo_with(
    cb1: &QuantizerCodebook,
    cb2: &QuantizerCodebook,
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    variant: AllocationMethod,
    config: &MonteCarloConfig,
) -> Result<MonteCarloResult> {
    if config.n_samples == 0 || config.block_size == 0 {
        return Err(Error::InvalidConfig(
            "Monte Carlo needs at least one sample and a positive block size".into(),
        ));
    }
    let exp1 = Exp::new(d1.rate_param()).expect("validated rate");
    let exp2 = Exp::new(d2.rate_param()).expect("validated rate");
    let rate_params = variant.effective_params(params);
    let power = params.total_power();
    let q = rate_params.q_factor();
    let n_blocks = config.n_samples.div_ceil(config.block_size);

    let blocks: Vec<Result<Moments>> = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(block);
            let start = block * config.block_size;
            let len = config.block_size.min(config.n_samples - start);
            let mut m = Moments::default();
            for _ in 0..len {
                let h1: f64 = exp1.sample(&mut rng);
                let h2: f64 = exp2.sample(&mut rng);
                let (q1, q2) = (cb1.quantize(h1), cb2.quantize(h2));
                let alpha = alpha_raw(variant, q1, q2, params, DEFAULT_EXACT_TOL)?;
                let (strong_true, strong_q, weak_true, weak_q) = match sic_user(q1, q2) {
                    User::User1 => (h1, q1, h2, q2),
                    User::User2 => (h2, q2, h1, q1),
                };
                let scheduled_strong = strong_rate(strong_q, alpha, power);
                let scheduled_weak = weak_rate(weak_q, alpha, power, q);
                let cap_strong = strong_rate(strong_true, alpha, power);
                let cap_weak = weak_rate(weak_true, alpha, power, q);
                if scheduled_strong > cap_strong + OUTAGE_SLACK * cap_strong.max(1.0) {
                    m.outages += 1;
                }
                if scheduled_weak > cap_weak + OUTAGE_SLACK * cap_weak.max(1.0) {
                    m.outages += 1;
                }
                if strong_true < weak_true {
                    m.mismatches += 1;
                }
                m.push(scheduled_strong);
            }
            Ok(m)
        })
        .collect();

    let mut total = Moments::default();
    for b in blocks {
        total = total.merge(b?);
    }
    let variance = if total.n > 1 {
        total.m2 / (total.n - 1) as f64
    } else {
        0.0
    };
    Ok(MonteCarloResult {
        estimate: total.mean,
        standard_error: (variance / total.n as f64).sqrt(),
        outage_count: total.outages,
        order_mismatch_count: total.mismatches,
        n_samples: total.n,
        seed: config.seed,
    })
}

/// Plain Monte Carlo mean of `f(H1, H2)` with its standard error; used to
/// check the full-CSI quadrature.
pub fn monte_carlo_mean<F>(
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    config: &MonteCarloConfig,
    f: F,
) -> (f64, f64)
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    let exp1 = Exp::new(d1.rate_param()).expect("validated rate");
    let exp2 = Exp::new(d2.rate_param()).expect("validated rate");
    let n_blocks = config.n_samples.div_ceil(config.block_size);
    let total = (0..n_blocks)
        .into_par_iter()
        .map(|block| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(block);
            let len = config
                .block_size
                .min(config.n_samples - block * config.block_size);
            let mut m = Moments::default();
            for _ in 0..len {
                let h1: f64 = rng.sample(exp1);
                let h2: f64 = rng.sample(exp2);
                m.push(f(h1, h2));
            }
            m
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Moments::default(), Moments::merge);
    let var = if total.n > 1 {
        total.m2 / (total.n - 1) as f64
    } else {
        0.0
    };
    (total.mean, (var / total.n as f64).sqrt())
}
