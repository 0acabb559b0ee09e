//! Tensor-product Gauss–Legendre quadrature over the positive quadrant
//! against a product of exponential densities.
//!
//! The max-min rate has a crease along `H1 = H2` (the roles of strong and
//! weak user swap there), so the quadrant is split along the diagonal and
//! each half is parametrized by its larger gain `H` and the ratio
//! `s = H_min / H ∈ [0, 1]`. The larger gain is mapped through an exponential
//! CDF, `u = 1 − exp(−cH)`, and the range is cut where the slower marginal
//! has `tail_mass` probability left.

use rayon::prelude::*;

use super::ChannelDistribution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Gauss–Legendre nodes per axis.
    pub nodes: usize,
    /// Probability mass of each marginal beyond the truncation point.
    pub tail_mass: f64,
    /// Largest acceptable error estimate.
    pub max_error: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            nodes: 512,
            tail_mass: 1e-10,
            max_error: 1e-6,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, ascending.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "need at least one node");
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
fn mapped_rule(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(n);
    let half = 0.5 * (b - a);
    x.into_iter()
        .zip(w)
        .map(|(xi, wi)| (a + half * (xi + 1.0), half * wi))
        .collect()
}

/// `∫∫ f(h1, h2) p1(h1) p2(h2) dh1 dh2` over the quadrant with `nodes`
/// points per axis on each half.
pub fn integrate_over_channels<F>(
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    nodes: usize,
    tail_mass: f64,
    f: F,
) -> f64
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    // Map the larger gain through an exponential CDF at half the slower
    // marginal's rate so the integrand vanishes at the far end; truncate
    // where the slower marginal has `tail_mass` left.
    let slow = d1.rate_param().min(d2.rate_param());
    let map_rate = 0.5 * slow;
    let h_max = -tail_mass.ln() / slow;
    let u_max = -(-map_rate * h_max).exp_m1();
    let outer = mapped_rule(nodes, 0.0, u_max);
    let inner = mapped_rule(nodes, 0.0, 1.0);

    // Half where `first` is the larger gain; `swap` puts it back in (h1, h2) order.
    let half = |first: &ChannelDistribution, second: &ChannelDistribution, swap: bool| -> f64 {
        let column_sums: Vec<f64> = outer
            .par_iter()
            .map(|&(u, wu)| {
                let big = -(-u).ln_1p() / map_rate;
                // dH = du / (c(1 − u)), and dH_small = H ds.
                let jacobian = first.pdf(big) / (map_rate * (1.0 - u)) * big;
                let mut acc = 0.0;
                for &(s, ws) in &inner {
                    let small = s * big;
                    let value = if swap { f(small, big) } else { f(big, small) };
                    acc += ws * value * second.pdf(small);
                }
                wu * jacobian * acc
            })
            .collect();
        column_sums.iter().sum()
    };

    half(d1, d2, false) + half(d2, d1, true)
}
