//! Scalar quantizer for channel gains.
//!
//! A codebook holds `N = 2^b` levels `0 = q_0 < q_1 < ... < q_{N-1}`. A gain
//! maps to the largest level not exceeding it, so the base station never
//! schedules a rate the channel cannot carry. The top bin is unbounded.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::evaluation::ChannelDistribution;

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizerCodebook {
    levels: Vec<f64>,
    bits: u32,
}

impl QuantizerCodebook {
    /// Build a codebook from its finite levels. The level count must be a
    /// power of two, the first level must be zero, and levels must be strictly
    /// increasing.
    pub fn new(levels: Vec<f64>) -> Result<Self> {
        let n = levels.len();
        if n == 0 || !n.is_power_of_two() {
            return Err(Error::InvalidCodebook(format!(
                "level count {n} is not a power of two"
            )));
        }
        if levels[0] != 0.0 {
            return Err(Error::InvalidCodebook(format!(
                "first level must be 0, got {}",
                levels[0]
            )));
        }
        if let Some(bad) = levels.iter().position(|l| !l.is_finite()) {
            return Err(Error::InvalidCodebook(format!("level {bad} is not finite")));
        }
        if let Some(k) = levels.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidCodebook(format!(
                "levels not strictly increasing at index {}: {} then {}",
                k + 1,
                levels[k],
                levels[k + 1]
            )));
        }
        Ok(Self {
            bits: n.trailing_zeros(),
            levels,
        })
    }

    /// The single-level codebook `{0}` (zero feedback bits).
    pub fn zero() -> Self {
        Self {
            levels: vec![0.0],
            bits: 0,
        }
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Upper edge of bin `i`; `+∞` for the top bin.
    pub fn upper_edge(&self, i: usize) -> f64 {
        self.levels.get(i + 1).copied().unwrap_or(f64::INFINITY)
    }

    /// Index of the bin containing `x`.
    pub fn bin_index(&self, x: f64) -> usize {
        assert!(x >= 0.0, "cannot quantize negative or NaN gain {x}");
        self.levels.partition_point(|&l| l <= x) - 1
    }

    /// Largest level `≤ x`.
    pub fn quantize(&self, x: f64) -> f64 {
        self.levels[self.bin_index(x)]
    }

    /// Probability that a gain drawn from `dist` lands in bin `i`.
    pub fn bin_mass(&self, dist: &ChannelDistribution, i: usize) -> f64 {
        assert!(
            i < self.levels.len(),
            "bin index {i} out of range for {} levels",
            self.levels.len()
        );
        dist.survival(self.levels[i]) - dist.survival(self.upper_edge(i))
    }

    pub fn bin_masses(&self, dist: &ChannelDistribution) -> Vec<f64> {
        (0..self.levels.len())
            .map(|i| self.bin_mass(dist, i))
            .collect()
    }

    /// Replace the levels, keeping the level count.
    pub(crate) fn with_levels(&self, levels: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(levels.len(), self.levels.len());
        Self::new(levels)
    }

    /// One level per line, ascending, shortest round-trip decimal form.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.levels {
            writeln!(out, "{l}").expect("writing to a String cannot fail");
        }
        out
    }

    /// Parse the format written by [`to_text`](Self::to_text). Blank lines
    /// and lines starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: f64 = line.parse().map_err(|e| Error::CodebookParse {
                line: lineno + 1,
                message: format!("`{line}`: {e}"),
            })?;
            levels.push(v);
        }
        Self::new(levels)
    }
}

/// Logarithm used in the maximum-level equation of the uniform baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Binary,
}

impl LogBase {
    fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => x.ln(),
            LogBase::Binary => x.log2(),
        }
    }
}

impl std::str::FromStr for LogBase {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "natural" | "e" | "ln" => Ok(LogBase::Natural),
            "binary" | "2" | "log2" => Ok(LogBase::Binary),
            other => Err(format!(
                "unknown log base `{other}` (expected natural or binary)"
            )),
        }
    }
}

impl std::fmt::Display for LogBase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LogBase::Natural => "natural",
            LogBase::Binary => "binary",
        })
    }
}

/// Uniform baseline with natural logarithm in the maximum-level equation.
pub fn uniform_codebook(lambda: f64, bits: u32) -> Result<QuantizerCodebook> {
    uniform_codebook_with_base(lambda, bits, LogBase::Natural)
}

/// Uniform codebook `{0, Δ, ..., (N−1)Δ}` whose top level `L = (N−1)Δ`
/// satisfies `L = log(1/Δ) / (λΔ)`.
pub fn uniform_codebook_with_base(
    lambda: f64,
    bits: u32,
    base: LogBase,
) -> Result<QuantizerCodebook> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::InvalidParameter {
            name: "lambda",
            value: lambda,
            reason: "must be positive and finite",
        });
    }
    if bits == 0 {
        return Ok(QuantizerCodebook::zero());
    }
    if bits > 24 {
        return Err(Error::InvalidParameter {
            name: "bits",
            value: bits as f64,
            reason: "at most 24 bits supported",
        });
    }
    let steps = ((1u64 << bits) - 1) as f64;
    // Increasing in Δ on (0, 1).
    let residual = |d: f64| steps * lambda * d * d + base.log(d);
    let (mut lo, mut hi) = (f64::MIN_POSITIVE, 1.0);
    if !(residual(lo) < 0.0 && residual(hi) > 0.0) {
        return Err(Error::RootNotBracketed {
            what: "uniform quantizer bin width",
            lo,
            hi,
        });
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if residual(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let delta = 0.5 * (lo + hi);
    let levels = (0..(1usize << bits)).map(|k| k as f64 * delta).collect();
    QuantizerCodebook::new(levels)
}
