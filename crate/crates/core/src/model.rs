//! System parameters and per-realization user rates.
//!
//! The strong user (the one performing SIC) sees an interference-free link,
//! `log2(1 + αPH)`, for both NOMA and ANOMA. The weak user treats the strong
//! user's signal as interference; under ANOMA the timing offset `τ` adds
//! sampling diversity through the factor `Q = 2τ(1 − τ)`, and the rate
//! collapses to the synchronous NOMA expression when `Q = 0`.

use crate::error::{Error, Result};

/// Total transmit power and the normalized timing offset between the two
/// superimposed streams.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    total_power: f64,
    tau: f64,
    q_factor: f64,
}

impl SystemParams {
    pub fn new(total_power: f64, tau: f64) -> Result<Self> {
        if !(total_power.is_finite() && total_power > 0.0) {
            return Err(Error::InvalidParameter {
                name: "total_power",
                value: total_power,
                reason: "must be positive and finite",
            });
        }
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::InvalidParameter {
                name: "tau",
                value: tau,
                reason: "must lie in [0, 1)",
            });
        }
        Ok(Self {
            total_power,
            tau,
            q_factor: 2.0 * tau * (1.0 - tau),
        })
    }

    /// Synchronous transmission (`τ = 0`) at the given power.
    pub fn synchronous(total_power: f64) -> Result<Self> {
        Self::new(total_power, 0.0)
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// `Q = 2τ(1 − τ)`, in `[0, 0.5]`.
    pub fn q_factor(&self) -> f64 {
        self.q_factor
    }

    /// Same power with the timing offset removed.
    pub fn without_offset(&self) -> Self {
        Self {
            total_power: self.total_power,
            tau: 0.0,
            q_factor: 0.0,
        }
    }
}

/// Linear channel gain `|h|²`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct ChannelGain(f64);

impl ChannelGain {
    pub const ZERO: Self = Self(0.0);

    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && value >= 0.0 {
            Ok(Self(value))
        } else {
            Err(Error::InvalidParameter {
                name: "channel_gain",
                value,
                reason: "must be finite and nonnegative",
            })
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for ChannelGain {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

/// Fraction of the total power given to the strong user. The endpoints are
/// admitted as degenerate limits.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct PowerCoefficient(f64);

impl PowerCoefficient {
    pub fn new(alpha: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&alpha) {
            Ok(Self(alpha))
        } else {
            Err(Error::InvalidParameter {
                name: "alpha",
                value: alpha,
                reason: "must lie in [0, 1]",
            })
        }
    }

    pub(crate) fn clamped(alpha: f64) -> Self {
        Self(alpha.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for PowerCoefficient {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::new(value)
    }
}

/// Rate of the user that performs SIC: `log2(1 + αPH)`.
pub fn rate_strong(h: ChannelGain, alpha: PowerCoefficient, params: &SystemParams) -> f64 {
    strong_rate(h.0, alpha.0, params.total_power)
}

/// Rate of the user that does not perform SIC, in bits per channel use.
pub fn rate_weak(h: ChannelGain, alpha: PowerCoefficient, params: &SystemParams) -> f64 {
    weak_rate(h.0, alpha.0, params.total_power, params.q_factor)
}

/// `(rate_strong(h_strong), rate_weak(h_weak))` for one channel realization.
pub fn rate_pair(
    h_strong: ChannelGain,
    h_weak: ChannelGain,
    alpha: PowerCoefficient,
    params: &SystemParams,
) -> (f64, f64) {
    (
        rate_strong(h_strong, alpha, params),
        rate_weak(h_weak, alpha, params),
    )
}

#[inline]
pub(crate) fn strong_rate(h: f64, alpha: f64, power: f64) -> f64 {
    (alpha * power * h).ln_1p() / std::f64::consts::LN_2
}

#[inline]
pub(crate) fn weak_rate(h: f64, alpha: f64, power: f64, q: f64) -> f64 {
    let ph = power * h;
    let cross = alpha * (1.0 - alpha) * ph * ph * q;
    let a = 1.0 + ph + cross;
    // a - cross = 1 + PH, so the radicand factors without cancellation.
    let radicand = (1.0 + ph) * (a + cross);
    debug_assert!(radicand >= (1.0 + ph) * (1.0 + ph) * (1.0 - 1e-12));
    let ratio = (a + radicand.sqrt()) / (2.0 * (1.0 + alpha * ph));
    ratio.log2()
}
