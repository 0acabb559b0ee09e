//! Max-min power allocation for the two-user downlink.
//!
//! The strong-user rate increases with `α` and the weak-user rate decreases,
//! so the max-min coefficient is where the two meet. NOMA has a closed form.
//! For ANOMA the equal-rate condition is a quartic in `α`; instead of the
//! quartic formula we bracket-and-bisect the rate difference, and expose the
//! closed-form family `α(z)` whose members at `z = 0.5` and `z = 1` bound the
//! exact coefficient from below and above.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{strong_rate, weak_rate, ChannelGain, PowerCoefficient, SystemParams};

/// Default tolerance of the exact solver.
pub const DEFAULT_EXACT_TOL: f64 = 1e-10;
/// Iteration cap of the exact solver.
pub const MAX_BISECTION_ITERATIONS: usize = 200;
/// Slack used when comparing the four coefficients of the ordering chain.
pub const THEOREM_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum User {
    User1,
    User2,
}

impl User {
    pub fn other(self) -> Self {
        match self {
            User::User1 => User::User2,
            User::User2 => User::User1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AllocationMethod {
    NomaClosedForm,
    AnomaLowerZ05,
    AnomaUpperZ1,
    AnomaExact,
}

impl AllocationMethod {
    pub const ALL: [AllocationMethod; 4] = [
        AllocationMethod::NomaClosedForm,
        AllocationMethod::AnomaLowerZ05,
        AllocationMethod::AnomaExact,
        AllocationMethod::AnomaUpperZ1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AllocationMethod::NomaClosedForm => "noma",
            AllocationMethod::AnomaLowerZ05 => "anoma_z05",
            AllocationMethod::AnomaUpperZ1 => "anoma_z1",
            AllocationMethod::AnomaExact => "anoma_exact",
        }
    }

    /// The `z` of the closed-form family, `None` for the exact solver.
    pub fn z(self) -> Option<f64> {
        match self {
            AllocationMethod::NomaClosedForm => Some(0.0),
            AllocationMethod::AnomaLowerZ05 => Some(0.5),
            AllocationMethod::AnomaUpperZ1 => Some(1.0),
            AllocationMethod::AnomaExact => None,
        }
    }

    pub fn is_closed_form(self) -> bool {
        self.z().is_some()
    }

    /// Parameters under which this method's weak-user rate is evaluated:
    /// NOMA transmits synchronously.
    pub fn effective_params(self, params: &SystemParams) -> SystemParams {
        match self {
            AllocationMethod::NomaClosedForm => params.without_offset(),
            _ => *params,
        }
    }
}

impl fmt::Display for AllocationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AllocationMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "noma" => Ok(AllocationMethod::NomaClosedForm),
            "anoma_z05" => Ok(AllocationMethod::AnomaLowerZ05),
            "anoma_z1" => Ok(AllocationMethod::AnomaUpperZ1),
            "anoma_exact" => Ok(AllocationMethod::AnomaExact),
            other => Err(format!(
                "unknown allocation variant `{other}` (expected noma, anoma_z05, anoma_z1 or anoma_exact)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AllocationResult {
    pub alpha: PowerCoefficient,
    /// The user told to perform SIC; ties go to User 1.
    pub sic_user: User,
    pub method: AllocationMethod,
    /// `log2(1 + αP·H_max)`.
    pub maxmin_rate: f64,
}

/// Which user performs SIC for the given (quantized) gains.
pub fn sic_user(h1: f64, h2: f64) -> User {
    if h1 >= h2 {
        User::User1
    } else {
        User::User2
    }
}

fn order(h1: f64, h2: f64) -> (f64, f64) {
    if h1 >= h2 {
        (h1, h2)
    } else {
        (h2, h1)
    }
}

fn finish(
    alpha: f64,
    h1: f64,
    h2: f64,
    params: &SystemParams,
    method: AllocationMethod,
) -> AllocationResult {
    let (hmax, _) = order(h1, h2);
    AllocationResult {
        alpha: PowerCoefficient::clamped(alpha),
        sic_user: sic_user(h1, h2),
        method,
        maxmin_rate: strong_rate(hmax, alpha, params.total_power()),
    }
}

/// Denominator of the closed-form coefficient as a function of `z`, with
/// `shift = z·P·H_min²·Q`.
fn closed_form_denominator(hmax: f64, hmin: f64, power: f64, shift: f64) -> f64 {
    let c = hmax + hmin - shift;
    let excess = 4.0 * hmin * (power * hmax * hmin + shift);
    let root = (c * c + excess).sqrt();
    if c >= 0.0 {
        root + c
    } else {
        // root + c loses precision when c is large and negative
        excess / (root - c)
    }
}

pub(crate) fn closed_form_alpha(hmax: f64, hmin: f64, power: f64, q: f64, z: f64) -> f64 {
    if hmin <= 0.0 {
        return 0.0;
    }
    let shift = z * power * hmin * hmin * q;
    2.0 * hmin / closed_form_denominator(hmax, hmin, power, shift)
}

/// Max-min coefficient of synchronous NOMA.
pub fn alpha_noma(h1: ChannelGain, h2: ChannelGain, params: &SystemParams) -> AllocationResult {
    let (hmax, hmin) = order(h1.value(), h2.value());
    let alpha = closed_form_alpha(hmax, hmin, params.total_power(), 0.0, 0.0);
    finish(
        alpha,
        h1.value(),
        h2.value(),
        params,
        AllocationMethod::NomaClosedForm,
    )
}

/// Closed-form ANOMA coefficient `α(z)`. `z = 0.5` bounds the exact
/// coefficient from below and `z = 1` from above; `z = 0` is NOMA.
pub fn alpha_anoma_bound(
    h1: ChannelGain,
    h2: ChannelGain,
    params: &SystemParams,
    z: f64,
) -> Result<AllocationResult> {
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::InvalidParameter {
            name: "z",
            value: z,
            reason: "must lie in [0, 1]",
        });
    }
    let method = if z == 1.0 {
        AllocationMethod::AnomaUpperZ1
    } else if z == 0.0 {
        AllocationMethod::NomaClosedForm
    } else {
        AllocationMethod::AnomaLowerZ05
    };
    let (hmax, hmin) = order(h1.value(), h2.value());
    let alpha = closed_form_alpha(hmax, hmin, params.total_power(), params.q_factor(), z);
    Ok(finish(alpha, h1.value(), h2.value(), params, method))
}

pub(crate) fn exact_alpha(hmax: f64, hmin: f64, params: &SystemParams, tol: f64) -> Result<f64> {
    if hmin <= 0.0 {
        return Ok(0.0);
    }
    let power = params.total_power();
    let q = params.q_factor();
    let gap = |alpha: f64| {
        let s = strong_rate(hmax, alpha, power);
        let w = weak_rate(hmin, alpha, power, q);
        (s - w, s.max(w))
    };
    // gap(0) < 0 < gap(1) whenever both gains are positive.
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        let (diff, scale) = gap(mid);
        if diff.abs() <= tol * scale.max(1.0) && hi - lo <= tol {
            return Ok(mid);
        }
        if diff < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NoConvergence {
        lo,
        hi,
        iterations: MAX_BISECTION_ITERATIONS,
    })
}

/// Exact ANOMA max-min coefficient by bisection of the rate difference on
/// `[0, 1]`. Terminates once both the bracket width and the rate gap are
/// within `tol` (the gap relative to `max(1, rate)`), or when the bracket
/// cannot be split further.
pub fn alpha_anoma_exact(
    h1: ChannelGain,
    h2: ChannelGain,
    params: &SystemParams,
    tol: f64,
) -> Result<AllocationResult> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "tol",
            value: tol,
            reason: "must be positive",
        });
    }
    let (hmax, hmin) = order(h1.value(), h2.value());
    let alpha = exact_alpha(hmax, hmin, params, tol)?;
    Ok(finish(
        alpha,
        h1.value(),
        h2.value(),
        params,
        AllocationMethod::AnomaExact,
    ))
}

/// Dispatch on the allocation method; the exact solver runs at
/// [`DEFAULT_EXACT_TOL`].
pub fn allocate(
    method: AllocationMethod,
    h1: ChannelGain,
    h2: ChannelGain,
    params: &SystemParams,
) -> Result<AllocationResult> {
    match method {
        AllocationMethod::NomaClosedForm => Ok(alpha_noma(h1, h2, params)),
        AllocationMethod::AnomaLowerZ05 => alpha_anoma_bound(h1, h2, params, 0.5),
        AllocationMethod::AnomaUpperZ1 => alpha_anoma_bound(h1, h2, params, 1.0),
        AllocationMethod::AnomaExact => alpha_anoma_exact(h1, h2, params, DEFAULT_EXACT_TOL),
    }
}

/// Coefficient for raw gains.
pub(crate) fn alpha_raw(
    method: AllocationMethod,
    h1: f64,
    h2: f64,
    params: &SystemParams,
    exact_tol: f64,
) -> Result<f64> {
    let (hmax, hmin) = order(h1, h2);
    match method.z() {
        Some(z) => Ok(closed_form_alpha(
            hmax,
            hmin,
            params.total_power(),
            params.q_factor(),
            z,
        )),
        None => exact_alpha(hmax, hmin, params, exact_tol),
    }
}

/// `R*(h1, h2) = log2(1 + α P H_max)` for raw gains.
pub(crate) fn maxmin_rate_raw(
    method: AllocationMethod,
    h1: f64,
    h2: f64,
    params: &SystemParams,
    exact_tol: f64,
) -> Result<f64> {
    let alpha = alpha_raw(method, h1, h2, params, exact_tol)?;
    Ok(strong_rate(h1.max(h2), alpha, params.total_power()))
}

/// Analytic partial derivatives `(∂R*/∂h1, ∂R*/∂h2)` of the closed-form max-min
/// rate with parameter `z`. At a tie the derivative is taken with User 1 as
/// the strong user. Both partials vanish when either gain is zero and the
/// other is the one being differentiated, since `R*` is identically zero
/// along that edge.
pub(crate) fn closed_form_rate_partials(
    h1: f64,
    h2: f64,
    power: f64,
    q: f64,
    z: f64,
) -> (f64, f64) {
    let (a, b) = order(h1, h2);
    let (da, db) = if a <= 0.0 {
        (0.0, 0.0)
    } else if b <= 0.0 {
        // R* = 0 on the whole edge; only the slope into the interior survives.
        let g0 = closed_form_denominator(a, 0.0, power, 0.0);
        let dalpha_db = 2.0 / g0;
        (0.0, power * a * dalpha_db / std::f64::consts::LN_2)
    } else {
        let k = z * power * q;
        let c = a + b - k * b * b;
        let d = c * c + 4.0 * power * a * b * b + 4.0 * k * b * b * b;
        let root = d.sqrt();
        let g = closed_form_denominator(a, b, power, k * b * b);
        let dd_da = 2.0 * c + 4.0 * power * b * b;
        let dd_db = 2.0 * c * (1.0 - 2.0 * k * b) + 8.0 * power * a * b + 12.0 * k * b * b;
        let dg_da = dd_da / (2.0 * root) + 1.0;
        let dg_db = dd_db / (2.0 * root) + (1.0 - 2.0 * k * b);
        let alpha = 2.0 * b / g;
        let dalpha_da = -2.0 * b * dg_da / (g * g);
        let dalpha_db = 2.0 / g - 2.0 * b * dg_db / (g * g);
        let denom = (1.0 + alpha * power * a) * std::f64::consts::LN_2;
        (
            power * (alpha + a * dalpha_da) / denom,
            power * a * dalpha_db / denom,
        )
    };
    if h1 >= h2 {
        (da, db)
    } else {
        (db, da)
    }
}

/// Denominator of the closed-form coefficient as a function of `x` (the `z`
/// of the family). Strictly decreasing in `x` when `Q > 0` and both gains
/// are positive, which is what orders the bounds.
pub fn g_denominator(x: f64, h1: ChannelGain, h2: ChannelGain, params: &SystemParams) -> f64 {
    let (hmax, hmin) = order(h1.value(), h2.value());
    let shift = x * params.total_power() * hmin * hmin * params.q_factor();
    closed_form_denominator(hmax, hmin, params.total_power(), shift)
}

/// Relative residual of the equal-rate condition written without logarithms:
/// `2(1 + αP H_max)(1 + αP H_min)` against `A + sqrt(A² − B²)` where
/// `A = 1 + P H_min + B`, `B = α(1−α)P² H_min² Q`.
pub fn quartic_residual(
    alpha: PowerCoefficient,
    h1: ChannelGain,
    h2: ChannelGain,
    params: &SystemParams,
) -> f64 {
    let (a, b) = order(h1.value(), h2.value());
    let p = params.total_power();
    let al = alpha.value();
    let lhs = 2.0 * (1.0 + al * p * (a + b) + al * al * p * p * a * b);
    let cross = al * (1.0 - al) * p * p * b * b * params.q_factor();
    let big = 1.0 + p * b + cross;
    let rhs = ((big - cross) * (big + cross)).sqrt() + big;
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs())
}

/// The four coefficients of the ordering chain
/// `α_N ≤ α(0.5) ≤ α_exact ≤ α(1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoremCheck {
    pub noma: f64,
    pub lower: f64,
    pub exact: f64,
    pub upper: f64,
    pub holds: bool,
}

impl TheoremCheck {
    pub fn as_array(&self) -> [f64; 4] {
        [self.noma, self.lower, self.exact, self.upper]
    }

    /// Largest absolute spread between the four coefficients.
    pub fn spread(&self) -> f64 {
        self.upper.max(self.exact).max(self.lower).max(self.noma)
            - self.upper.min(self.exact).min(self.lower).min(self.noma)
    }
}

/// Evaluate the ordering chain with absolute slack `tol` on each comparison.
pub fn check_theorem1(
    h1: ChannelGain,
    h2: ChannelGain,
    params: &SystemParams,
    tol: f64,
) -> Result<TheoremCheck> {
    let noma = alpha_noma(h1, h2, params).alpha.value();
    let lower = alpha_anoma_bound(h1, h2, params, 0.5)?.alpha.value();
    let exact = alpha_anoma_exact(h1, h2, params, DEFAULT_EXACT_TOL)?
        .alpha
        .value();
    let upper = alpha_anoma_bound(h1, h2, params, 1.0)?.alpha.value();
    let holds = noma <= lower + tol && lower <= exact + tol && exact <= upper + tol;
    Ok(TheoremCheck {
        noma,
        lower,
        exact,
        upper,
        holds,
    })
}
