//! Gradient ascent on the quantization levels of both users.
//!
//! `E[R*]` is a sum over bin pairs `(i, j)` of `R*(q_{i,1}, q_{j,2})` times the
//! joint bin probability. Moving `q_{i,1}` changes the rate of term `(i, j)`
//! and shifts probability between bins `i − 1` and `i`, so each level
//! collects an "own" gradient from the bins it heads and a "right"
//! gradient from the bins it closes. Level 0 is pinned at zero and the
//! unbounded top bin has no edge to move.

use std::io::{self, Write};

use crate::allocation::{closed_form_rate_partials, maxmin_rate_raw, AllocationMethod, User};
use crate::error::{Error, Result};
use crate::evaluation::{bin_masses_of, expected_rate_levels, ChannelDistribution};
use crate::model::SystemParams;
use crate::quantizer::QuantizerCodebook;

/// Exact-solver tolerance used inside gradients and the objective, tight
/// enough that finite differences of the rate stay accurate.
const GRADIENT_EXACT_TOL: f64 = 1e-15;
/// Minimum spacing enforced between consecutive levels after an update.
pub const ORDER_GAP: f64 = 1e-9;
/// Step halvings tried before an iteration is declared stuck.
pub const MAX_HALVINGS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GradientMode {
    #[default]
    Analytic,
    FiniteDifference,
}

impl std::str::FromStr for GradientMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "analytic" => Ok(GradientMode::Analytic),
            "finite_difference" | "fd" => Ok(GradientMode::FiniteDifference),
            other => Err(format!(
                "unknown gradient mode `{other}` (expected analytic or finite_difference)"
            )),
        }
    }
}

impl std::fmt::Display for GradientMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            GradientMode::Analytic => "analytic",
            GradientMode::FiniteDifference => "finite_difference",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerConfig {
    pub step_size: f64,
    pub max_iterations: usize,
    pub variant: AllocationMethod,
    pub gradient_mode: GradientMode,
    /// Halve the step until the objective does not decrease. Without it the
    /// raw fixed step is applied every iteration.
    pub backtracking: bool,
    /// Stop once an iteration improves the objective by less than this.
    pub min_improvement: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            max_iterations: 500,
            variant: AllocationMethod::NomaClosedForm,
            gradient_mode: GradientMode::Analytic,
            backtracking: true,
            min_improvement: 1e-10,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.min_improvement.is_nan() || self.min_improvement < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "minimum improvement must be nonnegative, got {}",
                self.min_improvement
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub iteration: usize,
    pub objective: f64,
    pub levels1: Vec<f64>,
    pub levels2: Vec<f64>,
    /// Euclidean norms of the two users' gradients at these levels.
    pub grad_norm1: f64,
    pub grad_norm2: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct OptimizerTrace {
    pub entries: Vec<TraceEntry>,
}

impl OptimizerTrace {
    pub fn objectives(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.objective).collect()
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].objective >= w[0].objective - tol)
    }

    /// Header `iteration,objective,grad_norm1,grad_norm2,q1_0..,q2_0..`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let Some(first) = self.entries.first() else {
            return writeln!(out, "iteration,objective,grad_norm1,grad_norm2");
        };
        write!(out, "iteration,objective,grad_norm1,grad_norm2")?;
        for k in 0..first.levels1.len() {
            write!(out, ",q1_{k}")?;
        }
        for k in 0..first.levels2.len() {
            write!(out, ",q2_{k}")?;
        }
        writeln!(out)?;
        for e in &self.entries {
            write!(
                out,
                "{},{},{},{}",
                e.iteration, e.objective, e.grad_norm1, e.grad_norm2
            )?;
            for l in e.levels1.iter().chain(&e.levels2) {
                write!(out, ",{l}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimized {
    pub codebook1: QuantizerCodebook,
    pub codebook2: QuantizerCodebook,
    pub trace: OptimizerTrace,
}

/// `E[R*]` as a function of both users' levels.
#[derive(Debug, Clone, Copy)]
pub struct Objective<'a> {
    pub codebook1: &'a QuantizerCodebook,
    pub codebook2: &'a QuantizerCodebook,
    pub dist1: &'a ChannelDistribution,
    pub dist2: &'a ChannelDistribution,
    pub params: &'a SystemParams,
    pub variant: AllocationMethod,
}

/// Per-bin-pair quantities shared by every gradient term.
struct Tables {
    rate: Vec<f64>,
    d_rate1: Vec<f64>,
    d_rate2: Vec<f64>,
    mass1: Vec<f64>,
    mass2: Vec<f64>,
    n2: usize,
}

impl<'a> Objective<'a> {
    pub fn value(&self) -> Result<f64> {
        expected_rate_levels(
            self.codebook1.levels(),
            self.codebook2.levels(),
            self.dist1,
            self.dist2,
            self.params,
            self.variant,
            GRADIENT_EXACT_TOL,
        )
    }

    fn rate(&self, h1: f64, h2: f64) -> Result<f64> {
        maxmin_rate_raw(self.variant, h1, h2, self.params, GRADIENT_EXACT_TOL)
    }

    /// `(∂R*/∂h1, ∂R*/∂h2)`: analytic for the closed forms, central finite
    /// differences for the exact solver.
    fn rate_partials(&self, h1: f64, h2: f64) -> Result<(f64, f64)> {
        match self.variant.z() {
            Some(z) => Ok(closed_form_rate_partials(
                h1,
                h2,
                self.params.total_power(),
                self.params.q_factor(),
                z,
            )),
            None => {
                let s1 = 1e-6 * h1.max(1.0);
                let s2 = 1e-6 * h2.max(1.0);
                let d1 = (self.rate(h1 + s1, h2)? - self.rate(h1 - s1, h2)?) / (2.0 * s1);
                let d2 = (self.rate(h1, h2 + s2)? - self.rate(h1, h2 - s2)?) / (2.0 * s2);
                Ok((d1, d2))
            }
        }
    }

    /// Derivative of term `(i, j)` with respect to the level that opens the
    /// user's bin: `q_{i,1}` for User 1, `q_{j,2}` for User 2.
    pub fn gradient_level_own(&self, user: User, i: usize, j: usize) -> Result<f64> {
        self.check_bins(i, j);
        let (q1, q2) = (self.codebook1.levels()[i], self.codebook2.levels()[j]);
        let rate = self.rate(q1, q2)?;
        let (d1, d2) = self.rate_partials(q1, q2)?;
        let m1 = self.codebook1.bin_mass(self.dist1, i);
        let m2 = self.codebook2.bin_mass(self.dist2, j);
        Ok(match user {
            User::User1 => {
                assert!(i >= 1, "level 0 of User 1 is fixed at zero");
                (d1 * m1 - rate * self.dist1.pdf(q1)) * m2
            }
            User::User2 => {
                assert!(j >= 1, "level 0 of User 2 is fixed at zero");
                (d2 * m2 - rate * self.dist2.pdf(q2)) * m1
            }
        })
    }

    /// Derivative of term `(i, j)` with respect to the level that closes the
    /// user's bin: `q_{i+1,1}` for User 1, `q_{j+1,2}` for User 2.
    pub fn gradient_level_right(&self, user: User, i: usize, j: usize) -> Result<f64> {
        self.check_bins(i, j);
        let (q1, q2) = (self.codebook1.levels()[i], self.codebook2.levels()[j]);
        let rate = self.rate(q1, q2)?;
        Ok(match user {
            User::User1 => {
                assert!(
                    i + 1 < self.codebook1.len(),
                    "the top bin of User 1 has no upper level"
                );
                let edge = self.codebook1.levels()[i + 1];
                rate * self.dist1.pdf(edge) * self.codebook2.bin_mass(self.dist2, j)
            }
            User::User2 => {
                assert!(
                    j + 1 < self.codebook2.len(),
                    "the top bin of User 2 has no upper level"
                );
                let edge = self.codebook2.levels()[j + 1];
                rate * self.dist2.pdf(edge) * self.codebook1.bin_mass(self.dist1, i)
            }
        })
    }

    fn check_bins(&self, i: usize, j: usize) {
        assert!(i < self.codebook1.len(), "bin {i} out of range for User 1");
        assert!(j < self.codebook2.len(), "bin {j} out of range for User 2");
    }

    fn tables(&self) -> Result<Tables> {
        let l1 = self.codebook1.levels();
        let l2 = self.codebook2.levels();
        let n2 = l2.len();
        let mut rate = Vec::with_capacity(l1.len() * n2);
        let mut d_rate1 = Vec::with_capacity(l1.len() * n2);
        let mut d_rate2 = Vec::with_capacity(l1.len() * n2);
        for &q1 in l1 {
            for &q2 in l2 {
                rate.push(self.rate(q1, q2)?);
                let (a, b) = self.rate_partials(q1, q2)?;
                d_rate1.push(a);
                d_rate2.push(b);
            }
        }
        Ok(Tables {
            rate,
            d_rate1,
            d_rate2,
            mass1: bin_masses_of(l1, self.dist1),
            mass2: bin_masses_of(l2, self.dist2),
            n2,
        })
    }

    /// Gradient of `E[R*]` with respect to every level of both users,
    /// accumulated over all bin pairs. Entry 0 of each vector (the pinned
    /// zero level) is always 0.
    pub fn gradient(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let l1 = self.codebook1.levels();
        let l2 = self.codebook2.levels();
        let t = self.tables()?;
        let mut g1 = vec![0.0; l1.len()];
        let mut g2 = vec![0.0; l2.len()];
        for i in 0..l1.len() {
            for j in 0..l2.len() {
                let k = i * t.n2 + j;
                let r = t.rate[k];
                if i >= 1 {
                    g1[i] += (t.d_rate1[k] * t.mass1[i] - r * self.dist1.pdf(l1[i])) * t.mass2[j];
                }
                if j >= 1 {
                    g2[j] += (t.d_rate2[k] * t.mass2[j] - r * self.dist2.pdf(l2[j])) * t.mass1[i];
                }
                if i + 1 < l1.len() {
                    g1[i + 1] += r * self.dist1.pdf(l1[i + 1]) * t.mass2[j];
                }
                if j + 1 < l2.len() {
                    g2[j + 1] += r * self.dist2.pdf(l2[j + 1]) * t.mass1[i];
                }
            }
        }
        Ok((g1, g2))
    }

    /// Central finite differences of the assembled objective, one level at a
    /// time with step `1e-6·max(1, q)`.
    pub fn gradient_finite_difference(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let eval = |l1: &[f64], l2: &[f64]| {
            expected_rate_levels(
                l1,
                l2,
                self.dist1,
                self.dist2,
                self.params,
                self.variant,
                GRADIENT_EXACT_TOL,
            )
        };
        let l1 = self.codebook1.levels().to_vec();
        let l2 = self.codebook2.levels().to_vec();
        let mut g1 = vec![0.0; l1.len()];
        let mut g2 = vec![0.0; l2.len()];
        for k in 1..l1.len() {
            let h = 1e-6 * l1[k].max(1.0);
            let (mut up, mut down) = (l1.clone(), l1.clone());
            up[k] += h;
            down[k] -= h;
            g1[k] = (eval(&up, &l2)? - eval(&down, &l2)?) / (2.0 * h);
        }
        for k in 1..l2.len() {
            let h = 1e-6 * l2[k].max(1.0);
            let (mut up, mut down) = (l2.clone(), l2.clone());
            up[k] += h;
            down[k] -= h;
            g2[k] = (eval(&l1, &up)? - eval(&l1, &down)?) / (2.0 * h);
        }
        Ok((g1, g2))
    }

    fn gradient_with(&self, mode: GradientMode) -> Result<(Vec<f64>, Vec<f64>)> {
        match mode {
            GradientMode::Analytic => self.gradient(),
            GradientMode::FiniteDifference => self.gradient_finite_difference(),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Move along `dir` by `step` with level 0 pinned, then push any level that
/// fell onto or below its predecessor to just above it.
fn step_levels(levels: &[f64], dir: &[f64], step: f64) -> Vec<f64> {
    let mut out: Vec<f64> = levels.iter().zip(dir).map(|(q, d)| q + step * d).collect();
    out[0] = 0.0;
    for k in 1..out.len() {
        if out[k].is_nan() || out[k] <= out[k - 1] {
            out[k] = out[k - 1] + ORDER_GAP;
        }
    }
    out
}

/// Gradient ascent on both codebooks from the given starting levels.
pub fn optimize(
    cb1_init: &QuantizerCodebook,
    cb2_init: &QuantizerCodebook,
    d1: &ChannelDistribution,
    d2: &ChannelDistribution,
    params: &SystemParams,
    config: &OptimizerConfig,
) -> Result<Optimized> {
    config.validate()?;
    let mut cb1 = cb1_init.clone();
    let mut cb2 = cb2_init.clone();
    fn objective<'a>(
        a: &'a QuantizerCodebook,
        b: &'a QuantizerCodebook,
        d1: &'a ChannelDistribution,
        d2: &'a ChannelDistribution,
        params: &'a SystemParams,
        variant: AllocationMethod,
    ) -> Objective<'a> {
        Objective {
            codebook1: a,
            codebook2: b,
            dist1: d1,
            dist2: d2,
            params,
            variant,
        }
    }

    let mut current = objective(&cb1, &cb2, d1, d2, params, config.variant).value()?;
    let mut trace = OptimizerTrace::default();
    trace.entries.push(TraceEntry {
        iteration: 0,
        objective: current,
        levels1: cb1.levels().to_vec(),
        levels2: cb2.levels().to_vec(),
        grad_norm1: f64::NAN,
        grad_norm2: f64::NAN,
    });

    for iteration in 1..=config.max_iterations {
        let (g1, g2) = objective(&cb1, &cb2, d1, d2, params, config.variant)
            .gradient_with(config.gradient_mode)?;
        let last = trace.entries.last_mut().expect("trace starts non-empty");
        last.grad_norm1 = norm(&g1);
        last.grad_norm2 = norm(&g2);
        if last.grad_norm1 == 0.0 && last.grad_norm2 == 0.0 {
            break;
        }

        let halvings = if config.backtracking { MAX_HALVINGS } else { 0 };
        let mut step = config.step_size;
        let mut accepted = None;
        for _ in 0..=halvings {
            let next1 = cb1.with_levels(step_levels(cb1.levels(), &g1, step))?;
            let next2 = cb2.with_levels(step_levels(cb2.levels(), &g2, step))?;
            let value = objective(&next1, &next2, d1, d2, params, config.variant).value()?;
            if !config.backtracking || value >= current {
                accepted = Some((next1, next2, value));
                break;
            }
            step *= 0.5;
        }
        let Some((next1, next2, value)) = accepted else {
            break;
        };
        let improvement = value - current;
        cb1 = next1;
        cb2 = next2;
        current = value;
        trace.entries.push(TraceEntry {
            iteration,
            objective: current,
            levels1: cb1.levels().to_vec(),
            levels2: cb2.levels().to_vec(),
            grad_norm1: f64::NAN,
            grad_norm2: f64::NAN,
        });
        if config.backtracking && improvement < config.min_improvement {
            break;
        }
    }

    let last = trace.entries.last_mut().expect("trace starts non-empty");
    if last.grad_norm1.is_nan() {
        let (g1, g2) = objective(&cb1, &cb2, d1, d2, params, config.variant)
            .gradient_with(config.gradient_mode)?;
        last.grad_norm1 = norm(&g1);
        last.grad_norm2 = norm(&g2);
    }

    Ok(Optimized {
        codebook1: cb1,
        codebook2: cb2,
        trace,
    })
}
