//! Two-user downlink NOMA and asynchronous NOMA (ANOMA) with limited
//! feedback.
//!
//! Users feed back scalar-quantized channel gains; the base station picks
//! the SIC order and a max-min power split from those quantized values.
//! The crate covers:
//!
//! - [`model`]: per-realization strong/weak user rates,
//! - [`allocation`]: max-min power coefficients (NOMA closed form, ANOMA
//!   bounds, exact ANOMA by bisection),
//! - [`quantizer`]: codebooks, the floor quantizer, the uniform baseline,
//! - [`evaluation`]: exact average max-min rate, full-CSI integral, Monte
//!   Carlo validation,
//! - [`optimizer`]: gradient ascent on quantization levels.
//!
//! ```
//! use anoma_core::{alpha_noma, ChannelGain, SystemParams};
//!
//! let params = SystemParams::new(10.0, 0.0).unwrap();
//! let h = ChannelGain::new(1.0).unwrap();
//! let r = alpha_noma(h, h, &params);
//! assert!((r.alpha.value() - 1.0 / (1.0 + 11f64.sqrt())).abs() < 1e-12);
//! ```

pub mod allocation;
pub mod error;
pub mod evaluation;
pub mod model;
pub mod optimizer;
pub mod quantizer;

pub use allocation::{
    allocate, alpha_anoma_bound, alpha_anoma_exact, alpha_noma, check_theorem1, g_denominator,
    quartic_residual, AllocationMethod, AllocationResult, TheoremCheck, User,
};
pub use error::{Error, Result};
pub use evaluation::{
    distortion, expected_rate, full_csi_rate, monte_carlo, ChannelDistribution, MonteCarloConfig,
    MonteCarloResult, QuadratureSpec, RateReport,
};
pub use model::{rate_pair, rate_strong, rate_weak, ChannelGain, PowerCoefficient, SystemParams};
pub use optimizer::{optimize, GradientMode, Objective, OptimizerConfig, OptimizerTrace};
pub use quantizer::{uniform_codebook, LogBase, QuantizerCodebook};
