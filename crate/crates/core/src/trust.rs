//! Natural-trust kernels.
//!
//! The probability that an agent with capabilities `lambda` succeeds at a
//! task with requirements `lambda_bar` is
//!
//! ```text
//! p(success | lambda) = prod_i [ 1 / (1 + exp(beta_i * (lambda_bar_i - lambda_i))) ]^zeta_i
//! ```
//!
//! Trust is the expectation of that kernel under the trustor's belief. All
//! evaluation happens in log space: each dimension contributes
//! `-zeta_i * softplus(beta_i * (lambda_bar_i - lambda_i))`, floored at
//! [`LOG_FLOOR`], and the sum is exponentiated once.

use crate::belief::UniformBelief;
use crate::capability::{check_dim, CapabilityVector, TrustParams};
use crate::error::{Result, TrustError};

/// `ln(1e-300)`. Lower bound for every log-probability term.
pub const LOG_FLOOR: f64 = -690.775_527_898_213_7;

/// Cells per dimension used when none is specified.
pub const DEFAULT_BINS_PER_DIM: usize = 10;

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Log of one dimension's sigmoid factor, floored at [`LOG_FLOOR`].
#[inline]
pub fn log_kernel_dim(lambda: f64, lambda_bar: f64, beta: f64, zeta: f64) -> f64 {
    (-zeta * softplus(beta * (lambda_bar - lambda))).max(LOG_FLOOR)
}

fn check_inputs(a: &CapabilityVector, b: &CapabilityVector, params: &TrustParams) -> Result<()> {
    a.check_dim(params.dim())?;
    b.check_dim(params.dim())
}

/// Log of the success probability given capabilities `lambda`.
pub fn log_trust_given_capability(
    lambda: &CapabilityVector,
    lambda_bar: &CapabilityVector,
    params: &TrustParams,
) -> Result<f64> {
    check_inputs(lambda, lambda_bar, params)?;
    let sum: f64 = (0..params.dim())
        .map(|i| log_kernel_dim(lambda.get(i), lambda_bar.get(i), params.beta()[i], params.zeta()[i]))
        .sum();
    Ok(sum.max(LOG_FLOOR))
}

/// Probability that an agent with capabilities `lambda` succeeds at a task
/// requiring `lambda_bar`.
pub fn trust_given_capability(
    lambda: &CapabilityVector,
    lambda_bar: &CapabilityVector,
    params: &TrustParams,
) -> Result<f64> {
    log_trust_given_capability(lambda, lambda_bar, params).map(f64::exp)
}

/// Midpoint-rule trust of a belief for a task.
///
/// Each proper dimension's support `[lower_i, upper_i]` is split into
/// `bins_per_dim` equal cells; point-mass dimensions are evaluated at their
/// point. The belief and kernel both factor over dimensions, so the sum over
/// the full `bins_per_dim^n` grid equals the product of the per-dimension
/// sums; that product is what gets computed.
pub fn trust_integral(
    belief: &UniformBelief,
    lambda_bar: &CapabilityVector,
    params: &TrustParams,
    bins_per_dim: usize,
) -> Result<f64> {
    check_dim(params.dim(), belief.dim())?;
    lambda_bar.check_dim(params.dim())?;
    if bins_per_dim == 0 {
        return Err(TrustError::InvalidArgument("bins_per_dim must be >= 1".into()));
    }
    let mut log_total = 0.0;
    for i in 0..params.dim() {
        let (l, u) = belief.bounds(i);
        let (beta, zeta) = (params.beta()[i], params.zeta()[i]);
        let req = lambda_bar.get(i);
        let log_dim = if l == u {
            log_kernel_dim(l, req, beta, zeta)
        } else {
            let h = (u - l) / bins_per_dim as f64;
            let mean = (0..bins_per_dim)
                .map(|k| log_kernel_dim(l + (k as f64 + 0.5) * h, req, beta, zeta).exp())
                .sum::<f64>()
                / bins_per_dim as f64;
            mean.ln().max(LOG_FLOOR)
        };
        log_total += log_dim;
    }
    Ok(log_total.max(LOG_FLOOR).exp())
}
