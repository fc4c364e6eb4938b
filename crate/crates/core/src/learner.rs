//! Pessimistic policy learning over deterministic, kernel-smoothed policies.
//!
//! The objective is the lower end of the ESS-corrected confidence interval,
//! `V̂ − z · sqrt(Var_ESS / Ñ)`, maximised by gradient ascent with central
//! finite differences and a halving line search.

use serde::{Deserialize, Serialize};

use crate::data::{target_log_density, LoggedDataset};
use crate::error::{Error, Result};
use crate::estimators::{evaluate_log_weights_z, EssMethod, EstimatorKind, EvaluationReport};
use crate::policy::{Action, KernelConfig, Policy};
use crate::scalar::{max_of, Scalar};

/// Maximum number of step halvings per iteration.
pub const MAX_BACKTRACKS: usize = 30;

fn default_kind() -> EstimatorKind {
    EstimatorKind::Snips
}
fn default_method() -> EssMethod {
    EssMethod::DInfR
}
fn default_z<F: Scalar>() -> F {
    F::lit(1.959_964)
}
fn default_step<F: Scalar>() -> F {
    F::lit(0.5)
}
fn default_max_iters() -> usize {
    200
}
fn default_grad_tol<F: Scalar>() -> F {
    F::lit(1e-6)
}
fn default_fd_step<F: Scalar>() -> F {
    F::lit(1e-4)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CrmConfig<F: Scalar> {
    #[serde(default = "default_kind")]
    pub kind: EstimatorKind,
    #[serde(default = "default_method")]
    pub method: EssMethod,
    /// Normal critical value multiplying the interval half-width.
    #[serde(default = "default_z")]
    pub z: F,
    pub kernel: KernelConfig<F>,
    #[serde(default = "default_step")]
    pub step_size: F,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: F,
    #[serde(default = "default_fd_step")]
    pub fd_step: F,
}

impl<F: Scalar> CrmConfig<F> {
    /// SNIPS with the reward-weighted ℓ∞ ESS at the 95% level.
    pub fn new(kernel: KernelConfig<F>) -> Self {
        Self {
            kind: default_kind(),
            method: default_method(),
            z: default_z(),
            kernel,
            step_size: default_step(),
            max_iters: default_max_iters(),
            grad_tol: default_grad_tol(),
            fd_step: default_fd_step(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |x: F| x.is_finite() && x > F::zero();
        if !(self.z.is_finite() && self.z >= F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "z must be nonnegative, got {}",
                self.z
            )));
        }
        if !positive(self.step_size) {
            return Err(Error::InvalidArgument(format!(
                "step_size must be positive, got {}",
                self.step_size
            )));
        }
        if !positive(self.fd_step) {
            return Err(Error::InvalidArgument(format!(
                "fd_step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.grad_tol >= F::zero()) {
            return Err(Error::InvalidArgument(format!(
                "grad_tol must be nonnegative, got {}",
                self.grad_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint<F> {
    pub iteration: usize,
    pub objective: F,
    pub grad_norm: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LearnResult<F: Scalar> {
    pub mu: Action<F>,
    pub trajectory: Vec<TrajectoryPoint<F>>,
    pub final_report: EvaluationReport<F>,
}

fn kernel_log_weights<F: Scalar>(
    dataset: &LoggedDataset<F>,
    mu: &[F],
    kernel: &KernelConfig<F>,
) -> Result<Vec<F>> {
    if mu.len() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: mu.len(),
        });
    }
    if mu.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("policy mean"));
    }
    let target = Policy::Deterministic {
        point: Action::new(mu.to_vec())?,
    };
    dataset
        .samples()
        .iter()
        .zip(dataset.log_propensities())
        .map(|(s, &lp)| Ok(target_log_density(&target, Some(kernel), &s.action)? - lp))
        .collect()
}

/// Evaluation report of the kernel-smoothed deterministic policy at `mu`.
pub fn crm_report<F: Scalar>(
    dataset: &LoggedDataset<F>,
    mu: &[F],
    config: &CrmConfig<F>,
) -> Result<EvaluationReport<F>> {
    if dataset.is_empty() {
        return Err(Error::Empty);
    }
    let log_w = kernel_log_weights(dataset, mu, &config.kernel)?;
    evaluate_log_weights_z(
        &log_w,
        &dataset.rewards(),
        config.kind,
        config.method,
        config.z,
    )
}

/// Pessimistic objective: lower end of the corrected interval at `mu`.
///
/// Negative infinity when the effective sample size degenerates.
pub fn crm_lower_bound<F: Scalar>(
    dataset: &LoggedDataset<F>,
    mu: &[F],
    config: &CrmConfig<F>,
) -> Result<F> {
    Ok(crm_report(dataset, mu, config)?.ci_low)
}

/// Gradient of the SNIPS estimate with respect to the kernel centre `mu`.
///
/// With normalised weights `w̄_i` and `x_ik = (a_ik − μ_k) / σ_k²`, the
/// gradient is `Σ_i w̄_i x_ik (r_i − V̂)`.
pub fn snips_analytic_gradient<F: Scalar>(
    dataset: &LoggedDataset<F>,
    mu: &[F],
    kernel: &KernelConfig<F>,
) -> Result<Vec<F>> {
    if dataset.is_empty() {
        return Err(Error::Empty);
    }
    let log_w = kernel_log_weights(dataset, mu, kernel)?;
    let top = max_of(&log_w);
    if top == F::neg_infinity() {
        return Err(Error::ZeroMass);
    }
    let mut w: Vec<F> = log_w.iter().map(|&lw| (lw - top).exp()).collect();
    let mass: F = w.iter().copied().sum();
    for x in &mut w {
        *x /= mass;
    }
    let value: F = w
        .iter()
        .zip(dataset.samples())
        .map(|(&wi, s)| wi * s.reward)
        .sum();
    let sigmas = kernel.bandwidth_sigmas();
    let mut grad = vec![F::zero(); mu.len()];
    for (wi, s) in w.iter().zip(dataset.samples()) {
        let centred = *wi * (s.reward - value);
        for k in 0..mu.len() {
            grad[k] += centred * (s.action[k] - mu[k]) / (sigmas[k] * sigmas[k]);
        }
    }
    Ok(grad)
}

/// Central-difference gradient with per-coordinate step `h (1 + |μ_k|)`.
pub fn finite_difference_gradient<F: Scalar, O>(objective: O, mu: &[F], h: F) -> Result<Vec<F>>
where
    O: Fn(&[F]) -> F,
{
    if !(h.is_finite() && h > F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {h}"
        )));
    }
    let mut point = mu.to_vec();
    let mut grad = Vec::with_capacity(mu.len());
    for k in 0..mu.len() {
        let step = h * (F::one() + mu[k].abs());
        let hi = mu[k] + step;
        let lo = mu[k] - step;
        point[k] = hi;
        let f_hi = objective(&point);
        point[k] = lo;
        let f_lo = objective(&point);
        point[k] = mu[k];
        if !f_hi.is_finite() || !f_lo.is_finite() {
            return Err(Error::NonFiniteObjective(
                mu.iter().map(|x| x.to_f64_lossy()).collect(),
            ));
        }
        // divide by the representable step actually taken
        grad.push((f_hi - f_lo) / (hi - lo));
    }
    Ok(grad)
}

/// The logging policy's centre, or the origin when none is declared.
pub fn default_init<F: Scalar>(dataset: &LoggedDataset<F>) -> Action<F> {
    dataset
        .logging_policy()
        .map(Policy::center)
        .unwrap_or_else(|| Action::zeros(dataset.dim()))
}

fn norm<F: Scalar>(v: &[F]) -> F {
    v.iter().map(|&x| x * x).sum::<F>().sqrt()
}

/// Gradient ascent on [`crm_lower_bound`] starting from `init`.
///
/// Each iteration records the current objective and gradient norm, then tries
/// a step of `step_size` along the gradient, halving it up to
/// [`MAX_BACKTRACKS`] times until the objective does not decrease. Stops at
/// `max_iters`, when the gradient norm drops below `grad_tol`, when no step
/// is accepted, or when the objective is non-finite near the iterate.
pub fn learn<F: Scalar>(
    dataset: &LoggedDataset<F>,
    config: &CrmConfig<F>,
    init: &Action<F>,
) -> Result<LearnResult<F>> {
    config.validate()?;
    if init.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: init.dim(),
        });
    }
    let objective = |mu: &[F]| crm_lower_bound(dataset, mu, config).unwrap_or(F::nan());

    let mut mu = init.to_vec();
    let mut value = crm_lower_bound(dataset, &mu, config)?;
    if !value.is_finite() {
        return Err(Error::DegenerateInit);
    }

    let mut trajectory = Vec::new();
    for iteration in 0..=config.max_iters {
        let grad = match finite_difference_gradient(objective, &mu, config.fd_step) {
            Ok(g) => g,
            Err(_) => {
                trajectory.push(TrajectoryPoint {
                    iteration,
                    objective: value,
                    grad_norm: F::nan(),
                });
                break;
            }
        };
        let grad_norm = norm(&grad);
        trajectory.push(TrajectoryPoint {
            iteration,
            objective: value,
            grad_norm,
        });
        if iteration == config.max_iters || grad_norm < config.grad_tol {
            break;
        }

        let mut step = config.step_size;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let candidate: Vec<F> = mu.iter().zip(&grad).map(|(&m, &g)| m + step * g).collect();
            let v = objective(&candidate);
            if v.is_finite() && v >= value {
                mu = candidate;
                value = v;
                accepted = true;
                break;
            }
            step /= F::lit(2.0);
        }
        if !accepted {
            break;
        }
    }

    let final_report = crm_report(dataset, &mu, config)?;
    Ok(LearnResult {
        mu: Action::new(mu)?,
        trajectory,
        final_report,
    })
}
