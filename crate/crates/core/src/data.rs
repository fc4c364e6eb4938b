//! Logged bandit data and importance weighting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::{kernel_log_density, log_density, Action, KernelConfig, Policy};
use crate::scalar::Scalar;

/// Tolerance on |log stored density − log policy density| when a dataset
/// declares its logging policy.
pub const PROPENSITY_LOG_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct LoggedSample<F: Scalar> {
    pub action: Action<F>,
    pub reward: F,
    /// Density of `action` under the logging policy.
    pub logging_density: F,
}

impl<F: Scalar> LoggedSample<F> {
    pub fn new(action: Action<F>, reward: F, logging_density: F) -> Self {
        Self {
            action,
            reward,
            logging_density,
        }
    }
}

/// A validated logged dataset.
///
/// Log propensities are cached at construction. When a logging policy is
/// declared they are taken from the policy itself (after checking the stored
/// densities agree), so a target identical to the logging policy yields
/// importance weights of exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct LoggedDataset<F: Scalar> {
    d: usize,
    samples: Vec<LoggedSample<F>>,
    logging_policy: Option<Policy<F>>,
    log_propensities: Vec<F>,
}

impl<F: Scalar> LoggedDataset<F> {
    pub fn new(
        d: usize,
        samples: Vec<LoggedSample<F>>,
        logging_policy: Option<Policy<F>>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if let Some(p) = &logging_policy {
            p.validate()?;
            if p.is_deterministic() {
                return Err(Error::InvalidPolicy(
                    "logging policy must be stochastic".into(),
                ));
            }
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: p.dim(),
                });
            }
        }
        let mut log_propensities = Vec::with_capacity(samples.len());
        for (index, s) in samples.iter().enumerate() {
            if s.action.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: s.action.dim(),
                });
            }
            if !s.reward.is_finite() {
                return Err(Error::NonFinite("reward"));
            }
            if !(s.logging_density > F::zero()) || !s.logging_density.is_finite() {
                return Err(Error::NonPositiveDensity {
                    index,
                    value: s.logging_density.to_f64_lossy(),
                });
            }
            let stored = s.logging_density.ln();
            let lp = match &logging_policy {
                Some(p) => {
                    let lp = log_density(p, &s.action)?;
                    let delta = (stored - lp).abs();
                    if !(delta <= F::lit(PROPENSITY_LOG_TOLERANCE)) {
                        return Err(Error::PropensityMismatch {
                            index,
                            delta: delta.to_f64_lossy(),
                        });
                    }
                    lp
                }
                None => stored,
            };
            log_propensities.push(lp);
        }
        Ok(Self {
            d,
            samples,
            logging_policy,
            log_propensities,
        })
    }

    /// Builds a dataset by recording each action's exact density under `logging`.
    pub fn from_policy(
        logging: Policy<F>,
        actions: Vec<Action<F>>,
        rewards: Vec<F>,
    ) -> Result<Self> {
        if actions.len() != rewards.len() {
            return Err(Error::LengthMismatch {
                left: actions.len(),
                right: rewards.len(),
            });
        }
        let samples = actions
            .into_iter()
            .zip(rewards)
            .map(|(a, r)| {
                let density = log_density(&logging, &a)?.exp();
                Ok(LoggedSample::new(a, r, density))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(logging.dim(), samples, Some(logging))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[LoggedSample<F>] {
        &self.samples
    }

    pub fn logging_policy(&self) -> Option<&Policy<F>> {
        self.logging_policy.as_ref()
    }

    pub fn log_propensities(&self) -> &[F] {
        &self.log_propensities
    }

    pub fn rewards(&self) -> Vec<F> {
        self.samples.iter().map(|s| s.reward).collect()
    }

    pub fn mean_reward(&self) -> Option<F> {
        if self.is_empty() {
            return None;
        }
        Some(self.samples.iter().map(|s| s.reward).sum::<F>() / F::from_usize_exact(self.len()))
    }
}

/// Log target density at `a`, going through the kernel for deterministic targets.
///
/// Stochastic targets ignore `kernel`.
pub fn target_log_density<F: Scalar>(
    target: &Policy<F>,
    kernel: Option<&KernelConfig<F>>,
    a: &[F],
) -> Result<F> {
    match target {
        Policy::Deterministic { point } => {
            let k = kernel.ok_or(Error::DeterministicDensity)?;
            kernel_log_density(point, k, a)
        }
        _ => log_density(target, a),
    }
}

/// Log importance weights `log π_θ(a_i) − log π_0(a_i)`.
pub fn log_importance_weights<F: Scalar>(
    dataset: &LoggedDataset<F>,
    target: &Policy<F>,
    kernel: Option<&KernelConfig<F>>,
) -> Result<Vec<F>> {
    target.validate()?;
    if target.dim() != dataset.dim() {
        return Err(Error::DimensionMismatch {
            expected: dataset.dim(),
            got: target.dim(),
        });
    }
    dataset
        .samples()
        .iter()
        .zip(dataset.log_propensities())
        .map(|(s, &lp)| Ok(target_log_density(target, kernel, &s.action)? - lp))
        .collect()
}

/// Importance weights `π_θ(a_i) / π_0(a_i)`, exponentiated once from log space.
pub fn importance_weights<F: Scalar>(
    dataset: &LoggedDataset<F>,
    target: &Policy<F>,
    kernel: Option<&KernelConfig<F>>,
) -> Result<Vec<F>> {
    Ok(log_importance_weights(dataset, target, kernel)?
        .into_iter()
        .map(F::exp)
        .collect())
}
