//! Actions, policies over the continuous action space, and their densities.

use std::ops::Deref;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;
use crate::scalar::Scalar;

/// A point in the d-dimensional action space (a vector of scalarisation weights).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(try_from = "Vec<F>", into = "Vec<F>")]
pub struct Action<F: Scalar>(Vec<F>);

impl<F: Scalar> Action<F> {
    pub fn new(values: Vec<F>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("action"));
        }
        Ok(Self(values))
    }

    pub fn splat(value: F, d: usize) -> Result<Self> {
        Self::new(vec![value; d])
    }

    pub fn zeros(d: usize) -> Self {
        Self(vec![F::zero(); d])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[F] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<F> {
        self.0
    }
}

impl<F: Scalar> Deref for Action<F> {
    type Target = [F];

    fn deref(&self) -> &[F] {
        &self.0
    }
}

impl<F: Scalar> TryFrom<Vec<F>> for Action<F> {
    type Error = Error;

    fn try_from(values: Vec<F>) -> Result<Self> {
        Self::new(values)
    }
}

impl<F: Scalar> From<Action<F>> for Vec<F> {
    fn from(a: Action<F>) -> Self {
        a.0
    }
}

/// Diagonal Gaussian bandwidth used to smooth a deterministic policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(try_from = "KernelRepr<F>", into = "KernelRepr<F>")]
pub struct KernelConfig<F: Scalar> {
    bandwidth_sigmas: Vec<F>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr<F> {
    bandwidth_sigmas: Vec<F>,
}

impl<F: Scalar> TryFrom<KernelRepr<F>> for KernelConfig<F> {
    type Error = Error;

    fn try_from(r: KernelRepr<F>) -> Result<Self> {
        Self::new(r.bandwidth_sigmas)
    }
}

impl<F: Scalar> From<KernelConfig<F>> for KernelRepr<F> {
    fn from(k: KernelConfig<F>) -> Self {
        KernelRepr {
            bandwidth_sigmas: k.bandwidth_sigmas,
        }
    }
}

impl<F: Scalar> KernelConfig<F> {
    pub fn new(bandwidth_sigmas: Vec<F>) -> Result<Self> {
        if bandwidth_sigmas.is_empty() {
            return Err(Error::InvalidKernel("empty bandwidth".into()));
        }
        if let Some(s) = bandwidth_sigmas
            .iter()
            .find(|s| !(s.is_finite() && **s > F::zero()))
        {
            return Err(Error::InvalidKernel(format!(
                "bandwidths must be positive and finite, got {s}"
            )));
        }
        Ok(Self { bandwidth_sigmas })
    }

    /// Same bandwidth in every dimension.
    pub fn isotropic(sigma: F, d: usize) -> Result<Self> {
        Self::new(vec![sigma; d])
    }

    pub fn dim(&self) -> usize {
        self.bandwidth_sigmas.len()
    }

    pub fn bandwidth_sigmas(&self) -> &[F] {
        &self.bandwidth_sigmas
    }
}

/// A distribution over actions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Policy<F: Scalar> {
    IsotropicGaussian { mean: Action<F>, sigma: F },
    DiagonalGaussian { mean: Action<F>, sigmas: Vec<F> },
    UniformBox { low: Action<F>, high: Action<F> },
    Deterministic { point: Action<F> },
}

fn positive_finite<F: Scalar>(x: F) -> bool {
    x.is_finite() && x > F::zero()
}

impl<F: Scalar> Policy<F> {
    pub fn isotropic_gaussian(mean: Action<F>, sigma: F) -> Result<Self> {
        let p = Policy::IsotropicGaussian { mean, sigma };
        p.validate()?;
        Ok(p)
    }

    pub fn diagonal_gaussian(mean: Action<F>, sigmas: Vec<F>) -> Result<Self> {
        let p = Policy::DiagonalGaussian { mean, sigmas };
        p.validate()?;
        Ok(p)
    }

    pub fn uniform_box(low: Action<F>, high: Action<F>) -> Result<Self> {
        let p = Policy::UniformBox { low, high };
        p.validate()?;
        Ok(p)
    }

    pub fn deterministic(point: Action<F>) -> Self {
        Policy::Deterministic { point }
    }

    /// Checks the invariants that the enum's public fields cannot enforce.
    pub fn validate(&self) -> Result<()> {
        match self {
            Policy::IsotropicGaussian { sigma, .. } => {
                if !positive_finite(*sigma) {
                    return Err(Error::InvalidPolicy(format!(
                        "sigma must be positive and finite, got {sigma}"
                    )));
                }
            }
            Policy::DiagonalGaussian { mean, sigmas } => {
                if sigmas.len() != mean.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: mean.dim(),
                        got: sigmas.len(),
                    });
                }
                if let Some(s) = sigmas.iter().find(|s| !positive_finite(**s)) {
                    return Err(Error::InvalidPolicy(format!(
                        "sigmas must be positive and finite, got {s}"
                    )));
                }
            }
            Policy::UniformBox { low, high } => {
                if low.dim() != high.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: low.dim(),
                        got: high.dim(),
                    });
                }
                if let Some(k) = (0..low.dim()).find(|&k| low[k] >= high[k]) {
                    return Err(Error::InvalidPolicy(format!(
                        "box requires low < high, violated in dimension {k}"
                    )));
                }
            }
            Policy::Deterministic { .. } => {}
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Policy::IsotropicGaussian { mean, .. } | Policy::DiagonalGaussian { mean, .. } => {
                mean.dim()
            }
            Policy::UniformBox { low, .. } => low.dim(),
            Policy::Deterministic { point } => point.dim(),
        }
    }

    /// The centre of the policy: Gaussian mean, box midpoint, or the point itself.
    pub fn center(&self) -> Action<F> {
        match self {
            Policy::IsotropicGaussian { mean, .. } | Policy::DiagonalGaussian { mean, .. } => {
                mean.clone()
            }
            Policy::UniformBox { low, high } => Action(
                low.iter()
                    .zip(high.iter())
                    .map(|(&l, &h)| (l + h) / F::lit(2.0))
                    .collect(),
            ),
            Policy::Deterministic { point } => point.clone(),
        }
    }

    /// Per-dimension standard deviations of a Gaussian policy.
    pub fn gaussian_sigmas(&self) -> Option<Vec<F>> {
        match self {
            Policy::IsotropicGaussian { mean, sigma } => Some(vec![*sigma; mean.dim()]),
            Policy::DiagonalGaussian { sigmas, .. } => Some(sigmas.clone()),
            _ => None,
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, Policy::Deterministic { .. })
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// Log density of a diagonal Gaussian, with `sigma_at(k)` the scale in dimension k.
fn diag_gaussian_log_density<F: Scalar>(mean: &[F], sigma_at: impl Fn(usize) -> F, a: &[F]) -> F {
    let half = F::lit(0.5);
    let d = F::from_usize_exact(a.len());
    let mut log_norm = -half * d * (F::TAU()).ln();
    let mut quad = F::zero();
    for k in 0..a.len() {
        let s = sigma_at(k);
        let z = (a[k] - mean[k]) / s;
        quad += z * z;
        log_norm -= s.ln();
    }
    log_norm - half * quad
}

/// Log probability density of `policy` at `a`; negative infinity outside a box's support.
pub fn log_density<F: Scalar>(policy: &Policy<F>, a: &[F]) -> Result<F> {
    check_dim(policy.dim(), a.len())?;
    Ok(match policy {
        Policy::IsotropicGaussian { mean, sigma } => diag_gaussian_log_density(mean, |_| *sigma, a),
        Policy::DiagonalGaussian { mean, sigmas } => {
            diag_gaussian_log_density(mean, |k| sigmas[k], a)
        }
        Policy::UniformBox { low, high } => {
            let inside = a
                .iter()
                .enumerate()
                .all(|(k, &x)| x >= low[k] && x <= high[k]);
            if inside {
                -low.iter()
                    .zip(high.iter())
                    .map(|(&l, &h)| (h - l).ln())
                    .sum::<F>()
            } else {
                F::neg_infinity()
            }
        }
        Policy::Deterministic { .. } => return Err(Error::DeterministicDensity),
    })
}

/// Density of `policy` at `a`, i.e. `exp(log_density)`.
pub fn density<F: Scalar>(policy: &Policy<F>, a: &[F]) -> Result<F> {
    log_density(policy, a).map(F::exp)
}

/// Log density of the Gaussian kernel centred at `point` evaluated at `a`.
pub fn kernel_log_density<F: Scalar>(point: &[F], kernel: &KernelConfig<F>, a: &[F]) -> Result<F> {
    check_dim(point.len(), a.len())?;
    check_dim(point.len(), kernel.dim())?;
    let sigmas = kernel.bandwidth_sigmas();
    Ok(diag_gaussian_log_density(point, |k| sigmas[k], a))
}

/// Draws one action from `policy` using `rng`.
///
/// Normal and uniform variates are generated in `f64` and converted, so a
/// seed yields the same stream whatever the scalar type.
pub fn sample_one<F: Scalar, R: Rng + ?Sized>(policy: &Policy<F>, rng: &mut R) -> Action<F> {
    let draw = |rng: &mut R| -> f64 { StandardNormal.sample(rng) };
    match policy {
        Policy::IsotropicGaussian { mean, sigma } => Action(
            mean.iter()
                .map(|&m| m + *sigma * F::lit(draw(rng)))
                .collect(),
        ),
        Policy::DiagonalGaussian { mean, sigmas } => Action(
            mean.iter()
                .zip(sigmas.iter())
                .map(|(&m, &s)| m + s * F::lit(draw(rng)))
                .collect(),
        ),
        Policy::UniformBox { low, high } => Action(
            low.iter()
                .zip(high.iter())
                .map(|(&l, &h)| {
                    let u: f64 = rng.random();
                    l + (h - l) * F::lit(u)
                })
                .collect(),
        ),
        Policy::Deterministic { point } => point.clone(),
    }
}

/// Draws `n` i.i.d. actions from `policy`, reproducibly for a given seed.
pub fn sample<F: Scalar>(policy: &Policy<F>, seed: RngSeed, n: usize) -> Result<Vec<Action<F>>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    policy.validate()?;
    let mut rng = seed.rng();
    Ok((0..n).map(|_| sample_one(policy, &mut rng)).collect())
}
