//! Policy-value estimators, their variances, effective-sample-size
//! corrections and the resulting confidence intervals.
//!
//! The point estimators are the plain importance-sampling average (IPS) and
//! its self-normalised variant (SNIPS). Confidence intervals follow the usual
//! normal approximation, except that the sample size `N` inside the variance
//! normaliser and under the square root is replaced by an ESS-corrected size
//! `Ñ = 1 + N (ESS − 1) / ESS`. Since `Ñ ≤ N`, every corrected interval
//! contains the uncorrected (CLT) one.

use serde::{Deserialize, Serialize};

use crate::data::{log_importance_weights, LoggedDataset};
use crate::error::{Error, Result};
use crate::policy::{KernelConfig, Policy};
use crate::scalar::{max_of, Scalar};
use crate::stats;

/// `Ñ` at or below `1 + DEGENERATE_N_TILDE` gives an infinitely wide interval.
pub const DEGENERATE_N_TILDE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "ips")]
    Ips,
    #[serde(rename = "snips")]
    Snips,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 2] = [EstimatorKind::Ips, EstimatorKind::Snips];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Ips => "ips",
            EstimatorKind::Snips => "snips",
        }
    }
}

impl std::str::FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ips" => Ok(EstimatorKind::Ips),
            "snips" => Ok(EstimatorKind::Snips),
            _ => Err(Error::InvalidArgument(format!(
                "unknown estimator kind '{s}'"
            ))),
        }
    }
}

/// How the effective sample size is estimated.
///
/// `P2` is the inverse sum of squared normalised weights, `DInf` the inverse
/// of the largest normalised weight. The `R` variants normalise `w_i |r_i|`
/// instead of `w_i`. `CltOnly` applies no correction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EssMethod {
    #[serde(rename = "clt")]
    CltOnly,
    #[serde(rename = "p2")]
    P2,
    #[serde(rename = "p2r")]
    P2R,
    #[serde(rename = "dinf")]
    DInf,
    #[serde(rename = "dinfr")]
    DInfR,
}

impl EssMethod {
    pub const ALL: [EssMethod; 5] = [
        EssMethod::CltOnly,
        EssMethod::P2,
        EssMethod::P2R,
        EssMethod::DInf,
        EssMethod::DInfR,
    ];

    pub fn name(self) -> &'static str {
        match self {
            EssMethod::CltOnly => "clt",
            EssMethod::P2 => "p2",
            EssMethod::P2R => "p2r",
            EssMethod::DInf => "dinf",
            EssMethod::DInfR => "dinfr",
        }
    }

    pub fn uses_rewards(self) -> bool {
        matches!(self, EssMethod::P2R | EssMethod::DInfR)
    }

    /// The reward-independent counterpart of a reward-weighted method.
    pub fn reward_free(self) -> Self {
        match self {
            EssMethod::P2R => EssMethod::P2,
            EssMethod::DInfR => EssMethod::DInf,
            m => m,
        }
    }
}

impl std::str::FromStr for EssMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EssMethod::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown ESS method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EvaluationReport<F: Scalar> {
    pub kind: EstimatorKind,
    pub method: EssMethod,
    pub n: usize,
    pub value: F,
    /// Variance estimate with `Ñ` in the normaliser; infinite when `Ñ` degenerates.
    pub variance: F,
    pub ess: F,
    pub n_tilde: F,
    pub ci_low: F,
    pub ci_high: F,
    pub alpha: F,
    pub mean_weight: F,
    pub max_normalized_weight: F,
    pub support_flag: bool,
}

impl<F: Scalar> EvaluationReport<F> {
    pub fn ci_width(&self) -> F {
        self.ci_high - self.ci_low
    }

    pub fn contains(&self, x: F) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }
}

fn check_pair<F: Scalar>(weights: &[F], rewards: &[F]) -> Result<usize> {
    if weights.len() != rewards.len() {
        return Err(Error::LengthMismatch {
            left: weights.len(),
            right: rewards.len(),
        });
    }
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    if let Some(&w) = weights.iter().find(|&&w| w < F::zero()) {
        return Err(Error::NegativeWeight(w.to_f64_lossy()));
    }
    Ok(weights.len())
}

fn check_n_eff<F: Scalar>(n_eff: F) -> Result<()> {
    if n_eff.is_nan() || n_eff <= F::one() + F::lit(DEGENERATE_N_TILDE) {
        return Err(Error::DegenerateEss(n_eff.to_f64_lossy()));
    }
    Ok(())
}

/// `(1/N) Σ w_i r_i`.
pub fn ips_value<F: Scalar>(weights: &[F], rewards: &[F]) -> Result<F> {
    let n = check_pair(weights, rewards)?;
    let total: F = weights.iter().zip(rewards).map(|(&w, &r)| w * r).sum();
    Ok(total / F::from_usize_exact(n))
}

/// `Σ w_i r_i / Σ w_i`.
pub fn snips_value<F: Scalar>(weights: &[F], rewards: &[F]) -> Result<F> {
    check_pair(weights, rewards)?;
    let mass: F = weights.iter().copied().sum();
    if !(mass > F::zero()) {
        return Err(Error::ZeroMass);
    }
    let total: F = weights.iter().zip(rewards).map(|(&w, &r)| w * r).sum();
    Ok(total / mass)
}

/// Sample variance of `w_i r_i` around `ips` with `n_eff − 1` in the normaliser.
pub fn ips_variance<F: Scalar>(weights: &[F], rewards: &[F], ips: F, n_eff: F) -> Result<F> {
    check_pair(weights, rewards)?;
    check_n_eff(n_eff)?;
    let ss: F = weights
        .iter()
        .zip(rewards)
        .map(|(&w, &r)| {
            let e = w * r - ips;
            e * e
        })
        .sum();
    Ok(ss / (n_eff - F::one()))
}

/// Delta-method variance of SNIPS.
///
/// `Σ (w_i r_i − w_i snips)² / ((n_eff − 1) · ((1/N) Σ w_i)²)`, where `N` is
/// the true number of samples; only the `N − 1` normaliser takes `n_eff`.
pub fn snips_variance<F: Scalar>(weights: &[F], rewards: &[F], snips: F, n_eff: F) -> Result<F> {
    let n = check_pair(weights, rewards)?;
    check_n_eff(n_eff)?;
    let mean_w = weights.iter().copied().sum::<F>() / F::from_usize_exact(n);
    if !(mean_w > F::zero()) {
        return Err(Error::ZeroMass);
    }
    let ss: F = weights
        .iter()
        .zip(rewards)
        .map(|(&w, &r)| {
            let e = w * r - w * snips;
            e * e
        })
        .sum();
    Ok(ss / ((n_eff - F::one()) * (mean_w * mean_w)))
}

fn ess_from_mass<F: Scalar>(mass: &[F], l2: bool) -> F {
    let top = max_of(mass);
    let total: F = mass.iter().map(|&m| m / top).sum();
    if l2 {
        let sq: F = mass
            .iter()
            .map(|&m| {
                let s = m / top;
                s * s
            })
            .sum();
        total * total / sq
    } else {
        mass.iter().copied().sum::<F>() / top
    }
}

/// Effective sample size of the weighted sample, clamped to `[1, N]`.
///
/// Reward-weighted methods fall back to their reward-free counterpart when
/// every `w_i |r_i|` is zero.
pub fn ess<F: Scalar>(weights: &[F], rewards: Option<&[F]>, method: EssMethod) -> Result<F> {
    if weights.is_empty() {
        return Err(Error::Empty);
    }
    let n = weights.len();
    let n_f = F::from_usize_exact(n);
    if let Some(r) = rewards {
        check_pair(weights, r)?;
    } else if let Some(&w) = weights.iter().find(|&&w| w < F::zero()) {
        return Err(Error::NegativeWeight(w.to_f64_lossy()));
    }
    let mass: F = weights.iter().copied().sum();
    if !(mass > F::zero()) {
        return Err(Error::ZeroMass);
    }
    if !mass.is_finite() {
        return Err(Error::NonFinite("importance weights"));
    }

    let mut method = method;
    let mut reward_mass = Vec::new();
    if method.uses_rewards() {
        let r = rewards.ok_or_else(|| {
            Error::InvalidArgument(format!("ESS method {} needs rewards", method.name()))
        })?;
        reward_mass = weights.iter().zip(r).map(|(&w, &r)| w * r.abs()).collect();
        let total: F = reward_mass.iter().copied().sum();
        if !(total > F::zero()) {
            method = method.reward_free();
        } else if !total.is_finite() {
            return Err(Error::NonFinite("reward-weighted mass"));
        }
    }

    let raw = match method {
        EssMethod::CltOnly => n_f,
        EssMethod::P2 => ess_from_mass(weights, true),
        EssMethod::DInf => ess_from_mass(weights, false),
        EssMethod::P2R => ess_from_mass(&reward_mass, true),
        EssMethod::DInfR => ess_from_mass(&reward_mass, false),
    };
    Ok(raw.max(F::one()).min(n_f))
}

/// ESS-corrected sample size `Ñ = 1 + n (ess − 1) / ess`, kept within `[1, n]`.
pub fn corrected_sample_size<F: Scalar>(n: usize, ess: F) -> Result<F> {
    let n_f = F::from_usize_exact(n);
    if n == 0 || ess.is_nan() || ess < F::one() || ess > n_f {
        return Err(Error::EssOutOfRange {
            ess: ess.to_f64_lossy(),
            n,
        });
    }
    let n_tilde = F::one() + n_f * (ess - F::one()) / ess;
    Ok(n_tilde.max(F::one()).min(n_f))
}

/// Symmetric interval `value ± z · sqrt(var / n_tilde)`.
pub fn confidence_interval_z<F: Scalar>(value: F, var_ess: F, n_tilde: F, z: F) -> Result<(F, F)> {
    if var_ess < F::zero() || var_ess.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "variance must be nonnegative, got {var_ess}"
        )));
    }
    if !(z >= F::zero()) {
        return Err(Error::InvalidArgument(format!(
            "z must be nonnegative, got {z}"
        )));
    }
    if n_tilde.is_nan() || n_tilde <= F::one() + F::lit(DEGENERATE_N_TILDE) {
        return Ok((F::neg_infinity(), F::infinity()));
    }
    let half = z * (var_ess / n_tilde).sqrt();
    Ok((value - half, value + half))
}

/// Symmetric `1 − alpha` interval `value ± Φ⁻¹(1 − alpha/2) · sqrt(var / n_tilde)`.
pub fn confidence_interval<F: Scalar>(
    value: F,
    var_ess: F,
    n_tilde: F,
    alpha: F,
) -> Result<(F, F)> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let z = F::lit(stats::two_sided_z(alpha.to_f64_lossy()));
    confidence_interval_z(value, var_ess, n_tilde, z)
}

/// Mean weight and a flag raised when it sits more than three standard errors from one.
///
/// Under common support the weights have mean exactly one, so a flagged
/// sample suggests the target puts mass where the logging policy has none.
/// Fewer than two weights never raise the flag.
pub fn support_diagnostics<F: Scalar>(weights: &[F]) -> (F, bool) {
    let n = weights.len();
    if n == 0 {
        return (F::zero(), false);
    }
    let n_f = F::from_usize_exact(n);
    let mean = weights.iter().copied().sum::<F>() / n_f;
    if n < 2 {
        return (mean, false);
    }
    let ss: F = weights.iter().map(|&w| (w - mean) * (w - mean)).sum();
    let sd = (ss / (n_f - F::one())).sqrt();
    let flag = (mean - F::one()).abs() > F::lit(3.0) * sd / n_f.sqrt();
    (mean, flag)
}

/// IPS with a constant baseline: `β + (1/N) Σ w_i (r_i − β)`.
pub fn baseline_shifted_ips<F: Scalar>(weights: &[F], rewards: &[F], beta: F) -> Result<F> {
    let n = check_pair(weights, rewards)?;
    let total: F = weights
        .iter()
        .zip(rewards)
        .map(|(&w, &r)| w * (r - beta))
        .sum();
    Ok(beta + total / F::from_usize_exact(n))
}

/// Builds a report from log importance weights with critical value `z`.
///
/// SNIPS quantities and every ESS estimate are scale-invariant in the weights,
/// so they are computed from `exp(log w − max log w)`, which cannot underflow
/// to all zeros. IPS and the support diagnostic use the raw weights.
pub fn evaluate_log_weights_z<F: Scalar>(
    log_weights: &[F],
    rewards: &[F],
    kind: EstimatorKind,
    method: EssMethod,
    z: F,
) -> Result<EvaluationReport<F>> {
    if log_weights.len() != rewards.len() {
        return Err(Error::LengthMismatch {
            left: log_weights.len(),
            right: rewards.len(),
        });
    }
    let n = log_weights.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    if log_weights.iter().any(|lw| lw.is_nan()) {
        return Err(Error::NonFinite("log importance weights"));
    }
    let top = max_of(log_weights);
    if top == F::neg_infinity() {
        return Err(Error::ZeroMass);
    }
    let raw: Vec<F> = log_weights.iter().map(|&lw| lw.exp()).collect();
    if raw.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFinite("importance weights"));
    }
    let scaled: Vec<F> = log_weights.iter().map(|&lw| (lw - top).exp()).collect();

    let (mean_weight, support_flag) = support_diagnostics(&raw);
    let ess_value = ess(&scaled, Some(rewards), method)?;
    let n_f = F::from_usize_exact(n);
    let n_tilde = match method {
        EssMethod::CltOnly => n_f,
        _ => corrected_sample_size(n, ess_value)?,
    };
    let max_normalized_weight = F::one() / scaled.iter().copied().sum::<F>();

    let (value, variance) = match kind {
        EstimatorKind::Ips => {
            let v = ips_value(&raw, rewards)?;
            (v, ips_variance(&raw, rewards, v, n_tilde))
        }
        EstimatorKind::Snips => {
            let v = snips_value(&scaled, rewards)?;
            (v, snips_variance(&scaled, rewards, v, n_tilde))
        }
    };
    let variance = match variance {
        Ok(v) => v,
        Err(Error::DegenerateEss(_)) => F::infinity(),
        Err(e) => return Err(e),
    };
    let (ci_low, ci_high) = confidence_interval_z(value, variance, n_tilde, z)?;
    Ok(EvaluationReport {
        kind,
        method,
        n,
        value,
        variance,
        ess: ess_value,
        n_tilde,
        ci_low,
        ci_high,
        alpha: F::lit(stats::two_sided_alpha(z.to_f64_lossy())),
        mean_weight,
        max_normalized_weight,
        support_flag,
    })
}

/// As [`evaluate_log_weights_z`] with the critical value for level `1 − alpha`.
pub fn evaluate_log_weights<F: Scalar>(
    log_weights: &[F],
    rewards: &[F],
    kind: EstimatorKind,
    method: EssMethod,
    alpha: F,
) -> Result<EvaluationReport<F>> {
    if !(alpha > F::zero() && alpha < F::one()) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let z = F::lit(stats::two_sided_z(alpha.to_f64_lossy()));
    let mut report = evaluate_log_weights_z(log_weights, rewards, kind, method, z)?;
    report.alpha = alpha;
    Ok(report)
}

/// Full off-policy evaluation of `target` on `dataset`.
pub fn evaluate<F: Scalar>(
    dataset: &LoggedDataset<F>,
    target: &Policy<F>,
    kernel: Option<&KernelConfig<F>>,
    kind: EstimatorKind,
    method: EssMethod,
    alpha: F,
) -> Result<EvaluationReport<F>> {
    if dataset.is_empty() {
        return Err(Error::Empty);
    }
    let log_w = log_importance_weights(dataset, target, kernel)?;
    evaluate_log_weights(&log_w, &dataset.rewards(), kind, method, alpha)
}
