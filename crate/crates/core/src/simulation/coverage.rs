use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{poisson_reward_with, true_value};
use crate::error::{Error, Result};
use crate::estimators::{evaluate_log_weights, EssMethod, EstimatorKind};
use crate::policy::{log_density, sample_one, Action, Policy};
use crate::rng::RngSeed;

/// Configuration of the interval-coverage simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageConfig {
    pub d: usize,
    pub logging: Policy<f64>,
    /// Common per-dimension mean of every target policy.
    pub target_mean: f64,
    pub target_sigmas: Vec<f64>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    pub kinds: Vec<EstimatorKind>,
    pub methods: Vec<EssMethod>,
    pub master_seed: u64,
}

fn powers_of_two(lo: u32, hi: u32) -> Vec<usize> {
    (lo..=hi).map(|k| 1usize << k).collect()
}

impl CoverageConfig {
    /// Full grid: N = 2^3 … 2^20, 2000 replications.
    pub fn paper(master_seed: u64) -> Self {
        let d = 5;
        Self {
            d,
            logging: Policy::IsotropicGaussian {
                mean: Action::zeros(d),
                sigma: 1.0,
            },
            target_mean: 0.5,
            target_sigmas: vec![1.0, 0.5, 0.25, 0.125, 0.0625],
            sample_sizes: powers_of_two(3, 20),
            replications: 2000,
            alpha: 0.05,
            kinds: vec![EstimatorKind::Snips],
            methods: EssMethod::ALL.to_vec(),
            master_seed,
        }
    }

    /// Desk-scale grid: N = 2^3 … 2^14, 500 replications.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            sample_sizes: powers_of_two(3, 14),
            replications: 500,
            ..Self::paper(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.d == 0 {
            return bad("d must be positive".into());
        }
        self.logging.validate()?;
        if self.logging.is_deterministic() {
            return bad("logging policy must be stochastic".into());
        }
        if self.logging.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: self.logging.dim(),
            });
        }
        if !self.target_mean.is_finite() {
            return bad("target_mean must be finite".into());
        }
        if self.target_sigmas.is_empty()
            || self
                .target_sigmas
                .iter()
                .any(|s| !(s.is_finite() && *s > 0.0))
        {
            return bad("target_sigmas must be a nonempty list of positive reals".into());
        }
        if self.sample_sizes.is_empty()
            || self.sample_sizes[0] == 0
            || self.sample_sizes.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("sample_sizes must be positive and strictly increasing".into());
        }
        if self.replications < 2 {
            return bad("replications must be at least 2".into());
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {}", self.alpha));
        }
        if self.kinds.is_empty() || self.methods.is_empty() {
            return bad("kinds and methods must be nonempty".into());
        }
        Ok(())
    }

    fn targets(&self) -> Result<Vec<(f64, Policy<f64>, f64)>> {
        self.target_sigmas
            .iter()
            .map(|&sigma| {
                let target =
                    Policy::isotropic_gaussian(Action::splat(self.target_mean, self.d)?, sigma)?;
                let truth = true_value(&target, self.d)?;
                Ok((sigma, target, truth))
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub kind: EstimatorKind,
    pub method: EssMethod,
    pub target_sigma: f64,
    pub n: usize,
    pub coverage: f64,
    pub mean_ci_width: f64,
    pub mean_ess: f64,
}

#[derive(Clone, Copy)]
struct Outcome {
    covered: bool,
    width: f64,
    ess: f64,
}

/// One replication: a single logged sample of the largest size, evaluated on
/// every prefix length, target, estimator and ESS method.
///
/// Outcomes are laid out in (kind, method, sigma, n) order.
fn replicate(
    config: &CoverageConfig,
    targets: &[(f64, Policy<f64>, f64)],
    replication: usize,
) -> Result<Vec<Outcome>> {
    let n_max = *config.sample_sizes.last().expect("validated nonempty");
    let mut rng = RngSeed::new(config.master_seed, replication as u64).rng();
    let mut actions = Vec::with_capacity(n_max);
    let mut rewards = Vec::with_capacity(n_max);
    let mut log_prop = Vec::with_capacity(n_max);
    for _ in 0..n_max {
        let a = sample_one(&config.logging, &mut rng);
        rewards.push(poisson_reward_with(&a, &mut rng) as f64);
        log_prop.push(log_density(&config.logging, &a)?);
        actions.push(a);
    }

    let n_sizes = config.sample_sizes.len();
    let n_targets = targets.len();
    let per_kind = config.methods.len() * n_targets * n_sizes;
    let mut out = vec![
        Outcome {
            covered: false,
            width: 0.0,
            ess: 0.0
        };
        config.kinds.len() * per_kind
    ];

    for (ti, (_, target, truth)) in targets.iter().enumerate() {
        let log_w = actions
            .iter()
            .zip(&log_prop)
            .map(|(a, &lp)| Ok(log_density(target, a)? - lp))
            .collect::<Result<Vec<f64>>>()?;
        for (ni, &n) in config.sample_sizes.iter().enumerate() {
            for (ki, &kind) in config.kinds.iter().enumerate() {
                for (mi, &method) in config.methods.iter().enumerate() {
                    let rep = evaluate_log_weights(
                        &log_w[..n],
                        &rewards[..n],
                        kind,
                        method,
                        config.alpha,
                    )?;
                    let idx = ki * per_kind + (mi * n_targets + ti) * n_sizes + ni;
                    out[idx] = Outcome {
                        covered: rep.contains(*truth),
                        width: rep.ci_width(),
                        ess: rep.ess,
                    };
                }
            }
        }
    }
    Ok(out)
}

/// Empirical coverage, interval width and ESS for every configured cell.
///
/// Replication `r` draws from stream `r` of the master seed; the aggregation
/// is a sequential fold in replication order, so the output does not depend on
/// the number of worker threads.
pub fn run_coverage_study(config: &CoverageConfig) -> Result<Vec<CoverageRow>> {
    config.validate()?;
    let targets = config.targets()?;

    let outcomes = (0..config.replications)
        .into_par_iter()
        .map(|r| replicate(config, &targets, r))
        .collect::<Result<Vec<_>>>()?;

    let reps = config.replications as f64;
    let mut rows = Vec::new();
    let mut idx = 0;
    for &kind in &config.kinds {
        for &method in &config.methods {
            for (sigma, _, _) in &targets {
                for &n in &config.sample_sizes {
                    let (mut hits, mut width, mut ess) = (0usize, 0.0, 0.0);
                    for rep in &outcomes {
                        let o = rep[idx];
                        hits += o.covered as usize;
                        width += o.width;
                        ess += o.ess;
                    }
                    rows.push(CoverageRow {
                        kind,
                        method,
                        target_sigma: *sigma,
                        n,
                        coverage: hits as f64 / reps,
                        mean_ci_width: width / reps,
                        mean_ess: ess / reps,
                    });
                    idx += 1;
                }
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> CoverageConfig {
        CoverageConfig {
            target_sigmas: vec![1.0, 0.25],
            sample_sizes: vec![8, 32, 128],
            replications: 40,
            methods: vec![EssMethod::CltOnly, EssMethod::DInfR],
            ..CoverageConfig::desk(seed)
        }
    }

    #[test]
    fn rows_in_config_order() {
        let rows = run_coverage_study(&small(1)).unwrap();
        assert_eq!(rows.len(), 2 * 2 * 3);
        assert_eq!(rows[0].method, EssMethod::CltOnly);
        assert_eq!((rows[0].target_sigma, rows[0].n), (1.0, 8));
        assert_eq!((rows[5].target_sigma, rows[5].n), (0.25, 128));
        assert_eq!(rows[6].method, EssMethod::DInfR);
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.coverage));
            assert!(r.mean_ess <= r.n as f64);
            assert!(r.mean_ess >= 1.0);
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        let cfg = small(9);
        let a = super::super::with_workers(Some(1), || run_coverage_study(&cfg).unwrap());
        let b = super::super::with_workers(Some(4), || run_coverage_study(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn corrected_coverage_dominates_rowwise() {
        let rows = run_coverage_study(&small(3)).unwrap();
        let (clt, dinfr) = rows.split_at(6);
        for (c, d) in clt.iter().zip(dinfr) {
            assert!(d.coverage >= c.coverage);
            assert!(d.mean_ci_width >= c.mean_ci_width);
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = small(1);
        c.replications = 1;
        assert!(run_coverage_study(&c).is_err());
        let mut c = small(1);
        c.sample_sizes = vec![16, 8];
        assert!(run_coverage_study(&c).is_err());
        let mut c = small(1);
        c.logging = Policy::deterministic(Action::zeros(5));
        assert!(run_coverage_study(&c).is_err());
    }
}
