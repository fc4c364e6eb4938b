//! Synthetic environments and the experiment drivers built on them.

mod benchmark;
mod cod;
mod coverage;
mod reduction;

pub use benchmark::{
    benchmark_optimum, benchmark_reward_probability, make_coverage_dataset,
    make_learning_benchmark, BENCHMARK_OPTIMUM,
};
pub use cod::{
    run_cod_study, sample_cell, CdfRow, CellSamples, CodConfig, CodStudy, Family, MassRow,
};
pub use coverage::{run_coverage_study, CoverageConfig, CoverageRow};
pub use reduction::{min_sample_size_for_coverage, ReductionRow};

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::policy::Policy;
use crate::rng::RngSeed;
use crate::stats::{normal_cdf, normal_pdf};

/// Reward rate per unit of mean action weight.
pub const REWARD_RATE_SCALE: f64 = 0.1;

/// Poisson rate `max(0, 0.1 · mean(action))`.
pub fn poisson_rate(action: &[f64]) -> f64 {
    if action.is_empty() {
        return 0.0;
    }
    let mean = action.iter().sum::<f64>() / action.len() as f64;
    (REWARD_RATE_SCALE * mean).max(0.0)
}

/// Draws a reward from `Poisson(max(0, 0.1 · mean(action)))` using `rng`.
pub fn poisson_reward_with<R: Rng + ?Sized>(action: &[f64], rng: &mut R) -> u64 {
    let rate = poisson_rate(action);
    if rate <= 0.0 {
        return 0;
    }
    // rate is positive and finite here, so construction cannot fail
    let dist = Poisson::new(rate).expect("valid Poisson rate");
    dist.sample(rng) as u64
}

/// Draws a reward from `Poisson(max(0, 0.1 · mean(action)))` on its own stream.
pub fn poisson_reward(action: &[f64], seed: RngSeed) -> u64 {
    poisson_reward_with(action, &mut seed.rng())
}

/// Exact expected Poisson reward under a Gaussian target with a common mean.
///
/// The mean action `ā` is Gaussian with mean `m` and standard deviation
/// `s = sqrt(Σ σ_k²) / d`, so the clamped rate has the rectified-normal mean
/// `0.1 · (m Φ(m/s) + s φ(m/s))`.
pub fn true_value(target: &Policy<f64>, d: usize) -> Result<f64> {
    target.validate()?;
    if target.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: target.dim(),
        });
    }
    let sigmas = target
        .gaussian_sigmas()
        .ok_or_else(|| Error::InvalidArgument("true value needs a Gaussian target".into()))?;
    let mean = target.center();
    let m = mean[0];
    if mean.iter().any(|&x| x != m) {
        return Err(Error::InvalidArgument(
            "true value needs a common mean in every dimension".into(),
        ));
    }
    let s = sigmas.iter().map(|s| s * s).sum::<f64>().sqrt() / d as f64;
    let t = m / s;
    Ok(REWARD_RATE_SCALE * (m * normal_cdf(t) + s * normal_pdf(t)))
}

/// Runs `f` on a dedicated pool of `workers` threads, or on the global pool.
///
/// Every driver in this module produces identical output for any worker count.
pub fn with_workers<R: Send>(workers: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match workers {
        Some(n) if n > 0 => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(f),
            Err(_) => f(),
        },
        _ => f(),
    }
}
