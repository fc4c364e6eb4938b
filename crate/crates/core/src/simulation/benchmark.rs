use rand::Rng;

use super::poisson_reward_with;
use crate::data::LoggedDataset;
use crate::error::{Error, Result};
use crate::policy::{sample_one, Action, Policy};
use crate::rng::RngSeed;

/// Every coordinate of the benchmark's reward-maximising action.
pub const BENCHMARK_OPTIMUM: f64 = 0.3;

pub fn benchmark_optimum(d: usize) -> Vec<f64> {
    vec![BENCHMARK_OPTIMUM; d]
}

/// Success probability `exp(−‖a − a*‖² / 2)` of the learning benchmark.
pub fn benchmark_reward_probability(action: &[f64]) -> f64 {
    let sq: f64 = action
        .iter()
        .map(|&x| (x - BENCHMARK_OPTIMUM) * (x - BENCHMARK_OPTIMUM))
        .sum();
    (-0.5 * sq).exp()
}

fn standard_logging(d: usize) -> Result<Policy<f64>> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    Policy::isotropic_gaussian(Action::zeros(d), 1.0)
}

/// `n` actions from `N(0, I_d)` with Bernoulli rewards peaking at `0.3 · 1`.
pub fn make_learning_benchmark(seed: RngSeed, n: usize, d: usize) -> Result<LoggedDataset<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let logging = standard_logging(d)?;
    let mut rng = seed.rng();
    let mut actions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for _ in 0..n {
        let a = sample_one(&logging, &mut rng);
        let hit = rng.random::<f64>() < benchmark_reward_probability(&a);
        rewards.push(if hit { 1.0 } else { 0.0 });
        actions.push(a);
    }
    LoggedDataset::from_policy(logging, actions, rewards)
}

/// `n` actions from `N(0, I_d)` with the Poisson rewards of the coverage study.
pub fn make_coverage_dataset(seed: RngSeed, n: usize, d: usize) -> Result<LoggedDataset<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument(
            "sample size must be at least 1".into(),
        ));
    }
    let logging = standard_logging(d)?;
    let mut rng = seed.rng();
    let mut actions = Vec::with_capacity(n);
    let mut rewards = Vec::with_capacity(n);
    for _ in 0..n {
        let a = sample_one(&logging, &mut rng);
        rewards.push(poisson_reward_with(&a, &mut rng) as f64);
        actions.push(a);
    }
    LoggedDataset::from_policy(logging, actions, rewards)
}
