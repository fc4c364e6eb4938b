//! JSON run configurations for the randomised commands.
//!
//! Every field except the seed falls back to the desk-scale default. The seed
//! is mandatory.

use mvope::estimators::{EssMethod, EstimatorKind};
use mvope::simulation::{CodConfig, CoverageConfig};
use mvope::{Action, CrmConfig, Policy};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageRunConfig {
    pub master_seed: u64,
    pub d: Option<usize>,
    pub logging: Option<Policy<f64>>,
    pub target_mean: Option<f64>,
    pub target_sigmas: Option<Vec<f64>>,
    pub sample_sizes: Option<Vec<usize>>,
    pub replications: Option<usize>,
    pub alpha: Option<f64>,
    pub kinds: Option<Vec<EstimatorKind>>,
    pub methods: Option<Vec<EssMethod>>,
    /// Start from the full 2^20 / 2000-replication grid instead of desk scale.
    #[serde(default)]
    pub full_scale: bool,
}

impl CoverageRunConfig {
    pub fn resolve(self) -> mvope::Result<CoverageConfig> {
        let base = if self.full_scale {
            CoverageConfig::paper(self.master_seed)
        } else {
            CoverageConfig::desk(self.master_seed)
        };
        let d = self.d.unwrap_or(base.d);
        let logging = match self.logging {
            Some(p) => p,
            None => Policy::isotropic_gaussian(Action::zeros(d), 1.0)?,
        };
        let cfg = CoverageConfig {
            d,
            logging,
            target_mean: self.target_mean.unwrap_or(base.target_mean),
            target_sigmas: self.target_sigmas.unwrap_or(base.target_sigmas),
            sample_sizes: self.sample_sizes.unwrap_or(base.sample_sizes),
            replications: self.replications.unwrap_or(base.replications),
            alpha: self.alpha.unwrap_or(base.alpha),
            kinds: self.kinds.unwrap_or(base.kinds),
            methods: self.methods.unwrap_or(base.methods),
            master_seed: self.master_seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CodRunConfig {
    pub master_seed: u64,
    pub dims: Option<Vec<usize>>,
    pub n_samples: Option<usize>,
    pub normal_sigma: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub grid_points: Option<usize>,
    pub grid_max: Option<f64>,
    #[serde(default)]
    pub full_scale: bool,
}

impl CodRunConfig {
    pub fn resolve(self) -> mvope::Result<CodConfig> {
        let base = if self.full_scale {
            CodConfig::paper(self.master_seed)
        } else {
            CodConfig::desk(self.master_seed)
        };
        let cfg = CodConfig {
            dims: self.dims.unwrap_or(base.dims),
            n_samples: self.n_samples.unwrap_or(base.n_samples),
            normal_sigma: self.normal_sigma.unwrap_or(base.normal_sigma),
            epsilons: self.epsilons.unwrap_or(base.epsilons),
            master_seed: self.master_seed,
            grid_points: self.grid_points.unwrap_or(base.grid_points),
            grid_max: self.grid_max.unwrap_or(base.grid_max),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Learner settings plus an optional starting point.
#[derive(Debug, Deserialize)]
pub struct LearnRunConfig {
    #[serde(flatten)]
    pub crm: CrmConfig<f64>,
    #[serde(default)]
    pub init: Option<Action<f64>>,
}
