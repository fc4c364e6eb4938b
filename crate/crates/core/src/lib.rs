//! Off-policy evaluation and learning for multivariate continuous actions.
//!
//! Actions are vectors of scalarisation weights. Logged data from a
//! stochastic logging policy is reweighted towards a target policy to
//! estimate its value (IPS / SNIPS), with confidence intervals whose sample
//! size is deflated by an effective-sample-size estimate. The learner
//! maximises the lower end of that interval over deterministic policies
//! smoothed by a Gaussian kernel.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, which is what the simulation drivers and
//! file formats use.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data;
pub mod error;
pub mod estimators;
pub mod io;
pub mod learner;
pub mod policy;
pub mod rng;
pub mod scalar;
pub mod scalarise;
pub mod simulation;
pub mod stats;

pub use data::{importance_weights, log_importance_weights, LoggedDataset, LoggedSample};
pub use error::{Error, Result};
pub use estimators::{
    baseline_shifted_ips, confidence_interval, corrected_sample_size, ess, evaluate, ips_value,
    ips_variance, snips_value, snips_variance, support_diagnostics, EssMethod, EstimatorKind,
    EvaluationReport,
};
pub use learner::{
    crm_lower_bound, finite_difference_gradient, learn, snips_analytic_gradient, CrmConfig,
    LearnResult, TrajectoryPoint,
};
pub use policy::{kernel_log_density, log_density, sample, Action, KernelConfig, Policy};
pub use rng::RngSeed;
pub use scalar::Scalar;
pub use scalarise::scalarise;

pub type ActionVector = Action<f64>;
pub type Policy64 = Policy<f64>;
pub type Kernel = KernelConfig<f64>;
pub type Sample = LoggedSample<f64>;
pub type Dataset = LoggedDataset<f64>;
pub type Report = EvaluationReport<f64>;
pub type Crm = CrmConfig<f64>;
pub type Learned = LearnResult<f64>;

pub type ActionVectorF32 = Action<f32>;
pub type DatasetF32 = LoggedDataset<f32>;
pub type ReportF32 = EvaluationReport<f32>;
