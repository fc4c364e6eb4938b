//! How sampled mass concentrates away from the centre as dimension grows,
//! for uniform-box and isotropic-normal sampling.

use libm::erf;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// `U(−0.5, 0.5)^d`.
    Uniform,
    /// `N(0, σ² I_d)`.
    Normal,
    /// Uniform samples compared against `(1 − 2ε)^d` instead of `(2ε)^d`.
    UniformPrintedFormula,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Uniform => "uniform",
            Family::Normal => "normal",
            Family::UniformPrintedFormula => "uniform_printed_formula",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodConfig {
    pub dims: Vec<usize>,
    pub n_samples: usize,
    pub normal_sigma: f64,
    pub epsilons: Vec<f64>,
    pub master_seed: u64,
    /// Number of points in the distance-CDF grid.
    pub grid_points: usize,
    /// Upper end of the distance-CDF grid (lower end is 0).
    pub grid_max: f64,
}

impl CodConfig {
    /// One million samples per cell.
    pub fn paper(master_seed: u64) -> Self {
        Self {
            dims: vec![1, 2, 4, 8, 16],
            n_samples: 1_000_000,
            normal_sigma: 0.25,
            epsilons: (1..=10).map(|k| k as f64 * 0.05).collect(),
            master_seed,
            grid_points: 1000,
            grid_max: 1.5,
        }
    }

    /// 1e5 samples per cell.
    pub fn desk(master_seed: u64) -> Self {
        Self {
            n_samples: 100_000,
            ..Self::paper(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad("dims must be a nonempty list of positive integers");
        }
        if self.n_samples == 0 {
            return bad("n_samples must be positive");
        }
        if !(self.normal_sigma.is_finite() && self.normal_sigma > 0.0) {
            return bad("normal_sigma must be positive");
        }
        if self.epsilons.iter().any(|&e| !(e > 0.0 && e <= 0.5)) {
            return bad("epsilons must lie in (0, 0.5]");
        }
        if self.grid_points < 2 || !(self.grid_max.is_finite() && self.grid_max > 0.0) {
            return bad("grid needs at least two points and a positive upper end");
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let last = (self.grid_points - 1) as f64;
        (0..self.grid_points)
            .map(|j| self.grid_max * j as f64 / last)
            .collect()
    }
}

/// Sorted per-point statistics for one (family, d) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellSamples {
    /// Euclidean norms divided by `sqrt(0.25 d)`.
    pub normalised_distances: Vec<f64>,
    /// `max_k |x_k|`; a point lies in the centred box of half-width ε iff this is ≤ ε.
    pub max_abs: Vec<f64>,
}

impl CellSamples {
    fn fraction_at_most(sorted: &[f64], t: f64) -> f64 {
        sorted.partition_point(|&x| x <= t) as f64 / sorted.len() as f64
    }

    pub fn distance_cdf(&self, t: f64) -> f64 {
        Self::fraction_at_most(&self.normalised_distances, t)
    }

    pub fn box_fraction(&self, epsilon: f64) -> f64 {
        Self::fraction_at_most(&self.max_abs, epsilon)
    }
}

/// Draws `n` points of `family` in `d` dimensions and summarises them.
pub fn sample_cell(
    family: Family,
    d: usize,
    n: usize,
    normal_sigma: f64,
    seed: RngSeed,
) -> CellSamples {
    let mut rng = seed.rng();
    let scale = (0.25 * d as f64).sqrt();
    let mut distances = Vec::with_capacity(n);
    let mut max_abs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut sq = 0.0;
        let mut m: f64 = 0.0;
        for _ in 0..d {
            let x = match family {
                Family::Normal => {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    normal_sigma * z
                }
                _ => rng.random::<f64>() - 0.5,
            };
            sq += x * x;
            m = m.max(x.abs());
        }
        distances.push(sq.sqrt() / scale);
        max_abs.push(m);
    }
    distances.sort_by(f64::total_cmp);
    max_abs.sort_by(f64::total_cmp);
    CellSamples {
        normalised_distances: distances,
        max_abs,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfRow {
    pub family: Family,
    pub d: usize,
    pub normalised_distance: f64,
    pub cdf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassRow {
    pub family: Family,
    pub d: usize,
    pub epsilon: f64,
    pub empirical_fraction: f64,
    pub analytic_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CodStudy {
    pub cdf: Vec<CdfRow>,
    pub mass: Vec<MassRow>,
}

/// Seed stream for the cell at position `dim_index` in `config.dims`.
pub(crate) fn cell_stream(family: Family, dim_index: usize) -> u64 {
    let offset = match family {
        Family::Normal => 1,
        _ => 0,
    };
    2 * dim_index as u64 + offset
}

/// Distance CDFs and centred-box masses for every dimension in the config.
///
/// The cell for `dims[j]` draws uniform points from stream `2j` and normal
/// points from stream `2j + 1`.
pub fn run_cod_study(config: &CodConfig) -> Result<CodStudy> {
    config.validate()?;
    let cells: Vec<(Family, usize, usize)> = config
        .dims
        .iter()
        .enumerate()
        .flat_map(|(j, &d)| [(Family::Uniform, j, d), (Family::Normal, j, d)])
        .collect();
    let samples: Vec<CellSamples> = cells
        .par_iter()
        .map(|&(family, j, d)| {
            let seed = RngSeed::new(config.master_seed, cell_stream(family, j));
            sample_cell(family, d, config.n_samples, config.normal_sigma, seed)
        })
        .collect();

    let grid = config.grid();
    let mut study = CodStudy::default();
    for (&(family, _, d), cell) in cells.iter().zip(&samples) {
        study.cdf.extend(grid.iter().map(|&t| CdfRow {
            family,
            d,
            normalised_distance: t,
            cdf: cell.distance_cdf(t),
        }));
    }
    for (&(family, _, d), cell) in cells.iter().zip(&samples) {
        for &eps in &config.epsilons {
            let empirical = cell.box_fraction(eps);
            let analytic = match family {
                Family::Normal => {
                    erf(eps / (config.normal_sigma * std::f64::consts::SQRT_2)).powi(d as i32)
                }
                _ => (2.0 * eps).powi(d as i32),
            };
            study.mass.push(MassRow {
                family,
                d,
                epsilon: eps,
                empirical_fraction: empirical,
                analytic_fraction: analytic,
            });
            if family == Family::Uniform {
                study.mass.push(MassRow {
                    family: Family::UniformPrintedFormula,
                    d,
                    epsilon: eps,
                    empirical_fraction: empirical,
                    analytic_fraction: (1.0 - 2.0 * eps).powi(d as i32),
                });
            }
        }
    }
    Ok(study)
}
