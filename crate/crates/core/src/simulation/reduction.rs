use serde::{Deserialize, Serialize};

use super::CoverageRow;
use crate::estimators::{EssMethod, EstimatorKind};

/// Smallest grid size from which a method's coverage stays at or above the level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionRow {
    pub kind: EstimatorKind,
    pub method: EssMethod,
    pub target_sigma: f64,
    /// `None` when the level is not held at the largest grid size.
    pub n_star: Option<usize>,
    /// `N*(CltOnly) / N*(method)`; `None` when either side is not reached or
    /// the table has no CltOnly rows for this cell.
    pub ratio_vs_clt: Option<f64>,
}

type GroupKey = (EstimatorKind, EssMethod, f64);

/// For each (kind, method, σ) group, finds `N* = min{N : coverage ≥ level at
/// every N' ≥ N}` and its reduction relative to the uncorrected interval.
///
/// Groups are reported in order of first appearance.
pub fn min_sample_size_for_coverage(rows: &[CoverageRow], level: f64) -> Vec<ReductionRow> {
    let mut groups: Vec<(GroupKey, Vec<&CoverageRow>)> = Vec::new();
    for row in rows {
        let key = (row.kind, row.method, row.target_sigma);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(row),
            None => groups.push((key, vec![row])),
        }
    }

    let n_star = |members: &[&CoverageRow]| -> Option<usize> {
        let mut sorted = members.to_vec();
        sorted.sort_by_key(|r| r.n);
        let mut best = None;
        for r in sorted.iter().rev() {
            if r.coverage >= level {
                best = Some(r.n);
            } else {
                break;
            }
        }
        best
    };

    let stars: Vec<Option<usize>> = groups.iter().map(|(_, m)| n_star(m)).collect();
    groups
        .iter()
        .zip(&stars)
        .map(|(((kind, method, sigma), _), &star)| {
            let baseline = groups
                .iter()
                .zip(&stars)
                .find(|(((k, m, s), _), _)| k == kind && *m == EssMethod::CltOnly && s == sigma)
                .and_then(|(_, s)| *s);
            let ratio = match (baseline, star) {
                (Some(b), Some(s)) => Some(b as f64 / s as f64),
                _ => None,
            };
            ReductionRow {
                kind: *kind,
                method: *method,
                target_sigma: *sigma,
                n_star: star,
                ratio_vs_clt: ratio,
            }
        })
        .collect()
}
