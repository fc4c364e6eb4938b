//! Linear scalarisation of per-objective item scores into a ranking.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Ranks items by the weighted sum of their objective scores.
///
/// Returns item indices sorted by descending score; equal scores keep
/// ascending index order.
pub fn scalarise<F: Scalar, R: AsRef<[F]>>(scores: &[R], weights: &[F]) -> Result<Vec<usize>> {
    let combined = scores
        .iter()
        .map(|row| {
            let row = row.as_ref();
            if row.len() != weights.len() {
                return Err(Error::DimensionMismatch {
                    expected: weights.len(),
                    got: row.len(),
                });
            }
            Ok(row.iter().zip(weights).map(|(&s, &w)| s * w).sum::<F>())
        })
        .collect::<Result<Vec<F>>>()?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // sort_by is stable, so ties stay in index order
    order.sort_by(|&i, &j| {
        combined[j]
            .partial_cmp(&combined[i])
            .unwrap_or(Ordering::Equal)
    });
    Ok(order)
}
