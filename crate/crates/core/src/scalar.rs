//! Scalar abstraction shared by every numeric routine in the crate.
//!
//! Densities, estimators and the learner are written against [`Scalar`]
//! rather than a concrete float so the same code runs in `f32` and `f64`.
//! Simulation drivers and file formats are pinned to `f64`.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics only if the target type cannot
    /// represent finite `f64` values at all, which never holds for f32/f64.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Maximum over a slice, ignoring NaN. Returns negative infinity when empty.
pub(crate) fn max_of<F: Scalar>(xs: &[F]) -> F {
    xs.iter()
        .fold(F::neg_infinity(), |m, &x| if x > m { x } else { m })
}
