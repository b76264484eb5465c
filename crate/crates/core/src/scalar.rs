//! Scalar abstraction shared by every formula in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point scalar used for scores, weights and power units: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used for literals and parsed input.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal representable in scalar type")
    }

    /// Converts a count into the scalar type.
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar representable as f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sum taken in ascending value order, so the result does not depend on input order.
pub(crate) fn ordered_sum<T: Scalar>(values: impl IntoIterator<Item = T>) -> (T, u64) {
    let mut v: Vec<T> = values.into_iter().collect();
    v.sort_by(|a, b| a.partial_cmp(b).expect("scores are never NaN"));
    let n = v.len() as u64;
    (v.into_iter().fold(T::zero(), |s, x| s + x), n)
}

/// Order-independent arithmetic mean; `None` when empty.
pub(crate) fn mean<T: Scalar>(values: impl IntoIterator<Item = T>) -> Option<T> {
    let (sum, n) = ordered_sum(values);
    (n > 0).then(|| sum / T::from_count(n))
}
