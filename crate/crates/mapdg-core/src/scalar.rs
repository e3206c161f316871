//! Floating-point scalar abstraction.
//!
//! Every numeric structure in this crate is generic over [`Scalar`] so the
//! same pipeline runs in `f32` or `f64`. Concrete aliases for both widths
//! live at the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar usable throughout the toolkit.
///
/// The supertraits cover arithmetic, constants (pi), conversions, and the
/// thread-safety bounds required by row-parallel kernels.
pub trait Scalar:
    Float + FloatConst + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` literal into the scalar type.
    ///
    /// Conversion from `f64` is total for both supported widths, so this
    /// never panics in practice.
    fn c(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal must be representable")
    }

    /// Widens the scalar to `f64` for reporting and serialization.
    fn f64(self) -> f64 {
        self.to_f64().expect("scalar must widen to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Sums a slice in a node-relabeling-invariant order.
///
/// Sorting by total order before summing makes the result independent of how
/// the values were produced, which keeps pair-mean reductions bitwise stable
/// under graph permutations.
pub fn stable_sum<T: Scalar>(values: &[T]) -> T {
    let mut sorted: Vec<T> = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in stable_sum"));
    sorted.into_iter().fold(T::zero(), |acc, v| acc + v)
}

/// Mean with the same permutation-invariance guarantee as [`stable_sum`].
/// Returns zero for an empty slice.
pub fn stable_mean<T: Scalar>(values: &[T]) -> T {
    if values.is_empty() {
        return T::zero();
    }
    stable_sum(values) / T::c(values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_conversion_roundtrips() {
        assert_eq!(<f64 as Scalar>::c(0.25), 0.25);
        assert_eq!(<f32 as Scalar>::c(0.25), 0.25f32);
        assert_eq!(0.25f64.f64(), 0.25);
    }

    #[test]
    fn stable_sum_is_permutation_invariant() {
        let a = [0.1f64, 0.7, 1e-9, 3.14, 0.7];
        let mut b = a;
        b.reverse();
        assert_eq!(stable_sum(&a).to_bits(), stable_sum(&b).to_bits());
    }

    #[test]
    fn stable_mean_of_empty_is_zero() {
        assert_eq!(stable_mean::<f64>(&[]), 0.0);
    }
}
