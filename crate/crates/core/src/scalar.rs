//! The numeric field everything is computed in.
//!
//! Every quantity in the model — incremental values, bids, prices, forward
//! utilities, welfare, LP coefficients, dual certificates — is ordinary
//! ordered-field arithmetic, so the entire library is generic over a
//! [`Scalar`] type. The canonical instantiation is [`crate::Rat`]
//! (arbitrary-precision rationals): bid ties and tight LP rows are exact
//! equalities, which floating point cannot represent reliably. `f64`/`f32`
//! are provided for quick approximate experiments only; none of the exactness
//! guarantees hold for them.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_rational::BigRational;
use num_traits::{Num, Signed};

/// An ordered field with embeddings of machine integers and ratios.
///
/// Implemented by [`crate::Rat`] (exact) and by `f64`/`f32` (approximate).
pub trait Scalar: Num + Signed + Clone + PartialOrd + Sum + Debug + Display {
    /// Embeds an integer into the field.
    fn from_int(n: i64) -> Self;

    /// Embeds the ratio `num / den` into the field.
    ///
    /// # Panics
    ///
    /// Panics if `den` is zero.
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio: zero denominator");
        Self::from_int(num) / Self::from_int(den)
    }

    /// `n` as a scalar, for counts and sizes.
    fn from_usize(n: usize) -> Self {
        Self::from_int(i64::try_from(n).expect("count does not fit in i64"))
    }
}

impl Scalar for BigRational {
    fn from_int(n: i64) -> Self {
        BigRational::from_integer(n.into())
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "from_ratio: zero denominator");
        BigRational::new(num.into(), den.into())
    }
}

impl Scalar for f64 {
    fn from_int(n: i64) -> Self {
        n as f64
    }
}

impl Scalar for f32 {
    fn from_int(n: i64) -> Self {
        n as f32
    }
}

/// The smaller of two scalars (left-biased on equality).
pub fn min2<S: Scalar>(a: S, b: S) -> S {
    if a <= b {
        a
    } else {
        b
    }
}

/// The larger of two scalars (left-biased on equality).
pub fn max2<S: Scalar>(a: S, b: S) -> S {
    if a >= b {
        a
    } else {
        b
    }
}
