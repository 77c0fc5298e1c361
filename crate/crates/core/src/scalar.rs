//! Floating-point scalar abstraction: f32 or f64.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive};

/// Scalar type for representation vectors, probe parameters and
/// probability computations.
///
/// `Display` is required to print values in their shortest round-trippable
/// form and `FromStr` to parse them back bit-exactly.
pub trait Scalar:
    Float + FromPrimitive + FromStr + Display + Debug + Send + Sync + 'static
{
    /// Lossy conversion from `f64`, used when deterministic sampling is done
    /// in `f64` and stored at the working precision.
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).unwrap_or_else(Self::nan)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
