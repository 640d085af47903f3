//! Numeric traits shared by every module.
//!
//! Counting, reweighting and the matrix products only need field arithmetic,
//! so they are written against [`Field`] and can run on exact rationals.
//! Anything that touches geometry (angles, norms, square roots) needs
//! [`Scalar`], which is implemented for `f32` and `f64`.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, Num, NumAssign, ToPrimitive};

/// Ordered field arithmetic: enough for counters, min-max normalization and
/// the counter × weight products.
pub trait Field:
    Num + NumAssign + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_count(n: u32) -> Self {
        Self::from_u32(n).expect("count representable in field")
    }
}

impl<T> Field for T where
    T: Num
        + NumAssign
        + Copy
        + PartialOrd
        + FromPrimitive
        + ToPrimitive
        + Debug
        + Send
        + Sync
        + 'static
{
}

/// Floating point: f32 or f64.
pub trait Scalar: Field + Float + Display + Default {
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable")
    }

    /// Angle of `(x, y)` in degrees mapped onto `[0, 360)`.
    fn azimuth_deg(x: Self, y: Self) -> Self {
        let full = Self::lit(360.0);
        let mut deg = y.atan2(x).to_degrees();
        if deg < Self::zero() {
            deg += full;
        }
        // -tiny + 360 rounds to 360 in floating point
        if deg >= full {
            deg -= full;
        }
        deg
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
