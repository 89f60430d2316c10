//! Scalar abstraction for the numeric kernels.
//!
//! Every loss, estimator, and propagation kernel is generic over [`Real`] so
//! the same code runs in `f32` and `f64`. The trait collects exactly what the
//! kernels use: float arithmetic, conversions from counts and `f64` literals,
//! and thread safety for the parallel experiment drivers.

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar the crate is generic over. Implemented for `f32`
/// and `f64`.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + std::fmt::Debug
    + std::fmt::Display
    + std::ops::AddAssign
    + std::ops::SubAssign
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` constant. Lossy for `f32` in the usual rounding
    /// sense, never fails for finite input.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Real")
    }

    /// Widens to `f64` for reporting and serialization. Exact for both
    /// supported scalars.
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real widens to f64")
    }

    /// Converts a count; counts in this crate stay far below 2^53.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count converts to any Real")
    }
}

impl Real for f32 {}
impl Real for f64 {}
