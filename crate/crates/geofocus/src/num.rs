//! Scalar abstraction for the numeric core.

use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the geodesy kernel and the network run on.
pub trait Real: Float + FromPrimitive + Sum + Debug + Default + 'static {
    /// Lossy conversion from `f64`; panics only on types that cannot
    /// represent ordinary finite constants.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("constant representable")
    }

    fn to_f64_lossy(self) -> f64;
}

impl Real for f32 {
    fn to_f64_lossy(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    fn to_f64_lossy(self) -> f64 {
        self
    }
}
