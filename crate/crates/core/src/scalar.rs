//! Scalar abstraction for the grid numerics.
//!
//! Everything that walks grids is generic over a floating scalar so the same
//! code runs at f32 and f64; concrete f64 aliases live at the crate root.

use num_traits::{Float, FromPrimitive, NumAssign};

/// Floating scalar used by grids, increments, and quadrature.
pub trait Real:
    Float + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    fn from_f(x: f64) -> Self {
        Self::from_f64(x).expect("f64 conversion")
    }
    fn to_f(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + NumAssign + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
}
