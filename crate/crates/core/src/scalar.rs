use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point type that MDPs, value functions and sampled models are stored in.
///
/// Probabilistic inference (log-gamma, Beta/Gamma draws) is carried out in `f64`
/// and converted into the model scalar at the boundary.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Allowed deviation of a transition row sum from one.
    fn simplex_tolerance() -> Self;

    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }
}

impl Scalar for f32 {
    fn simplex_tolerance() -> Self {
        1e-5
    }
}

impl Scalar for f64 {
    fn simplex_tolerance() -> Self {
        1e-9
    }
}
