use nalgebra::RealField;
use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Real scalar type the crate is generic over.
///
/// `f32` and `f64` both qualify. Every tolerance bundled in [`crate::consts`]
/// assumes binary64, so the concrete aliases at the crate root are the ones
/// the CLI and the acceptance suite use.
pub trait Real: RealField + Num + FromPrimitive + ToPrimitive + Copy {
    /// Pulls an `f64` literal into the scalar type.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 literal")
    }

    /// Entire part `[x]` as a signed integer.
    fn entire(self) -> i64 {
        self.floor().to_i64().expect("entire part fits i64")
    }
}

impl<T> Real for T where T: RealField + Num + FromPrimitive + ToPrimitive + Copy {}
