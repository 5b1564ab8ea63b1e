//! ℓ1 upper bound from exact quadrature on `[0, T₀]` plus a star-norm bound
//! on the remainder, which is the ℓ1 norm of the system driven through
//! `e^{AT₀} B`.

use crate::error::{invalid, Error};
use crate::linalg::expm;
use crate::model::LtiSystem;
use crate::oracle::integrate_abs;
use crate::starnorm::{sweep, Degree, SweepSettings};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailSplitResult {
    pub t0: f64,
    pub head: f64,
    pub head_error: f64,
    pub tail_bound: f64,
    pub total: f64,
    pub degree: u32,
}

/// Same A and C, input matrix `e^{A t0} B`.
pub fn shifted_system(sys: &LtiSystem, t0: f64) -> Result<LtiSystem, Error> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(invalid("t0", "must be positive"));
    }
    let b = &expm(&sys.a().scale(t0)) * sys.b();
    sys.with_input(b)
}

pub fn tail_split(
    sys: &LtiSystem,
    t0: f64,
    degree: Degree,
    quad_tolerance: f64,
    settings: &SweepSettings,
) -> Result<TailSplitResult, Error> {
    let shifted = shifted_system(sys, t0)?;
    let head = integrate_abs(sys, 0.0, t0, quad_tolerance)?;
    let tail_bound = if shifted.b().max_abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        sweep(&shifted, degree, settings)?.star_norm
    };
    Ok(TailSplitResult {
        t0,
        head: head.value,
        head_error: head.error_estimate,
        tail_bound,
        total: head.value + tail_bound,
        degree: degree.as_u32(),
    })
}
