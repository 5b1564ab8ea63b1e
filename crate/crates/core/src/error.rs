use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::linalg::LinalgError;
use crate::sdp::SdpStatus;

/// Errors from system validation and the bound computations.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    Linalg(LinalgError),
    /// A system matrix has the wrong shape.
    Dimension {
        field: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },
    /// The state matrix is not Hurwitz.
    Unstable { max_real_part: f64 },
    /// Lifting and the S-procedure constraints need at least two states.
    LiftingNeedsTwoStates { n: usize },
    /// α must lie strictly inside (0, κ).
    AlphaOutOfRange { alpha: f64, kappa: f64 },
    /// Every α on the sweep grid failed to produce a feasible ellipsoid.
    SweepInfeasible { kappa: f64, statuses: Vec<SdpStatus> },
    /// The certified tail bound did not shrink as the horizon grew.
    TailNotShrinking { horizon: f64, tail_bound: f64 },
    /// Boundary export is only defined for planar systems.
    NotPlanar { n: usize },
    InvalidArgument { name: &'static str, reason: String },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Linalg(e) => write!(f, "{e}"),
            Error::Dimension {
                field,
                expected,
                found,
            } => write!(
                f,
                "{field} must be {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Error::Unstable { max_real_part } => write!(
                f,
                "system is not Hurwitz stable: max real part of eig(A) is {max_real_part}"
            ),
            Error::LiftingNeedsTwoStates { n } => write!(
                f,
                "degree-2 lifting needs at least 2 states, system has {n}"
            ),
            Error::AlphaOutOfRange { alpha, kappa } => {
                write!(f, "alpha = {alpha} is outside (0, {kappa})")
            }
            Error::SweepInfeasible { kappa, statuses } => {
                write!(f, "no feasible ellipsoid on the sweep over (0, {kappa}); solver statuses: [")?;
                for (i, s) in statuses.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, "]")
            }
            Error::TailNotShrinking {
                horizon,
                tail_bound,
            } => write!(
                f,
                "tail bound {tail_bound:e} did not shrink by horizon {horizon}"
            ),
            Error::NotPlanar { n } => {
                write!(f, "boundary export needs a 2-state system, found {n} states")
            }
            Error::InvalidArgument { name, reason } => write!(f, "invalid {name}: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl From<LinalgError> for Error {
    fn from(e: LinalgError) -> Self {
        Error::Linalg(e)
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
