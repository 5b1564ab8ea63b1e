//! Certified bounds on the peak-to-peak (L∞-induced) gain of stable SISO
//! LTI systems.
//!
//! Upper bounds come from inescapable ellipsoids of quadratic Lyapunov
//! functions, either on the original state (degree 1) or on the
//! Kronecker-lifted state `x ⊗ x` (degree 2, a quartic homogeneous
//! Lyapunov function). Lower bounds come from a bang-bang worst-case
//! trajectory, and ground truth from adaptive quadrature of the impulse
//! response with a certified tail.
//!
//! The crate is `no_std` (it needs `alloc`). Enabling the `std` feature
//! evaluates the α-sweep grid on worker threads.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod model;
pub mod oracle;
pub mod sdp;
pub mod starnorm;
pub mod tailsplit;

pub use error::Error;
pub use linalg::{LinalgError, Matrix};
pub use model::{LiftedSystem, LtiSystem, SProcedureStructure, SystemRecord};
pub use sdp::{LmiBlock, SdpProblem, SdpSettings, SdpSolution, SdpStatus};

