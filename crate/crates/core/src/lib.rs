//! Statevector simulation of semi-quantum private comparison.
//!
//! Covers Jiang's Bell-state protocol, the double C-NOT, malicious-agent and
//! blocking attacks on it, the single-photon measure-resend variant that
//! resists them, and a Monte Carlo harness that measures leakage and
//! detection rates.

pub mod adversaries;
pub mod bits;
pub mod error;
pub mod harness;
pub mod improved;
pub mod jiang;
pub mod kernel;
pub mod session;
pub mod tap;

pub use bits::BitString;
pub use error::{HarnessError, KernelError, ProtocolError};
pub use kernel::{
    amplitudes_close, prepare_bell, prepare_x, prepare_z, tensor, BellState, QubitRef, Sign,
    SimRng, StateVector,
};
pub use session::{
    AbortReason, ComparisonOutcome, Mode, ModePolicy, ModeSequence, Participant, ProtocolKind,
};
pub use tap::{AttackReport, ChannelTap, Lab, PublicRecord, Transit};
