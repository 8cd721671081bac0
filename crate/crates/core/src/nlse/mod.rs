//! Narrow-band envelope propagation: the damped, noise-driven nonlinear
//! Schrödinger equation for the forward envelope, its Kerr coefficient and
//! the nonlocal kernel behind it.
//!
//! The Kerr term is treated in the truncated symmetric-ordering picture,
//! without third-order noise corrections. This is accurate for large photon
//! numbers and short nonlinear distances.

mod envelope;
mod kernel;
mod kerr;
mod propagate;
mod stepper;

pub use envelope::{soliton_amplitude, Carrier, EnvelopeGrid, PulseShape};
pub use kernel::{integrate_leading_kernel, kernel_gh, local_limit_coefficient, KernelMode};
pub use kerr::{chi_eff, nonlinear_term, weak_absorption_gate, KerrSpec, WEAK_ABSORPTION_LIMIT};
pub use propagate::{plan_segments, propagate, PropagationResult, SnapshotMoments};
pub use stepper::{
    default_step_budget, hamiltonian, split_step, LinearSymbol, SplitStepper, MAX_NONLINEAR_PHASE,
};
