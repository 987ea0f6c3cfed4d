//! Quasi-adiabatic WKB approximations for the two-level Hamiltonian of
//! analog Grover search.
//!
//! The Hamiltonian `H(r) = (1 - r) (I - |s><s|) + r (I - |m><m|)` is
//! restricted to the span of the marked state `|m>` and its orthogonal
//! complement. With `K = 2^n - 1` the state is written as `(psi, phi)` in
//! that basis and evolved in the rescaled time `r = t / t_f`. The crate
//! provides
//!
//! * the spectrum and gap of `H(r)` ([`twolevel`]),
//! * gap-powered schedules `g_alpha ~ Delta^-alpha` ([`schedule`]),
//! * an adaptive reference integrator ([`exact`]),
//! * zeroth- and first-order WKB solutions ([`wkb`]),
//! * the adiabatic expansion in `1/t_f` used as a benchmark ([`hj`]),
//! * populations and trace distances ([`metrics`]),
//! * threshold-time scans and scaling fits ([`experiments`]).

// Negated comparisons are used deliberately so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod exact;
pub mod experiments;
pub mod hj;
pub mod metrics;
pub mod numerics;
pub mod schedule;
pub mod state;
pub mod twolevel;
pub mod wkb;

pub use error::{Error, Result};
pub use schedule::Schedule;
pub use state::State2;
pub use twolevel::TwoLevelProblem;

pub use num_complex::Complex64 as C64;
