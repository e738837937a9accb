//! Phase-space mechanics toolkit: an exact symbolic engine for prequantization
//! operators on classical observables, and numerical solvers for the transport
//! of classical wave functions ψ(q,p) = √ρ·exp(iS/ħ) along Hamiltonian flow.
//!
//! The crate is organized around four layers:
//!
//! - [`algebra`] — exact polynomial observables, Poisson brackets, normal-ordered
//!   phase-space operators, and the projection to configuration-space operators.
//! - [`dynamics`] — canonical flows, inverse flows, and action accumulation along
//!   characteristics, with finite-difference transport residuals.
//! - [`evolution`] — semi-Lagrangian grid evolution of (√ρ, S) pairs, plus an
//!   Eulerian finite-difference cross-check on the assembled complex field.
//! - [`quantum`] — a 1D split-step Schrödinger reference solver and the
//!   classical-marginal vs quantum-density comparison experiments.

// Validation uses `!(x > 0.0)` instead of `x <= 0.0` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod dynamics;
pub mod evolution;
pub mod grid;
pub mod quantum;
