//! Simulation and learning suite for the 1D Boltzmann-BGK equation.
//!
//! The building blocks:
//!
//! * [`hermite`] — probabilists' Hermite polynomials, the weighted expansion
//!   basis, and conversions between distribution samples, moment coefficients
//!   and macroscopic variables.
//! * [`dvm`] — discrete-velocity reference solver producing ground-truth
//!   trajectories and their moment projections.
//! * [`moment`] — finite-volume solver for the truncated moment system with a
//!   pluggable closure (Euler / Grad / hyperbolically regularized / neural).
//! * [`closure`] — the invariance-preserving neural closure: input/output
//!   transforms wrapping a `tapegrad` backbone so that Galilean, reflecting
//!   and scaling invariance hold structurally.
//! * [`problems`], [`dataset`] — benchmark initial conditions, trajectory
//!   data generation and the on-disk containers.
//! * [`train`] — direct and end-to-end (differentiate-through-the-solver)
//!   training loops.
//! * [`eval`] — the relative-error metric and evaluation reports.

pub mod closure;
pub mod dataset;
pub mod dvm;
pub mod eval;
pub mod grid;
pub mod hermite;
pub mod moment;
pub mod problems;
pub mod train;
