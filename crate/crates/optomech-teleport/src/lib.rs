//! Simulation of continuous-variable teleportation of an optical state onto
//! the vibrational mode of a perfectly reflecting mirror.
//!
//! A driving laser reflecting off a vibrating mirror back-scatters two
//! sideband modes (Stokes `a1` at the carrier minus the mechanical frequency,
//! anti-Stokes `a2` at the carrier plus it).  Radiation pressure couples both
//! to the acoustic mode `b` through the effective interaction
//!
//! ```text
//! H = -i ħ χ (a1 b - a1† b†) - i ħ θ (a2 b† - a2† b),   θ = χ √(ω2/ω1)
//! ```
//!
//! a parametric (two-mode-squeezing) term plus a beam-splitter term.  The
//! resulting three-mode Gaussian state is the quantum channel for a modified
//! teleportation protocol: a heterodyne measurement on `a2`, a continuous
//! variable Bell measurement mixing the unknown input with `a1`, and a
//! feed-forward phase-space displacement of the mirror mode.
//!
//! The crate provides
//!
//! - [`gaussian`]: covariance-matrix algebra for multimode Gaussian states
//!   (symplectic maps, heterodyne/homodyne conditioning, overlaps,
//!   logarithmic negativity);
//! - [`dynamics`]: physical parameters, coupling constants and the exact
//!   propagator of the three-mode flow;
//! - [`protocol`]: the Gaussian characteristic-function coefficients, the
//!   conditional correlation matrix, teleportation fidelity, cooling metric
//!   and feed-forward gains;
//! - [`trajectories`]: a seeded Monte-Carlo oracle that simulates single
//!   experimental runs and estimates the fidelity statistically;
//! - [`readout`]: Heisenberg coefficients of the combined sideband mode used
//!   to verify the teleported state;
//! - [`config`], [`cli`]: the `omt` command-line front end.
//!
//! # Conventions
//!
//! Quadratures are `X = (a + a†)/√2`, `P = -i(a - a†)/√2` with ħ = 1, so a
//! vacuum mode has covariance `I/2`.  (Much of the literature uses vacuum
//! variance 1; every formula here is tied to the `1/2` convention.)  Mode
//! quadratures are interleaved as `(X1, P1, X2, P2, ...)`.  All frequencies
//! and bandwidths are angular (rad/s).

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod protocol;
pub mod readout;
pub mod trajectories;

pub use error::{Error, Result};
pub use gaussian::{GaussianState, Quadrature};
pub use dynamics::{Couplings, PhysicalParams};
pub use protocol::{NormalCoefficients, ProtocolResult, SignVariant};
