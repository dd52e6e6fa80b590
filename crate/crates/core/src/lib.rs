//! Classical pairwise Coulomb repulsion in field-emission electron beams.
//!
//! Two electrons leaving a tip a distance `s_i` apart are pushed apart by
//! their mutual repulsion during the flight to the detector. The final
//! separation `s_f` never drops below a finite floor (the *Coulomb hole*),
//! which suppresses short arrival-time intervals in much the same way as
//! Pauli antibunching does. This crate computes:
//!
//! * the exact implicit pair map and its piecewise approximation
//!   ([`dynamics`]), with an adaptive Runge–Kutta oracle,
//! * the arrival-interval density `P(t_f)` and correlation `C(t_f)` obtained
//!   by pushing the Poisson emission density through that map, and the
//!   Gaussian detector-resolution smoothing ([`statistics`]),
//! * a seeded, stream-split Monte Carlo validation path ([`montecarlo`]),
//! * the HBT and Coulomb scales used to judge which effect dominates a given
//!   experiment ([`scales`]).
//!
//! All quantities live in one canonical unit system (eV, nm, ns, nm/ns); see
//! [`units`].
//!
//! The crate is `no_std` and needs only `alloc`. IO, file formats and the
//! command-line front end live in the `coulhole` crate.

#![no_std]
#![warn(missing_docs)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod constants;
pub mod dynamics;
pub mod error;
pub mod montecarlo;
mod roots;
pub mod scales;
pub mod statistics;
pub mod units;

pub use constants::{PhysicalConstants, CODATA};
pub use error::{Error, Result};
pub use units::{Energy, Length, Quantity, Time, Unit, Velocity};
