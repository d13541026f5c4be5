//! Periodic solutions of the equal-mass Newtonian `n`-body problem with
//! dihedral `D_l` symmetry (`n = 2l`) and a topological cone constraint on
//! the generating particle.
//!
//! The crate is `no_std` (with `alloc`) and purely computational:
//!
//! - [`symmetry`]: group matrices, symmetry parameters, choreography classes
//!   and the admissible twist range.
//! - [`loops`]: the sampled generating loop on the fundamental domain and its
//!   reconstruction into a full `n`-body orbit.
//! - [`potential`]: closed forms, integral representation and bounds for the
//!   twisted two-polygon potential.
//! - [`action`]: the discrete reduced action and its exact gradient.
//! - [`estimates`]: total-collision level estimates and the explicit test loops.
//! - [`solver`]: cone-constrained L-BFGS minimization of the action.
//! - [`dynamics`]: Euler-Lagrange residuals and direct integration of Newton's
//!   equations as an independent check.
//!
//! File formats and the command-line driver live in the companion `dihedral`
//! crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod action;
pub mod dynamics;
pub mod estimates;
pub mod linalg;
pub mod loops;
pub mod ode;
pub mod potential;
pub mod quadrature;
pub mod solver;
pub mod special;
pub mod symmetry;

mod ddouble;
mod error;

pub use error::{Error, Result};
pub use linalg::{Mat3, Vec3};
pub use loops::{FullOrbit, GeneratingLoop};
pub use symmetry::SymmetryParams;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
