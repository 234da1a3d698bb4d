//! Multi-layer Allen-Cahn dynamics on an N-dimensional catenoid.
//!
//! The crate is a numerical laboratory for ancient solutions with nested
//! transition layers on the rotationally symmetric minimal hypersurface: the
//! reduced radial PDE in the flattened neck coordinate, the Toda-type system
//! the interface radii obey, the explicit constants of the construction, and
//! the weighted-norm error diagnostics that tie them together.
//!
//! The pieces compose bottom-up:
//!
//! * [`geometry`] - the catenoid graph, its slope and height, and the two
//!   coordinate systems of the radial operator;
//! * [`profiles`] - the transition profile `tanh(x/sqrt 2)`, the k-layer
//!   ansatz, and the piecewise-exponential weight;
//! * [`reduced_dynamics`] - the interaction constant, the gap profile, the
//!   leading-order layer locations, and the Toda flow;
//! * [`pde_solver`] - conservative method-of-lines evolution of the reduced
//!   equation with implicit diffusion and explicit reaction;
//! * [`projection`] - kernel inner products, the nearly diagonal Gram
//!   system, and the ansatz error term;
//! * [`harness`] - experiment orchestration, interface extraction, and CSV
//!   emission.
//!
//! See the `examples/` directory for one runnable program per capability,
//! and the `catenoid-ac` binary for the command-line entry points.

// Domain guards are written as `!(x > a)` on purpose: NaN must fail them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod harness;
pub mod pde_solver;
pub mod profiles;
pub mod projection;
pub mod reduced_dynamics;

mod ode;
mod quad;

pub use error::{Error, Result};
