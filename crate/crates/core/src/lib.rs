//! Structured-grid solver and verification harness for the simplified
//! Ericksen-Leslie system of nematic liquid crystal flow:
//!
//! ```text
//! u_t + u.grad u - mu lap u + grad P = -lambda div(grad d (.) grad d)
//! d_t + u.grad d = gamma (lap d + |grad d|^2 d)
//! div u = 0,  |d| = 1
//! ```
//!
//! Time stepping follows a Picard linearisation: each slab is solved by
//! repeated linear Stokes and heat solves with the nonlinear terms frozen at
//! the previous iterate, with slab halving when the iteration stops
//! contracting.

pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod grid;
pub mod io;
pub mod mms;
pub mod operators;
pub mod picard;
pub mod presets;
pub mod projection;
pub mod registry;
pub mod solver;
pub mod weak_strong;

pub use error::{Error, Result};
pub use grid::{make_grid, BcMode, DirectorField, Grid, GridSpec, MacVectorField, ScalarField, State};
