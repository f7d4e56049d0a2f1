//! Staggered (MAC) box grid, field storage and boundary treatment.
//!
//! Pressure and director live at cell centres, velocity component `a` on the
//! faces normal to axis `a`.

mod bc;
mod field;
mod spec;

pub use bc::{apply_director_bc, apply_scalar_bc, apply_velocity_bc, fill_cell_ghosts, fill_face_ghosts};
pub use field::{DirectorField, MacVectorField, ScalarField, State};
pub use spec::{make_grid, BcMode, Grid, GridSpec};

pub(crate) use field::cell_dot;
#[cfg(test)]
pub(crate) use field::cell_max_abs;
