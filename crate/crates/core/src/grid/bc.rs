//! Ghost-layer filling.
//!
//! Axes are filled one after another over the full padded range of the
//! remaining axes, so edge and corner ghosts come out consistent with
//! applying each reflection in turn.

use super::field::{DirectorField, MacVectorField, ScalarField};
use super::spec::{BcMode, GridSpec};

/// Fills the ghost layer of a cell-centred array.
///
/// In wall mode ghost `g` takes `sign[a] * mirror`, where `mirror` is the
/// adjacent interior cell across the wall normal to axis `a`. `+1` gives the
/// second-order homogeneous Neumann condition, `-1` an odd extension (zero
/// value at the wall). Periodic mode wraps and ignores `sign`.
pub fn fill_cell_ghosts(grid: &GridSpec, data: &mut [f64], sign: [f64; 3]) {
    for a in 0..grid.ndim() {
        let s = grid.stride(a);
        let n = grid.dims()[a];
        match grid.bc() {
            BcMode::Periodic => {
                for &g in grid.low_ghosts(a) {
                    data[g] = data[g + n * s];
                }
                for &g in grid.high_ghosts(a) {
                    data[g] = data[g - n * s];
                }
            }
            BcMode::Wall => {
                for &g in grid.low_ghosts(a) {
                    data[g] = sign[a] * data[g + s];
                }
                for &g in grid.high_ghosts(a) {
                    data[g] = sign[a] * data[g - s];
                }
            }
        }
    }
}

/// Fills ghosts of face component `comp`.
///
/// Wall mode: the two boundary faces normal to `comp` are set to zero, the
/// ghost face outside them to the negated second face (odd reflection), and
/// tangential ghosts to the negated interior neighbour so that the wall
/// average vanishes.
pub fn fill_face_ghosts(grid: &GridSpec, data: &mut [f64], comp: usize) {
    match grid.bc() {
        BcMode::Periodic => fill_cell_ghosts(grid, data, [1.0; 3]),
        BcMode::Wall => {
            let s = grid.stride(comp);
            for &g in grid.low_ghosts(comp) {
                data[g + s] = 0.0;
                data[g] = -data[g + 2 * s];
            }
            for &g in grid.high_ghosts(comp) {
                data[g] = 0.0;
            }
            for a in (0..grid.ndim()).filter(|&a| a != comp) {
                let s = grid.stride(a);
                for &g in grid.low_ghosts(a) {
                    data[g] = -data[g + s];
                }
                for &g in grid.high_ghosts(a) {
                    data[g] = -data[g - s];
                }
            }
        }
    }
}

/// No-slip (wall) or wraparound (periodic) velocity boundary treatment.
///
/// In periodic mode interior values are untouched; only the ghost copies are
/// refreshed.
pub fn apply_velocity_bc(u: &mut MacVectorField) {
    let grid = u.grid().clone();
    for (a, comp) in u.comps_mut().iter_mut().enumerate() {
        fill_face_ghosts(&grid, comp, a);
    }
}

/// Homogeneous Neumann director treatment by ghost mirroring, or wraparound
/// in periodic mode.
pub fn apply_director_bc(d: &mut DirectorField) {
    let grid = d.grid().clone();
    for comp in d.comps_mut().iter_mut() {
        fill_cell_ghosts(&grid, comp, [1.0; 3]);
    }
}

/// Homogeneous Neumann (wall) or wraparound treatment of a cell scalar.
pub fn apply_scalar_bc(p: &mut ScalarField) {
    let grid = p.grid().clone();
    fill_cell_ghosts(&grid, p.data_mut(), [1.0; 3]);
}
