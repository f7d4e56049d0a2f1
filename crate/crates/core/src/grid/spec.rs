use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boundary treatment shared by every field on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BcMode {
    /// No-slip velocity, homogeneous Neumann director.
    Wall,
    /// Wraparound indexing on every axis.
    Periodic,
}

impl fmt::Display for BcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BcMode::Wall => f.write_str("wall"),
            BcMode::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for BcMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "wall" => Ok(BcMode::Wall),
            "periodic" => Ok(BcMode::Periodic),
            other => Err(Error::InvalidArgument(format!("unknown bc mode `{other}`"))),
        }
    }
}

/// Uniform box grid with one ghost layer on every side.
///
/// Storage is padded: axis `a` has `dims[a] + 2` slots, slot 0 and
/// `dims[a] + 1` are ghosts. The last axis is contiguous.
///
/// Face-centred (MAC) component `a` reuses the padded cell layout: slot `i`
/// along axis `a` holds the face at `x_a = (i - 1) h_a`, i.e. the low face of
/// padded cell `i`. In wall mode slots `1` and `dims[a] + 1` are the two
/// boundary faces.
#[derive(Debug)]
pub struct GridSpec {
    dims: Vec<usize>,
    lengths: Vec<f64>,
    spacing: Vec<f64>,
    bc: BcMode,
    padded: Vec<usize>,
    strides: Vec<usize>,
    interior: Vec<usize>,
    interior_faces: Vec<Vec<usize>>,
    low_ghosts: Vec<Vec<usize>>,
    high_ghosts: Vec<Vec<usize>>,
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dims == other.dims && self.lengths == other.lengths && self.bc == other.bc
    }
}

/// Shared handle; fields keep one of these.
pub type Grid = Arc<GridSpec>;

/// Builds a grid, rejecting fewer than four cells on an axis or a
/// non-positive extent.
pub fn make_grid(dims: &[usize], lengths: &[f64], bc: BcMode) -> Result<Grid> {
    GridSpec::new(dims, lengths, bc).map(Arc::new)
}

impl GridSpec {
    pub fn new(dims: &[usize], lengths: &[f64], bc: BcMode) -> Result<Self> {
        if dims.len() != 2 && dims.len() != 3 {
            return Err(Error::InvalidGrid(format!(
                "expected 2 or 3 axes, got {}",
                dims.len()
            )));
        }
        if lengths.len() != dims.len() {
            return Err(Error::InvalidGrid(format!(
                "{} dims but {} lengths",
                dims.len(),
                lengths.len()
            )));
        }
        if let Some((axis, &n)) = dims.iter().enumerate().find(|(_, &n)| n < 4) {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} has {n} cells, need at least 4"
            )));
        }
        if let Some((axis, &l)) = lengths
            .iter()
            .enumerate()
            .find(|(_, &l)| !(l > 0.0 && l.is_finite()))
        {
            return Err(Error::InvalidGrid(format!(
                "axis {axis} has non-positive length {l}"
            )));
        }

        let ndim = dims.len();
        let spacing: Vec<f64> = lengths.iter().zip(dims).map(|(l, &n)| l / n as f64).collect();
        let padded: Vec<usize> = dims.iter().map(|n| n + 2).collect();
        let mut strides = vec![1usize; ndim];
        for a in (0..ndim - 1).rev() {
            strides[a] = strides[a + 1] * padded[a + 1];
        }
        let total: usize = padded.iter().product();

        let mut interior = Vec::with_capacity(dims.iter().product());
        let mut interior_faces = vec![Vec::new(); ndim];
        let mut low_ghosts = vec![Vec::new(); ndim];
        let mut high_ghosts = vec![Vec::new(); ndim];
        let mut multi = vec![0usize; ndim];
        for idx in 0..total {
            let mut rem = idx;
            for a in 0..ndim {
                multi[a] = rem / strides[a];
                rem %= strides[a];
            }
            let inside = (0..ndim).all(|a| multi[a] >= 1 && multi[a] <= dims[a]);
            if inside {
                interior.push(idx);
                for a in 0..ndim {
                    if bc == BcMode::Periodic || multi[a] >= 2 {
                        interior_faces[a].push(idx);
                    }
                }
            }
            for a in 0..ndim {
                if multi[a] == 0 {
                    low_ghosts[a].push(idx);
                } else if multi[a] == dims[a] + 1 {
                    high_ghosts[a].push(idx);
                }
            }
        }

        Ok(GridSpec {
            dims: dims.to_vec(),
            lengths: lengths.to_vec(),
            spacing,
            bc,
            padded,
            strides,
            interior,
            interior_faces,
            low_ghosts,
            high_ghosts,
        })
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn h(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn bc(&self) -> BcMode {
        self.bc
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Number of padded storage slots per scalar array.
    pub fn padded_len(&self) -> usize {
        self.padded.iter().product()
    }

    pub fn cell_count(&self) -> usize {
        self.interior.len()
    }

    /// Volume of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Flat indices of interior cells in row-major order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    /// Flat indices of the faces carrying unknowns for component `axis`:
    /// every face in periodic mode, interior faces in wall mode.
    pub fn interior_faces(&self, axis: usize) -> &[usize] {
        &self.interior_faces[axis]
    }

    pub(crate) fn low_ghosts(&self, axis: usize) -> &[usize] {
        &self.low_ghosts[axis]
    }

    pub(crate) fn high_ghosts(&self, axis: usize) -> &[usize] {
        &self.high_ghosts[axis]
    }

    /// Padded multi-index of a flat index.
    pub fn unflatten(&self, idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        let mut rem = idx;
        for (a, o) in out.iter_mut().enumerate().take(self.ndim()) {
            *o = rem / self.strides[a];
            rem %= self.strides[a];
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Physical coordinates of the centre of the cell stored at `idx`.
    pub fn cell_center(&self, idx: usize) -> [f64; 3] {
        let m = self.unflatten(idx);
        let mut x = [0.0; 3];
        for a in 0..self.ndim() {
            x[a] = (m[a] as f64 - 0.5) * self.spacing[a];
        }
        x
    }

    /// Physical coordinates of face `idx` of component `axis`.
    pub fn face_center(&self, axis: usize, idx: usize) -> [f64; 3] {
        let mut x = self.cell_center(idx);
        x[axis] -= 0.5 * self.spacing[axis];
        x
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}
