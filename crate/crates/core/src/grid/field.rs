use super::bc;
use super::spec::{Grid, GridSpec};
use crate::error::{Error, Result};

fn check_same(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch(format!(
            "{:?}/{:?} vs {:?}/{:?}",
            a.dims(),
            a.bc(),
            b.dims(),
            b.bc()
        )))
    }
}

/// Cell-centred scalar with a ghost layer.
#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Grid,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Grid) -> Self {
        ScalarField {
            grid: grid.clone(),
            data: vec![0.0; grid.padded_len()],
        }
    }

    /// Samples `f` at cell centres and fills ghosts (Neumann / periodic).
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> f64) -> Self {
        let mut s = Self::zeros(grid);
        for &i in grid.interior() {
            s.data[i] = f(grid.cell_center(i));
        }
        bc::apply_scalar_bc(&mut s);
        s
    }

    pub fn from_data(grid: &Grid, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), grid.padded_len());
        ScalarField {
            grid: grid.clone(),
            data,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn mean(&self) -> f64 {
        mean(&self.grid, &self.data)
    }

    pub fn subtract_mean(&mut self) {
        let m = self.mean();
        for &i in self.grid.interior() {
            self.data[i] -= m;
        }
    }

    /// Discrete L2 inner product over interior cells.
    pub fn dot(&self, other: &ScalarField) -> f64 {
        cell_dot(&self.grid, &self.data, &other.data)
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        cell_max_abs(&self.grid, &self.data)
    }

    pub fn check_grid(&self, other: &GridSpec) -> Result<()> {
        check_same(&self.grid, other)
    }
}

/// Face-centred (staggered) velocity, one padded array per axis.
#[derive(Clone, Debug)]
pub struct MacVectorField {
    grid: Grid,
    comps: Vec<Vec<f64>>,
}

impl MacVectorField {
    pub fn zeros(grid: &Grid) -> Self {
        MacVectorField {
            grid: grid.clone(),
            comps: vec![vec![0.0; grid.padded_len()]; grid.ndim()],
        }
    }

    /// Samples `f(axis, x)` at the face centres of each component and applies
    /// the velocity boundary treatment.
    pub fn from_fn(grid: &Grid, f: impl Fn(usize, [f64; 3]) -> f64) -> Self {
        let mut u = Self::zeros(grid);
        for a in 0..grid.ndim() {
            for &i in grid.interior_faces(a) {
                u.comps[a][i] = f(a, grid.face_center(a, i));
            }
        }
        bc::apply_velocity_bc(&mut u);
        u
    }

    pub fn from_comps(grid: &Grid, comps: Vec<Vec<f64>>) -> Self {
        assert_eq!(comps.len(), grid.ndim());
        assert!(comps.iter().all(|c| c.len() == grid.padded_len()));
        MacVectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comp(&self, axis: usize) -> &[f64] {
        &self.comps[axis]
    }

    pub fn comp_mut(&mut self, axis: usize) -> &mut [f64] {
        &mut self.comps[axis]
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    /// Discrete L2 inner product over unknown faces.
    pub fn dot(&self, other: &MacVectorField) -> f64 {
        let vol = self.grid.cell_volume();
        let mut acc = 0.0;
        for a in 0..self.grid.ndim() {
            for &i in self.grid.interior_faces(a) {
                acc += self.comps[a][i] * other.comps[a][i];
            }
        }
        acc * vol
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        let mut m: f64 = 0.0;
        for a in 0..self.grid.ndim() {
            for &i in self.grid.interior_faces(a) {
                m = m.max(self.comps[a][i].abs());
            }
        }
        m
    }

    /// Velocity interpolated to cell centres (two-point face average), one
    /// array per axis, defined on interior cells.
    pub fn cell_centered(&self) -> Vec<Vec<f64>> {
        let g = &self.grid;
        (0..g.ndim())
            .map(|a| {
                let s = g.stride(a);
                let c = &self.comps[a];
                let mut out = vec![0.0; g.padded_len()];
                for &i in g.interior() {
                    out[i] = 0.5 * (c[i] + c[i + s]);
                }
                out
            })
            .collect()
    }

    pub fn axpy(&mut self, alpha: f64, x: &MacVectorField) {
        for (c, xc) in self.comps.iter_mut().zip(&x.comps) {
            for (v, xv) in c.iter_mut().zip(xc) {
                *v += alpha * xv;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.comps {
            c.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn check_grid(&self, other: &GridSpec) -> Result<()> {
        check_same(&self.grid, other)
    }
}

/// Cell-centred three-component director, regardless of domain dimension.
#[derive(Clone, Debug)]
pub struct DirectorField {
    grid: Grid,
    comps: [Vec<f64>; 3],
}

impl DirectorField {
    pub fn zeros(grid: &Grid) -> Self {
        let z = vec![0.0; grid.padded_len()];
        DirectorField {
            grid: grid.clone(),
            comps: [z.clone(), z.clone(), z],
        }
    }

    /// Samples `f` at cell centres and applies the Neumann / periodic ghosts.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 3]) -> [f64; 3]) -> Self {
        let mut d = Self::zeros(grid);
        for &i in grid.interior() {
            let v = f(grid.cell_center(i));
            for c in 0..3 {
                d.comps[c][i] = v[c];
            }
        }
        bc::apply_director_bc(&mut d);
        d
    }

    pub fn from_comps(grid: &Grid, comps: [Vec<f64>; 3]) -> Self {
        assert!(comps.iter().all(|c| c.len() == grid.padded_len()));
        DirectorField {
            grid: grid.clone(),
            comps,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn comp(&self, c: usize) -> &[f64] {
        &self.comps[c]
    }

    pub fn comp_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.comps[c]
    }

    pub fn comps(&self) -> &[Vec<f64>; 3] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<f64>; 3] {
        &mut self.comps
    }

    pub fn dot(&self, other: &DirectorField) -> f64 {
        (0..3)
            .map(|c| cell_dot(&self.grid, &self.comps[c], &other.comps[c]))
            .sum()
    }

    pub fn norm_l2(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// |d|^2 at cell `idx`.
    #[inline]
    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        self.comps.iter().map(|c| c[idx] * c[idx]).sum()
    }

    /// Divides by |d| cell-wise (cells with |d| = 0 are left alone) and
    /// refreshes ghosts.
    pub fn renormalize(&mut self) {
        for &i in self.grid.interior() {
            let n = self.norm_sq_at(i).sqrt();
            if n > 0.0 {
                for c in &mut self.comps {
                    c[i] /= n;
                }
            }
        }
        bc::apply_director_bc(self);
    }

    pub fn axpy(&mut self, alpha: f64, x: &DirectorField) {
        for (c, xc) in self.comps.iter_mut().zip(&x.comps) {
            for (v, xv) in c.iter_mut().zip(xc) {
                *v += alpha * xv;
            }
        }
    }

    pub fn scale(&mut self, alpha: f64) {
        for c in &mut self.comps {
            c.iter_mut().for_each(|v| *v *= alpha);
        }
    }

    pub fn check_grid(&self, other: &GridSpec) -> Result<()> {
        check_same(&self.grid, other)
    }
}

/// Velocity, director, pressure and time on one grid.
#[derive(Clone, Debug)]
pub struct State {
    pub u: MacVectorField,
    pub d: DirectorField,
    pub p: ScalarField,
    pub t: f64,
}

impl State {
    pub fn new(u: MacVectorField, d: DirectorField, p: ScalarField, t: f64) -> Result<Self> {
        u.check_grid(d.grid())?;
        p.check_grid(d.grid())?;
        Ok(State { u, d, p, t })
    }

    /// Zero velocity and pressure with the constant director `e_z`.
    pub fn rest(grid: &Grid) -> Self {
        State {
            u: MacVectorField::zeros(grid),
            d: DirectorField::from_fn(grid, |_| [0.0, 0.0, 1.0]),
            p: ScalarField::zeros(grid),
            t: 0.0,
        }
    }

    /// Every field identically zero, director included.
    pub fn zero(grid: &Grid) -> Self {
        State {
            u: MacVectorField::zeros(grid),
            d: DirectorField::zeros(grid),
            p: ScalarField::zeros(grid),
            t: 0.0,
        }
    }

    pub fn grid(&self) -> &Grid {
        self.d.grid()
    }
}

pub(crate) fn mean(grid: &GridSpec, data: &[f64]) -> f64 {
    let s: f64 = grid.interior().iter().map(|&i| data[i]).sum();
    s / grid.cell_count() as f64
}

pub(crate) fn cell_dot(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = grid.interior().iter().map(|&i| a[i] * b[i]).sum();
    s * grid.cell_volume()
}

pub(crate) fn cell_max_abs(grid: &GridSpec, a: &[f64]) -> f64 {
    grid.interior().iter().fold(0.0f64, |m, &i| m.max(a[i].abs()))
}
