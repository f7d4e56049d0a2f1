//! Second-order centred stencils on the MAC grid.
//!
//! Every routine expects ghosts of its inputs to be current and returns a
//! field with ghosts refreshed by the boundary rule of its kind.

use crate::grid::{
    apply_director_bc, apply_scalar_bc, apply_velocity_bc, fill_cell_ghosts, DirectorField,
    GridSpec, MacVectorField, ScalarField,
};

/// Centred differences of the director, entry `(i, j)` = d(d_i)/dx_j.
///
/// Holds `3 x ndim` cell arrays. Ghosts carry the parity of the derivative
/// (odd across walls normal to `j`).
#[derive(Clone, Debug)]
pub struct GradTensor {
    ndim: usize,
    entries: Vec<Vec<f64>>,
}

impl GradTensor {
    pub fn ndim(&self) -> usize {
        self.ndim
    }

    /// d(d_i)/dx_j at every cell.
    pub fn entry(&self, i: usize, j: usize) -> &[f64] {
        &self.entries[i * self.ndim + j]
    }

    /// Gram entry (grad d . grad d)_{jk} = sum_i d_j d_i * d_k d_i at `idx`.
    #[inline]
    pub fn gram_at(&self, j: usize, k: usize, idx: usize) -> f64 {
        (0..3)
            .map(|i| self.entry(i, j)[idx] * self.entry(i, k)[idx])
            .sum()
    }

    /// |grad d|^2 at `idx`: trace of the Gram matrix.
    #[inline]
    pub fn norm_sq_at(&self, idx: usize) -> f64 {
        self.entries.iter().map(|e| e[idx] * e[idx]).sum()
    }

    /// Difference of two tensors, entrywise.
    pub fn sub(&self, other: &GradTensor) -> GradTensor {
        GradTensor {
            ndim: self.ndim,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect())
                .collect(),
        }
    }

    /// Discrete L2 norm squared over interior cells.
    pub fn norm_l2_sq(&self, grid: &GridSpec) -> f64 {
        self.entries
            .iter()
            .map(|e| crate::grid::cell_dot(grid, e, e))
            .sum()
    }

    /// Largest pointwise Frobenius norm over interior cells.
    pub fn max_norm(&self, grid: &GridSpec) -> f64 {
        grid.interior()
            .iter()
            .fold(0.0f64, |m, &i| m.max(self.norm_sq_at(i).sqrt()))
    }
}

fn wall_sign(ndim: usize, odd_axes: &[usize]) -> [f64; 3] {
    let mut s = [1.0; 3];
    for a in 0..ndim {
        if odd_axes.iter().filter(|&&k| k == a).count() % 2 == 1 {
            s[a] = -1.0;
        }
    }
    s
}

/// Face-centred differences (p_R - p_L)/h. Wall-mode boundary faces get 0.
pub fn gradient(p: &ScalarField) -> MacVectorField {
    let g = p.grid();
    let mut out = MacVectorField::zeros(g);
    let data = p.data();
    for a in 0..g.ndim() {
        let s = g.stride(a);
        let inv_h = 1.0 / g.h(a);
        let comp = out.comp_mut(a);
        for &f in g.interior_faces(a) {
            comp[f] = (data[f] - data[f - s]) * inv_h;
        }
    }
    apply_velocity_bc(&mut out);
    out
}

/// Cell-centred divergence: sum over axes of (u_high - u_low)/h.
pub fn divergence(u: &MacVectorField) -> ScalarField {
    let g = u.grid();
    let mut out = ScalarField::zeros(g);
    {
        let data = out.data_mut();
        for a in 0..g.ndim() {
            let s = g.stride(a);
            let inv_h = 1.0 / g.h(a);
            let c = u.comp(a);
            for &i in g.interior() {
                data[i] += (c[i + s] - c[i]) * inv_h;
            }
        }
    }
    apply_scalar_bc(&mut out);
    out
}

/// 5/7-point Laplacian of one padded array over the index set `at`.
pub(crate) fn laplacian_raw(g: &GridSpec, src: &[f64], dst: &mut [f64], at: &[usize]) {
    let ndim = g.ndim();
    let mut coef = [0.0; 3];
    let mut st = [0usize; 3];
    for a in 0..ndim {
        coef[a] = 1.0 / (g.h(a) * g.h(a));
        st[a] = g.stride(a);
    }
    for &i in at {
        let c = src[i];
        let mut acc = 0.0;
        for a in 0..ndim {
            acc += (src[i + st[a]] - 2.0 * c + src[i - st[a]]) * coef[a];
        }
        dst[i] = acc;
    }
}

pub fn laplacian_scalar(f: &ScalarField) -> ScalarField {
    let g = f.grid();
    let mut out = ScalarField::zeros(g);
    laplacian_raw(g, f.data(), out.data_mut(), g.interior());
    apply_scalar_bc(&mut out);
    out
}

pub fn laplacian_mac(u: &MacVectorField) -> MacVectorField {
    let g = u.grid();
    let mut out = MacVectorField::zeros(g);
    for a in 0..g.ndim() {
        laplacian_raw(g, u.comp(a), out.comp_mut(a), g.interior_faces(a));
    }
    apply_velocity_bc(&mut out);
    out
}

pub fn laplacian_director(d: &DirectorField) -> DirectorField {
    let g = d.grid();
    let mut out = DirectorField::zeros(g);
    for c in 0..3 {
        laplacian_raw(g, d.comp(c), out.comp_mut(c), g.interior());
    }
    apply_director_bc(&mut out);
    out
}

/// Fields the Laplacian applies to component-wise.
pub trait Laplacian: Sized {
    fn laplacian(&self) -> Self;
}

impl Laplacian for ScalarField {
    fn laplacian(&self) -> Self {
        laplacian_scalar(self)
    }
}

impl Laplacian for MacVectorField {
    fn laplacian(&self) -> Self {
        laplacian_mac(self)
    }
}

impl Laplacian for DirectorField {
    fn laplacian(&self) -> Self {
        laplacian_director(self)
    }
}

/// (u . grad) f for a cell array: face velocities averaged to the centre,
/// centred differences of f.
pub(crate) fn advect_cell_raw(u: &MacVectorField, f: &[f64], dst: &mut [f64]) {
    let g = u.grid();
    for &i in g.interior() {
        let mut acc = 0.0;
        for a in 0..g.ndim() {
            let s = g.stride(a);
            let c = u.comp(a);
            let ubar = 0.5 * (c[i] + c[i + s]);
            acc += ubar * (f[i + s] - f[i - s]) / (2.0 * g.h(a));
        }
        dst[i] = acc;
    }
}

pub fn advect_scalar(u: &MacVectorField, f: &ScalarField) -> ScalarField {
    let g = u.grid();
    let mut out = ScalarField::zeros(g);
    advect_cell_raw(u, f.data(), out.data_mut());
    apply_scalar_bc(&mut out);
    out
}

pub fn advect_director(u: &MacVectorField, d: &DirectorField) -> DirectorField {
    let g = u.grid();
    let mut out = DirectorField::zeros(g);
    for c in 0..3 {
        advect_cell_raw(u, d.comp(c), out.comp_mut(c));
    }
    apply_director_bc(&mut out);
    out
}

/// Transverse velocity u_b interpolated to the a-face at `f` (four-face
/// average).
#[inline]
fn transverse_at_face(u: &MacVectorField, a: usize, b: usize, f: usize) -> f64 {
    let g = u.grid();
    let sa = g.stride(a);
    let sb = g.stride(b);
    let c = u.comp(b);
    0.25 * (c[f] + c[f + sb] + c[f - sa] + c[f - sa + sb])
}

/// Non-conservative (u . grad) v on the faces of each component of v.
pub fn advect_velocity(u: &MacVectorField, v: &MacVectorField) -> MacVectorField {
    let g = u.grid();
    let mut out = MacVectorField::zeros(g);
    for a in 0..g.ndim() {
        let va = v.comp(a);
        let mut res = vec![0.0; g.padded_len()];
        for &f in g.interior_faces(a) {
            let mut acc = 0.0;
            for b in 0..g.ndim() {
                let sb = g.stride(b);
                let w = if b == a {
                    u.comp(a)[f]
                } else {
                    transverse_at_face(u, a, b, f)
                };
                acc += w * (va[f + sb] - va[f - sb]) / (2.0 * g.h(b));
            }
            res[f] = acc;
        }
        out.comp_mut(a).copy_from_slice(&res);
    }
    apply_velocity_bc(&mut out);
    out
}

/// Skew-symmetric momentum transport: for each face, the transporting
/// velocity is taken at the midpoint between the face and its neighbour,
/// so the discrete operator is exactly antisymmetric in the face inner
/// product (periodic and no-slip).
pub fn advect_velocity_skew(u: &MacVectorField, v: &MacVectorField) -> MacVectorField {
    let g = u.grid();
    let mut out = MacVectorField::zeros(g);
    for a in 0..g.ndim() {
        let sa = g.stride(a);
        let va = v.comp(a);
        let ua = u.comp(a);
        let mut res = vec![0.0; g.padded_len()];
        for &f in g.interior_faces(a) {
            let mut acc = 0.0;
            for b in 0..g.ndim() {
                let sb = g.stride(b);
                let (wp, wm) = if b == a {
                    (0.5 * (ua[f] + ua[f + sa]), 0.5 * (ua[f - sa] + ua[f]))
                } else {
                    let ub = u.comp(b);
                    (
                        0.5 * (ub[f - sa + sb] + ub[f + sb]),
                        0.5 * (ub[f - sa] + ub[f]),
                    )
                };
                acc += (wp * va[f + sb] - wm * va[f - sb]) / (2.0 * g.h(b));
            }
            res[f] = acc;
        }
        out.comp_mut(a).copy_from_slice(&res);
    }
    apply_velocity_bc(&mut out);
    out
}

/// Centred-difference director gradient with parity-correct ghosts.
pub fn grad_tensor(d: &DirectorField) -> GradTensor {
    let g = d.grid();
    let ndim = g.ndim();
    let mut entries = Vec::with_capacity(3 * ndim);
    for i in 0..3 {
        let di = d.comp(i);
        for j in 0..ndim {
            let s = g.stride(j);
            let inv = 1.0 / (2.0 * g.h(j));
            let mut e = vec![0.0; g.padded_len()];
            for &c in g.interior() {
                e[c] = (di[c + s] - di[c - s]) * inv;
            }
            fill_cell_ghosts(g, &mut e, wall_sign(ndim, &[j]));
            entries.push(e);
        }
    }
    GradTensor { ndim, entries }
}

/// Gram matrix entries G_{jk} at cell centres (interior + ghosts).
fn gram_arrays(g: &GridSpec, t: &GradTensor) -> Vec<Vec<f64>> {
    let ndim = g.ndim();
    let mut out = vec![Vec::new(); ndim * ndim];
    for j in 0..ndim {
        for k in j..ndim {
            let mut e = vec![0.0; g.padded_len()];
            for &c in g.interior() {
                e[c] = t.gram_at(j, k, c);
            }
            fill_cell_ghosts(g, &mut e, wall_sign(ndim, &[j, k]));
            out[k * ndim + j] = e.clone();
            out[j * ndim + k] = e;
        }
    }
    out
}

/// -div(grad d (.) grad d), assembled from the cell Gram matrix.
///
/// For face `f` normal to `a`, the `a`-derivative of G_{aa} is the compact
/// difference across the face; transverse derivatives of G_{ab} use the
/// two-point face average of G_{ab} and a centred difference along `b`.
pub fn elastic_force_direct(d: &DirectorField) -> MacVectorField {
    let g = d.grid();
    let ndim = g.ndim();
    let t = grad_tensor(d);
    let gram = gram_arrays(g, &t);
    let mut out = MacVectorField::zeros(g);
    for a in 0..ndim {
        let sa = g.stride(a);
        let gaa = &gram[a * ndim + a];
        let comp = out.comp_mut(a);
        for &f in g.interior_faces(a) {
            let mut div = (gaa[f] - gaa[f - sa]) / g.h(a);
            for b in (0..ndim).filter(|&b| b != a) {
                let sb = g.stride(b);
                let gab = &gram[a * ndim + b];
                let up = 0.5 * (gab[f + sb] + gab[f + sb - sa]);
                let dn = 0.5 * (gab[f - sb] + gab[f - sb - sa]);
                div += (up - dn) / (2.0 * g.h(b));
            }
            comp[f] = -div;
        }
    }
    apply_velocity_bc(&mut out);
    out
}

/// Cell arrays of q = |grad d|^2 / 2 and w_a = ((grad d)^T lap d)_a.
fn identity_parts(d: &DirectorField) -> (Vec<f64>, Vec<Vec<f64>>) {
    let g = d.grid();
    let ndim = g.ndim();
    let t = grad_tensor(d);
    let lap = laplacian_director(d);
    let mut q = vec![0.0; g.padded_len()];
    let mut w = vec![vec![0.0; g.padded_len()]; ndim];
    for &c in g.interior() {
        q[c] = 0.5 * t.norm_sq_at(c);
        for (a, wa) in w.iter_mut().enumerate() {
            wa[c] = (0..3).map(|i| t.entry(i, a)[c] * lap.comp(i)[c]).sum();
        }
    }
    fill_cell_ghosts(g, &mut q, [1.0; 3]);
    for (a, wa) in w.iter_mut().enumerate() {
        fill_cell_ghosts(g, wa, wall_sign(ndim, &[a]));
    }
    (q, w)
}

/// -grad(|grad d|^2/2) - (grad d)^T lap d, the same force rewritten by the
/// stress identity; the cell vector (grad d)^T lap d is averaged to faces.
pub fn elastic_force_identity(d: &DirectorField) -> MacVectorField {
    let g = d.grid();
    let (q, w) = identity_parts(d);
    let mut out = MacVectorField::zeros(g);
    for (a, wa) in w.iter().enumerate() {
        let sa = g.stride(a);
        let comp = out.comp_mut(a);
        for &f in g.interior_faces(a) {
            comp[f] = -(q[f] - q[f - sa]) / g.h(a) - 0.5 * (wa[f] + wa[f - sa]);
        }
    }
    apply_velocity_bc(&mut out);
    out
}

/// The non-gradient part of the identity form, -(grad d)^T lap d on faces.
/// Differs from [`elastic_force_identity`] by an exact discrete gradient.
pub fn elastic_force_identity_solenoidal(d: &DirectorField) -> MacVectorField {
    let g = d.grid();
    let (_, w) = identity_parts(d);
    let mut out = MacVectorField::zeros(g);
    for (a, wa) in w.iter().enumerate() {
        let sa = g.stride(a);
        let comp = out.comp_mut(a);
        for &f in g.interior_faces(a) {
            comp[f] = -0.5 * (wa[f] + wa[f - sa]);
        }
    }
    apply_velocity_bc(&mut out);
    out
}

/// |grad d|^2 d - the harmonic-map tension term without the Laplacian.
pub fn tension(d: &DirectorField) -> DirectorField {
    let g = d.grid();
    let t = grad_tensor(d);
    let mut out = DirectorField::zeros(g);
    for c in 0..3 {
        let dc = d.comp(c);
        let o = out.comp_mut(c);
        for &i in g.interior() {
            o[i] = t.norm_sq_at(i) * dc[i];
        }
    }
    apply_director_bc(&mut out);
    out
}

/// -(u . grad) d + lap d + |grad d|^2 d.
pub fn director_rhs(u: &MacVectorField, d: &DirectorField) -> DirectorField {
    let mut out = laplacian_director(d);
    out.axpy(1.0, &tension(d));
    out.axpy(-1.0, &advect_director(u, d));
    apply_director_bc(&mut out);
    out
}
