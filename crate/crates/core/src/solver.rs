//! Linear solves for `(alpha I - beta lap) x = b` on cell or face unknowns.
//!
//! `alpha = 0` is the singular Neumann/periodic Poisson problem; solutions
//! are returned with zero mean. Two back ends are registered: matrix-free
//! conjugate gradients (any boundary mode) and FFT diagonalisation
//! (periodic grids only, exact to rounding).

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{fill_cell_ghosts, fill_face_ghosts, BcMode, GridSpec};
use crate::operators::laplacian_raw;
use crate::registry::Registry;

/// Where the unknowns of a solve live.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    /// Cell centres, Neumann (wall) or periodic.
    Cell,
    /// Faces of velocity component `axis`, no-slip (wall) or periodic.
    Face(usize),
}

impl Location {
    pub fn unknowns<'g>(&self, grid: &'g GridSpec) -> &'g [usize] {
        match *self {
            Location::Cell => grid.interior(),
            Location::Face(a) => grid.interior_faces(a),
        }
    }

    pub fn fill_ghosts(&self, grid: &GridSpec, data: &mut [f64]) {
        match *self {
            Location::Cell => fill_cell_ghosts(grid, data, [1.0; 3]),
            Location::Face(a) => fill_face_ghosts(grid, data, a),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoissonSolveConfig {
    /// Relative residual target.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PoissonSolveConfig {
    fn default() -> Self {
        PoissonSolveConfig {
            tol: 1e-10,
            max_iter: 20_000,
        }
    }
}

impl PoissonSolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "solver tol must lie in (0, 1), got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("solver max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// A strategy for `(alpha I - beta lap) x = b`, `alpha >= 0`, `beta > 0`.
///
/// `b` and the returned `x` are padded arrays; only entries at
/// `loc.unknowns(grid)` of `b` are read, and `x` comes back with ghosts
/// filled.
pub trait LinearBackend: Send + Sync {
    fn name(&self) -> &'static str;

    fn solve(
        &self,
        grid: &GridSpec,
        loc: Location,
        alpha: f64,
        beta: f64,
        b: &[f64],
        cfg: &PoissonSolveConfig,
    ) -> Result<Vec<f64>>;
}

/// Unpreconditioned conjugate gradients on the matrix-free stencil.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConjugateGradient;

/// Periodic FFT diagonalisation of the discrete Laplacian.
#[derive(Clone, Copy, Debug, Default)]
pub struct FftDiagonal;

/// FFT on periodic grids, CG otherwise.
#[derive(Clone, Copy, Debug, Default)]
pub struct Auto;

fn dot(at: &[usize], a: &[f64], b: &[f64]) -> f64 {
    at.iter().map(|&i| a[i] * b[i]).sum()
}

fn subtract_mean(at: &[usize], v: &mut [f64]) {
    let m = at.iter().map(|&i| v[i]).sum::<f64>() / at.len() as f64;
    for &i in at {
        v[i] -= m;
    }
}

impl LinearBackend for ConjugateGradient {
    fn name(&self) -> &'static str {
        "cg"
    }

    fn solve(
        &self,
        grid: &GridSpec,
        loc: Location,
        alpha: f64,
        beta: f64,
        b: &[f64],
        cfg: &PoissonSolveConfig,
    ) -> Result<Vec<f64>> {
        let at = loc.unknowns(grid);
        let n = grid.padded_len();
        let singular = alpha == 0.0;
        let mut rhs = vec![0.0; n];
        for &i in at {
            rhs[i] = b[i];
        }
        if singular {
            subtract_mean(at, &mut rhs);
        }
        let mut x = vec![0.0; n];
        let bnorm = dot(at, &rhs, &rhs).sqrt();
        if bnorm == 0.0 {
            loc.fill_ghosts(grid, &mut x);
            return Ok(x);
        }

        let apply = |p: &mut Vec<f64>, out: &mut Vec<f64>| {
            loc.fill_ghosts(grid, p);
            laplacian_raw(grid, p, out, at);
            for &i in at {
                out[i] = alpha * p[i] - beta * out[i];
            }
        };

        let mut r = rhs;
        let mut p = r.clone();
        let mut ap = vec![0.0; n];
        let mut rr = dot(at, &r, &r);
        let target = cfg.tol * bnorm;
        let mut iter = 0;
        while rr.sqrt() > target {
            if iter >= cfg.max_iter {
                return Err(Error::NonConvergence {
                    max_iter: cfg.max_iter,
                    residual: rr.sqrt() / bnorm,
                });
            }
            apply(&mut p, &mut ap);
            let pap = dot(at, &p, &ap);
            let step = rr / pap;
            for &i in at {
                x[i] += step * p[i];
                r[i] -= step * ap[i];
            }
            if singular {
                subtract_mean(at, &mut r);
            }
            let rr_new = dot(at, &r, &r);
            let ratio = rr_new / rr;
            for &i in at {
                p[i] = r[i] + ratio * p[i];
            }
            rr = rr_new;
            iter += 1;
        }
        if singular {
            subtract_mean(at, &mut x);
        }
        loc.fill_ghosts(grid, &mut x);
        Ok(x)
    }
}

/// In-place N-d complex FFT over the interior block (row-major, last axis
/// contiguous).
fn fft_nd(dims: &[usize], buf: &mut [Complex<f64>], inverse: bool) {
    let mut planner = FftPlanner::new();
    let total: usize = dims.iter().product();
    let ndim = dims.len();
    for a in 0..ndim {
        let n = dims[a];
        let stride: usize = dims[a + 1..].iter().product();
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        let mut line = vec![Complex::new(0.0, 0.0); n];
        let outer = total / (n * stride);
        for o in 0..outer {
            for s in 0..stride {
                let base = o * n * stride + s;
                for k in 0..n {
                    line[k] = buf[base + k * stride];
                }
                fft.process(&mut line);
                for k in 0..n {
                    buf[base + k * stride] = line[k];
                }
            }
        }
    }
}

impl LinearBackend for FftDiagonal {
    fn name(&self) -> &'static str {
        "fft"
    }

    fn solve(
        &self,
        grid: &GridSpec,
        loc: Location,
        alpha: f64,
        beta: f64,
        b: &[f64],
        _cfg: &PoissonSolveConfig,
    ) -> Result<Vec<f64>> {
        if grid.bc() != BcMode::Periodic {
            return Err(Error::InvalidArgument(
                "fft back end requires a periodic grid".into(),
            ));
        }
        // On periodic grids every location enumerates the interior block in
        // the same row-major order.
        let at = loc.unknowns(grid);
        let dims = grid.dims();
        let mut buf: Vec<Complex<f64>> = at.iter().map(|&i| Complex::new(b[i], 0.0)).collect();
        fft_nd(dims, &mut buf, false);

        let ndim = dims.len();
        let mut eig_axis: Vec<Vec<f64>> = Vec::with_capacity(ndim);
        for (a, &n) in dims.iter().enumerate() {
            let h2 = grid.h(a) * grid.h(a);
            eig_axis.push(
                (0..n)
                    .map(|k| (2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()) / h2)
                    .collect(),
            );
        }
        let mut multi = vec![0usize; ndim];
        for (flat, v) in buf.iter_mut().enumerate() {
            let mut rem = flat;
            for a in (0..ndim).rev() {
                multi[a] = rem % dims[a];
                rem /= dims[a];
            }
            let lam: f64 = (0..ndim).map(|a| eig_axis[a][multi[a]]).sum();
            let denom = alpha + beta * lam;
            if flat == 0 && alpha == 0.0 {
                *v = Complex::new(0.0, 0.0);
            } else {
                *v /= denom;
            }
        }
        fft_nd(dims, &mut buf, true);
        let scale = 1.0 / buf.len() as f64;
        let mut x = vec![0.0; grid.padded_len()];
        for (k, &i) in at.iter().enumerate() {
            x[i] = buf[k].re * scale;
        }
        loc.fill_ghosts(grid, &mut x);
        Ok(x)
    }
}

impl LinearBackend for Auto {
    fn name(&self) -> &'static str {
        "auto"
    }

    fn solve(
        &self,
        grid: &GridSpec,
        loc: Location,
        alpha: f64,
        beta: f64,
        b: &[f64],
        cfg: &PoissonSolveConfig,
    ) -> Result<Vec<f64>> {
        match grid.bc() {
            BcMode::Periodic => FftDiagonal.solve(grid, loc, alpha, beta, b, cfg),
            BcMode::Wall => ConjugateGradient.solve(grid, loc, alpha, beta, b, cfg),
        }
    }
}

pub type BackendFactory = fn() -> Arc<dyn LinearBackend>;

fn auto() -> Arc<dyn LinearBackend> {
    Arc::new(Auto)
}

fn cg() -> Arc<dyn LinearBackend> {
    Arc::new(ConjugateGradient)
}

fn fft() -> Arc<dyn LinearBackend> {
    Arc::new(FftDiagonal)
}

pub fn backend_registry() -> Registry<BackendFactory> {
    Registry::new("linear solver")
        .with("auto", auto as BackendFactory)
        .with("cg", cg)
        .with("fft", fft)
}

/// A back end paired with its tolerances.
#[derive(Clone)]
pub struct LinearSolver {
    backend: Arc<dyn LinearBackend>,
    cfg: PoissonSolveConfig,
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearSolver")
            .field("backend", &self.backend.name())
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl Default for LinearSolver {
    fn default() -> Self {
        LinearSolver::new(Arc::new(Auto), PoissonSolveConfig::default())
    }
}

impl LinearSolver {
    pub fn new(backend: Arc<dyn LinearBackend>, cfg: PoissonSolveConfig) -> Self {
        LinearSolver { backend, cfg }
    }

    pub fn by_name(name: &str, cfg: PoissonSolveConfig) -> Result<Self> {
        let factory = backend_registry().get(name).copied()?;
        cfg.validate()?;
        Ok(LinearSolver::new(factory(), cfg))
    }

    pub fn cfg(&self) -> &PoissonSolveConfig {
        &self.cfg
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn solve(
        &self,
        grid: &GridSpec,
        loc: Location,
        alpha: f64,
        beta: f64,
        b: &[f64],
    ) -> Result<Vec<f64>> {
        self.backend.solve(grid, loc, alpha, beta, b, &self.cfg)
    }
}
