//! Manufactured solutions: analytic source terms that make a prescribed
//! `(u*, P*, d*)` an exact solution of the forced system, and the
//! refinement study built on them.
//!
//! The director is parameterised by an angle, `d* = (sin a, 0, cos a)`, so
//! `|d*| = 1` holds identically. With `d' = (cos a, 0, -sin a)` the source
//! terms reduce to
//!
//! ```text
//! g_u = u_t + u.grad u - mu lap u + grad P + lambda (lap a grad a + Hess(a) grad a)
//! g_d = d' (a_t + u.grad a - gamma lap a)
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{make_grid, BcMode, DirectorField, Grid, MacVectorField, ScalarField, State};
use crate::picard::{Forcing, Physics, SlabConfig, Stepper};
use crate::registry::Registry;

/// Closed-form values of a manufactured solution at one point and time.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues {
    pub u: [f64; 3],
    pub u_t: [f64; 3],
    /// `grad_u[i][j] = d u_i / d x_j`.
    pub grad_u: [[f64; 3]; 3],
    pub lap_u: [f64; 3],
    pub p: f64,
    pub grad_p: [f64; 3],
    pub alpha: f64,
    pub alpha_t: f64,
    pub grad_alpha: [f64; 3],
    pub hess_alpha: [[f64; 3]; 3],
}

impl PointValues {
    pub fn director(&self) -> [f64; 3] {
        [self.alpha.sin(), 0.0, self.alpha.cos()]
    }

    /// Momentum source for the given constants.
    pub fn g_u(&self, ph: &Physics) -> [f64; 3] {
        let lap_a: f64 = (0..3).map(|i| self.hess_alpha[i][i]).sum();
        let mut g = [0.0; 3];
        for (j, gj) in g.iter_mut().enumerate() {
            let conv: f64 = (0..3).map(|i| self.u[i] * self.grad_u[j][i]).sum();
            let hess: f64 = (0..3).map(|i| self.hess_alpha[j][i] * self.grad_alpha[i]).sum();
            *gj = self.u_t[j] + conv - ph.mu * self.lap_u[j]
                + self.grad_p[j]
                + ph.lambda * (lap_a * self.grad_alpha[j] + hess);
        }
        g
    }

    /// Director source for the given constants.
    pub fn g_d(&self, ph: &Physics) -> [f64; 3] {
        let lap_a: f64 = (0..3).map(|i| self.hess_alpha[i][i]).sum();
        let transport: f64 = (0..3).map(|i| self.u[i] * self.grad_alpha[i]).sum();
        let s = self.alpha_t + transport - ph.gamma * lap_a;
        [self.alpha.cos() * s, 0.0, -self.alpha.sin() * s]
    }
}

/// A prescribed solution with a divergence-free, zero-mean velocity and
/// pressure on a periodic box.
pub trait ManufacturedCase: Send + Sync {
    fn name(&self) -> &'static str;
    /// Side lengths of the periodic box (two-dimensional).
    fn lengths(&self) -> [f64; 2] {
        [2.0 * PI, 2.0 * PI]
    }
    fn bc(&self) -> BcMode {
        BcMode::Periodic
    }
    fn eval(&self, x: [f64; 3], t: f64) -> PointValues;
}

/// `u = 0`, `a = 0.4`.
pub struct ConstantCase;

/// `u = 0`, `a = x`: the planar twist, a steady solution.
pub struct SteadyTwist;

/// Decaying Taylor-Green flow with `a = cos x cos y e^{-t}`.
pub struct TaylorGreenDirector;

impl ManufacturedCase for ConstantCase {
    fn name(&self) -> &'static str {
        "constant"
    }

    fn eval(&self, _: [f64; 3], _: f64) -> PointValues {
        PointValues {
            alpha: 0.4,
            ..Default::default()
        }
    }
}

impl ManufacturedCase for SteadyTwist {
    fn name(&self) -> &'static str {
        "steady_twist"
    }

    fn eval(&self, x: [f64; 3], _: f64) -> PointValues {
        PointValues {
            alpha: x[0],
            grad_alpha: [1.0, 0.0, 0.0],
            ..Default::default()
        }
    }
}

impl ManufacturedCase for TaylorGreenDirector {
    fn name(&self) -> &'static str {
        "taylor_green_director"
    }

    fn eval(&self, x: [f64; 3], t: f64) -> PointValues {
        let (sx, cx) = x[0].sin_cos();
        let (sy, cy) = x[1].sin_cos();
        let eu = (-2.0 * t).exp();
        let ep = (-4.0 * t).exp();
        let ea = (-t).exp();
        let u = [sx * cy * eu, -cx * sy * eu, 0.0];
        let grad_u = [
            [cx * cy * eu, -sx * sy * eu, 0.0],
            [sx * sy * eu, -cx * cy * eu, 0.0],
            [0.0; 3],
        ];
        let alpha = cx * cy * ea;
        PointValues {
            u,
            u_t: [-2.0 * u[0], -2.0 * u[1], 0.0],
            grad_u,
            lap_u: [-2.0 * u[0], -2.0 * u[1], 0.0],
            p: 0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * ep,
            grad_p: [-0.5 * (2.0 * x[0]).sin() * ep, -0.5 * (2.0 * x[1]).sin() * ep, 0.0],
            alpha,
            alpha_t: -alpha,
            grad_alpha: [-sx * cy * ea, -cx * sy * ea, 0.0],
            hess_alpha: [
                [-alpha, sx * sy * ea, 0.0],
                [sx * sy * ea, -alpha, 0.0],
                [0.0; 3],
            ],
        }
    }
}

pub type CaseFactory = fn() -> Arc<dyn ManufacturedCase>;

fn constant() -> Arc<dyn ManufacturedCase> {
    Arc::new(ConstantCase)
}

fn steady_twist() -> Arc<dyn ManufacturedCase> {
    Arc::new(SteadyTwist)
}

fn taylor_green_director() -> Arc<dyn ManufacturedCase> {
    Arc::new(TaylorGreenDirector)
}

pub fn case_registry() -> Registry<CaseFactory> {
    Registry::new("manufactured case")
        .with("constant", constant as CaseFactory)
        .with("steady_twist", steady_twist)
        .with("taylor_green_director", taylor_green_director)
}

/// Source terms of `case` at time `t`, sampled at faces and cells.
pub fn manufactured_forcings(
    case: &dyn ManufacturedCase,
    physics: &Physics,
    grid: &Grid,
    t: f64,
) -> (MacVectorField, DirectorField) {
    let g_u = MacVectorField::from_fn(grid, |a, x| case.eval(x, t).g_u(physics)[a]);
    let g_d = DirectorField::from_fn(grid, |x| case.eval(x, t).g_d(physics));
    (g_u, g_d)
}

/// Exact solution sampled on `grid` at time `t`.
pub fn exact_state(case: &dyn ManufacturedCase, grid: &Grid, t: f64) -> Result<State> {
    let u = MacVectorField::from_fn(grid, |a, x| case.eval(x, t).u[a]);
    let d = DirectorField::from_fn(grid, |x| case.eval(x, t).director());
    let p = ScalarField::from_fn(grid, |x| case.eval(x, t).p);
    State::new(u, d, p, t)
}

struct CaseForcing {
    case: Arc<dyn ManufacturedCase>,
    physics: Physics,
}

impl Forcing for CaseForcing {
    fn at(&self, grid: &Grid, t: f64) -> (MacVectorField, DirectorField) {
        manufactured_forcings(self.case.as_ref(), &self.physics, grid, t)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MmsConfig {
    pub case: String,
    /// Cells per side, coarsest first.
    pub resolutions: Vec<usize>,
    pub t_end: f64,
    /// Steps at the coarsest resolution; the step then shrinks like `h^2`.
    pub base_steps: usize,
    /// Backward-Euler steps per Picard slab.
    pub steps_per_slab: usize,
}

impl Default for MmsConfig {
    fn default() -> Self {
        MmsConfig {
            case: "taylor_green_director".into(),
            resolutions: vec![16, 32, 64],
            t_end: 0.25,
            base_steps: 16,
            steps_per_slab: 8,
        }
    }
}

/// One resolution of the refinement study.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub dt: f64,
    pub err_u_l2: f64,
    pub err_d_l2: f64,
    /// Observed order against the previous row; `None` on the first row or
    /// when both errors sit at the rounding floor.
    pub order_u: Option<f64>,
    pub order_d: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub case: String,
    pub rows: Vec<ConvergenceRow>,
    /// Least-squares slope of `log err` against `log h`, `None` at the floor.
    pub fitted_order_u: Option<f64>,
    pub fitted_order_d: Option<f64>,
}

/// Errors below this are reported as exact.
pub const ERROR_FLOOR: f64 = 1e-12;

fn order(e_coarse: f64, e_fine: f64, h_coarse: f64, h_fine: f64) -> Option<f64> {
    if e_coarse < ERROR_FLOOR || e_fine < ERROR_FLOOR {
        None
    } else {
        Some((e_coarse / e_fine).ln() / (h_coarse / h_fine).ln())
    }
}

fn fitted_slope(h: &[f64], e: &[f64]) -> Option<f64> {
    if e.iter().any(|&v| v < ERROR_FLOOR) {
        return None;
    }
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// L2 errors of `(u, d)` against the exact solution at `s.t`.
pub fn solution_errors(case: &dyn ManufacturedCase, s: &State) -> Result<(f64, f64)> {
    let exact = exact_state(case, s.grid(), s.t)?;
    let mut du = s.u.clone();
    du.axpy(-1.0, &exact.u);
    let mut dd = s.d.clone();
    dd.axpy(-1.0, &exact.d);
    Ok((du.norm_l2(), dd.norm_l2()))
}

/// Runs one resolution from the exact initial data to `t_end`.
pub fn run_single(
    case: Arc<dyn ManufacturedCase>,
    stepper: &Stepper,
    n: usize,
    dt: f64,
    cfg: &MmsConfig,
    slab: &SlabConfig,
) -> Result<ConvergenceRow> {
    let lengths = case.lengths();
    let grid = make_grid(&[n, n], &lengths, case.bc())?;
    let s0 = exact_state(case.as_ref(), &grid, 0.0)?;
    let stepper = stepper.clone().with_forcing(Arc::new(CaseForcing {
        case: case.clone(),
        physics: stepper.physics,
    }));
    let slab = SlabConfig {
        dt,
        slab_t: dt * cfg.steps_per_slab as f64,
        ..*slab
    };
    let (end, _) = stepper.advance_to(&s0, cfg.t_end, &slab, &mut |_| {})?;
    let (err_u_l2, err_d_l2) = solution_errors(case.as_ref(), &end)?;
    Ok(ConvergenceRow {
        h: grid.h(0),
        dt,
        err_u_l2,
        err_d_l2,
        order_u: None,
        order_d: None,
    })
}

/// Refinement study over `cfg.resolutions` with `dt` proportional to `h^2`.
/// Resolutions run concurrently.
pub fn run_mms(cfg: &MmsConfig, stepper: &Stepper, slab: &SlabConfig) -> Result<ConvergenceTable> {
    if cfg.resolutions.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "a convergence fit needs at least 3 resolutions, got {}",
            cfg.resolutions.len()
        )));
    }
    if cfg.resolutions.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("resolutions must be strictly increasing".into()));
    }
    if !(cfg.t_end > 0.0) || cfg.base_steps == 0 || cfg.steps_per_slab == 0 {
        return Err(Error::InvalidArgument(
            "t_end, base_steps and steps_per_slab must be positive".into(),
        ));
    }
    let case = case_registry().get(&cfg.case).copied()?();
    let n0 = cfg.resolutions[0] as f64;
    let mut rows = cfg
        .resolutions
        .par_iter()
        .map(|&n| {
            let r = n as f64 / n0;
            let dt = cfg.t_end / (cfg.base_steps as f64 * r * r);
            run_single(case.clone(), stepper, n, dt, cfg, slab)
        })
        .collect::<Result<Vec<_>>>()?;
    for i in 1..rows.len() {
        let (c, f) = (rows[i - 1], rows[i]);
        rows[i].order_u = order(c.err_u_l2, f.err_u_l2, c.h, f.h);
        rows[i].order_d = order(c.err_d_l2, f.err_d_l2, c.h, f.h);
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let eu: Vec<f64> = rows.iter().map(|r| r.err_u_l2).collect();
    let ed: Vec<f64> = rows.iter().map(|r| r.err_d_l2).collect();
    Ok(ConvergenceTable {
        case: cfg.case.clone(),
        fitted_order_u: fitted_slope(&h, &eu),
        fitted_order_d: fitted_slope(&h, &ed),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Grid {
        make_grid(&[n, n], &[2.0 * PI, 2.0 * PI], BcMode::Periodic).unwrap()
    }

    #[test]
    fn constant_and_twist_forcings_vanish() {
        let ph = Physics::default();
        let g = grid(8);
        for case in [constant(), steady_twist()] {
            let (gu, gd) = manufactured_forcings(case.as_ref(), &ph, &g, 0.3);
            assert!(gu.max_abs() < 1e-15, "{}", case.name());
            assert!(gd.norm_l2() < 1e-15, "{}", case.name());
        }
    }

    #[test]
    fn time_dependent_forcing_matches_symbolic_values() {
        // Reference values from symbolic differentiation of the full system
        // written in terms of d (not the angle), mu = lambda = gamma = 1.
        let cases = [
            (
                [0.3, 1.1, 0.2],
                [-0.03349689130652728, 0.718267421234344],
                [0.6964933058889166, 0.0, -0.258024336082174],
            ),
            (
                [2.5, 4.0, 0.7],
                [-0.0838278323455123, 0.19119221051834312],
                [0.2766935074170292, 0.0, -0.07361919079230955],
            ),
            (
                [5.9, 0.4, 1.3],
                [-0.06164306821001214, 0.06502537928617476],
                [0.22676670601215232, 0.0, -0.053769507170863616],
            ),
        ];
        let ph = Physics::default();
        for (p, gu, gd) in cases {
            let v = TaylorGreenDirector.eval([p[0], p[1], 0.0], p[2]);
            let (a, b) = (v.g_u(&ph), v.g_d(&ph));
            for j in 0..2 {
                assert!((a[j] - gu[j]).abs() < 1e-14, "{p:?} g_u[{j}]");
            }
            for j in 0..3 {
                assert!((b[j] - gd[j]).abs() < 1e-14, "{p:?} g_d[{j}]");
            }
        }
    }

    #[test]
    fn exact_fields_are_admissible() {
        let g = grid(16);
        let s = exact_state(&TaylorGreenDirector, &g, 0.4).unwrap();
        assert!(crate::operators::divergence(&s.u).max_abs() < 1e-13);
        for &i in g.interior() {
            assert!((s.d.norm_sq_at(i) - 1.0).abs() < 1e-15);
        }
        assert!(s.p.mean().abs() < 1e-15);
    }

    #[test]
    fn too_few_resolutions() {
        let cfg = MmsConfig {
            resolutions: vec![16],
            ..Default::default()
        };
        assert!(matches!(
            run_mms(&cfg, &Stepper::default(), &SlabConfig::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn constant_case_is_exact() {
        let cfg = MmsConfig {
            case: "constant".into(),
            resolutions: vec![8, 12, 16],
            t_end: 0.05,
            base_steps: 2,
            steps_per_slab: 4,
        };
        let t = run_mms(&cfg, &Stepper::default(), &SlabConfig::default()).unwrap();
        for r in &t.rows {
            assert!(r.err_u_l2 < ERROR_FLOOR && r.err_d_l2 < ERROR_FLOOR);
            assert_eq!(r.order_u, None);
        }
        assert_eq!(t.fitted_order_d, None);
    }

    #[test]
    fn slope_fit() {
        let h = [0.4, 0.2, 0.1];
        let e = [3.0 * 0.16, 3.0 * 0.04, 3.0 * 0.01];
        assert!((fitted_slope(&h, &e).unwrap() - 2.0).abs() < 1e-12);
        assert!((order(e[0], e[1], h[0], h[1]).unwrap() - 2.0).abs() < 1e-12);
    }
}
