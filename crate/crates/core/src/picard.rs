//! Slab-wise Picard time stepping.
//!
//! Within a slab the nonlinear terms are frozen at the previous iterate's
//! trajectory and the resulting linear Stokes and heat problems are marched
//! with backward Euler. Iterates are compared through
//!
//! ```text
//! Ubar_k = max_m ( |u^{k+1}_m - u^k_m| + |d^{k+1}_m - d^k_m| + |grad(d^{k+1}_m - d^k_m)| )
//! ```
//!
//! (discrete L2 in space, max over the slab's time levels). When two
//! consecutive ratios `Ubar_k / Ubar_{k-1}` exceed the contraction target the
//! slab and its step are halved and the slab restarts.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::data_size;
use crate::error::{Error, Result};
use crate::grid::{apply_director_bc, apply_velocity_bc, DirectorField, Grid, MacVectorField, State};
use crate::operators::{advection_registry, elastic_registry, grad_tensor, tension, Advection, ElasticStress, IdentityStress, SkewSymmetric};
use crate::projection::project;
use crate::solver::{LinearSolver, Location};

/// Viscosity, elastic coupling and director relaxation constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Physics {
    pub mu: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl Default for Physics {
    fn default() -> Self {
        Physics {
            mu: 1.0,
            lambda: 1.0,
            gamma: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SlabConfig {
    /// Backward-Euler step inside a slab.
    pub dt: f64,
    /// Slab length.
    pub slab_t: f64,
    pub contraction_target: f64,
    /// Absolute threshold on `Ubar`.
    pub picard_tol: f64,
    pub max_picard: usize,
    pub max_halvings: usize,
}

impl Default for SlabConfig {
    fn default() -> Self {
        SlabConfig {
            dt: 1e-3,
            slab_t: 1e-2,
            contraction_target: 0.5,
            picard_tol: 1e-10,
            max_picard: 50,
            max_halvings: 8,
        }
    }
}

impl SlabConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.contraction_target > 0.0 && self.contraction_target < 1.0) {
            return bad(format!(
                "contraction_target must lie in (0, 1), got {}",
                self.contraction_target
            ));
        }
        if !(self.dt > 0.0) || !(self.slab_t > 0.0) {
            return bad("dt and slab_t must be positive".into());
        }
        if self.dt > self.slab_t * (1.0 + 1e-12) {
            return bad(format!("dt {} exceeds slab_t {}", self.dt, self.slab_t));
        }
        if !(self.picard_tol > 0.0) || self.max_picard == 0 {
            return bad("picard_tol and max_picard must be positive".into());
        }
        Ok(())
    }
}

/// Trace of the Picard iteration on one slab.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub t_start: f64,
    /// Slab length and step actually used (after halvings).
    pub slab_t: f64,
    pub dt: f64,
    /// `Ubar_k` of the accepted attempt.
    pub iterates: Vec<f64>,
    /// `Ubar_k / Ubar_{k-1}`, `k >= 1`.
    pub ratios: Vec<f64>,
    pub halvings: usize,
    pub converged: bool,
}

impl PicardReport {
    /// Last measured contraction ratio, if at least two iterates exist.
    pub fn terminal_ratio(&self) -> Option<f64> {
        self.ratios.last().copied()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios.iter().copied().reduce(f64::max)
    }
}

/// Additional source terms on the right-hand side, evaluated at the new time
/// level of each step (used by manufactured solutions).
pub trait Forcing: Send + Sync {
    fn at(&self, grid: &Grid, t: f64) -> (MacVectorField, DirectorField);
}

/// One Picard sweep over a slab without any halving.
#[derive(Clone, Debug)]
pub struct SlabAttempt {
    /// States at the end of each step, accepted iterate.
    pub trajectory: Vec<State>,
    pub iterates: Vec<f64>,
    pub ratios: Vec<f64>,
    pub converged: bool,
}

/// The coupled scheme: physics, the chosen term forms and the linear solver.
#[derive(Clone)]
pub struct Stepper {
    pub physics: Physics,
    elastic: Arc<dyn ElasticStress>,
    advection: Arc<dyn Advection>,
    solver: LinearSolver,
    /// Divide d by |d| after every slab.
    pub renormalize: bool,
    forcing: Option<Arc<dyn Forcing>>,
}

impl std::fmt::Debug for Stepper {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stepper")
            .field("physics", &self.physics)
            .field("elastic", &self.elastic.name())
            .field("advection", &self.advection.name())
            .field("solver", &self.solver)
            .field("renormalize", &self.renormalize)
            .field("forced", &self.forcing.is_some())
            .finish()
    }
}

impl Default for Stepper {
    fn default() -> Self {
        Stepper::new(
            Physics::default(),
            Arc::new(IdentityStress),
            Arc::new(SkewSymmetric),
            LinearSolver::default(),
        )
    }
}

impl Stepper {
    pub fn new(
        physics: Physics,
        elastic: Arc<dyn ElasticStress>,
        advection: Arc<dyn Advection>,
        solver: LinearSolver,
    ) -> Self {
        Stepper {
            physics,
            elastic,
            advection,
            solver,
            renormalize: false,
            forcing: None,
        }
    }

    /// Looks the term forms up in their registries.
    pub fn from_names(
        physics: Physics,
        elastic: &str,
        advection: &str,
        solver: LinearSolver,
    ) -> Result<Self> {
        let e = elastic_registry().get(elastic).copied()?;
        let a = advection_registry().get(advection).copied()?;
        Ok(Stepper::new(physics, e(), a(), solver))
    }

    pub fn with_renormalize(mut self, on: bool) -> Self {
        self.renormalize = on;
        self
    }

    pub fn with_forcing(mut self, forcing: Arc<dyn Forcing>) -> Self {
        self.forcing = Some(forcing);
        self
    }

    pub fn solver(&self) -> &LinearSolver {
        &self.solver
    }

    pub fn elastic_name(&self) -> &'static str {
        self.elastic.name()
    }

    pub fn advection_name(&self) -> &'static str {
        self.advection.name()
    }

    /// Right-hand sides of the linearised problems with the nonlinear terms
    /// frozen at `v`:
    /// `f_u = -v.grad v - lambda div(grad d (.) grad d)`,
    /// `f_d = -v.grad d + gamma |grad d|^2 d`.
    pub fn frozen_forcing(&self, v: &State) -> (MacVectorField, DirectorField) {
        let mut f_u = self.elastic.force(&v.d);
        f_u.scale(self.physics.lambda);
        f_u.axpy(-1.0, &self.advection.momentum(&v.u));
        apply_velocity_bc(&mut f_u);

        let mut f_d = tension(&v.d);
        f_d.scale(self.physics.gamma);
        f_d.axpy(-1.0, &self.advection.director(&v.u, &v.d));
        apply_director_bc(&mut f_d);
        (f_u, f_d)
    }

    /// `(I - dt mu lap) u* = u_prev + dt f_u`, then projection.
    pub fn stokes_substep(
        &self,
        u_prev: &MacVectorField,
        f_u: &MacVectorField,
        dt: f64,
    ) -> Result<(MacVectorField, crate::grid::ScalarField)> {
        let g = u_prev.grid();
        let mut comps = Vec::with_capacity(g.ndim());
        for a in 0..g.ndim() {
            let rhs: Vec<f64> = u_prev
                .comp(a)
                .iter()
                .zip(f_u.comp(a))
                .map(|(u, f)| u + dt * f)
                .collect();
            comps.push(
                self.solver
                    .solve(g, Location::Face(a), 1.0, dt * self.physics.mu, &rhs)?,
            );
        }
        let u_star = MacVectorField::from_comps(g, comps);
        project(&u_star, dt, &self.solver)
    }

    /// `(I - dt gamma lap) d = d_prev + dt f_d` per component.
    pub fn heat_substep(
        &self,
        d_prev: &DirectorField,
        f_d: &DirectorField,
        dt: f64,
    ) -> Result<DirectorField> {
        let g = d_prev.grid();
        let mut out: [Vec<f64>; 3] = Default::default();
        for (c, o) in out.iter_mut().enumerate() {
            let rhs: Vec<f64> = d_prev
                .comp(c)
                .iter()
                .zip(f_d.comp(c))
                .map(|(d, f)| d + dt * f)
                .collect();
            *o = self
                .solver
                .solve(g, Location::Cell, 1.0, dt * self.physics.gamma, &rhs)?;
        }
        Ok(DirectorField::from_comps(g, out))
    }

    /// Marches one linearised sweep: given the previous iterate's states at
    /// the step ends, returns the next iterate's states.
    fn sweep(&self, s0: &State, prev: &[State], dt: f64) -> Result<Vec<State>> {
        let mut out = Vec::with_capacity(prev.len());
        let mut u = s0.u.clone();
        let mut d = s0.d.clone();
        for (m, v) in prev.iter().enumerate() {
            let t = s0.t + (m + 1) as f64 * dt;
            let (mut f_u, mut f_d) = self.frozen_forcing(v);
            if let Some(extra) = &self.forcing {
                let (g_u, g_d) = extra.at(s0.grid(), t);
                f_u.axpy(1.0, &g_u);
                f_d.axpy(1.0, &g_d);
            }
            let (u_new, p_new) = self.stokes_substep(&u, &f_u, dt)?;
            let d_new = self.heat_substep(&d, &f_d, dt)?;
            u = u_new;
            d = d_new;
            out.push(State {
                u: u.clone(),
                d: d.clone(),
                p: p_new,
                t,
            });
        }
        Ok(out)
    }

    /// Picard iteration on `[s0.t, s0.t + n_steps dt]` with no halving.
    ///
    /// Stops on `Ubar_k <= picard_tol` (converged), on two consecutive
    /// ratios above the target, a non-finite `Ubar`, or `max_picard`
    /// sweeps (not converged).
    pub fn picard_iterate(
        &self,
        s0: &State,
        n_steps: usize,
        dt: f64,
        cfg: &SlabConfig,
    ) -> Result<SlabAttempt> {
        let g = s0.grid();
        let mut current: Vec<State> = (1..=n_steps)
            .map(|m| State {
                t: s0.t + m as f64 * dt,
                ..s0.clone()
            })
            .collect();
        let mut iterates = Vec::new();
        let mut ratios = Vec::new();
        let mut above = 0usize;
        for _ in 0..cfg.max_picard {
            let next = self.sweep(s0, &current, dt)?;
            let ubar = current
                .iter()
                .zip(&next)
                .map(|(a, b)| {
                    let mut du = b.u.clone();
                    du.axpy(-1.0, &a.u);
                    let mut dd = b.d.clone();
                    dd.axpy(-1.0, &a.d);
                    apply_director_bc(&mut dd);
                    let dg = grad_tensor(&dd).norm_l2_sq(g).sqrt();
                    du.norm_l2() + dd.norm_l2() + dg
                })
                .fold(0.0, f64::max);
            current = next;
            if let Some(&prev) = iterates.last() {
                let r: f64 = ubar / prev;
                ratios.push(r);
                if r > cfg.contraction_target || !r.is_finite() {
                    above += 1;
                } else {
                    above = 0;
                }
            }
            iterates.push(ubar);
            if ubar <= cfg.picard_tol {
                return Ok(SlabAttempt {
                    trajectory: current,
                    iterates,
                    ratios,
                    converged: true,
                });
            }
            if !ubar.is_finite() || above >= 2 {
                break;
            }
        }
        Ok(SlabAttempt {
            trajectory: current,
            iterates,
            ratios,
            converged: false,
        })
    }

    /// Advances one slab of length `cfg.slab_t` (or `len` if given), halving
    /// slab and step until the iteration contracts.
    pub fn picard_advance(
        &self,
        s0: &State,
        cfg: &SlabConfig,
    ) -> Result<(State, PicardReport, Vec<State>)> {
        self.advance_slab(s0, cfg.slab_t, cfg.dt, cfg)
    }

    fn advance_slab(
        &self,
        s0: &State,
        slab_t: f64,
        dt: f64,
        cfg: &SlabConfig,
    ) -> Result<(State, PicardReport, Vec<State>)> {
        let mut slab_t = slab_t;
        let n_steps = ((slab_t / dt).round() as usize).max(1);
        let mut halvings = 0usize;
        loop {
            let step = slab_t / n_steps as f64;
            let attempt = self.picard_iterate(s0, n_steps, step, cfg)?;
            if attempt.converged {
                let mut traj = attempt.trajectory;
                if self.renormalize {
                    if let Some(last) = traj.last_mut() {
                        last.d.renormalize();
                    }
                }
                let end = traj.last().cloned().unwrap_or_else(|| s0.clone());
                let report = PicardReport {
                    t_start: s0.t,
                    slab_t,
                    dt: step,
                    iterates: attempt.iterates,
                    ratios: attempt.ratios,
                    halvings,
                    converged: true,
                };
                return Ok((end, report, traj));
            }
            halvings += 1;
            if halvings > cfg.max_halvings {
                return Err(Error::MaxHalvingsExceeded {
                    halvings: halvings - 1,
                    u0_proxy: data_size(s0),
                });
            }
            // The step count is fixed, so the step halves with the slab.
            slab_t *= 0.5;
        }
    }

    /// Chains slabs from `s0.t` to `t_end`. `observe` sees every accepted
    /// step state in order. After a halving the reduced slab and step are
    /// kept for the rest of the run.
    pub fn advance_to(
        &self,
        s0: &State,
        t_end: f64,
        cfg: &SlabConfig,
        observe: &mut dyn FnMut(&State),
    ) -> Result<(State, Vec<PicardReport>)> {
        cfg.validate()?;
        let mut state = s0.clone();
        let mut reports = Vec::new();
        let mut slab_t = cfg.slab_t;
        let mut dt = cfg.dt;
        let eps = 1e-9 * dt;
        while t_end - state.t > eps {
            let remaining = t_end - state.t;
            let (len, step) = if remaining < slab_t - eps {
                let n = ((remaining / dt).round() as usize).max(1);
                (remaining, remaining / n as f64)
            } else {
                (slab_t, dt)
            };
            let (mut end, report, traj) = self.advance_slab(&state, len, step, cfg)?;
            if report.halvings > 0 {
                slab_t = report.slab_t;
                dt = report.dt;
            }
            for s in &traj {
                observe(s);
            }
            // Avoid drift in the accumulated time.
            if (end.t - t_end).abs() <= eps {
                end.t = t_end;
            }
            state = end;
            reports.push(report);
        }
        Ok((state, reports))
    }
}
