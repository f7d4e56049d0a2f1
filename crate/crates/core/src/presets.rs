//! Named initial conditions.
//!
//! Wavenumbers are scaled to the box: on a side of length `L` the base
//! wavenumber is `2 pi / L`, so on `[0, 2 pi]^n` the formulas read with unit
//! wavenumbers.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BcMode, DirectorField, Grid, MacVectorField, ScalarField, State};
use crate::operators::divergence;
use crate::projection::project;
use crate::registry::Registry;
use crate::solver::LinearSolver;

/// Initial-condition selector and its parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub preset: String,
    /// Velocity amplitude (`taylor_green`) or data amplitude (`random_smooth`).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Twist wavenumber.
    #[serde(default = "default_k")]
    pub k: f64,
    /// Amplitude of the director perturbation added to `taylor_green`.
    #[serde(default)]
    pub director_perturbation: f64,
}

fn default_epsilon() -> f64 {
    0.01
}

fn default_k() -> f64 {
    1.0
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition::named("zero")
    }
}

impl InitialCondition {
    pub fn named(preset: &str) -> Self {
        InitialCondition {
            preset: preset.to_string(),
            epsilon: default_epsilon(),
            k: default_k(),
            director_perturbation: 0.0,
        }
    }

    pub fn taylor_green(epsilon: f64) -> Self {
        InitialCondition {
            epsilon,
            ..Self::named("taylor_green")
        }
    }

    pub fn twist(k: f64) -> Self {
        InitialCondition {
            k,
            ..Self::named("twist")
        }
    }

    pub fn random_smooth(epsilon: f64) -> Self {
        InitialCondition {
            epsilon,
            ..Self::named("random_smooth")
        }
    }

    pub fn with_director_perturbation(mut self, delta: f64) -> Self {
        self.director_perturbation = delta;
        self
    }

    /// Builds the state through the preset registry.
    pub fn build(&self, grid: &Grid, seed: u64) -> Result<State> {
        let preset = preset_registry().get(&self.preset).copied()?();
        preset.build(grid, self, seed)
    }
}

/// A named family of initial states.
pub trait Preset: Send + Sync {
    fn name(&self) -> &'static str;
    fn build(&self, grid: &Grid, ic: &InitialCondition, seed: u64) -> Result<State>;
}

/// `u = 0`, `d = e_z`.
pub struct Zero;

/// `u = eps (sin x cos y, -cos x sin y, 0)`, `d = e_z`, optionally tilted by
/// `delta (cos x cos y, (cos 2x + cos 2y)/2, 0)` and renormalised.
pub struct TaylorGreen;

/// `d = (sin kx, 0, cos kx)`, `u = 0`.
pub struct Twist;

/// Seeded low-order trigonometric series for both fields, amplitude `eps`.
pub struct RandomSmooth;

fn wavenumbers(g: &Grid) -> [f64; 3] {
    let mut w = [0.0; 3];
    for (a, l) in g.lengths().iter().enumerate() {
        w[a] = 2.0 * PI / l;
    }
    w
}

fn check_amplitude(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be finite and non-negative, got {v}")))
    }
}

/// Makes `u` discretely divergence-free unless it already is.
fn solenoidal(u: MacVectorField) -> Result<MacVectorField> {
    let g = u.grid().clone();
    let scale = u.max_abs() / g.spacing().iter().copied().fold(f64::INFINITY, f64::min);
    if divergence(&u).max_abs() <= 1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Ok(u);
    }
    Ok(project(&u, 1.0, &LinearSolver::default())?.0)
}

impl Preset for Zero {
    fn name(&self) -> &'static str {
        "zero"
    }

    fn build(&self, grid: &Grid, _: &InitialCondition, _: u64) -> Result<State> {
        Ok(State::rest(grid))
    }
}

impl Preset for TaylorGreen {
    fn name(&self) -> &'static str {
        "taylor_green"
    }

    fn build(&self, grid: &Grid, ic: &InitialCondition, _: u64) -> Result<State> {
        check_amplitude("epsilon", ic.epsilon)?;
        check_amplitude("director_perturbation", ic.director_perturbation)?;
        let w = wavenumbers(grid);
        let eps = ic.epsilon;
        let u = MacVectorField::from_fn(grid, |a, x| match a {
            0 => eps * (w[0] * x[0]).sin() * (w[1] * x[1]).cos(),
            1 => -eps * (w[0] * x[0]).cos() * (w[1] * x[1]).sin(),
            _ => 0.0,
        });
        let delta = ic.director_perturbation;
        let mut d = DirectorField::from_fn(grid, |x| {
            let (cx, cy) = ((w[0] * x[0]).cos(), (w[1] * x[1]).cos());
            let c2 = 0.5 * ((2.0 * w[0] * x[0]).cos() + (2.0 * w[1] * x[1]).cos());
            [delta * cx * cy, delta * c2, 1.0]
        });
        d.renormalize();
        State::new(solenoidal(u)?, d, ScalarField::zeros(grid), 0.0)
    }
}

impl Preset for Twist {
    fn name(&self) -> &'static str {
        "twist"
    }

    fn build(&self, grid: &Grid, ic: &InitialCondition, _: u64) -> Result<State> {
        if !ic.k.is_finite() {
            return Err(Error::InvalidArgument(format!("twist k must be finite, got {}", ic.k)));
        }
        let k = ic.k;
        let d = DirectorField::from_fn(grid, |x| [(k * x[0]).sin(), 0.0, (k * x[0]).cos()]);
        State::new(MacVectorField::zeros(grid), d, ScalarField::zeros(grid), 0.0)
    }
}

/// Random trigonometric series; each mode is `amp * f(m . w x + phase)`.
struct Series {
    modes: Vec<([f64; 3], f64, f64)>,
}

const MAX_MODE: i32 = 2;

impl Series {
    /// Periodic: full Fourier modes. Wall: cosine (Neumann) or sine
    /// (vanishing) products with half-wavelength steps.
    fn random(rng: &mut ChaCha8Rng, g: &Grid) -> Self {
        let ndim = g.ndim();
        let mut modes = Vec::new();
        let lo = if g.bc() == BcMode::Periodic { -MAX_MODE } else { 0 };
        let mut m = [0i32; 3];
        m[..ndim].fill(lo);
        loop {
            let norm_sq: i32 = m[..ndim].iter().map(|v| v * v).sum();
            if norm_sq > 0 {
                let amp = rng.gen_range(-1.0..1.0) / (1.0 + norm_sq as f64);
                let phase = rng.gen_range(0.0..2.0 * PI);
                modes.push(([m[0] as f64, m[1] as f64, m[2] as f64], amp, phase));
            }
            // Odometer over the mode box.
            let mut a = 0;
            loop {
                if a == ndim {
                    return Series { modes };
                }
                if m[a] < MAX_MODE {
                    m[a] += 1;
                    break;
                }
                m[a] = lo;
                a += 1;
            }
        }
    }

    fn periodic(&self, w: &[f64; 3], x: [f64; 3]) -> f64 {
        self.modes
            .iter()
            .map(|(m, amp, phase)| {
                let arg: f64 = (0..3).map(|a| m[a] * w[a] * x[a]).sum::<f64>() + phase;
                amp * arg.sin()
            })
            .sum()
    }

    /// Product basis with half wavenumbers; `sines` picks sine factors
    /// (zero on walls) instead of cosines (zero normal derivative).
    fn wall(&self, w: &[f64; 3], x: [f64; 3], ndim: usize, sines: bool) -> f64 {
        self.modes
            .iter()
            .map(|(m, amp, _)| {
                let mut p = *amp;
                for a in 0..ndim {
                    let arg = 0.5 * m[a] * w[a] * x[a];
                    p *= if sines { (arg + 0.5 * w[a] * x[a]).sin() } else { arg.cos() };
                }
                p
            })
            .sum()
    }
}

impl Preset for RandomSmooth {
    fn name(&self) -> &'static str {
        "random_smooth"
    }

    fn build(&self, grid: &Grid, ic: &InitialCondition, seed: u64) -> Result<State> {
        check_amplitude("epsilon", ic.epsilon)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = wavenumbers(grid);
        let ndim = grid.ndim();
        let periodic = grid.bc() == BcMode::Periodic;
        let psi = Series::random(&mut rng, grid);
        let dir: Vec<Series> = (0..3).map(|_| Series::random(&mut rng, grid)).collect();
        let eps = ic.epsilon;

        // Velocity as the discrete curl of a stream function sampled at
        // cell corners: exactly divergence-free, and zero normal flow at
        // walls because the wall basis vanishes there.
        let stream = |x: [f64; 3]| {
            if periodic {
                psi.periodic(&w, x)
            } else {
                psi.wall(&w, x, ndim, true)
            }
        };
        let h = grid.spacing();
        let u = MacVectorField::from_fn(grid, |a, x| {
            let shifted = |axis: usize, s: f64| {
                let mut y = x;
                y[axis] += s * 0.5 * h[axis];
                y
            };
            match a {
                0 => eps * (stream(shifted(1, 1.0)) - stream(shifted(1, -1.0))) / h[1],
                1 => -eps * (stream(shifted(0, 1.0)) - stream(shifted(0, -1.0))) / h[0],
                _ => 0.0,
            }
        });
        let mut d = DirectorField::from_fn(grid, |x| {
            let mut v = [0.0; 3];
            for (c, s) in dir.iter().enumerate() {
                let f = if periodic { s.periodic(&w, x) } else { s.wall(&w, x, ndim, false) };
                v[c] = eps * f;
            }
            v[2] += 1.0;
            v
        });
        d.renormalize();
        State::new(u, d, ScalarField::zeros(grid), 0.0)
    }
}

pub type PresetFactory = fn() -> Arc<dyn Preset>;

fn zero() -> Arc<dyn Preset> {
    Arc::new(Zero)
}

fn taylor_green() -> Arc<dyn Preset> {
    Arc::new(TaylorGreen)
}

fn twist() -> Arc<dyn Preset> {
    Arc::new(Twist)
}

fn random_smooth() -> Arc<dyn Preset> {
    Arc::new(RandomSmooth)
}

pub fn preset_registry() -> Registry<PresetFactory> {
    Registry::new("initial condition")
        .with("zero", zero as PresetFactory)
        .with("taylor_green", taylor_green)
        .with("twist", twist)
        .with("random_smooth", random_smooth)
}
