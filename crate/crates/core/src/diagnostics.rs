//! Energies, dissipation, constraint drift, data-size proxy and the relative
//! energy between two runs.
//!
//! All integrals are midpoint sums over interior cells with weight `h^dim`.
//! Velocities enter cell quantities through the average of the two faces of
//! each cell; director gradients are centred differences.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{cell_dot, State};
use crate::operators::{grad_tensor, laplacian_director, laplacian_mac, tension};

/// One row of the energy time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyRecord {
    pub t: f64,
    /// `1/2 int(|u|^2 + |grad d|^2)`.
    pub energy: f64,
    /// `int(|grad u|^2 + |lap d + |grad d|^2 d|^2)`.
    pub dissipation: f64,
    /// `|E(t) - E(t - dt) + dt D(t)|`; zero on the first row.
    pub residual: f64,
    /// `max | |d|^2 - 1 |`.
    pub drift: f64,
    pub u0_proxy: f64,
}

/// One row of the relative-energy time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelEnergyRecord {
    pub t: f64,
    pub r: f64,
    pub phi: f64,
    pub envelope: f64,
}

fn cell_velocity_sq(s: &State) -> Vec<f64> {
    let g = s.grid();
    let uc = s.u.cell_centered();
    let mut out = vec![0.0; g.padded_len()];
    for &i in g.interior() {
        out[i] = uc.iter().map(|c| c[i] * c[i]).sum();
    }
    out
}

fn interior_sum(s: &State, f: &[f64]) -> f64 {
    let g = s.grid();
    g.interior().iter().map(|&i| f[i]).sum::<f64>() * g.cell_volume()
}

/// `1/2 int |u|^2 + 1/2 int |grad d|^2`.
pub fn total_energy(s: &State) -> f64 {
    let g = s.grid();
    let kinetic = interior_sum(s, &cell_velocity_sq(s));
    let elastic = grad_tensor(&s.d).norm_l2_sq(g);
    0.5 * (kinetic + elastic)
}

/// `int |grad u|^2` as `-<u, lap u>` on faces, plus
/// `int |lap d + |grad d|^2 d|^2` at cells.
pub fn dissipation(s: &State) -> f64 {
    let g = s.grid();
    let viscous = -s.u.dot(&laplacian_mac(&s.u));
    let mut h = laplacian_director(&s.d);
    h.axpy(1.0, &tension(&s.d));
    let relax: f64 = (0..3).map(|c| cell_dot(g, h.comp(c), h.comp(c))).sum();
    viscous.max(0.0) + relax
}

/// `|E(next) - E(prev) + dt D(next)|`, dissipation at the new state.
pub fn energy_law_residual(prev: &State, next: &State, dt: f64) -> f64 {
    (total_energy(next) - total_energy(prev) + dt * dissipation(next)).abs()
}

/// `max | |d|^2 - 1 |` over interior cells.
pub fn unit_norm_drift(s: &State) -> f64 {
    let g = s.grid();
    g.interior()
        .iter()
        .fold(0.0f64, |m, &i| m.max((s.d.norm_sq_at(i) - 1.0).abs()))
}

/// Data-size proxy
/// `sqrt(|u|^2 + |grad u|^2) + sqrt(|grad d|^2 + |lap d|^2)` (discrete L2
/// norms). It is a seminorm, so scaling the data by `c` scales it by `|c|`.
pub fn data_size(s: &State) -> f64 {
    let g = s.grid();
    let u_sq = s.u.dot(&s.u);
    let grad_u_sq = (-s.u.dot(&laplacian_mac(&s.u))).max(0.0);
    let grad_d_sq = grad_tensor(&s.d).norm_l2_sq(g);
    let lap = laplacian_director(&s.d);
    let lap_sq = lap.dot(&lap);
    (u_sq + grad_u_sq).sqrt() + (grad_d_sq + lap_sq).sqrt()
}

/// `int(|u - v|^2 + |d - e|^2 + |grad d - grad e|^2)` for `a = (u, d)` and
/// `b = (v, e)` on the same grid.
pub fn relative_energy(a: &State, b: &State) -> Result<f64> {
    let g = a.grid();
    b.u.check_grid(g)?;
    let ua = a.u.cell_centered();
    let ub = b.u.cell_centered();
    let mut sum = 0.0;
    for (x, y) in ua.iter().zip(&ub) {
        for &i in g.interior() {
            let d = x[i] - y[i];
            sum += d * d;
        }
    }
    for c in 0..3 {
        let (x, y) = (a.d.comp(c), b.d.comp(c));
        for &i in g.interior() {
            let d = x[i] - y[i];
            sum += d * d;
        }
    }
    let gap = grad_tensor(&a.d).sub(&grad_tensor(&b.d));
    Ok(sum * g.cell_volume() + gap.norm_l2_sq(g))
}

/// Discrete sup norms entering the Gronwall weight.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupNorms {
    pub grad_d: f64,
    pub u: f64,
    pub lap_d: f64,
}

/// Cellwise maxima of `|grad d|`, `|u|` (face average) and `|lap d|`.
pub fn sup_norms(s: &State) -> SupNorms {
    let g = s.grid();
    let grad_d = grad_tensor(&s.d).max_norm(g);
    let u2 = cell_velocity_sq(s);
    let lap = laplacian_director(&s.d);
    let mut u = 0.0f64;
    let mut lap_d = 0.0f64;
    for &i in g.interior() {
        u = u.max(u2[i].sqrt());
        lap_d = lap_d.max(lap.norm_sq_at(i).sqrt());
    }
    SupNorms { grad_d, u, lap_d }
}

/// `1 + |grad d|^4 + |grad d|^2 + |grad e|^2 + |u|^2 + |lap d|` with sup
/// norms, where `s = (u, d)` is the reference and `other = (v, e)`.
pub fn phi_sample(s: &State, other: &State) -> Result<f64> {
    other.u.check_grid(s.grid())?;
    let a = sup_norms(s);
    let b = sup_norms(other);
    Ok(phi_from_norms(&a, &b))
}

pub fn phi_from_norms(s: &SupNorms, other: &SupNorms) -> f64 {
    let g2 = s.grad_d * s.grad_d;
    1.0 + g2 * g2 + g2 + other.grad_d * other.grad_d + s.u * s.u + s.lap_d
}

/// Cumulative trapezoid integral of `y` over `t`, starting at zero.
pub fn cumulative_trapezoid(t: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.len());
    let mut acc = 0.0;
    for i in 0..t.len() {
        if i > 0 {
            acc += 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
        }
        out.push(acc);
    }
    out
}

/// `(R(0) + offset) exp(c_fit int_0^t phi)` at every record time.
///
/// `offset` stands in for `R(0)` when the two runs start from identical data;
/// callers pass the solver tolerance scaled by the energy.
pub fn gronwall_envelope(records: &[RelEnergyRecord], c_fit: f64, offset: f64) -> Vec<f64> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let phi: Vec<f64> = records.iter().map(|r| r.phi).collect();
    let base = first.r + offset;
    cumulative_trapezoid(&t, &phi)
        .into_iter()
        .map(|i| base * (c_fit * i).exp())
        .collect()
}

/// Smallest `c >= 0` with `R(t) <= (R(0) + offset) exp(c int phi)` at every
/// record, then stores the envelope in the records.
pub fn fit_gronwall(records: &mut [RelEnergyRecord], offset: f64) -> f64 {
    let Some(first) = records.first() else {
        return 0.0;
    };
    let base = first.r + offset;
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let phi: Vec<f64> = records.iter().map(|r| r.phi).collect();
    let integral = cumulative_trapezoid(&t, &phi);
    let mut c = 0.0f64;
    if base > 0.0 {
        for (r, &i) in records.iter().zip(&integral).skip(1) {
            if i > 0.0 && r.r > base {
                c = c.max((r.r / base).ln() / i);
            }
        }
    }
    // Guard against the last bit of rounding in exp/ln.
    let c = c * (1.0 + 1e-12);
    for (r, e) in records.iter_mut().zip(gronwall_envelope_from(base, c, &integral)) {
        r.envelope = e;
    }
    c
}

fn gronwall_envelope_from(base: f64, c: f64, integral: &[f64]) -> Vec<f64> {
    integral.iter().map(|&i| base * (c * i).exp()).collect()
}

/// Collects energy records (and the sup norm of `grad d` for the drift
/// bound) from a sequence of states.
#[derive(Clone, Debug, Default)]
pub struct EnergyMonitor {
    pub records: Vec<EnergyRecord>,
    /// `|grad d|_inf^2` at each record.
    pub grad_d_inf_sq: Vec<f64>,
    last_energy: Option<(f64, f64)>,
}

impl EnergyMonitor {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, s: &State) {
        let energy = total_energy(s);
        let dissipation = dissipation(s);
        let residual = match self.last_energy {
            Some((t_prev, e_prev)) => (energy - e_prev + (s.t - t_prev) * dissipation).abs(),
            None => 0.0,
        };
        self.last_energy = Some((s.t, energy));
        let gd = grad_tensor(&s.d).max_norm(s.grid());
        self.grad_d_inf_sq.push(gd * gd);
        self.records.push(EnergyRecord {
            t: s.t,
            energy,
            dissipation,
            residual,
            drift: unit_norm_drift(s),
            u0_proxy: data_size(s),
        });
    }
}

/// Drift bound `(drift(0) + rate t) exp(4 int |grad d|_inf^2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftEnvelope {
    /// Fitted scheme-error rate.
    pub rate: f64,
    pub envelope: Vec<f64>,
}

/// Fits the rate on records `[0, fit_until)` and evaluates the envelope on
/// all records.
pub fn fit_drift_envelope(
    records: &[EnergyRecord],
    grad_d_inf_sq: &[f64],
    fit_until: usize,
) -> DriftEnvelope {
    if records.is_empty() {
        return DriftEnvelope {
            rate: 0.0,
            envelope: Vec::new(),
        };
    }
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let growth: Vec<f64> = cumulative_trapezoid(&t, grad_d_inf_sq)
        .into_iter()
        .map(|i| (4.0 * i).exp())
        .collect();
    let d0 = records[0].drift;
    let t0 = t[0];
    let mut rate = 0.0f64;
    for i in 1..fit_until.min(records.len()) {
        let elapsed = t[i] - t0;
        if elapsed > 0.0 {
            rate = rate.max((records[i].drift / growth[i] - d0) / elapsed);
        }
    }
    let envelope = (0..records.len())
        .map(|i| (d0 + rate * (t[i] - t0)) * growth[i])
        .collect();
    DriftEnvelope { rate, envelope }
}
