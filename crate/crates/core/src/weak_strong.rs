//! Fine-versus-coarse comparison: a fine run stands in for the strong
//! solution and coarser runs from restricted data stand in for weak ones.
//! At common sample times the fine state is restricted to each coarse grid
//! and compared through the relative energy, with the Gronwall weight built
//! from sup norms of both runs.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    fit_gronwall, phi_from_norms, relative_energy, sup_norms, total_energy, RelEnergyRecord,
    SupNorms,
};
use crate::error::{Error, Result};
use crate::grid::{
    apply_director_bc, apply_scalar_bc, apply_velocity_bc, make_grid, BcMode, DirectorField, Grid,
    GridSpec, MacVectorField, ScalarField, State,
};
use crate::picard::{SlabConfig, Stepper};
use crate::presets::InitialCondition;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    pub fine: Vec<usize>,
    /// Coarse levels, coarsest first; each must divide `fine` axis by axis.
    pub coarse: Vec<Vec<usize>>,
    pub lengths: Vec<f64>,
    pub bc: BcMode,
    pub t_end: f64,
    /// Sample every `sample_every` steps of size `slab.dt`.
    #[serde(default = "one")]
    pub sample_every: usize,
    /// Stand-in for `R(0)` in the envelope, relative to the initial energy.
    #[serde(default = "default_offset")]
    pub offset_rel: f64,
}

fn one() -> usize {
    1
}

fn default_offset() -> f64 {
    1e-10
}

impl ComparisonConfig {
    pub fn validate(&self) -> Result<()> {
        let fine = make_grid(&self.fine, &self.lengths, self.bc)?;
        if self.coarse.is_empty() {
            return Err(Error::InvalidArgument("no coarse levels given".into()));
        }
        for c in &self.coarse {
            let cg = make_grid(c, &self.lengths, self.bc)?;
            ratios(&fine, &cg)?;
        }
        if !(self.t_end >= 0.0) || self.sample_every == 0 || !(self.offset_rel >= 0.0) {
            return Err(Error::InvalidArgument(
                "t_end, sample_every and offset_rel must be non-negative (sample_every positive)"
                    .into(),
            ));
        }
        Ok(())
    }
}

/// Refinement ratio per axis of `fine` over `coarse`.
fn ratios(fine: &GridSpec, coarse: &GridSpec) -> Result<[usize; 3]> {
    let mismatch = || {
        Error::GridMismatch(format!(
            "{:?} does not refine {:?} on the same box",
            fine.dims(),
            coarse.dims()
        ))
    };
    if fine.ndim() != coarse.ndim() || fine.bc() != coarse.bc() {
        return Err(mismatch());
    }
    let mut r = [1; 3];
    for a in 0..fine.ndim() {
        let (nf, nc) = (fine.dims()[a], coarse.dims()[a]);
        if nf % nc != 0 || (fine.lengths()[a] - coarse.lengths()[a]).abs() > 1e-12 * fine.lengths()[a]
        {
            return Err(mismatch());
        }
        r[a] = nf / nc;
    }
    Ok(r)
}

/// Fine padded indices of the cells inside coarse cell `m` (padded slots).
fn block(fine: &GridSpec, r: &[usize; 3], m: &[usize; 3], ndim: usize, skip_axis: Option<usize>) -> Vec<usize> {
    let mut out = Vec::new();
    let span = |a: usize| if Some(a) == skip_axis { 1 } else { r[a] };
    for o0 in 0..span(0) {
        for o1 in 0..span(1) {
            for o2 in 0..if ndim == 3 { span(2) } else { 1 } {
                let o = [o0, o1, o2];
                let mut f = [0usize; 3];
                for a in 0..ndim {
                    f[a] = r[a] * (m[a] - 1) + 1 + o[a];
                }
                out.push(fine.flatten(&f[..ndim]));
            }
        }
    }
    out
}

fn restrict_cells(fine: &GridSpec, coarse: &GridSpec, r: &[usize; 3], src: &[f64], skip: Option<usize>) -> Vec<f64> {
    let mut out = vec![0.0; coarse.padded_len()];
    for &i in coarse.interior() {
        let m = coarse.unflatten(i);
        let b = block(fine, r, &m, coarse.ndim(), skip);
        out[i] = b.iter().map(|&j| src[j]).sum::<f64>() / b.len() as f64;
    }
    out
}

/// Block averages for cells; for a face component the average runs over
/// the fine faces lying on the coarse face, which keeps the flux through
/// every coarse cell and so keeps divergence-free fields divergence-free.
/// The averaged director is rescaled to the mean length of the fine
/// vectors in its block, which is unit length for a unit field.
pub fn restrict(fine: &State, coarse: &Grid) -> Result<State> {
    let fg = fine.grid();
    let r = ratios(fg, coarse)?;
    let mut u = MacVectorField::from_comps(
        coarse,
        (0..coarse.ndim())
            .map(|a| restrict_cells(fg, coarse, &r, fine.u.comp(a), Some(a)))
            .collect(),
    );
    apply_velocity_bc(&mut u);
    let mut comps = [0, 1, 2].map(|c| restrict_cells(fg, coarse, &r, fine.d.comp(c), None));
    let mut len = vec![0.0; fg.padded_len()];
    for &i in fg.interior() {
        len[i] = fine.d.norm_sq_at(i).sqrt();
    }
    let target = restrict_cells(fg, coarse, &r, &len, None);
    for &i in coarse.interior() {
        let n = comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt();
        if n > 0.0 {
            comps.iter_mut().for_each(|c| c[i] *= target[i] / n);
        }
    }
    let mut d = DirectorField::from_comps(coarse, comps);
    apply_director_bc(&mut d);
    let mut p = ScalarField::from_data(coarse, restrict_cells(fg, coarse, &r, fine.p.data(), None));
    apply_scalar_bc(&mut p);
    State::new(u, d, p, fine.t)
}

/// Piecewise-constant prolongation for cells; faces are interpolated
/// linearly along their normal and held constant across it.
pub fn prolong(coarse: &State, fine: &Grid) -> Result<State> {
    let cg = coarse.grid();
    let r = ratios(fine, cg)?;
    let ndim = fine.ndim();
    let parent = |i: usize| {
        let m = fine.unflatten(i);
        let mut c = [0usize; 3];
        for a in 0..ndim {
            c[a] = (m[a] - 1) / r[a] + 1;
        }
        (m, c)
    };
    let cell = |src: &[f64]| {
        let mut out = vec![0.0; fine.padded_len()];
        for &i in fine.interior() {
            let (_, c) = parent(i);
            out[i] = src[cg.flatten(&c[..ndim])];
        }
        out
    };
    let mut comps = Vec::with_capacity(ndim);
    for a in 0..ndim {
        let src = coarse.u.comp(a);
        let mut out = vec![0.0; fine.padded_len()];
        for &i in fine.interior() {
            let (m, c) = parent(i);
            let lo = cg.flatten(&c[..ndim]);
            let w = ((m[a] - 1) % r[a]) as f64 / r[a] as f64;
            out[i] = (1.0 - w) * src[lo] + w * src[lo + cg.stride(a)];
        }
        comps.push(out);
    }
    let mut u = MacVectorField::from_comps(fine, comps);
    apply_velocity_bc(&mut u);
    let mut d = DirectorField::from_comps(fine, [0, 1, 2].map(|c| cell(coarse.d.comp(c))));
    apply_director_bc(&mut d);
    let mut p = ScalarField::from_data(fine, cell(coarse.p.data()));
    apply_scalar_bc(&mut p);
    State::new(u, d, p, coarse.t)
}

/// Comparison of one coarse level against the fine run.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelComparison {
    pub dims: Vec<usize>,
    pub records: Vec<RelEnergyRecord>,
    pub c_fit: f64,
    pub max_r: f64,
    pub offset: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonSummary {
    pub levels: Vec<LevelComparison>,
    /// `max_t R` of each level over that of the next finer level.
    pub convergence_factors: Vec<f64>,
    pub initial_energy: f64,
}

struct Sample {
    t: f64,
    /// Restricted fine state per coarse level.
    restricted: Vec<State>,
    norms: SupNorms,
}

fn is_sample_time(t: f64, interval: f64) -> bool {
    let k = (t / interval).round();
    (t - k * interval).abs() <= 1e-9 * interval
}

/// Runs fine and coarse simulations and evaluates the relative energy at
/// the sample times. Coarse levels run concurrently.
pub fn compare_runs(
    cfg: &ComparisonConfig,
    ic: &InitialCondition,
    seed: u64,
    stepper: &Stepper,
    slab: &SlabConfig,
) -> Result<ComparisonSummary> {
    cfg.validate()?;
    let fine_grid = make_grid(&cfg.fine, &cfg.lengths, cfg.bc)?;
    let coarse_grids = cfg
        .coarse
        .iter()
        .map(|c| make_grid(c, &cfg.lengths, cfg.bc))
        .collect::<Result<Vec<_>>>()?;
    let s0 = ic.build(&fine_grid, seed)?;
    let e0 = total_energy(&s0);
    let interval = slab.dt * cfg.sample_every as f64;

    let take = |s: &State| -> Result<Sample> {
        Ok(Sample {
            t: s.t,
            restricted: coarse_grids
                .iter()
                .map(|g| restrict(s, g))
                .collect::<Result<_>>()?,
            norms: sup_norms(s),
        })
    };
    let mut samples = vec![take(&s0)?];
    let mut failure = None;
    stepper.advance_to(&s0, cfg.t_end, slab, &mut |s| {
        if failure.is_none() && is_sample_time(s.t, interval) {
            match take(s) {
                Ok(x) => samples.push(x),
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e);
    }

    let offset = cfg.offset_rel * e0;
    let levels = coarse_grids
        .par_iter()
        .enumerate()
        .map(|(level, g)| -> Result<LevelComparison> {
            let c0 = samples[0].restricted[level].clone();
            let mut records = Vec::with_capacity(samples.len());
            let mut next = 0usize;
            let mut err = None;
            let record = |s: &State, records: &mut Vec<RelEnergyRecord>, next: &mut usize| {
                while *next < samples.len() && samples[*next].t < s.t - 1e-9 * interval {
                    *next += 1;
                }
                if *next < samples.len() && (samples[*next].t - s.t).abs() <= 1e-9 * interval {
                    let f = &samples[*next];
                    let r = relative_energy(&f.restricted[level], s)?;
                    let phi = phi_from_norms(&f.norms, &sup_norms(s));
                    records.push(RelEnergyRecord {
                        t: s.t,
                        r,
                        phi,
                        envelope: 0.0,
                    });
                    *next += 1;
                }
                Ok::<(), Error>(())
            };
            record(&c0, &mut records, &mut next)?;
            stepper.advance_to(&c0, cfg.t_end, slab, &mut |s| {
                if err.is_none() {
                    if let Err(e) = record(s, &mut records, &mut next) {
                        err = Some(e);
                    }
                }
            })?;
            if let Some(e) = err {
                return Err(e);
            }
            let c_fit = fit_gronwall(&mut records, offset);
            let max_r = records.iter().map(|r| r.r).fold(0.0, f64::max);
            Ok(LevelComparison {
                dims: g.dims().to_vec(),
                records,
                c_fit,
                max_r,
                offset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let convergence_factors = levels
        .windows(2)
        .map(|w| w[0].max_r / w[1].max_r)
        .collect();
    Ok(ComparisonSummary {
        levels,
        convergence_factors,
        initial_energy: e0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::divergence;
    use std::f64::consts::PI;

    fn grids() -> (Grid, Grid) {
        (
            make_grid(&[8, 8], &[1.0, 1.0], BcMode::Wall).unwrap(),
            make_grid(&[4, 4], &[1.0, 1.0], BcMode::Wall).unwrap(),
        )
    }

    #[test]
    fn constants_survive_restriction_and_prolongation() {
        let (f, c) = grids();
        let u = MacVectorField::from_fn(&f, |a, _| if a == 0 { 0.0 } else { 0.0 });
        let d = DirectorField::from_fn(&f, |_| [0.6, 0.0, 0.8]);
        let p = ScalarField::from_fn(&f, |_| 2.5);
        let s = State::new(u, d, p, 0.0).unwrap();
        let rs = restrict(&s, &c).unwrap();
        for &i in c.interior() {
            assert!((rs.d.comp(0)[i] - 0.6).abs() < 1e-15);
            assert!((rs.p.data()[i] - 2.5).abs() < 1e-15);
        }
        let back = restrict(&prolong(&rs, &f).unwrap(), &c).unwrap();
        for &i in c.interior() {
            assert!((back.d.comp(2)[i] - 0.8).abs() < 1e-15);
            assert!((back.p.data()[i] - 2.5).abs() < 1e-15);
        }
    }

    #[test]
    fn linear_field_restricts_to_midpoints() {
        let (f, c) = grids();
        let p = ScalarField::from_fn(&f, |x| 3.0 * x[0] - x[1]);
        let s = State::new(MacVectorField::zeros(&f), State::rest(&f).d, p, 0.0).unwrap();
        let rs = restrict(&s, &c).unwrap();
        // Coarse cell (1,1) covers fine centres 1/16 and 3/16 per axis.
        let i = c.flatten(&[1, 1]);
        assert!((rs.p.data()[i] - (3.0 * 0.125 - 0.125)).abs() < 1e-15);
        for &i in c.interior() {
            let x = c.cell_center(i);
            assert!((rs.p.data()[i] - (3.0 * x[0] - x[1])).abs() < 1e-14);
        }
    }

    #[test]
    fn restriction_keeps_divergence_free() {
        for bc in [BcMode::Periodic, BcMode::Wall] {
            let f = make_grid(&[16, 16], &[2.0 * PI, 2.0 * PI], bc).unwrap();
            let c = make_grid(&[4, 8], &[2.0 * PI, 2.0 * PI], bc).unwrap();
            let s = InitialCondition::random_smooth(0.5).build(&f, 11).unwrap();
            let rs = restrict(&s, &c).unwrap();
            assert!(divergence(&s.u).max_abs() < 1e-12);
            assert!(divergence(&rs.u).max_abs() < 1e-12, "{bc}");
            for &i in c.interior() {
                assert!((rs.d.norm_sq_at(i) - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn non_dividing_levels_rejected() {
        let f = make_grid(&[12, 12], &[1.0, 1.0], BcMode::Wall).unwrap();
        let c = make_grid(&[8, 8], &[1.0, 1.0], BcMode::Wall).unwrap();
        assert!(matches!(
            restrict(&State::rest(&f), &c),
            Err(Error::GridMismatch(_))
        ));
    }

    fn small_cfg(coarse: Vec<Vec<usize>>) -> ComparisonConfig {
        ComparisonConfig {
            fine: vec![16, 16],
            coarse,
            lengths: vec![2.0 * PI, 2.0 * PI],
            bc: BcMode::Periodic,
            t_end: 0.02,
            sample_every: 2,
            offset_rel: 1e-10,
        }
    }

    fn slab() -> SlabConfig {
        SlabConfig {
            dt: 0.005,
            slab_t: 0.01,
            ..Default::default()
        }
    }

    #[test]
    fn identical_levels_give_zero() {
        let ic = InitialCondition::random_smooth(0.3);
        let sum = compare_runs(&small_cfg(vec![vec![16, 16]]), &ic, 5, &Stepper::default(), &slab())
            .unwrap();
        let lvl = &sum.levels[0];
        assert_eq!(lvl.records.len(), 3);
        assert!(lvl.max_r <= 1e-12 * sum.initial_energy, "{}", lvl.max_r);
    }

    #[test]
    fn zero_data_gives_zero() {
        let ic = InitialCondition::named("zero");
        let sum = compare_runs(&small_cfg(vec![vec![4, 4], vec![8, 8]]), &ic, 0, &Stepper::default(), &slab())
            .unwrap();
        for l in &sum.levels {
            assert!(l.records.iter().all(|r| r.r == 0.0));
            assert_eq!(l.c_fit, 0.0);
        }
    }
}
