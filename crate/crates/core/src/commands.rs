//! The driver commands behind the command-line tool. Each writes its
//! artifacts and a manifest into an output directory and returns the
//! computed data for programmatic use.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{config_hash, RunConfig};
use crate::diagnostics::{data_size, fit_drift_envelope, EnergyMonitor, EnergyRecord};
use crate::error::{Error, Result};
use crate::grid::State;
use crate::io::{
    csv_writer, write_convergence_csv, write_energy_csv, write_picard_csv, write_rel_energy_csv,
    write_snapshot, write_vtk, ErrorBlock, Manifest, STUDY_HEADER,
};
use crate::mms::{run_mms, ConvergenceTable};
use crate::picard::PicardReport;
use crate::weak_strong::{compare_runs, ComparisonSummary};

/// Where and how a command runs.
#[derive(Clone, Debug)]
pub struct CommandContext {
    pub out_dir: PathBuf,
    /// Worker threads, recorded in the manifest.
    pub threads: usize,
}

impl CommandContext {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        CommandContext {
            out_dir: out_dir.into(),
            threads: 1,
        }
    }
}

/// The five driver commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Mms,
    WeakStrong,
    PicardStudy,
    EnergyReport,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Mms => "mms",
            Command::WeakStrong => "weak-strong",
            Command::PicardStudy => "picard-study",
            Command::EnergyReport => "energy-report",
        }
    }
}

/// Runs `cmd`; on failure writes `error.toml` into the output directory
/// (when it exists) before returning the error.
pub fn run(cmd: Command, cfg: &RunConfig, ctx: &CommandContext) -> Result<Vec<PathBuf>> {
    let result = match cmd {
        Command::Simulate => cmd_simulate(cfg, ctx).map(|o| o.artifacts),
        Command::Mms => cmd_mms(cfg, ctx).map(|o| o.1),
        Command::WeakStrong => cmd_weak_strong(cfg, ctx).map(|o| o.1),
        Command::PicardStudy => cmd_picard_study(cfg, ctx).map(|o| o.1),
        Command::EnergyReport => cmd_energy_report(cfg, ctx).map(|o| o.1),
    };
    if let Err(e) = &result {
        if ctx.out_dir.is_dir() {
            // Best effort: the original error matters more than this write.
            let _ = fs::write(ctx.out_dir.join("error.toml"), ErrorBlock::from_error(e).to_toml());
        }
    }
    result
}

fn prepare(ctx: &CommandContext) -> Result<()> {
    fs::create_dir_all(&ctx.out_dir)?;
    Ok(())
}

fn finish(
    cmd: Command,
    cfg: &RunConfig,
    ctx: &CommandContext,
    start: Instant,
    mut artifacts: Vec<PathBuf>,
) -> Result<Vec<PathBuf>> {
    let mut m = Manifest::new(cmd.name(), &config_hash(cfg), cfg.seed, ctx.threads);
    m.wall_time_s = start.elapsed().as_secs_f64();
    m.artifacts = artifacts
        .iter()
        .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
        .collect();
    artifacts.push(m.write(&ctx.out_dir)?);
    Ok(artifacts)
}

/// A complete run with energy monitoring.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub final_state: State,
    pub monitor: EnergyMonitor,
    pub reports: Vec<PicardReport>,
}

/// Builds the initial state from the configuration and advances to `t_end`,
/// recording an energy row for the initial state and every step.
pub fn simulate(cfg: &RunConfig) -> Result<Simulation> {
    let grid = cfg.make_grid()?;
    let s0 = cfg.initial.build(&grid, cfg.seed)?;
    let stepper = cfg.stepper()?;
    let mut monitor = EnergyMonitor::new();
    monitor.observe(&s0);
    let (final_state, reports) =
        stepper.advance_to(&s0, cfg.t_end, &cfg.stepper, &mut |s| monitor.observe(s))?;
    Ok(Simulation {
        final_state,
        monitor,
        reports,
    })
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub simulation: Simulation,
    pub artifacts: Vec<PathBuf>,
}

/// Writes `energy.csv`, `picard.csv`, the final-state snapshot (and VTK
/// when enabled) and `manifest.toml`.
pub fn cmd_simulate(cfg: &RunConfig, ctx: &CommandContext) -> Result<SimulateOutcome> {
    let start = Instant::now();
    prepare(ctx)?;
    let hash = config_hash(cfg);
    let sim = simulate(cfg)?;
    let dir = &ctx.out_dir;
    let mut artifacts = vec![dir.join("energy.csv"), dir.join("picard.csv")];
    write_energy_csv(&artifacts[0], &hash, &sim.monitor.records)?;
    write_picard_csv(&artifacts[1], &hash, &sim.reports)?;
    if cfg.output.snapshot {
        artifacts.extend(write_snapshot(dir, "final_state", &sim.final_state, &hash)?);
    }
    if cfg.output.vtk {
        let p = dir.join("final_state.vtk");
        write_vtk(&p, &sim.final_state)?;
        artifacts.push(p);
    }
    let artifacts = finish(Command::Simulate, cfg, ctx, start, artifacts)?;
    Ok(SimulateOutcome {
        simulation: sim,
        artifacts,
    })
}

/// Refinement study; writes `convergence.csv`.
pub fn cmd_mms(cfg: &RunConfig, ctx: &CommandContext) -> Result<(ConvergenceTable, Vec<PathBuf>)> {
    let start = Instant::now();
    prepare(ctx)?;
    let table = run_mms(&cfg.mms, &cfg.stepper()?, &cfg.stepper)?;
    let path = ctx.out_dir.join("convergence.csv");
    write_convergence_csv(&path, &config_hash(cfg), &table)?;
    let artifacts = finish(Command::Mms, cfg, ctx, start, vec![path])?;
    Ok((table, artifacts))
}

/// Fine/coarse comparison; writes `rel_energy_<dims>.csv` per coarse level
/// and `weak_strong_summary.txt`.
pub fn cmd_weak_strong(
    cfg: &RunConfig,
    ctx: &CommandContext,
) -> Result<(ComparisonSummary, Vec<PathBuf>)> {
    let start = Instant::now();
    prepare(ctx)?;
    let hash = config_hash(cfg);
    let summary = compare_runs(&cfg.comparison(), &cfg.initial, cfg.seed, &cfg.stepper()?, &cfg.stepper)?;
    let mut artifacts = Vec::new();
    let mut text = String::new();
    let _ = writeln!(text, "config_hash = {hash}");
    let _ = writeln!(text, "fine = {:?}", cfg.weak_strong.fine);
    let _ = writeln!(text, "initial_energy = {}", summary.initial_energy);
    for l in &summary.levels {
        let tag = l.dims.iter().map(|n| n.to_string()).collect::<Vec<_>>().join("x");
        let path = ctx.out_dir.join(format!("rel_energy_{tag}.csv"));
        write_rel_energy_csv(&path, &hash, &l.records)?;
        artifacts.push(path);
        let _ = writeln!(
            text,
            "level {tag}: max_R = {}, C_fit = {}, offset = {}",
            l.max_r, l.c_fit, l.offset
        );
    }
    for (i, f) in summary.convergence_factors.iter().enumerate() {
        let _ = writeln!(text, "max_R ratio level {i} / level {} = {f}", i + 1);
    }
    let path = ctx.out_dir.join("weak_strong_summary.txt");
    fs::write(&path, text)?;
    artifacts.push(path);
    let artifacts = finish(Command::WeakStrong, cfg, ctx, start, artifacts)?;
    Ok((summary, artifacts))
}

/// Contraction measured on the first slab for one `(slab_T, epsilon)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub slab_t: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Last ratio above the noise floor; `None` when the first iterate
    /// already converged.
    pub terminal_ratio: Option<f64>,
    pub max_ratio: Option<f64>,
    pub u0_proxy: f64,
}

/// Picard sweeps on one slab from the configured preset with its
/// amplitude replaced by each `epsilon`, without halving. Rows come out
/// slab-major in configuration order.
pub fn picard_study(cfg: &RunConfig) -> Result<Vec<StudyRow>> {
    let grid = cfg.make_grid()?;
    let stepper = cfg.stepper()?;
    let ps = &cfg.picard_study;
    let slab = crate::picard::SlabConfig {
        picard_tol: ps.picard_tol,
        ..cfg.stepper
    };
    let cases: Vec<(f64, f64)> = ps
        .slab_ts
        .iter()
        .flat_map(|&t| ps.epsilons.iter().map(move |&e| (t, e)))
        .collect();
    cases
        .par_iter()
        .map(|&(slab_t, epsilon)| {
            let ic = crate::presets::InitialCondition {
                epsilon,
                ..cfg.initial.clone()
            };
            let s0 = ic.build(&grid, cfg.seed)?;
            let n = ((slab_t / slab.dt).round() as usize).max(1);
            let dt = slab_t / n as f64;
            let a = stepper.picard_iterate(&s0, n, dt, &slab)?;
            let resolved: Vec<f64> = a
                .iterates
                .windows(2)
                .filter(|w| w[0] > ps.noise_floor && w[1] > ps.noise_floor)
                .map(|w| w[1] / w[0])
                .collect();
            Ok(StudyRow {
                slab_t,
                epsilon,
                dt,
                iterations: a.iterates.len(),
                converged: a.converged,
                terminal_ratio: resolved.last().copied(),
                max_ratio: resolved.iter().copied().reduce(f64::max),
                u0_proxy: data_size(&s0),
            })
        })
        .collect()
}

/// Writes `picard_study.csv`; rows without a resolved ratio carry
/// `converged-at-once` in the ratio columns.
pub fn cmd_picard_study(cfg: &RunConfig, ctx: &CommandContext) -> Result<(Vec<StudyRow>, Vec<PathBuf>)> {
    let start = Instant::now();
    prepare(ctx)?;
    let rows = picard_study(cfg)?;
    let path = ctx.out_dir.join("picard_study.csv");
    let mut w = csv_writer(&path, &config_hash(cfg))?;
    w.write_record(STUDY_HEADER)?;
    let ratio = |r: &StudyRow, v: Option<f64>| match v {
        Some(x) => format!("{x}"),
        None if r.converged && r.iterations == 1 => "converged-at-once".into(),
        None => String::new(),
    };
    for r in &rows {
        w.write_record([
            format!("{}", r.slab_t),
            format!("{}", r.epsilon),
            format!("{}", r.dt),
            r.iterations.to_string(),
            r.converged.to_string(),
            ratio(r, r.terminal_ratio),
            ratio(r, r.max_ratio),
            format!("{}", r.u0_proxy),
        ])?;
    }
    w.flush()?;
    let artifacts = finish(Command::PicardStudy, cfg, ctx, start, vec![path])?;
    Ok((rows, artifacts))
}

/// Energy-law and constraint summary of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergySummary {
    pub e0: f64,
    pub e_end: f64,
    /// `max residual / E0`.
    pub max_residual_rel: f64,
    /// Largest step-to-step increase of `E`, zero if none.
    pub max_increase: f64,
    pub final_drift: f64,
    /// Scheme-error rate of the drift envelope fitted on the first quarter.
    pub drift_rate: f64,
    /// Records whose drift exceeds the fitted envelope.
    pub drift_envelope_violations: usize,
    pub slabs: usize,
    pub halvings: usize,
}

pub fn energy_summary(records: &[EnergyRecord], grad_d_inf_sq: &[f64], reports: &[PicardReport]) -> EnergySummary {
    let e0 = records.first().map_or(0.0, |r| r.energy);
    let e_end = records.last().map_or(0.0, |r| r.energy);
    let max_res = records.iter().map(|r| r.residual).fold(0.0, f64::max);
    let max_increase = records
        .windows(2)
        .map(|w| w[1].energy - w[0].energy)
        .fold(0.0, f64::max);
    let env = fit_drift_envelope(records, grad_d_inf_sq, records.len().div_ceil(4).max(2));
    let violations = records
        .iter()
        .zip(&env.envelope)
        .filter(|(r, e)| r.drift > **e * (1.0 + 1e-12))
        .count();
    EnergySummary {
        e0,
        e_end,
        max_residual_rel: if e0 > 0.0 { max_res / e0 } else { max_res },
        max_increase,
        final_drift: records.last().map_or(0.0, |r| r.drift),
        drift_rate: env.rate,
        drift_envelope_violations: violations,
        slabs: reports.len(),
        halvings: reports.iter().map(|r| r.halvings).sum(),
    }
}

/// Runs the configured simulation and writes `energy.csv` plus
/// `energy_report.toml`.
pub fn cmd_energy_report(cfg: &RunConfig, ctx: &CommandContext) -> Result<(EnergySummary, Vec<PathBuf>)> {
    let start = Instant::now();
    prepare(ctx)?;
    let hash = config_hash(cfg);
    let sim = simulate(cfg)?;
    let summary = energy_summary(&sim.monitor.records, &sim.monitor.grad_d_inf_sq, &sim.reports);
    let csv = ctx.out_dir.join("energy.csv");
    write_energy_csv(&csv, &hash, &sim.monitor.records)?;
    let report = ctx.out_dir.join("energy_report.toml");
    let body = toml::to_string(&summary)
        .map_err(|e| Error::InvalidArgument(format!("cannot serialise report: {e}")))?;
    fs::write(&report, format!("config_hash = \"{hash}\"\n{body}"))?;
    let artifacts = finish(Command::EnergyReport, cfg, ctx, start, vec![csv, report])?;
    Ok((summary, artifacts))
}

/// Reads the configuration file at `path`.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    Ok(crate::config::parse_config(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn zero_preset_gives_zero_energy() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("t_end = 1.0\n[grid]\ndims = [8, 8]\n[stepper]\ndt = 0.05\nslab_t = 0.25\n").unwrap();
        let out = cmd_simulate(&cfg, &CommandContext::new(dir.path())).unwrap();
        let recs = &out.simulation.monitor.records;
        assert_eq!(recs.len(), 21);
        assert!(recs.iter().all(|r| r.energy == 0.0 && r.dissipation == 0.0));
        for name in ["energy.csv", "picard.csv", "final_state.bin", "final_state.toml", "manifest.toml"] {
            assert!(dir.path().join(name).is_file(), "{name}");
        }
        let manifest = fs::read_to_string(dir.path().join("manifest.toml")).unwrap();
        assert!(manifest.contains(&config_hash(&cfg)));
    }

    #[test]
    fn failure_writes_error_block() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "t_end = 4.0\n[grid]\ndims = [16, 16]\n[initial]\npreset = \"random_smooth\"\nepsilon = 3.0\n[stepper]\ndt = 0.4\nslab_t = 4.0\nmax_halvings = 0\n",
        )
        .unwrap();
        let err = run(Command::Simulate, &cfg, &CommandContext::new(dir.path())).unwrap_err();
        assert_eq!(err.exit_code(), 3);
        let block = fs::read_to_string(dir.path().join("error.toml")).unwrap();
        assert!(block.contains("MaxHalvingsExceeded"), "{block}");
    }

    #[test]
    fn picard_study_zero_amplitude_converges_at_once() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "[grid]\ndims = [8, 8]\n[initial]\npreset = \"random_smooth\"\nepsilon = 0.1\n[stepper]\ndt = 0.01\n[picard_study]\nslab_ts = [0.04, 0.02]\nepsilons = [0.0, 0.1]\n",
        )
        .unwrap();
        let (rows, _) = cmd_picard_study(&cfg, &CommandContext::new(dir.path())).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[0].iterations, 1);
        assert_eq!(rows[0].terminal_ratio, None);
        assert!(rows[1].terminal_ratio.unwrap() < 0.5);
        let text = fs::read_to_string(dir.path().join("picard_study.csv")).unwrap();
        assert!(text.contains("converged-at-once"));
    }
}
