//! Run configuration in TOML.
//!
//! Every section is optional and falls back to its defaults, so an empty
//! document is a valid configuration. Unknown keys are rejected. Errors name
//! the offending field by its dotted path.
//!
//! ```toml
//! seed = 0
//! output_dir = "out"
//! t_end = 1.0
//!
//! [grid]
//! dims = [64, 64]
//! lengths = [6.283185307179586, 6.283185307179586]
//! bc = "periodic"            # or "wall"
//!
//! [physics]                  # mu, lambda, gamma
//! [initial]                  # preset, epsilon, k, director_perturbation
//! [stepper]                  # dt, slab_t, contraction_target, picard_tol, max_picard, max_halvings
//! [scheme]                   # elastic, linear_solver, [scheme.solver] tol, max_iter
//! [toggles]                  # renormalize, skew_advection
//! [output]                   # snapshot, vtk
//! [mms]                      # case, resolutions, t_end, base_steps, steps_per_slab
//! [weak_strong]              # fine, coarse, t_end, sample_every, offset_rel
//! [picard_study]             # slab_ts, epsilons, picard_tol, noise_floor
//! ```

use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::grid::{make_grid, BcMode, Grid};
use crate::mms::{case_registry, MmsConfig};
use crate::operators::elastic_registry;
use crate::picard::{Physics, SlabConfig, Stepper};
use crate::presets::{preset_registry, InitialCondition};
use crate::solver::{backend_registry, LinearSolver, PoissonSolveConfig};
use crate::weak_strong::ComparisonConfig;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("unknown key `{field}`")]
    UnknownKey { field: String },
    #[error("wrong type for `{field}`: {message}")]
    TypeError { field: String, message: String },
    #[error("value out of range for `{field}`: {message}")]
    RangeError { field: String, message: String },
}

impl ConfigError {
    /// Dotted path of the offending field, if the error concerns one.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Syntax { .. } => None,
            ConfigError::UnknownKey { field }
            | ConfigError::TypeError { field, .. }
            | ConfigError::RangeError { field, .. } => Some(field),
        }
    }

    fn range(field: &str, message: impl Into<String>) -> Self {
        ConfigError::RangeError {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub dims: Vec<usize>,
    pub lengths: Vec<f64>,
    pub bc: BcMode,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dims: vec![32, 32],
            lengths: vec![2.0 * PI, 2.0 * PI],
            bc: BcMode::Periodic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SchemeConfig {
    /// Elastic stress form: `identity` or `direct`.
    pub elastic: String,
    /// Linear solver backend: `auto`, `cg` or `fft`.
    pub linear_solver: String,
    pub solver: PoissonSolveConfig,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            elastic: "identity".into(),
            linear_solver: "auto".into(),
            solver: PoissonSolveConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Toggles {
    /// Rescale `d` to unit length after every slab.
    pub renormalize: bool,
    /// Skew-symmetric momentum transport (otherwise convective form).
    pub skew_advection: bool,
}

impl Default for Toggles {
    fn default() -> Self {
        Toggles {
            renormalize: false,
            skew_advection: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Binary snapshot of the final state.
    pub snapshot: bool,
    /// Legacy VTK file of the final state.
    pub vtk: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            snapshot: true,
            vtk: false,
        }
    }
}

/// Fine/coarse ladder for the comparison command; box and boundary come
/// from `[grid]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakStrongSection {
    pub fine: Vec<usize>,
    pub coarse: Vec<Vec<usize>>,
    pub t_end: f64,
    pub sample_every: usize,
    pub offset_rel: f64,
}

impl Default for WeakStrongSection {
    fn default() -> Self {
        WeakStrongSection {
            fine: vec![128, 128],
            coarse: vec![vec![32, 32], vec![64, 64]],
            t_end: 0.1,
            sample_every: 5,
            offset_rel: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardStudyConfig {
    pub slab_ts: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Stopping threshold on `Ubar` for the study sweeps.
    pub picard_tol: f64,
    /// Ratios whose numerator falls below this are rounding noise and are
    /// not reported.
    pub noise_floor: f64,
}

impl Default for PicardStudyConfig {
    fn default() -> Self {
        PicardStudyConfig {
            slab_ts: vec![0.1, 0.05, 0.025],
            epsilons: vec![0.0, 0.01, 0.1],
            picard_tol: 1e-10,
            noise_floor: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub t_end: f64,
    pub grid: GridConfig,
    pub physics: Physics,
    pub initial: InitialCondition,
    pub stepper: SlabConfig,
    pub scheme: SchemeConfig,
    pub toggles: Toggles,
    pub output: OutputConfig,
    pub mms: MmsConfig,
    pub weak_strong: WeakStrongSection,
    pub picard_study: PicardStudyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            output_dir: PathBuf::from("out"),
            t_end: 1.0,
            grid: GridConfig::default(),
            physics: Physics::default(),
            initial: InitialCondition::default(),
            stepper: SlabConfig::default(),
            scheme: SchemeConfig::default(),
            toggles: Toggles::default(),
            output: OutputConfig::default(),
            mms: MmsConfig::default(),
            weak_strong: WeakStrongSection::default(),
            picard_study: PicardStudyConfig::default(),
        }
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::Syntax {
        line: e.span().map(|s| line_of(text, s.start)).unwrap_or(0),
        message: e.message().to_string(),
    })?;
    let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let message = inner.message().to_string();
        if let Some(rest) = message.strip_prefix("unknown field `") {
            let key = rest.split('`').next().unwrap_or_default();
            let field = if path.is_empty() || path == "." {
                key.to_string()
            } else if path.ends_with(key) {
                path
            } else {
                format!("{path}.{key}")
            };
            ConfigError::UnknownKey { field }
        } else {
            ConfigError::TypeError {
                field: path,
                message,
            }
        }
    })?;
    cfg.validate()?;
    Ok(cfg)
}

/// Canonical TOML form of a configuration.
pub fn serialize_config(cfg: &RunConfig) -> String {
    toml::to_string(cfg).expect("configuration types always serialise")
}

/// Hex SHA-256 of the canonical form with `output_dir` cleared, so the hash
/// identifies the computation rather than where its artifacts land.
pub fn config_hash(cfg: &RunConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.output_dir = PathBuf::new();
    let digest = Sha256::digest(serialize_config(&canonical).as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::range(field, format!("must be positive and finite, got {v}")))
    }
}

fn check_dims(field: &str, dims: &[usize]) -> Result<(), ConfigError> {
    if !(2..=3).contains(&dims.len()) {
        return Err(ConfigError::range(field, format!("need 2 or 3 entries, got {}", dims.len())));
    }
    if let Some(n) = dims.iter().find(|&&n| n < 4) {
        return Err(ConfigError::range(field, format!("every axis needs at least 4 cells, got {n}")));
    }
    Ok(())
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_dims("grid.dims", &self.grid.dims)?;
        if self.grid.lengths.len() != self.grid.dims.len() {
            return Err(ConfigError::range(
                "grid.lengths",
                format!("need {} entries to match grid.dims", self.grid.dims.len()),
            ));
        }
        for &l in &self.grid.lengths {
            positive("grid.lengths", l)?;
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(ConfigError::range("t_end", "must be finite and non-negative"));
        }
        positive("physics.mu", self.physics.mu)?;
        positive("physics.lambda", self.physics.lambda)?;
        positive("physics.gamma", self.physics.gamma)?;

        let ic = &self.initial;
        if !preset_registry().contains(&ic.preset) {
            return Err(ConfigError::range(
                "initial.preset",
                format!("unknown preset `{}` (known: {})", ic.preset, preset_registry().names().join(", ")),
            ));
        }
        if matches!(ic.preset.as_str(), "taylor_green" | "random_smooth") {
            positive("initial.epsilon", ic.epsilon)?;
        }
        if !ic.k.is_finite() {
            return Err(ConfigError::range("initial.k", "must be finite"));
        }
        if !(ic.director_perturbation.is_finite() && ic.director_perturbation >= 0.0) {
            return Err(ConfigError::range("initial.director_perturbation", "must be non-negative"));
        }

        self.stepper
            .validate()
            .map_err(|e| ConfigError::range("stepper", e.to_string()))?;
        if !elastic_registry().contains(&self.scheme.elastic) {
            return Err(ConfigError::range(
                "scheme.elastic",
                format!("known: {}", elastic_registry().names().join(", ")),
            ));
        }
        if !backend_registry().contains(&self.scheme.linear_solver) {
            return Err(ConfigError::range(
                "scheme.linear_solver",
                format!("known: {}", backend_registry().names().join(", ")),
            ));
        }
        self.scheme
            .solver
            .validate()
            .map_err(|e| ConfigError::range("scheme.solver", e.to_string()))?;
        if self.scheme.linear_solver == "fft" && self.grid.bc != BcMode::Periodic {
            return Err(ConfigError::range("scheme.linear_solver", "fft needs periodic boundaries"));
        }

        if !case_registry().contains(&self.mms.case) {
            return Err(ConfigError::range(
                "mms.case",
                format!("known: {}", case_registry().names().join(", ")),
            ));
        }
        if self.mms.resolutions.len() < 3 {
            return Err(ConfigError::range("mms.resolutions", "need at least 3 resolutions"));
        }
        if self.mms.resolutions.windows(2).any(|w| w[1] <= w[0]) || self.mms.resolutions[0] < 4 {
            return Err(ConfigError::range("mms.resolutions", "must increase and start at 4 or more"));
        }
        positive("mms.t_end", self.mms.t_end)?;
        if self.mms.base_steps == 0 || self.mms.steps_per_slab == 0 {
            return Err(ConfigError::range("mms", "base_steps and steps_per_slab must be positive"));
        }

        let ws = &self.weak_strong;
        check_dims("weak_strong.fine", &ws.fine)?;
        for c in &ws.coarse {
            check_dims("weak_strong.coarse", c)?;
        }
        self.comparison()
            .validate()
            .map_err(|e| ConfigError::range("weak_strong", e.to_string()))?;

        let ps = &self.picard_study;
        if ps.slab_ts.is_empty() || ps.epsilons.is_empty() {
            return Err(ConfigError::range("picard_study", "slab_ts and epsilons must be non-empty"));
        }
        for &t in &ps.slab_ts {
            positive("picard_study.slab_ts", t)?;
        }
        for &e in &ps.epsilons {
            if !(e.is_finite() && e >= 0.0) {
                return Err(ConfigError::range("picard_study.epsilons", "must be non-negative"));
            }
        }
        positive("picard_study.picard_tol", ps.picard_tol)?;
        if !(ps.noise_floor >= 0.0) {
            return Err(ConfigError::range("picard_study.noise_floor", "must be non-negative"));
        }
        Ok(())
    }

    pub fn make_grid(&self) -> crate::Result<Grid> {
        make_grid(&self.grid.dims, &self.grid.lengths, self.grid.bc)
    }

    pub fn linear_solver(&self) -> crate::Result<LinearSolver> {
        LinearSolver::by_name(&self.scheme.linear_solver, self.scheme.solver)
    }

    pub fn stepper(&self) -> crate::Result<Stepper> {
        let advection = if self.toggles.skew_advection { "skew" } else { "convective" };
        Ok(Stepper::from_names(self.physics, &self.scheme.elastic, advection, self.linear_solver()?)?
            .with_renormalize(self.toggles.renormalize))
    }

    pub fn comparison(&self) -> ComparisonConfig {
        let ws = &self.weak_strong;
        ComparisonConfig {
            fine: ws.fine.clone(),
            coarse: ws.coarse.clone(),
            lengths: self.grid.lengths.clone(),
            bc: self.grid.bc,
            t_end: ws.t_end,
            sample_every: ws.sample_every,
            offset_rel: ws.offset_rel,
        }
    }
}
