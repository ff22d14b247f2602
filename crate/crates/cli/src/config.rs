//! Run configuration, read from TOML with unknown keys rejected.

use std::path::{Path, PathBuf};

use fracwave_core::{AdmissibleSpec, ConditioningParams, OptOptions, SolverOptions, TrackingMode};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub physics: PhysicsSection,
    pub mesh: MeshSection,
    pub time: TimeSection,
    #[serde(default)]
    pub solver: SolverOptions,
    #[serde(default)]
    pub forcing: Forcing,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<ConditioningParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manufactured: Option<ManufacturedSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub objective: Option<ObjectiveSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub admissible: Option<AdmissibleSpec>,
    #[serde(default)]
    pub optimizer: OptOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsSection {
    pub c: f64,
    pub b: f64,
    pub alpha: f64,
    /// Constant nonlinearity coefficient.
    #[serde(default)]
    pub k: f64,
    #[serde(default = "default_b_max")]
    pub b_max: f64,
    #[serde(default = "default_k_delta")]
    pub k_delta: f64,
}

fn default_b_max() -> f64 {
    10.0
}

fn default_k_delta() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default = "default_extent")]
    pub extent: [f64; 2],
    #[serde(default)]
    pub elements: usize,
    /// Text mesh file; overrides `extent` and `elements`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

fn default_dimension() -> usize {
    1
}

fn default_extent() -> [f64; 2] {
    [0.0, 1.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    pub horizon: f64,
    pub steps: usize,
}

/// Control data: analytic profiles or array files.
///
/// Boundary node `j` receives `boundary_amplitude[j] * sin(2 pi freq t)`
/// before conditioning; the source is
/// `source_amplitude * sin(pi t / T) cos(pi (x - x0) / L)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Forcing {
    #[serde(default)]
    pub boundary_amplitude: Vec<f64>,
    #[serde(default = "default_frequency")]
    pub boundary_frequency: f64,
    #[serde(default)]
    pub source_amplitude: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_file: Option<PathBuf>,
}

fn default_frequency() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManufacturedSection {
    /// Number of halvings in each convergence sweep.
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSection {
    #[serde(default = "default_mode")]
    pub mode: TrackingMode,
    pub gamma: f64,
    pub eta: f64,
    /// Observation interval.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<[f64; 2]>,
    /// Desired state as an array file. Without it the target is generated
    /// from `truth`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_file: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<Forcing>,
}

fn default_mode() -> TrackingMode {
    TrackingMode::Running
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_costs")]
    pub costs: Vec<f64>,
}

fn default_deltas() -> Vec<f64> {
    vec![0.08, 0.04, 0.02, 0.01, 0.0]
}

fn default_costs() -> Vec<f64> {
    fracwave_core::control::studies::default_cost_ladder()
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            deltas: default_deltas(),
            costs: default_costs(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check_ranges()?;
        Ok(cfg)
    }

    /// Reads the file and resolves relative paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.check_files()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    fn files_mut(&mut self) -> Vec<&mut PathBuf> {
        let mut out = Vec::new();
        out.extend(self.mesh.file.as_mut());
        out.extend(self.forcing.boundary_file.as_mut());
        out.extend(self.forcing.source_file.as_mut());
        if let Some(o) = self.objective.as_mut() {
            out.extend(o.target_file.as_mut());
            if let Some(t) = o.truth.as_mut() {
                out.extend(t.boundary_file.as_mut());
                out.extend(t.source_file.as_mut());
            }
        }
        out
    }

    fn resolve_paths(&mut self, base: &Path) {
        for p in self.files_mut() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(o) = self.output.as_mut() {
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
    }

    fn check_files(&mut self) -> Result<(), CliError> {
        for p in self.files_mut() {
            if !p.is_file() {
                return Err(CliError::Config(format!(
                    "referenced file {} does not exist",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    fn check_ranges(&self) -> Result<(), CliError> {
        let bad = |key: &str, msg: String| Err(CliError::Config(format!("{key}: {msg}")));
        let p = &self.physics;
        if !(p.c > 0.0) {
            return bad("physics.c", format!("must be positive, got {}", p.c));
        }
        if !(p.b >= 0.0 && p.b <= p.b_max) {
            return bad(
                "physics.b",
                format!("must lie in [0, b_max = {}], got {}", p.b_max, p.b),
            );
        }
        if !(p.alpha > 0.0 && p.alpha < 1.0) {
            return bad("physics.alpha", format!("must lie in (0, 1), got {}", p.alpha));
        }
        if self.mesh.dimension != 1 {
            return bad(
                "mesh.dimension",
                format!("only 1 is supported, got {}", self.mesh.dimension),
            );
        }
        if self.mesh.file.is_none() {
            if self.mesh.elements == 0 {
                return bad("mesh.elements", "must be positive".into());
            }
            if !(self.mesh.extent[1] > self.mesh.extent[0]) {
                return bad("mesh.extent", "right end must exceed left end".into());
            }
        }
        if !(self.time.horizon > 0.0) {
            return bad("time.horizon", format!("must be positive, got {}", self.time.horizon));
        }
        if self.time.steps == 0 {
            return bad("time.steps", "must be positive".into());
        }
        if !(self.solver.fp_tol > 0.0) || self.solver.fp_max_iter == 0 {
            return bad("solver", "fp_tol and fp_max_iter must be positive".into());
        }
        if let Some(o) = &self.objective {
            if !(o.gamma >= 0.0 && o.eta >= 0.0) {
                return bad("objective", "gamma and eta must be nonnegative".into());
            }
            if o.target_file.is_none() && o.truth.is_none() {
                return bad("objective", "needs either target_file or a truth section".into());
            }
        }
        if let Some(a) = &self.admissible {
            a.validate().map_err(|e| CliError::Config(format!("admissible: {e}")))?;
        }
        if let Some(c) = &self.conditioning {
            c.validate()
                .map_err(|e| CliError::Config(format!("conditioning: {e}")))?;
        }
        self.optimizer
            .validate()
            .map_err(|e| CliError::Config(format!("optimizer: {e}")))?;
        Ok(())
    }
}
