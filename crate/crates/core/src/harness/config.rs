//! TOML experiment configuration.
//!
//! ```toml
//! [experiment]
//! id = "conv2d"
//! kind = "convergence"      # convergence | cfl-scan | decay | topology
//!
//! [problem]
//! id = "2d"                 # 1d | 2d
//! final_time = 0.5
//!
//! [mesh]
//! nx = 100                  # 2D grid, or `cells`, `perturb`, `seed` in 1D
//! ny = 100
//!
//! [time]
//! schemes = ["CN", "DS"]
//! taus = [0.02, 0.01, 0.005]
//! # tau_range = { min = 1e-3, max = 1e-1, count = 8 }   (log-spaced)
//!
//! [splitting]
//! ells = [8]
//! grids = [[2, 2]]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::integrators::{PredictionMode, Scheme};
use crate::linalg::CgConfig;
use crate::mesh::{build_interval_mesh, build_unit_square_mesh, SimplicialMesh};
use crate::problems::{problem_1d, problem_2d, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Convergence,
    CflScan,
    Decay,
    Topology,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::CflScan => "cfl-scan",
            ExperimentKind::Decay => "decay",
            ExperimentKind::Topology => "topology",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(default = "default_id")]
    pub id: String,
    #[serde(default = "default_kind")]
    pub kind: ExperimentKind,
}

fn default_id() -> String {
    "experiment".into()
}
fn default_kind() -> ExperimentKind {
    ExperimentKind::Convergence
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            id: default_id(),
            kind: default_kind(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum ProblemId {
    #[serde(rename = "1d")]
    OneD,
    #[serde(rename = "2d")]
    TwoD,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub id: ProblemId,
    /// Overrides the problem's default end time.
    pub final_time: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    /// 1D cell count.
    pub cells: Option<usize>,
    /// Relative node perturbation in 1D.
    #[serde(default = "default_perturb")]
    pub perturb: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
}

pub const DEFAULT_PERTURB: f64 = 0.2;
pub const DEFAULT_SEED: u64 = 1;

fn default_perturb() -> f64 {
    DEFAULT_PERTURB
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSection {
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub taus: Option<Vec<f64>>,
    pub tau_range: Option<TauRange>,
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::CrankNicolson, Scheme::DomainSplitting]
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            schemes: default_schemes(),
            taus: None,
            tau_range: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PredictionSetting {
    #[default]
    Local,
    Global,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplittingSection {
    #[serde(default)]
    pub ells: Vec<usize>,
    #[serde(default)]
    pub grids: Vec<[usize; 2]>,
    #[serde(default)]
    pub prediction: PredictionSetting,
}

impl Default for SplittingSection {
    fn default() -> Self {
        SplittingSection {
            ells: Vec::new(),
            grids: Vec::new(),
            prediction: PredictionSetting::Local,
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    CgConfig::default().tol
}
fn default_max_iter() -> usize {
    CgConfig::default().max_iter
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection {
            tol: default_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    /// A run is unstable once its energy norm exceeds this multiple of the initial one.
    #[serde(default = "default_blowup")]
    pub blowup_factor: f64,
    /// Relative resolution of the CFL bisection.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_blowup() -> f64 {
    1e3
}
fn default_resolution() -> f64 {
    0.01
}

impl Default for StabilitySection {
    fn default() -> Self {
        StabilitySection {
            blowup_factor: default_blowup(),
            resolution: default_resolution(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecaySection {
    /// `lambda` values as multiples of the largest cell diameter.
    #[serde(default = "default_lambda_factors")]
    pub lambda_factors: Vec<f64>,
    #[serde(default)]
    pub subdomain: usize,
    /// Interface data; `false` uses zero data.
    #[serde(default = "default_true")]
    pub unit_data: bool,
}

fn default_lambda_factors() -> Vec<f64> {
    vec![1.0, 4.0, 16.0]
}
fn default_true() -> bool {
    true
}

impl Default for DecaySection {
    fn default() -> Self {
        DecaySection {
            lambda_factors: default_lambda_factors(),
            subdomain: 0,
            unit_data: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    /// Record wall-clock times; off by default so that reruns give identical files.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: ExperimentSection,
    pub problem: ProblemSection,
    pub mesh: MeshSection,
    #[serde(default)]
    pub time: TimeSection,
    #[serde(default)]
    pub splitting: SplittingSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub decay: DecaySection,
    #[serde(default)]
    pub output: OutputSection,
    /// Worker threads for subdomain solves; 0 uses all cores.
    #[serde(default)]
    pub threads: usize,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn problem(&self) -> Result<ProblemSpec> {
        let mut p = match self.problem.id {
            ProblemId::OneD => problem_1d(),
            ProblemId::TwoD => problem_2d(),
        };
        if let Some(t) = self.problem.final_time {
            p.final_time = t;
        }
        Ok(p)
    }

    pub fn build_mesh(&self) -> Result<SimplicialMesh> {
        match self.problem.id {
            ProblemId::OneD => {
                let n = self
                    .mesh
                    .cells
                    .ok_or_else(|| Error::Config("1d problems need mesh.cells".into()))?;
                build_interval_mesh(n, self.mesh.perturb, self.mesh.seed)
            }
            ProblemId::TwoD => {
                let nx = self
                    .mesh
                    .nx
                    .ok_or_else(|| Error::Config("2d problems need mesh.nx".into()))?;
                build_unit_square_mesh(nx, self.mesh.ny.unwrap_or(nx))
            }
        }
    }

    pub fn cg(&self) -> CgConfig {
        CgConfig {
            tol: self.solver.tol,
            max_iter: self.solver.max_iter,
        }
    }

    pub fn prediction_mode(&self) -> PredictionMode {
        match self.splitting.prediction {
            PredictionSetting::Local => PredictionMode::Local,
            PredictionSetting::Global => PredictionMode::Global,
        }
    }

    /// Explicit step sizes, or the log-spaced range, largest first.
    pub fn taus(&self) -> Result<Vec<f64>> {
        let mut taus = match (&self.time.taus, &self.time.tau_range) {
            (Some(t), None) => t.clone(),
            (None, Some(r)) => {
                if r.count == 0 || !(r.min > 0.0) || !(r.max >= r.min) {
                    return Err(Error::Config(format!("bad tau_range {r:?}")));
                }
                if r.count == 1 {
                    vec![r.max]
                } else {
                    let (a, b) = (r.min.ln(), r.max.ln());
                    (0..r.count)
                        .map(|k| (a + (b - a) * k as f64 / (r.count - 1) as f64).exp())
                        .collect()
                }
            }
            (Some(_), Some(_)) => return Err(Error::Config("give either time.taus or time.tau_range".into())),
            (None, None) => Vec::new(),
        };
        taus.sort_by(|a, b| b.total_cmp(a));
        Ok(taus)
    }

    /// Subdomain grids; 1D grids must have a single row.
    pub fn grids(&self) -> Vec<[usize; 2]> {
        if self.splitting.grids.is_empty() {
            match self.problem.id {
                ProblemId::OneD => vec![[2, 1]],
                ProblemId::TwoD => vec![[2, 2]],
            }
        } else {
            self.splitting.grids.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.problem()?.final_time;
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::Config(format!("final time must be positive, got {t}")));
        }
        for &tau in &self.taus()? {
            if !(tau > 0.0) || !tau.is_finite() {
                return Err(Error::Config(format!("step sizes must be positive, got {tau}")));
            }
        }
        match self.problem.id {
            ProblemId::OneD if self.mesh.cells.is_none() => {
                return Err(Error::Config("1d problems need mesh.cells".into()))
            }
            ProblemId::TwoD if self.mesh.nx.is_none() => return Err(Error::Config("2d problems need mesh.nx".into())),
            _ => {}
        }
        if !(self.solver.tol > 0.0) || self.solver.max_iter == 0 {
            return Err(Error::Config("solver.tol and solver.max_iter must be positive".into()));
        }
        if !(self.stability.blowup_factor > 1.0) {
            return Err(Error::Config("stability.blowup_factor must exceed 1".into()));
        }
        if !(self.stability.resolution > 0.0 && self.stability.resolution < 1.0) {
            return Err(Error::Config("stability.resolution must lie in (0, 1)".into()));
        }
        let needs_ds = matches!(
            self.experiment.kind,
            ExperimentKind::CflScan | ExperimentKind::Topology | ExperimentKind::Decay
        ) || self.time.schemes.contains(&Scheme::DomainSplitting);
        if needs_ds && self.splitting.ells.is_empty() {
            return Err(Error::Config("the splitting scheme needs splitting.ells".into()));
        }
        for g in self.grids() {
            if g[0] == 0 || g[1] == 0 {
                return Err(Error::Config(format!("subdomain grid {g:?} has an empty direction")));
            }
            if self.problem.id == ProblemId::OneD && g[1] != 1 {
                return Err(Error::Config(format!("1d subdomain grids must be [n, 1], got {g:?}")));
            }
        }
        if matches!(
            self.experiment.kind,
            ExperimentKind::Convergence | ExperimentKind::Topology
        ) && self.taus()?.is_empty()
        {
            return Err(Error::Config("no step sizes given".into()));
        }
        if self.experiment.kind == ExperimentKind::Decay && self.decay.lambda_factors.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Config("decay.lambda_factors must be positive".into()));
        }
        Ok(())
    }
}
