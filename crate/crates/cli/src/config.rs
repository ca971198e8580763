//! Experiment configuration: one TOML file per run.
//!
//! ```toml
//! kind = "verify-hurst"
//! seed = 7
//! replications = 5000
//!
//! [kernel]
//! kind = "indicator"
//! alpha = 1.6
//!
//! [subordinator]
//! hurst = 0.8
//! paths = 64
//!
//! [probes]
//! times = [[1.0]]
//! scales = [0.25, 0.5, 1.0, 2.0, 4.0]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stabfield_core::{KernelSpec, RigidMotion, SchemeSpec, TimeGrid};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Simulate,
    VerifyHurst,
    VerifySis,
    Clt,
    Subgaussian,
    Ergodic,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::VerifyHurst => "verify-hurst",
            Self::VerifySis => "verify-sis",
            Self::Clt => "clt",
            Self::Subgaussian => "subgaussian",
            Self::Ergodic => "ergodic",
        }
    }
}

/// `tau: R^N -> R^d`, an `H'` fractional Brownian field, sampled `paths` times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubordinatorSpec {
    pub hurst: f64,
    #[serde(default = "one")]
    pub n: usize,
    #[serde(default = "one")]
    pub d: usize,
    #[serde(default = "default_paths")]
    pub paths: usize,
}

fn one() -> usize {
    1
}
fn default_paths() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GridSpec {
    /// `count` equally spaced points from `start` to `stop` on the line.
    Uniform { start: f64, stop: f64, count: usize },
    /// Explicit points of `R^N`.
    Points { points: Vec<Vec<f64>> },
}

impl GridSpec {
    pub fn build(&self) -> stabfield_core::Result<TimeGrid> {
        match self {
            Self::Uniform { start, stop, count } => TimeGrid::uniform(*start, *stop, *count),
            Self::Points { points } => {
                let dim = points.first().map_or(1, Vec::len);
                TimeGrid::new(dim, points.clone())
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default)]
    pub times: Vec<Vec<f64>>,
    #[serde(default)]
    pub thetas: Vec<Vec<f64>>,
    #[serde(default)]
    pub scales: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MotionSpec {
    Identity { dim: usize },
    Translation { shift: Vec<f64> },
    /// Rotation of the plane by `angle` radians.
    Rotation { angle: f64 },
    /// Rotation by `angle` in the `(i, j)` coordinate plane of `R^dim`.
    PlaneRotation { dim: usize, i: usize, j: usize, angle: f64 },
    /// `t -> -t` on the line.
    Reflection,
    /// `outer` applied after `inner`.
    Compose { outer: Box<MotionSpec>, inner: Box<MotionSpec> },
}

impl MotionSpec {
    pub fn build(&self) -> RigidMotion {
        match self {
            Self::Identity { dim } => RigidMotion::identity(*dim),
            Self::Translation { shift } => RigidMotion::translation(shift),
            Self::Rotation { angle } => RigidMotion::rotation_2d(*angle),
            Self::PlaneRotation { dim, i, j, angle } => RigidMotion::plane_rotation(*dim, *i, *j, *angle),
            Self::Reflection => RigidMotion::reflection_1d(),
            Self::Compose { outer, inner } => outer.build().compose(&inner.build()),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            Self::Identity { dim } | Self::PlaneRotation { dim, .. } => Some(*dim),
            Self::Translation { shift } => Some(shift.len()),
            Self::Rotation { .. } => Some(2),
            Self::Reflection => Some(1),
            Self::Compose { outer, inner } => match (outer.dim(), inner.dim()) {
                (Some(a), Some(b)) if a == b => Some(a),
                _ => None,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SisSpec {
    pub motion: MotionSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSpec {
    pub n_schedule: Vec<usize>,
    #[serde(default = "default_reference_paths")]
    pub reference_paths: usize,
}

fn default_reference_paths() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubgaussianSpec {
    #[serde(default = "default_subgaussian_paths")]
    pub paths: usize,
}

fn default_subgaussian_paths() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErgodicSpec {
    pub n_max: usize,
    pub probes: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub mixing_schedule: Vec<usize>,
    /// Also run the diagnostics on the dissipative translation control.
    #[serde(default = "yes")]
    pub control: bool,
    #[serde(default = "default_probe_radius")]
    pub probe_radius: f64,
    #[serde(default = "default_bound")]
    pub bound: f64,
    #[serde(default = "default_quadrature_points")]
    pub quadrature_points: usize,
}

fn yes() -> bool {
    true
}
fn default_probe_radius() -> f64 {
    1.0
}
fn default_bound() -> f64 {
    1e6
}
fn default_quadrature_points() -> usize {
    4096
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Master seed; every random stream of the run is derived from it.
    pub seed: u64,
    pub replications: usize,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub kernel: Option<KernelSpec>,
    #[serde(default)]
    pub subordinator: Option<SubordinatorSpec>,
    #[serde(default)]
    pub scheme: SchemeSpec,
    #[serde(default)]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default)]
    pub sis: Option<SisSpec>,
    #[serde(default)]
    pub clt: Option<CltSpec>,
    #[serde(default)]
    pub subgaussian: Option<SubgaussianSpec>,
    #[serde(default)]
    pub ergodic: Option<ErgodicSpec>,
}

/// A configuration problem, tied to the offending field.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: `{field}` {message}")]
    Field { field: String, message: String },
}

fn field(name: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: name.into(),
        message: message.into(),
    }
}

fn in_open(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > lo && v < hi {
        Ok(())
    } else {
        Err(field(name, format!("= {v} is outside the legal range ({lo}, {hi})")))
    }
}

fn in_half_open(name: &str, v: f64, lo: f64, hi: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > lo && v <= hi {
        Ok(())
    } else {
        Err(field(name, format!("= {v} is outside the legal range ({lo}, {hi}]")))
    }
}

fn positive(name: &str, v: usize) -> Result<(), ConfigError> {
    if v > 0 {
        Ok(())
    } else {
        Err(field(name, "must be at least 1"))
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn kernel(&self) -> Result<&KernelSpec, ConfigError> {
        self.kernel
            .as_ref()
            .ok_or_else(|| field("kernel", format!("section is required for kind = \"{}\"", self.kind.name())))
    }

    pub fn subordinator(&self) -> Result<&SubordinatorSpec, ConfigError> {
        self.subordinator
            .as_ref()
            .ok_or_else(|| field("subordinator", format!("section is required for kind = \"{}\"", self.kind.name())))
    }

    /// Parameter domains, checked before any computation starts.
    pub fn validate(&self) -> Result<(), ConfigError> {
        use ExperimentKind::*;
        positive("replications", self.replications)?;
        if matches!(self.kind, VerifySis | Clt | Subgaussian) && self.replications < 100 {
            return Err(field("replications", "must be at least 100 for ECF-based checks"));
        }
        if let Some(k) = &self.kernel {
            validate_kernel(k)?;
        }
        if let Some(s) = &self.subordinator {
            in_half_open("subordinator.hurst", s.hurst, 0.0, 1.0)?;
            positive("subordinator.n", s.n)?;
            positive("subordinator.d", s.d)?;
            positive("subordinator.paths", s.paths)?;
        }
        positive("scheme.cells", self.scheme.cells)?;
        in_open("scheme.tail_mass_tolerance", self.scheme.tail_mass_tolerance, 0.0, 1.0)?;
        match self.kind {
            Simulate => {
                self.kernel()?;
                if self.grid.is_none() {
                    return Err(field("grid", "section is required for kind = \"simulate\""));
                }
            }
            VerifyHurst => {
                self.kernel()?;
                if self.probes.scales.len() < 3 {
                    return Err(field("probes.scales", "needs at least 3 positive scales"));
                }
                if let Some(c) = self.probes.scales.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
                    return Err(field("probes.scales", format!("contains {c}; scales must be positive")));
                }
                if self.probes.times.len() > 1 {
                    return Err(field("probes.times", "takes a single reference point for kind = \"verify-hurst\""));
                }
            }
            VerifySis => {
                self.kernel()?;
                self.subordinator()?;
                let sis = self
                    .sis
                    .as_ref()
                    .ok_or_else(|| field("sis", "section is required for kind = \"verify-sis\""))?;
                let dim = sis
                    .motion
                    .dim()
                    .ok_or_else(|| field("sis.motion", "composed motions act on different dimensions"))?;
                if dim != self.subordinator()?.n {
                    return Err(field(
                        "sis.motion",
                        format!("acts on R^{dim} but the time dimension is subordinator.n = {}", self.subordinator()?.n),
                    ));
                }
                self.require_probes(true)?;
            }
            Clt => {
                self.kernel()?;
                self.subordinator()?;
                let clt = self
                    .clt
                    .as_ref()
                    .ok_or_else(|| field("clt", "section is required for kind = \"clt\""))?;
                if clt.n_schedule.len() < 3 || clt.n_schedule[0] == 0 || clt.n_schedule.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(field("clt.n_schedule", "needs at least 3 positive, strictly increasing entries"));
                }
                positive("clt.reference_paths", clt.reference_paths)?;
                self.require_probes(true)?;
            }
            Subgaussian => {
                let s = self.subordinator()?;
                if s.n != 1 || s.d != 1 {
                    return Err(field("subordinator", "kind = \"subgaussian\" needs n = d = 1"));
                }
                match &self.kernel {
                    Some(KernelSpec::RandomSlope { .. }) => {}
                    Some(_) => return Err(field("kernel.kind", "must be \"random-slope\" for kind = \"subgaussian\"")),
                    None => return Err(field("kernel", "section is required for kind = \"subgaussian\"")),
                }
                if let Some(sg) = &self.subgaussian {
                    positive("subgaussian.paths", sg.paths)?;
                }
                self.require_probes(true)?;
            }
            Ergodic => {
                match self.kernel()? {
                    KernelSpec::LinearFsm { .. } => {}
                    _ => return Err(field("kernel.kind", "must be \"linear-fsm\" for kind = \"ergodic\"")),
                }
                let s = self.subordinator()?;
                if s.n != 1 || s.d != 1 {
                    return Err(field("subordinator", "kind = \"ergodic\" needs n = d = 1"));
                }
                let e = self
                    .ergodic
                    .as_ref()
                    .ok_or_else(|| field("ergodic", "section is required for kind = \"ergodic\""))?;
                positive("ergodic.n_max", e.n_max)?;
                positive("ergodic.probes", e.probes)?;
                positive("ergodic.quadrature_points", e.quadrature_points)?;
                in_open("ergodic.delta", e.delta, 0.0, f64::INFINITY)?;
                in_open("ergodic.epsilon", e.epsilon, 0.0, f64::INFINITY)?;
                in_open("ergodic.probe_radius", e.probe_radius, 0.0, f64::INFINITY)?;
                if !(e.bound > e.delta) {
                    return Err(field("ergodic.bound", format!("= {} must exceed ergodic.delta", e.bound)));
                }
                if e.mixing_schedule.is_empty() {
                    return Err(field("ergodic.mixing_schedule", "needs at least one entry"));
                }
                if let Some(n) = e.mixing_schedule.iter().find(|&&n| n >= e.n_max) {
                    return Err(field("ergodic.mixing_schedule", format!("entry {n} must be below ergodic.n_max")));
                }
            }
        }
        Ok(())
    }

    fn require_probes(&self, need_times: bool) -> Result<(), ConfigError> {
        if need_times && self.probes.times.is_empty() {
            return Err(field("probes.times", format!("is required for kind = \"{}\"", self.kind.name())));
        }
        let n = self.subordinator.as_ref().map_or(1, |s| s.n);
        if let Some(t) = self.probes.times.iter().find(|t| t.len() != n) {
            return Err(field(
                "probes.times",
                format!("point {t:?} does not lie in R^{n} (subordinator.n = {n})"),
            ));
        }
        if self.probes.thetas.is_empty() {
            return Err(field("probes.thetas", format!("is required for kind = \"{}\"", self.kind.name())));
        }
        let k = self.probes.times.len();
        if let Some(t) = self.probes.thetas.iter().find(|t| t.len() != k) {
            return Err(field(
                "probes.thetas",
                format!("entry {t:?} has length {} but there are {k} probe times", t.len()),
            ));
        }
        Ok(())
    }
}

fn validate_kernel(k: &KernelSpec) -> Result<(), ConfigError> {
    match *k {
        KernelSpec::Indicator { alpha } | KernelSpec::Chentsov { alpha, .. } | KernelSpec::RandomSlope { alpha } => {
            in_half_open("kernel.alpha", alpha, 0.0, 2.0)?;
        }
        KernelSpec::LinearFsm { alpha, hurst, a, b } => {
            in_half_open("kernel.alpha", alpha, 0.0, 2.0)?;
            in_open("kernel.hurst", hurst, 0.0, 1.0)?;
            if !(a >= 0.0 && b >= 0.0 && a + b > 0.0) {
                return Err(field("kernel.a", "a and b must be nonnegative and not both zero"));
            }
        }
        KernelSpec::MovingAverage { hurst, d } => {
            in_open("kernel.hurst", hurst, 0.0, 1.0)?;
            positive("kernel.d", d)?;
        }
    }
    if let KernelSpec::Chentsov { d, .. } = *k {
        positive("kernel.d", d)?;
    }
    Ok(())
}
