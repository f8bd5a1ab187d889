//! Experiment configuration: JSON schema, loading and validation.

use std::path::Path;

use billiard_core::geometry::{build_hardball_gas, build_sinai, reduce_pair_to_sinai, Ambient, Domain, Scatterer, Tolerances};
use billiard_core::linalg::Vector;
use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub initial: InitialSpec,
    pub horizon: f64,
    /// Growth rate for the linear-growth checks; defaults to the sampler's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default = "default_checks")]
    pub checks: Vec<CheckKind>,
    #[serde(default = "default_max_events")]
    pub max_events: usize,
    /// Interior samples per free segment.
    #[serde(default = "default_grid")]
    pub grid: usize,
}

fn default_checks() -> Vec<CheckKind> {
    vec![CheckKind::Monotonicity, CheckKind::Growth, CheckKind::Identities]
}

fn default_max_events() -> usize {
    billiard_core::dynamics::DEFAULT_MAX_EVENTS
}

fn default_grid() -> usize {
    billiard_core::diagnostics::DEFAULT_GRID
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Monotonicity,
    Growth,
    Identities,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Sinai {
        dim: usize,
        radius: f64,
        side: f64,
        /// Defaults to one ball at the centre of the cell.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        centers: Option<Vec<Vec<f64>>>,
    },
    HardballGas {
        balls: usize,
        dim: usize,
        radius: f64,
        side: f64,
    },
    PairReduced {
        dim: usize,
        radius: f64,
        side: f64,
    },
    Custom {
        dim: usize,
        ambient: AmbientSpec,
        scatterers: Vec<ScattererSpec>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum AmbientSpec {
    Torus { side: f64 },
    Box { sides: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ScattererSpec {
    Sphere { center: Vec<f64>, radius: f64 },
    Cylinder { axis_point: Vec<f64>, axis_directions: Vec<Vec<f64>>, radius: f64 },
    Halfspace { point: Vec<f64>, normal: Vec<f64> },
}

/// Exactly one of `explicit` and `sampled`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explicit: Option<Vec<ExplicitInitial>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampled: Option<SamplerSpec>,
}

/// Phase point `(q, v)` and normal covector `(z, w)`; `v` and `n` are
/// normalised on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitInitial {
    pub q: Vec<f64>,
    pub v: Vec<f64>,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerSpec {
    pub count: usize,
    pub seed: u64,
    /// Covectors satisfy `Q(n0) <= -c0`; uniform on the unit sphere when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    /// Minimum distance of sampled positions from every scatterer.
    #[serde(default = "default_clearance")]
    pub clearance: f64,
    /// Redraw phase points whose orbit has an event below this `cos(phi)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_cos_phi: Option<f64>,
}

fn default_clearance() -> f64 {
    1e-3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    #[serde(default = "default_tol_check")]
    pub tol_check: f64,
    #[serde(default = "default_jump_tol")]
    pub jump_tol: f64,
    #[serde(default = "default_adjoint_tol")]
    pub adjoint: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_graze: Option<f64>,
}

fn default_tol_check() -> f64 {
    1e-9
}

fn default_jump_tol() -> f64 {
    1e-12
}

fn default_adjoint_tol() -> f64 {
    1e-8
}

impl Default for ToleranceSpec {
    fn default() -> Self {
        ToleranceSpec { tol_check: default_tol_check(), jump_tol: default_jump_tol(), adjoint: default_adjoint_tol(), eps_graze: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_out_dir")]
    pub dir: String,
    #[serde(default = "default_summary")]
    pub summary: String,
}

fn default_out_dir() -> String {
    "out".into()
}

fn default_summary() -> String {
    "summary.json".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { dir: default_out_dir(), summary: default_summary() }
    }
}

/// 1-based line of the first occurrence of `"key"` in `text`.
fn line_of(text: &str, key: &str) -> Option<usize> {
    let needle = format!("\"{key}\"");
    text.find(&needle).map(|at| text[..at].matches('\n').count() + 1)
}

/// Error pinned to the line of `key` (line 1 when the key is absent).
fn at_key(origin: &str, text: &str, key: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("{origin}:{}: {msg}", line_of(text, key).unwrap_or(1)))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: cannot read config: {e}", path.display())))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses and validates; `origin` prefixes every message.
    pub fn parse(text: &str, origin: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| {
            HarnessError::Config(format!("{origin}:{}:{}: {e}", e.line(), e.column()))
        })?;
        cfg.validate(text, origin)?;
        Ok(cfg)
    }

    fn validate(&self, text: &str, origin: &str) -> Result<(), HarnessError> {
        if !(self.horizon.is_finite() && self.horizon >= 0.0) {
            return Err(at_key(origin, text, "horizon", format!("horizon must be finite and non-negative (got {})", self.horizon)));
        }
        let dim = self.build_domain().map_err(|e| at_key(origin, text, "domain", e))?.dim();
        match (&self.initial.explicit, &self.initial.sampled) {
            (Some(_), Some(_)) | (None, None) => {
                return Err(at_key(origin, text, "initial", "exactly one of `explicit` and `sampled` is required"));
            }
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(at_key(origin, text, "explicit", "`explicit` lists no initial conditions"));
                }
                for (i, x) in list.iter().enumerate() {
                    if [&x.q, &x.v, &x.z, &x.w].iter().any(|c| c.len() != dim) {
                        return Err(at_key(origin, text, "explicit", format!("explicit[{i}]: q, v, z, w must have {dim} components")));
                    }
                }
            }
            (None, Some(s)) => {
                if s.count == 0 {
                    return Err(at_key(origin, text, "count", "sampler count must be positive"));
                }
                if let Some(c0) = s.c0 {
                    if !(c0 > 0.0 && c0 <= 0.5) {
                        return Err(at_key(origin, text, "c0", format!("c0 = {c0} is infeasible: a unit covector has Q >= -1/2")));
                    }
                }
                if !(s.clearance >= 0.0) {
                    return Err(at_key(origin, text, "clearance", "clearance must be non-negative"));
                }
                if let Some(m) = s.min_cos_phi {
                    if !(0.0..1.0).contains(&m) {
                        return Err(at_key(origin, text, "min_cos_phi", "min_cos_phi must lie in [0, 1)"));
                    }
                }
            }
        }
        if let Some(c0) = self.c0 {
            if !(c0 > 0.0 && c0 <= 0.5) {
                return Err(at_key(origin, text, "c0", format!("c0 = {c0} is infeasible: a unit covector has Q >= -1/2")));
            }
        }
        let t = &self.tolerances;
        for (name, value) in [("tol_check", t.tol_check), ("jump_tol", t.jump_tol), ("adjoint", t.adjoint)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(at_key(origin, text, name, format!("{name} must be finite and non-negative")));
            }
        }
        if let Some(g) = t.eps_graze {
            if !(g > 0.0 && g < 1.0) {
                return Err(at_key(origin, text, "eps_graze", "eps_graze must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    /// Growth rate used by the growth checks, if any.
    pub fn growth_rate(&self) -> Option<f64> {
        self.c0.or_else(|| self.initial.sampled.as_ref().and_then(|s| s.c0))
    }

    pub fn build_domain(&self) -> Result<Domain<f64>, HarnessError> {
        let domain = self.domain.build()?;
        Ok(match self.tolerances.eps_graze {
            Some(g) => {
                let tol = Tolerances { graze: g, ..*domain.tolerances() };
                domain.with_tolerances(tol)
            }
            None => domain,
        })
    }
}

impl DomainSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            DomainSpec::Sinai { .. } => "sinai",
            DomainSpec::HardballGas { .. } => "hardball_gas",
            DomainSpec::PairReduced { .. } => "pair_reduced",
            DomainSpec::Custom { .. } => "custom",
        }
    }

    pub fn build(&self) -> Result<Domain<f64>, HarnessError> {
        let vec = |x: &Vec<f64>| Vector::from_vec(x.clone());
        let built = match self {
            DomainSpec::Sinai { dim, radius, side, centers } => {
                let centers = match centers {
                    Some(c) => {
                        if c.iter().any(|x| x.len() != *dim) {
                            return Err(HarnessError::Config(format!("every centre must have {dim} components")));
                        }
                        c.iter().map(vec).collect()
                    }
                    None => vec![Vector::from_vec(vec![side / 2.0; *dim])],
                };
                build_sinai(*dim, *radius, *side, centers)
            }
            DomainSpec::HardballGas { balls, dim, radius, side } => build_hardball_gas(*balls, *dim, *radius, *side),
            DomainSpec::PairReduced { dim, radius, side } => reduce_pair_to_sinai(*dim, *radius, *side),
            DomainSpec::Custom { dim, ambient, scatterers } => {
                let ambient = match ambient {
                    AmbientSpec::Torus { side } => Ambient::Torus { side: *side },
                    AmbientSpec::Box { sides } => Ambient::Box { sides: vec(sides) },
                };
                let scatterers = scatterers
                    .iter()
                    .map(|s| match s {
                        ScattererSpec::Sphere { center, radius } => Scatterer::Sphere { center: vec(center), radius: *radius },
                        ScattererSpec::Cylinder { axis_point, axis_directions, radius } => Scatterer::Cylinder {
                            axis_point: vec(axis_point),
                            axis_directions: axis_directions.iter().map(vec).collect(),
                            radius: *radius,
                        },
                        ScattererSpec::Halfspace { point, normal } => {
                            Scatterer::Halfspace { plane_point: vec(point), plane_normal: vec(normal) }
                        }
                    })
                    .collect();
                Domain::new(*dim, ambient, scatterers)
            }
        };
        built.map_err(|e| HarnessError::Config(e.to_string()))
    }
}
