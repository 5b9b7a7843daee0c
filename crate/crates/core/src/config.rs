//! JSON run configurations.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::chern_simons::{ModelParams, Vortex, VortexConfig};
use crate::error::{Error, Result};
use crate::exhaustion::{ExhaustionOptions, ExhaustionSchedule, Shape};
use crate::lattice::{LatticeDomain, LatticePoint};
use crate::linsolve::{Backend, LinearOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Box,
    Ball,
    Points,
}

/// `{"dimension": n, "kind": "box"|"ball", "center": [...], "size": r}` or
/// `{"kind": "points", "points": [[x1, ..., xn], ...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<usize>,
    pub kind: DomainKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<i64>>>,
}

impl DomainSpec {
    pub fn build(&self, dimension: usize) -> Result<LatticeDomain> {
        if let Some(d) = self.dimension {
            if d != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: d,
                });
            }
        }
        let center = match &self.center {
            Some(c) => LatticePoint::new(c.clone()),
            None => LatticePoint::origin(dimension),
        };
        let size = || {
            self.size
                .ok_or_else(|| Error::InvalidInput("domain needs a \"size\"".into()))
        };
        match self.kind {
            DomainKind::Box => LatticeDomain::cube(dimension, size()?, &center),
            DomainKind::Ball => LatticeDomain::ball(dimension, size()?, &center),
            DomainKind::Points => {
                let points = self.points.as_ref().ok_or_else(|| {
                    Error::InvalidInput("a point-list domain needs \"points\"".into())
                })?;
                LatticeDomain::from_points(
                    dimension,
                    points.iter().cloned().map(LatticePoint::new).collect(),
                )
            }
        }
    }

    pub fn from_domain(domain: &LatticeDomain) -> Self {
        use crate::lattice::DomainShape;
        let (kind, center, size, points) = match domain.shape() {
            DomainShape::Box { center, size } => {
                (DomainKind::Box, Some(center.coords().to_vec()), Some(*size), None)
            }
            DomainShape::Ball { center, size } => {
                (DomainKind::Ball, Some(center.coords().to_vec()), Some(*size), None)
            }
            DomainShape::Points => (
                DomainKind::Points,
                None,
                None,
                Some(domain.interior().iter().map(|p| p.coords().to_vec()).collect()),
            ),
        };
        DomainSpec {
            dimension: Some(domain.dimension()),
            kind,
            center,
            size,
            points,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub nonlinear: Option<f64>,
    pub residual: Option<f64>,
    pub linear: Option<f64>,
    pub max_outer_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexSpec {
    pub point: Vec<i64>,
    pub multiplicity: u32,
}

fn vortex_config(specs: &[VortexSpec], dimension: usize) -> Result<VortexConfig> {
    let vortices = specs
        .iter()
        .map(|v| {
            if v.point.len() != dimension {
                return Err(Error::DimensionMismatch {
                    expected: dimension,
                    found: v.point.len(),
                });
            }
            Ok(Vortex {
                point: LatticePoint::new(v.point.clone()),
                multiplicity: v.multiplicity,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    VortexConfig::new(vortices)
}

fn model_params(
    lambda: f64,
    p: u32,
    shift: Option<f64>,
    tolerances: &Tolerances,
    backend: Option<Backend>,
) -> Result<ModelParams> {
    let mut params = ModelParams::new(lambda, p);
    if let Some(s) = shift {
        params.shift = s;
    }
    if let Some(t) = tolerances.nonlinear {
        params.tol_nonlinear = t;
    }
    if let Some(t) = tolerances.residual {
        params.tol_residual = t;
    }
    if let Some(t) = tolerances.linear {
        params.linear = LinearOptions {
            tolerance: t,
            ..params.linear
        };
    }
    if let Some(m) = tolerances.max_outer_iterations {
        params.max_outer_iterations = m;
    }
    if let Some(b) = backend {
        params.backend = b;
    }
    params.validate()?;
    Ok(params)
}

/// Configuration of a single-domain solve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dimension: usize,
    pub domain: DomainSpec,
    #[serde(default)]
    pub vortices: Vec<VortexSpec>,
    pub lambda: f64,
    pub p: u32,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub backend: Option<Backend>,
}

/// A validated [`RunConfig`].
#[derive(Debug, Clone)]
pub struct SolveSetup {
    pub domain: Arc<LatticeDomain>,
    pub vortices: VortexConfig,
    pub params: ModelParams,
}

impl RunConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Validates everything a solve needs, including that each vortex lies
    /// in the domain interior.
    pub fn setup(&self) -> Result<SolveSetup> {
        let domain = Arc::new(self.domain.build(self.dimension)?);
        let vortices = vortex_config(&self.vortices, self.dimension)?;
        crate::chern_simons::source_h(&domain, &vortices)?;
        let params = model_params(self.lambda, self.p, self.shift, &self.tolerances, self.backend)?;
        Ok(SolveSetup {
            domain,
            vortices,
            params,
        })
    }
}

/// Configuration of an exhaustion run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExhaustConfig {
    pub dimension: usize,
    #[serde(default)]
    pub shape: Shape,
    pub radii: Vec<u64>,
    #[serde(default)]
    pub center: Option<Vec<i64>>,
    #[serde(default)]
    pub vortices: Vec<VortexSpec>,
    pub lambda: f64,
    pub p: u32,
    #[serde(default)]
    pub shift: Option<f64>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub backend: Option<Backend>,
    #[serde(default)]
    pub tol_global: Option<f64>,
    #[serde(default)]
    pub decay_threshold: Option<f64>,
    #[serde(default)]
    pub warm_start: bool,
}

#[derive(Debug, Clone)]
pub struct ExhaustSetup {
    pub schedule: ExhaustionSchedule,
    pub params: ModelParams,
    pub options: ExhaustionOptions,
}

impl ExhaustConfig {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn setup(&self) -> Result<ExhaustSetup> {
        let center = match &self.center {
            Some(c) if c.len() != self.dimension => {
                return Err(Error::DimensionMismatch {
                    expected: self.dimension,
                    found: c.len(),
                })
            }
            Some(c) => LatticePoint::new(c.clone()),
            None => LatticePoint::origin(self.dimension),
        };
        let schedule = ExhaustionSchedule {
            dimension: self.dimension,
            shape: self.shape,
            radii: self.radii.clone(),
            center,
            vortices: vortex_config(&self.vortices, self.dimension)?,
        };
        // Surface schedule problems before any solving starts.
        schedule.domains()?;
        let params = model_params(self.lambda, self.p, self.shift, &self.tolerances, self.backend)?;
        let defaults = ExhaustionOptions::default();
        let options = ExhaustionOptions {
            tol_global: self.tol_global.unwrap_or(defaults.tol_global),
            decay_threshold: self.decay_threshold.unwrap_or(defaults.decay_threshold),
            warm_start: self.warm_start,
        };
        Ok(ExhaustSetup {
            schedule,
            params,
            options,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_run_config() {
        let json = r#"{
            "dimension": 2,
            "domain": {"dimension": 2, "kind": "box", "center": [0, 0], "size": 3},
            "vortices": [{"point": [0, 0], "multiplicity": 1}],
            "lambda": 1.0,
            "p": 0,
            "tolerances": {"nonlinear": 1e-11}
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        let setup = cfg.setup().unwrap();
        assert_eq!(setup.domain.interior_len(), 49);
        assert_eq!(setup.params.shift, 4.0);
        assert_eq!(setup.params.tol_nonlinear, 1e-11);
        assert_eq!(setup.vortices.len(), 1);
    }

    #[test]
    fn point_list_domain() {
        let spec = DomainSpec {
            dimension: None,
            kind: DomainKind::Points,
            center: None,
            size: None,
            points: Some(vec![vec![0, 0], vec![1, 0], vec![1, 1]]),
        };
        let d = spec.build(2).unwrap();
        assert_eq!(d.interior_len(), 3);
        let back = DomainSpec::from_domain(&d);
        assert_eq!(back.build(2).unwrap(), d);
    }

    #[test]
    fn domain_spec_round_trips_through_json() {
        let d = LatticeDomain::ball(3, 2, &LatticePoint::new(vec![1, 2, 3])).unwrap();
        let json = serde_json::to_string(&DomainSpec::from_domain(&d)).unwrap();
        assert!(json.contains("\"kind\":\"ball\""));
        let spec: DomainSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(spec.build(3).unwrap(), d);
    }

    #[test]
    fn rejects_vortex_outside_the_domain() {
        let json = r#"{
            "dimension": 2,
            "domain": {"kind": "box", "size": 2},
            "vortices": [{"point": [5, 0], "multiplicity": 1}],
            "lambda": 1.0, "p": 0
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.setup().is_err());
    }

    #[test]
    fn rejects_a_shift_below_the_floor() {
        let json = r#"{
            "dimension": 2, "domain": {"kind": "box", "size": 2},
            "lambda": 1.0, "p": 1, "shift": 4.0
        }"#;
        let cfg: RunConfig = serde_json::from_str(json).unwrap();
        assert!(cfg.setup().is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let json = r#"{"dimension": 2, "domain": {"kind": "box", "size": 2}, "lambda": 1.0, "p": 0, "lamda": 2}"#;
        assert!(serde_json::from_str::<RunConfig>(json).is_err());
    }

    #[test]
    fn exhaust_config_checks_the_schedule() {
        let ok = r#"{"dimension": 2, "radii": [2, 4, 8], "vortices": [{"point": [0,0], "multiplicity": 1}], "lambda": 1, "p": 0}"#;
        let cfg: ExhaustConfig = serde_json::from_str(ok).unwrap();
        let setup = cfg.setup().unwrap();
        assert_eq!(setup.schedule.shape, Shape::Box);
        assert_eq!(setup.options.tol_global, 1e-5);

        let bad = r#"{"dimension": 2, "radii": [4, 2], "lambda": 1, "p": 0}"#;
        let cfg: ExhaustConfig = serde_json::from_str(bad).unwrap();
        assert!(cfg.setup().is_err());
    }
}
