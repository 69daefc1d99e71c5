//! Experiment configuration (TOML).
//!
//! ```toml
//! phi = "z^4"
//! output = "out"
//!
//! [system]
//! builtin = "lorenz"          # or: variables = [...], components = [...]
//! parameters = { beta = "8/3", sigma = 10, r = 28 }
//!
//! [bound]
//! degrees = [4, 6]
//!
//! [orbit]
//! symbols = ["AB", "AABABB"]
//!
//! [region]
//! thresholds = [3000]
//! resolution = 121
//!
//! [trace]
//! thresholds = [1500, 3000, 6000]
//! ```
//!
//! Parameters and polynomial components may be numbers or expressions;
//! components may refer to the variables and to the parameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ergobound_core::certify::{GridBox, GridShape};
use ergobound_core::dynamics::{CrossingDirection, SectionSpec};
use ergobound_core::sos::Prescaling;
use ergobound_core::{PolySystem, Polynomial};
use serde::Deserialize;

use crate::expr::{parse_constant, parse_polynomial, ExprError};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("in {context}: {source}")]
    Expr { context: String, source: ExprError },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
enum Scalar {
    Num(f64),
    Expr(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSystem {
    builtin: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, Scalar>,
    variables: Option<Vec<String>>,
    components: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBound {
    degrees: Option<Vec<u32>>,
    scales: Option<Vec<f64>>,
    shifts: Option<Vec<f64>>,
    tolerance: Option<f64>,
    max_iterations: Option<usize>,
    ball_radius: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSection {
    normal: Vec<f64>,
    offset: Scalar,
    direction: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOrbit {
    #[serde(default)]
    symbols: Vec<String>,
    section: Option<RawSection>,
    symbol_axis: Option<usize>,
    seed_run: Option<f64>,
    seed_tol: Option<f64>,
    spinup: Option<f64>,
    start: Option<Vec<f64>>,
    max_seeds: Option<usize>,
    integrator_tol: Option<f64>,
    tol: Option<f64>,
    max_iterations: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Resolution {
    Uniform(usize),
    PerAxis(Vec<usize>),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRegion {
    lo: Option<Vec<f64>>,
    hi: Option<Vec<f64>>,
    resolution: Option<Resolution>,
    thresholds: Option<Vec<f64>>,
    degrees: Option<Vec<u32>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    orbits: Option<Vec<String>>,
    degrees: Option<Vec<u32>>,
    thresholds: Option<Vec<f64>>,
    interior: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    phi: String,
    output: Option<PathBuf>,
    system: RawSystem,
    #[serde(default)]
    bound: RawBound,
    #[serde(default)]
    orbit: RawOrbit,
    #[serde(default)]
    region: RawRegion,
    #[serde(default)]
    trace: RawTrace,
}

#[derive(Clone, Debug)]
pub struct BoundSettings {
    pub degrees: Vec<u32>,
    pub prescaling: Prescaling,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub ball_radius: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct OrbitSettings {
    pub symbols: Vec<String>,
    pub section: Option<SectionSpec>,
    pub symbol_axis: usize,
    pub seed_run: f64,
    pub seed_tol: f64,
    pub spinup: f64,
    pub start: [f64; 3],
    pub max_seeds: usize,
    pub integrator_tol: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct RegionSettings {
    pub shape: Option<GridShape>,
    pub thresholds: Vec<f64>,
    pub degrees: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct TraceSettings {
    pub orbits: Vec<String>,
    pub degrees: Vec<u32>,
    pub thresholds: Vec<f64>,
    pub interior: usize,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub system_name: String,
    pub system: PolySystem,
    pub phi: Polynomial,
    pub output: PathBuf,
    pub bound: BoundSettings,
    pub orbit: OrbitSettings,
    pub region: RegionSettings,
    pub trace: TraceSettings,
}

fn check_degrees(degrees: &[u32]) -> Result<(), ConfigError> {
    if let Some(d) = degrees.iter().find(|&&d| d < 2 || d % 2 != 0) {
        return Err(invalid(format!("auxiliary degrees must be even and at least 2, got {}", d)));
    }
    Ok(())
}

fn check_thresholds(ms: &[f64]) -> Result<(), ConfigError> {
    if let Some(m) = ms.iter().find(|m| !(**m > 0.0) || !m.is_finite()) {
        return Err(invalid(format!("thresholds M must be positive, got {}", m)));
    }
    Ok(())
}

fn scalar(s: &Scalar, consts: &[(String, f64)], what: &str) -> Result<f64, ConfigError> {
    match s {
        Scalar::Num(v) => Ok(*v),
        Scalar::Expr(e) => parse_constant(e, consts).map_err(|source| ConfigError::Expr {
            context: what.to_string(),
            source,
        }),
    }
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let raw: RawConfig = toml::from_str(text)?;
        let mut consts: Vec<(String, f64)> = Vec::new();
        for (name, v) in &raw.system.parameters {
            let value = scalar(v, &consts, &format!("parameter {}", name))?;
            if !value.is_finite() {
                return Err(invalid(format!("parameter {} is not finite", name)));
            }
            consts.push((name.clone(), value));
        }
        let param = |name: &str, default: f64| consts.iter().find(|(n, _)| n == name).map_or(default, |p| p.1);
        let (system_name, system) = match (&raw.system.builtin, &raw.system.components) {
            (Some(b), None) if b == "lorenz" => {
                if let Some(extra) = consts.iter().find(|(n, _)| !["beta", "sigma", "r"].contains(&n.as_str())) {
                    return Err(invalid(format!("lorenz has no parameter {}", extra.0)));
                }
                let (beta, sigma, r) = (param("beta", 8.0 / 3.0), param("sigma", 10.0), param("r", 28.0));
                ("lorenz".to_string(), PolySystem::lorenz(beta, sigma, r))
            }
            (Some(b), None) => return Err(invalid(format!("unknown builtin system {:?}", b))),
            (None, Some(comps)) => {
                let vars = raw
                    .system
                    .variables
                    .clone()
                    .ok_or_else(|| invalid("inline systems need `variables`"))?;
                if vars.len() != comps.len() || vars.is_empty() {
                    return Err(invalid("need one component per variable"));
                }
                let polys = comps
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        parse_polynomial(c, &vars, &consts).map_err(|source| ConfigError::Expr {
                            context: format!("component {}", i + 1),
                            source,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let sys = PolySystem::new(polys, vars).map_err(|e| invalid(e.to_string()))?;
                ("inline".to_string(), sys.with_parameters(consts.clone()))
            }
            _ => return Err(invalid("give either `builtin` or `components`, not both")),
        };
        let d = system.dim();
        let vars = system.variables().to_vec();
        let phi = parse_polynomial(&raw.phi, &vars, &consts).map_err(|source| ConfigError::Expr {
            context: "phi".into(),
            source,
        })?;
        let lorenz = system_name == "lorenz";

        let b = raw.bound;
        let degrees = b.degrees.unwrap_or_else(|| vec![4, 6]);
        check_degrees(&degrees)?;
        let prescaling = match (b.scales, b.shifts) {
            (None, None) if lorenz => Prescaling::lorenz_default(),
            (None, None) => Prescaling::identity(d),
            (scales, shifts) => {
                let scales = scales.unwrap_or_else(|| vec![1.0; d]);
                let shifts = shifts.unwrap_or_else(|| vec![0.0; d]);
                if scales.len() != d || shifts.len() != d || scales.iter().any(|s| !(*s > 0.0)) {
                    return Err(invalid("scales must be positive with one scale and shift per variable"));
                }
                Prescaling { scales, shifts }
            }
        };
        let bound = BoundSettings {
            degrees: degrees.clone(),
            prescaling,
            tolerance: b.tolerance.unwrap_or(1e-9),
            max_iterations: b.max_iterations.unwrap_or(200),
            ball_radius: b.ball_radius,
        };

        let o = raw.orbit;
        let section = match o.section {
            Some(s) => {
                let offset = scalar(&s.offset, &consts, "section offset")?;
                let direction = match s.direction.as_deref() {
                    None | Some("down") | Some("decreasing") => CrossingDirection::Decreasing,
                    Some("up") | Some("increasing") => CrossingDirection::Increasing,
                    Some("both") => CrossingDirection::Both,
                    Some(other) => return Err(invalid(format!("unknown section direction {:?}", other))),
                };
                if s.normal.len() != d {
                    return Err(invalid("section normal needs one entry per variable"));
                }
                Some(SectionSpec::new(s.normal, offset, direction).map_err(|e| invalid(e.to_string()))?)
            }
            None if lorenz => Some(SectionSpec::lorenz_default(param("r", 28.0))),
            None => None,
        };
        for s in &o.symbols {
            if s.is_empty() || !s.chars().all(|c| c == 'A' || c == 'B') {
                return Err(invalid(format!("symbol sequences use A and B only, got {:?}", s)));
            }
        }
        let start = match o.start {
            Some(v) if v.len() == d && d <= 3 => {
                let mut a = [0.0; 3];
                a[..d].copy_from_slice(&v);
                a
            }
            Some(_) => return Err(invalid("orbit start needs one entry per variable (at most 3)")),
            None => [1.0, 1.0, 1.0],
        };
        let orbit = OrbitSettings {
            symbols: o.symbols,
            section,
            symbol_axis: o.symbol_axis.unwrap_or(0),
            seed_run: o.seed_run.unwrap_or(500.0),
            seed_tol: o.seed_tol.unwrap_or(1e-10),
            spinup: o.spinup.unwrap_or(10.0),
            start,
            max_seeds: o.max_seeds.unwrap_or(20),
            integrator_tol: o.integrator_tol.unwrap_or(1e-12),
            tol: o.tol.unwrap_or(1e-10),
            max_iterations: o.max_iterations.unwrap_or(40),
        };
        if orbit.symbol_axis >= d {
            return Err(invalid("symbol_axis out of range"));
        }

        let r = raw.region;
        let domain = match (r.lo, r.hi) {
            (Some(lo), Some(hi)) => Some(GridBox::new(lo, hi).map_err(|e| invalid(format!("region box: {}", e)))?),
            (None, None) if lorenz => Some(GridBox::lorenz_default()),
            (None, None) => None,
            _ => return Err(invalid("region needs both `lo` and `hi`")),
        };
        let resolution = match r.resolution {
            Some(Resolution::Uniform(n)) => vec![n; d],
            Some(Resolution::PerAxis(v)) => v,
            None => vec![121; d],
        };
        let shape = match domain {
            Some(b) if b.dim() == d => Some(GridShape::new(b, resolution).map_err(|e| invalid(e.to_string()))?),
            Some(_) => return Err(invalid("region box dimension differs from the system")),
            None => None,
        };
        let thresholds = r.thresholds.unwrap_or_else(|| vec![3000.0]);
        check_thresholds(&thresholds)?;
        let region_degrees = r.degrees.unwrap_or_else(|| degrees.clone());
        check_degrees(&region_degrees)?;
        let region = RegionSettings {
            shape,
            thresholds,
            degrees: region_degrees,
        };

        let t = raw.trace;
        let trace_thresholds = t.thresholds.unwrap_or_else(|| vec![1500.0, 3000.0, 6000.0]);
        check_thresholds(&trace_thresholds)?;
        let trace_degrees = t.degrees.unwrap_or_else(|| degrees.clone());
        check_degrees(&trace_degrees)?;
        let trace = TraceSettings {
            orbits: t.orbits.unwrap_or_else(|| orbit.symbols.clone()),
            degrees: trace_degrees,
            thresholds: trace_thresholds,
            interior: t.interior.unwrap_or(3),
        };

        Ok(ExperimentConfig {
            system_name,
            system,
            phi,
            output: raw.output.unwrap_or_else(|| PathBuf::from("out")),
            bound,
            orbit,
            region,
            trace,
        })
    }

    /// Replaces every degree list, as `--degree` does.
    pub fn override_degrees(&mut self, degrees: &[u32]) -> Result<(), ConfigError> {
        check_degrees(degrees)?;
        self.bound.degrees = degrees.to_vec();
        self.region.degrees = degrees.to_vec();
        self.trace.degrees = degrees.to_vec();
        Ok(())
    }
}
