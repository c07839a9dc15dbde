//! JSON scene files shared by the command-line tools.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{BuildOptions, ConnectionError, FuchsianConnection, PoleSpec, SpherePoint, DEFAULT_SWITCH_RADIUS};
use crate::geodesic::TraceOptions;
use crate::omega::ClassifyBudget;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },
    #[error("pole {index}: {message}")]
    Pole { index: usize, message: String },
    #[error("residues sum to {sum}; on the sphere the residues (including infinity) must sum to -2")]
    ResidueSum { sum: f64 },
    #[error("invalid connection: {0}")]
    Connection(ConnectionError),
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// A point as `{"re": .., "im": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Pt {
    pub re: f64,
    pub im: f64,
}

impl Pt {
    pub fn new(re: f64, im: f64) -> Self {
        Pt { re, im }
    }

    pub fn c(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

impl From<Complex64> for Pt {
    fn from(z: Complex64) -> Self {
        Pt { re: z.re, im: z.im }
    }
}

/// `{"re", "im", "residue"}` for a finite pole, `{"at": "inf", "residue"}`
/// for the pole at infinity. `residue_im` is only accepted together with
/// `non_real_periods`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoleEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub at: Option<String>,
    pub residue: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residue_im: Option<f64>,
}

impl PoleEntry {
    pub fn finite(re: f64, im: f64, residue: f64) -> Self {
        PoleEntry { re: Some(re), im: Some(im), at: None, residue, residue_im: None }
    }

    pub fn infinity(residue: f64) -> Self {
        PoleEntry { re: None, im: None, at: Some("inf".into()), residue, residue_im: None }
    }

    fn spec(&self, index: usize) -> Result<PoleSpec, ConfigError> {
        let err = |m: &str| ConfigError::Pole { index, message: m.to_string() };
        let location = match (&self.at, self.re, self.im) {
            (Some(a), None, None) if a == "inf" => SpherePoint::Infinity,
            (Some(_), None, None) => return Err(err("\"at\" must be \"inf\"")),
            (None, Some(re), im) => SpherePoint::finite(re, im.unwrap_or(0.0)),
            (None, None, _) => return Err(err("needs \"re\"/\"im\" or \"at\": \"inf\"")),
            _ => return Err(err("give either coordinates or \"at\", not both")),
        };
        Ok(PoleSpec::complex(location, Complex64::new(self.residue, self.residue_im.unwrap_or(0.0))))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConnectionSpec {
    pub poles: Vec<PoleEntry>,
    #[serde(default = "default_switch")]
    pub switch_radius: f64,
    #[serde(default)]
    pub non_real_periods: bool,
}

fn default_switch() -> f64 {
    DEFAULT_SWITCH_RADIUS
}

impl ConnectionSpec {
    pub fn build(&self) -> Result<FuchsianConnection, ConfigError> {
        let specs = self.poles.iter().enumerate().map(|(i, p)| p.spec(i)).collect::<Result<Vec<_>, _>>()?;
        let opts = BuildOptions { allow_non_real_periods: self.non_real_periods, switch_radius: self.switch_radius, ..Default::default() };
        FuchsianConnection::build_with(&specs, opts).map_err(|e| match e {
            ConnectionError::SumMismatch { sum } => ConfigError::ResidueSum { sum },
            other => ConfigError::Connection(other),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCondition {
    pub z: Pt,
    pub v: Pt,
    pub t_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub center: Pt,
    pub half_width: f64,
}

impl Default for Window {
    fn default() -> Self {
        Window { center: Pt::default(), half_width: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl Default for ImageSize {
    fn default() -> Self {
        ImageSize { width: 800, height: 800 }
    }
}

/// Grid of launch points for phase portraits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PortraitSpec {
    /// Launch points per side of the window.
    pub grid: usize,
    /// Launch directions per point.
    pub directions: usize,
    pub t_max: f64,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        PortraitSpec { grid: 6, directions: 2, t_max: 20.0 }
    }
}

/// Parameters of the verification suites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Residues for the closed-form suite.
    pub rhos: Vec<f64>,
    /// Random geodesics per residue.
    pub samples: usize,
    /// Random chart polygons.
    pub polygons: usize,
    /// Launch grid for the saddle-connection search.
    pub saddle_grid: usize,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { rhos: vec![-0.5, 0.5, 1.0, 2.5], samples: 20, polygons: 50, saddle_grid: 180 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub connection: ConnectionSpec,
    #[serde(default)]
    pub initial: Vec<InitialCondition>,
    #[serde(default)]
    pub integrator: TraceOptions,
    #[serde(default)]
    pub classification: ClassifyBudget,
    #[serde(default)]
    pub window: Window,
    #[serde(default)]
    pub image: ImageSize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub portrait: PortraitSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

/// Validation outcome that is not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub poles: Vec<PoleSpec>,
    /// Poles outside the render window.
    pub outside_window: Vec<usize>,
    pub notes: Vec<String>,
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        serde_json::from_str(text).map_err(|e| ConfigError::Parse { line: e.line(), column: e.column(), message: e.to_string() })
    }

    pub fn load(path: &str) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene serialises")
    }

    /// Connection plus geometric sanity checks.
    pub fn validate(&self) -> Result<(FuchsianConnection, ValidationReport), ConfigError> {
        let conn = self.connection.build()?;
        if !(self.window.half_width > 0.0 && self.window.half_width.is_finite()) {
            return Err(ConfigError::Invalid("window.half_width must be positive".into()));
        }
        if self.image.width == 0 || self.image.height == 0 {
            return Err(ConfigError::Invalid("image size must be positive".into()));
        }
        for (i, ic) in self.initial.iter().enumerate() {
            let (z, v) = (ic.z.c(), ic.v.c());
            if !(z.re.is_finite() && z.im.is_finite() && v.norm().is_finite()) || v.norm() == 0.0 || !(ic.t_max > 0.0) {
                return Err(ConfigError::Invalid(format!("initial[{i}]: need finite z, nonzero v and t_max > 0")));
            }
            if conn.finite_poles().any(|(p, _)| (p - z).norm() < 1e-12) {
                return Err(ConfigError::Invalid(format!("initial[{i}] starts at a pole")));
            }
        }
        let c = self.window.center.c();
        let hw = self.window.half_width;
        let mut outside = Vec::new();
        let mut notes = Vec::new();
        for (i, p) in conn.poles().iter().enumerate() {
            match p.location {
                SpherePoint::Finite(z) if (z.re - c.re).abs() > hw || (z.im - c.im).abs() > hw => {
                    outside.push(i);
                    notes.push(format!("pole {i} at {} lies outside the window", p.location));
                }
                SpherePoint::Infinity => notes.push(format!("pole {i} at infinity (residue {}) drawn in the inset", p.rho())),
                _ => {}
            }
        }
        let sum: f64 = conn.poles().iter().map(|p| p.rho()).sum();
        notes.push(format!("residue sum {sum}"));
        Ok((conn.clone(), ValidationReport { poles: conn.poles().to_vec(), outside_window: outside, notes }))
    }

    /// Integrator options with an optional step-budget override.
    pub fn trace_options(&self, budget_steps: Option<usize>) -> TraceOptions {
        let mut o = self.integrator.clone();
        if let Some(n) = budget_steps {
            o.max_steps = n;
        }
        o
    }
}
