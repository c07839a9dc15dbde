//! Fuchsian meromorphic connections on the Riemann sphere.
//!
//! A connection is stored as its list of poles with residues. In the
//! standard chart `z` the local representation is the rational function
//! `f(z) = Σ ρ_j / (z − p_j)` over the finite poles; in the chart
//! `w = 1/z` it is `f_∞(w) = −f(1/w)/w² − 2/w`.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance of the genus-zero residue identity `Σ ρ = −2`.
pub const RESIDUE_SUM_TOL: f64 = 1e-12;
/// Evaluating a local representation closer than this to a pole fails.
pub const POLE_EVAL_TOL: f64 = 1e-12;
/// A loop must keep at least this distance from every pole.
pub const LOOP_POLE_CLEARANCE: f64 = 1e-9;
/// Default radius `|z|` at which a trajectory switches to the `w = 1/z` chart.
pub const DEFAULT_SWITCH_RADIUS: f64 = 10.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConnectionError {
    #[error("residues sum to {sum} but must sum to -2 (residue identity 2g-2 on the sphere)")]
    SumMismatch { sum: f64 },
    #[error("duplicate pole at {0}")]
    DuplicatePole(SpherePoint),
    #[error("residue {0} at {1} is not real (enable non-real periods to allow it)")]
    NonRealResidue(Complex64, SpherePoint),
    #[error("non-finite value in pole specification")]
    NonFinite,
    #[error("a connection on the sphere needs at least one pole")]
    NoPoles,
    #[error("chart switch radius must be positive and finite")]
    BadSwitchRadius,
    #[error("evaluation at a pole ({0})")]
    EvalAtPole(Complex64),
    #[error("loop passes within {LOOP_POLE_CLEARANCE} of the pole at {0}")]
    LoopThroughPole(Complex64),
    #[error("loop is not closed or has fewer than 3 vertices")]
    OpenLoop,
    #[error("zero order in k-differential factor at {0}")]
    InvalidOrder(Complex64),
    #[error("duplicate root {0} in k-differential")]
    DuplicateRoot(Complex64),
    #[error("k must be a positive integer")]
    InvalidK,
}

/// A point of the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    pub fn finite(re: f64, im: f64) -> Self {
        SpherePoint::Finite(Complex64::new(re, im))
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_valid(&self) -> bool {
        match self {
            SpherePoint::Finite(z) => z.re.is_finite() && z.im.is_finite(),
            SpherePoint::Infinity => true,
        }
    }

    /// Coordinate of the point in `chart`, if it lies in that chart.
    pub fn in_chart(&self, chart: Chart) -> Option<Complex64> {
        match (chart, *self) {
            (Chart::Standard, SpherePoint::Finite(z)) => Some(z),
            (Chart::Standard, SpherePoint::Infinity) => None,
            (Chart::Infinity, SpherePoint::Infinity) => Some(Complex64::new(0.0, 0.0)),
            (Chart::Infinity, SpherePoint::Finite(z)) => {
                if z.norm() == 0.0 {
                    None
                } else {
                    Some(z.inv())
                }
            }
        }
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}", fmt_complex(*z)),
            SpherePoint::Infinity => write!(f, "inf"),
        }
    }
}

pub(crate) fn fmt_complex(z: Complex64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else if z.re == 0.0 {
        format!("{}i", z.im)
    } else if z.im < 0.0 {
        format!("{}-{}i", z.re, -z.im)
    } else {
        format!("{}+{}i", z.re, z.im)
    }
}

/// One of the two charts covering the sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// `z`, the affine coordinate.
    Standard,
    /// `w = 1/z`, centred at infinity.
    Infinity,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Standard => Chart::Infinity,
            Chart::Infinity => Chart::Standard,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleSpec {
    pub location: SpherePoint,
    pub residue: Complex64,
}

impl PoleSpec {
    pub fn new(location: SpherePoint, residue: f64) -> Self {
        PoleSpec { location, residue: Complex64::new(residue, 0.0) }
    }

    pub fn at(re: f64, im: f64, residue: f64) -> Self {
        Self::new(SpherePoint::finite(re, im), residue)
    }

    pub fn at_infinity(residue: f64) -> Self {
        Self::new(SpherePoint::Infinity, residue)
    }

    pub fn complex(location: SpherePoint, residue: Complex64) -> Self {
        PoleSpec { location, residue }
    }

    /// Real part of the residue.
    pub fn rho(&self) -> f64 {
        self.residue.re
    }
}

/// Construction switches for [`FuchsianConnection::build_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    /// Accept complex residues. Metric and Teichmüller operations refuse
    /// such connections.
    pub allow_non_real_periods: bool,
    /// Do not materialise an implied pole at infinity whose residue is exactly zero.
    pub minimal: bool,
    pub switch_radius: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { allow_non_real_periods: false, minimal: false, switch_radius: DEFAULT_SWITCH_RADIUS }
    }
}

/// A Fuchsian meromorphic connection on `ℙ¹`, immutable after construction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FuchsianConnection {
    poles: Vec<PoleSpec>,
    switch_radius: f64,
    real_periods: bool,
}

impl FuchsianConnection {
    /// Builds a connection with real residues; an absent pole at infinity
    /// gets the residue forced by `Σ ρ = −2`.
    pub fn build(poles: &[PoleSpec]) -> Result<Self, ConnectionError> {
        Self::build_with(poles, BuildOptions::default())
    }

    pub fn build_with(poles: &[PoleSpec], opts: BuildOptions) -> Result<Self, ConnectionError> {
        if !(opts.switch_radius.is_finite() && opts.switch_radius > 0.0) {
            return Err(ConnectionError::BadSwitchRadius);
        }
        let mut out: Vec<PoleSpec> = Vec::with_capacity(poles.len() + 1);
        for p in poles {
            if !p.location.is_valid() || !p.residue.re.is_finite() || !p.residue.im.is_finite() {
                return Err(ConnectionError::NonFinite);
            }
            if p.residue.im != 0.0 && !opts.allow_non_real_periods {
                return Err(ConnectionError::NonRealResidue(p.residue, p.location));
            }
            if out.iter().any(|q| q.location == p.location) {
                return Err(ConnectionError::DuplicatePole(p.location));
            }
            out.push(*p);
        }
        let sum: Complex64 = out.iter().map(|p| p.residue).sum();
        let has_inf = out.iter().any(|p| p.location.is_infinity());
        if has_inf {
            let dev = (sum + 2.0).norm();
            if dev > RESIDUE_SUM_TOL {
                return Err(ConnectionError::SumMismatch { sum: sum.re });
            }
        } else {
            let implied = Complex64::new(-2.0, 0.0) - sum;
            if !(opts.minimal && implied == Complex64::new(0.0, 0.0)) {
                out.push(PoleSpec::complex(SpherePoint::Infinity, implied));
            }
        }
        if out.is_empty() {
            return Err(ConnectionError::NoPoles);
        }
        let real_periods = out.iter().all(|p| p.residue.im.abs() <= RESIDUE_SUM_TOL);
        Ok(FuchsianConnection { poles: out, switch_radius: opts.switch_radius, real_periods })
    }

    pub fn poles(&self) -> &[PoleSpec] {
        &self.poles
    }

    pub fn switch_radius(&self) -> f64 {
        self.switch_radius
    }

    pub fn with_switch_radius(mut self, radius: f64) -> Self {
        assert!(radius.is_finite() && radius > 0.0);
        self.switch_radius = radius;
        self
    }

    /// All residues real (equivalently, monodromy in the unit circle).
    pub fn has_real_periods(&self) -> bool {
        self.real_periods
    }

    pub fn residue_sum(&self) -> Complex64 {
        self.poles.iter().map(|p| p.residue).sum()
    }

    /// Residue at infinity, zero when the pole was omitted in minimal form.
    pub fn residue_at_infinity(&self) -> Complex64 {
        self.poles
            .iter()
            .find(|p| p.location.is_infinity())
            .map(|p| p.residue)
            .unwrap_or_default()
    }

    pub fn finite_poles(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        self.poles.iter().filter_map(|p| p.location.as_finite().map(|z| (z, p.residue)))
    }

    pub fn pole_index(&self, location: SpherePoint) -> Option<usize> {
        self.poles.iter().position(|p| p.location == location)
    }

    /// `f(z)` in the standard chart.
    pub fn f_standard(&self, z: Complex64) -> Complex64 {
        self.finite_poles().map(|(p, rho)| rho / (z - p)).sum()
    }

    /// `f_∞(w)` in the infinity chart.
    pub fn f_infinity(&self, w: Complex64) -> Complex64 {
        // -f(1/w)/w² = -Σ ρ_j / (w (1 - p_j w)), evaluated without forming 1/w.
        let mut acc = Complex64::new(0.0, 0.0);
        for (p, rho) in self.finite_poles() {
            acc -= rho / (w * (1.0 - p * w));
        }
        acc - 2.0 / w
    }

    /// Local representation in `chart`, failing within [`POLE_EVAL_TOL`] of a pole.
    pub fn local_rep(&self, chart: Chart, point: Complex64) -> Result<Complex64, ConnectionError> {
        if let Some(d) = self.distance_to_nearest_pole(chart, point) {
            if d.0 <= POLE_EVAL_TOL {
                return Err(ConnectionError::EvalAtPole(point));
            }
        }
        Ok(self.eval_unchecked(chart, point))
    }

    pub(crate) fn eval_unchecked(&self, chart: Chart, point: Complex64) -> Complex64 {
        match chart {
            Chart::Standard => self.f_standard(point),
            Chart::Infinity => self.f_infinity(point),
        }
    }

    /// Pole coordinates visible in `chart`, with their index in [`Self::poles`].
    pub fn poles_in_chart(&self, chart: Chart) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        self.poles
            .iter()
            .enumerate()
            .filter_map(move |(i, p)| p.location.in_chart(chart).map(|c| (i, c)))
    }

    /// Distance (in chart coordinates) to the closest pole and its index.
    pub fn distance_to_nearest_pole(&self, chart: Chart, point: Complex64) -> Option<(f64, usize)> {
        self.poles_in_chart(chart)
            .map(|(i, c)| ((point - c).norm(), i))
            .min_by(|a, b| a.0.total_cmp(&b.0))
    }

    /// Monodromy `exp(2πi Σ wind_j ρ_j)` of a closed loop in the standard chart.
    pub fn monodromy_of_loop(&self, path: &LoopPath) -> Result<Complex64, ConnectionError> {
        let mut phase = Complex64::new(0.0, 0.0);
        for (p, rho) in self.finite_poles() {
            let wind = path.winding_number(p)?;
            phase += rho * wind as f64;
        }
        Ok((Complex64::i() * TAU * phase).exp())
    }

    /// Connection adapted to the `k`-differential `q = Π (z − a_i)^{m_i} dz^k`.
    ///
    /// `numerator_roots` carry positive orders and `denominator_roots`
    /// positive orders of poles of `q`; each root gets residue `±m/k` and
    /// infinity the residue forced by the identity.
    pub fn from_k_differential(
        numerator_roots: &[(Complex64, i32)],
        denominator_roots: &[(Complex64, i32)],
        k: u32,
    ) -> Result<Self, ConnectionError> {
        if k == 0 {
            return Err(ConnectionError::InvalidK);
        }
        let mut poles: Vec<PoleSpec> = Vec::new();
        let factors = numerator_roots
            .iter()
            .map(|&(a, m)| (a, m))
            .chain(denominator_roots.iter().map(|&(a, m)| (a, -m)));
        for (a, m) in factors {
            if m == 0 {
                return Err(ConnectionError::InvalidOrder(a));
            }
            if !(a.re.is_finite() && a.im.is_finite()) {
                return Err(ConnectionError::NonFinite);
            }
            let loc = SpherePoint::Finite(a);
            if poles.iter().any(|p| p.location == loc) {
                return Err(ConnectionError::DuplicateRoot(a));
            }
            poles.push(PoleSpec::new(loc, m as f64 / k as f64));
        }
        Self::build(&poles)
    }
}

/// A closed polyline in the standard chart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopPath {
    vertices: Vec<Complex64>,
    reversed: bool,
}

impl LoopPath {
    /// The first and last vertices must coincide.
    pub fn new(vertices: Vec<Complex64>) -> Result<Self, ConnectionError> {
        if vertices.len() < 4 || vertices.first() != vertices.last() {
            return Err(ConnectionError::OpenLoop);
        }
        Ok(LoopPath { vertices, reversed: false })
    }

    /// Closes the polyline by repeating the first vertex if needed.
    pub fn closing(mut vertices: Vec<Complex64>) -> Result<Self, ConnectionError> {
        if let (Some(&a), Some(&b)) = (vertices.first(), vertices.last()) {
            if a != b {
                vertices.push(a);
            }
        }
        Self::new(vertices)
    }

    /// Counter-clockwise circle sampled with `n` edges.
    pub fn circle(center: Complex64, radius: f64, n: usize) -> Self {
        let n = n.max(3);
        let mut v: Vec<Complex64> = (0..n)
            .map(|k| center + Complex64::from_polar(radius, TAU * k as f64 / n as f64))
            .collect();
        v.push(v[0]);
        LoopPath { vertices: v, reversed: false }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn is_reversed(&self) -> bool {
        self.reversed
    }

    /// Vertices in traversal order.
    pub fn vertices(&self) -> Vec<Complex64> {
        let mut v = self.vertices.clone();
        if self.reversed {
            v.reverse();
        }
        v
    }

    /// Splits every edge into `factor` equal pieces.
    pub fn refined(&self, factor: usize) -> Self {
        let factor = factor.max(1);
        let mut v = Vec::with_capacity((self.vertices.len() - 1) * factor + 1);
        for e in self.vertices.windows(2) {
            for k in 0..factor {
                v.push(e[0] + (e[1] - e[0]) * (k as f64 / factor as f64));
            }
        }
        v.push(*self.vertices.last().unwrap());
        LoopPath { vertices: v, reversed: self.reversed }
    }

    /// Winding number around `p` by signed crossings of a ray from `p`.
    /// The ray direction is jittered whenever it grazes a vertex.
    pub fn winding_number(&self, p: Complex64) -> Result<i64, ConnectionError> {
        for e in self.vertices.windows(2) {
            if segment_distance(p, e[0], e[1]) <= LOOP_POLE_CLEARANCE {
                return Err(ConnectionError::LoopThroughPole(p));
            }
        }
        let scale = self
            .vertices
            .iter()
            .map(|v| (v - p).norm())
            .fold(0.0_f64, f64::max)
            .max(1.0);
        // Irrational starting angle; bumped by the golden angle on degeneracy.
        let mut theta = std::f64::consts::FRAC_1_PI;
        for _ in 0..64 {
            if let Some(w) = ray_crossings(&self.vertices, p, Complex64::from_polar(1.0, theta), scale) {
                return Ok(if self.reversed { -w } else { w });
            }
            theta = (theta + 2.399_963_229_728_653) % TAU;
        }
        // Fall back on the discrete argument sum.
        let total: f64 = self
            .vertices
            .windows(2)
            .map(|e| ((e[1] - p) / (e[0] - p)).arg())
            .sum();
        let w = (total / TAU).round() as i64;
        Ok(if self.reversed { -w } else { w })
    }
}

fn ray_crossings(vertices: &[Complex64], p: Complex64, dir: Complex64, scale: f64) -> Option<i64> {
    let eps = 1e-12 * scale;
    let mut count = 0i64;
    for e in vertices.windows(2) {
        // Rotate so the ray becomes the positive real axis.
        let a = (e[0] - p) / dir;
        let b = (e[1] - p) / dir;
        if (a.im.abs() <= eps && a.re > -eps) || (b.im.abs() <= eps && b.re > -eps) {
            return None;
        }
        if (a.im > 0.0) != (b.im > 0.0) {
            let x = a.re + (b.re - a.re) * (-a.im) / (b.im - a.im);
            if x.abs() <= eps {
                return None;
            }
            if x > 0.0 {
                count += if b.im > a.im { 1 } else { -1 };
            }
        }
    }
    Some(count)
}

/// Euclidean distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / len2;
    let s = s.clamp(0.0, 1.0);
    (p - (a + d * s)).norm()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_tau(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_pi(a: f64) -> f64 {
    let r = wrap_tau(a + PI) - PI;
    if r <= -PI {
        r + TAU
    } else {
        r
    }
}
