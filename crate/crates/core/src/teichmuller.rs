//! Geodesic polygons and the angle-residue identities they satisfy.
//!
//! Internal angles at regular vertices are Euclidean angles between the
//! reversed incoming and the outgoing tangent. At a pole the angle is the
//! difference of the arguments of the two incident critical rays, measured
//! in the chart coordinate; the metric cone angle is `(ρ+1)·v`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{wrap_tau, FuchsianConnection, LoopPath, SpherePoint};
use crate::geodesic::{first_integral, self_intersections, trace, GeodesicState, TraceOptions, Trajectory};
use crate::local::AdaptedChart;
use crate::quad::golden_min;

/// Junction tolerance between consecutive sides at a regular vertex.
pub const JUNCTION_TOL: f64 = 1e-8;
/// Junction tolerance at a pole, where traced sides stop at the pole floor.
pub const POLE_JUNCTION_TOL: f64 = 1e-4;
/// `|sin|` of the largest deviation from a radial approach at a pole.
const CRITICAL_SIN_TOL: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TeichError {
    #[error("side does not end at vertex {0}")]
    NotIncident(usize),
    #[error("side reaches pole vertex {0} non-critically")]
    NotCriticalAtPole(usize),
    #[error("vertex 0 of a chart polygon must be the pole")]
    PoleNotVertexZero,
    #[error("vertex {0} has residue {1} <= -1")]
    VertexResidueTooLow(usize, f64),
    #[error("vertex {0} is not a pole of the connection")]
    UnknownPole(usize),
    #[error("pole {0} lies on the polygon boundary")]
    PoleOnBoundary(usize),
    #[error("polygon needs as many vertices as sides")]
    Shape,
    #[error("no geodesic from the start reached the target within the budget")]
    NotFound,
    #[error("every arc found crosses itself")]
    NonSimpleArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum VertexKind {
    Regular,
    Pole { rho: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolygonVertex {
    pub location: SpherePoint,
    pub kind: VertexKind,
    /// Internal angle in `(0, 2π]`.
    pub angle: f64,
}

impl PolygonVertex {
    fn rho(&self) -> f64 {
        match self.kind {
            VertexKind::Regular => 0.0,
            VertexKind::Pole { rho } => rho,
        }
    }
}

/// One geodesic side as a polyline with end tangents.
#[derive(Debug, Clone, PartialEq)]
pub struct Side {
    pub points: Vec<Complex64>,
    pub start_tangent: Complex64,
    pub end_tangent: Complex64,
    /// Relative drift of the first integral along the side (0 for closed forms).
    pub drift: f64,
}

impl Side {
    pub fn start(&self) -> Complex64 {
        self.points[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.points.last().unwrap()
    }

    /// Whole traced trajectory in standard coordinates.
    pub fn from_trajectory(traj: &Trajectory) -> Side {
        let pts: Vec<(Complex64, Complex64)> = traj
            .samples()
            .iter()
            .filter_map(|s| Some((s.state.std_z()?, s.state.std_v()?)))
            .collect();
        Side {
            points: pts.iter().map(|p| p.0).collect(),
            start_tangent: pts[0].1,
            end_tangent: pts.last().unwrap().1,
            drift: first_integral(traj).1,
        }
    }

    /// Euclidean segment (a geodesic where the connection vanishes).
    pub fn segment(a: Complex64, b: Complex64) -> Side {
        Side { points: vec![a, b], start_tangent: b - a, end_tangent: b - a, drift: 0.0 }
    }

    /// Closed-form geodesic `w = e^{iα} u^{1/(ρ+1)}` of a `(ρ/w) dw` chart,
    /// along the straight segment from `u_a` to `u_b` (arguments in `[0, π)`).
    pub fn chart_arc(rho: f64, alpha: f64, u_a: Complex64, u_b: Complex64, n: usize) -> Side {
        let e = rho + 1.0;
        let rot = Complex64::from_polar(1.0, alpha);
        let map = |u: Complex64| if u.norm() == 0.0 { u } else { rot * u.powf(1.0 / e) };
        let points: Vec<Complex64> = (0..=n).map(|k| map(u_a + (u_b - u_a) * (k as f64 / n as f64))).collect();
        let tangent = |u: Complex64, toward: Complex64| {
            if u.norm() == 0.0 {
                // Leaves the pole along the ray through the far end.
                map(toward) / map(toward).norm()
            } else {
                map(u) * (u_b - u_a) / (e * u)
            }
        };
        Side { start_tangent: tangent(u_a, u_b), end_tangent: tangent(u_b, u_a), points, drift: 0.0 }
    }

    pub fn reversed(&self) -> Side {
        let mut points = self.points.clone();
        points.reverse();
        Side { points, start_tangent: -self.end_tangent, end_tangent: -self.start_tangent, drift: self.drift }
    }

    /// Image under `w ↦ e^{iθ} w`.
    pub fn rotated(&self, theta: f64) -> Side {
        let r = Complex64::from_polar(1.0, theta);
        Side {
            points: self.points.iter().map(|p| p * r).collect(),
            start_tangent: self.start_tangent * r,
            end_tangent: self.end_tangent * r,
            drift: self.drift,
        }
    }
}

/// Which complementary region of the boundary is the polygon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Enclosed {
    /// The bounded side: poles with nonzero winding number.
    Interior,
    /// The side containing infinity.
    Exterior,
}

/// Vertex `j` is where side `j` starts and side `j − 1` ends.
#[derive(Debug, Clone)]
pub struct GeodesicPolygon {
    sides: Vec<Side>,
    locations: Vec<SpherePoint>,
    kinds: Vec<VertexKind>,
    enclosed: Enclosed,
}

/// Coordinates of `z` relative to a vertex, centred there (`1/z` at infinity).
fn local_coord(loc: SpherePoint, z: Complex64) -> Complex64 {
    match loc {
        SpherePoint::Finite(p) => z - p,
        SpherePoint::Infinity => z.inv(),
    }
}

fn local_tangent(loc: SpherePoint, z: Complex64, dz: Complex64) -> Complex64 {
    match loc {
        SpherePoint::Finite(_) => dz,
        SpherePoint::Infinity => -dz / (z * z),
    }
}

fn close_to(loc: SpherePoint, z: Complex64, tol: f64) -> bool {
    match loc {
        SpherePoint::Finite(p) => (z - p).norm() <= tol * (1.0 + p.norm()),
        SpherePoint::Infinity => z.norm() > 0.0 && z.inv().norm() <= tol,
    }
}

/// Internal angle at `location` between the incoming and the outgoing side.
pub fn measure_internal_angle(
    incoming: &Side,
    outgoing: &Side,
    location: SpherePoint,
    kind: VertexKind,
) -> Result<f64, TeichError> {
    measure_at(incoming, outgoing, location, kind, 0)
}

fn measure_at(incoming: &Side, outgoing: &Side, loc: SpherePoint, kind: VertexKind, idx: usize) -> Result<f64, TeichError> {
    match kind {
        VertexKind::Regular => {
            if !close_to(loc, incoming.end(), JUNCTION_TOL) || !close_to(loc, outgoing.start(), JUNCTION_TOL) {
                return Err(TeichError::NotIncident(idx));
            }
            let v = wrap_tau((-incoming.end_tangent / outgoing.start_tangent).arg());
            Ok(if v == 0.0 { TAU } else { v })
        }
        VertexKind::Pole { .. } => {
            if !close_to(loc, incoming.end(), POLE_JUNCTION_TOL) || !close_to(loc, outgoing.start(), POLE_JUNCTION_TOL) {
                return Err(TeichError::NotIncident(idx));
            }
            let ray_in = ray_arg(incoming.points.iter().rev(), loc).ok_or(TeichError::NotIncident(idx))?;
            let ray_out = ray_arg(outgoing.points.iter(), loc).ok_or(TeichError::NotIncident(idx))?;
            // The approach must be radial.
            let check = |z: Complex64, dz: Complex64, sign: f64| {
                let zeta = local_coord(loc, z);
                if zeta.norm() == 0.0 {
                    return true;
                }
                let t = local_tangent(loc, z, dz) * sign;
                let s = (zeta.conj() * t).im / (zeta.norm() * t.norm());
                s.abs() <= CRITICAL_SIN_TOL && (zeta.conj() * t).re > 0.0
            };
            if !check(incoming.end(), incoming.end_tangent, -1.0) || !check(outgoing.start(), outgoing.start_tangent, 1.0) {
                return Err(TeichError::NotCriticalAtPole(idx));
            }
            let v = wrap_tau(ray_in - ray_out);
            Ok(if v < 1e-9 { TAU } else { v })
        }
    }
}

fn ray_arg<'a, I: Iterator<Item = &'a Complex64>>(mut pts: I, loc: SpherePoint) -> Option<f64> {
    pts.find_map(|&z| {
        let zeta = local_coord(loc, z);
        (zeta.norm() > 0.0).then(|| zeta.arg())
    })
}

impl GeodesicPolygon {
    /// Polygon from sides and vertex descriptions. A single closed side with
    /// no vertices is allowed (a periodic geodesic).
    pub fn new(sides: Vec<Side>, vertices: Vec<(SpherePoint, VertexKind)>, enclosed: Enclosed) -> Result<Self, TeichError> {
        let n = sides.len();
        if n == 0 || (vertices.len() != n && !(vertices.is_empty() && n == 1)) {
            return Err(TeichError::Shape);
        }
        if vertices.is_empty() {
            let s = &sides[0];
            if (s.start() - s.end()).norm() > JUNCTION_TOL * (1.0 + s.start().norm()) {
                return Err(TeichError::NotIncident(0));
            }
        }
        for (j, &(loc, kind)) in vertices.iter().enumerate() {
            let tol = match kind {
                VertexKind::Regular => JUNCTION_TOL,
                VertexKind::Pole { .. } => POLE_JUNCTION_TOL,
            };
            let prev = &sides[(j + n - 1) % n];
            if !close_to(loc, prev.end(), tol) || !close_to(loc, sides[j].start(), tol) {
                return Err(TeichError::NotIncident(j));
            }
        }
        let (locations, kinds) = vertices.into_iter().unzip();
        Ok(GeodesicPolygon { sides, locations, kinds, enclosed })
    }

    pub fn sides(&self) -> &[Side] {
        &self.sides
    }

    pub fn enclosed(&self) -> Enclosed {
        self.enclosed
    }

    pub fn vertex_count(&self) -> usize {
        self.locations.len()
    }

    /// Vertices with measured internal angles.
    pub fn vertices(&self) -> Result<Vec<PolygonVertex>, TeichError> {
        let n = self.sides.len();
        (0..self.locations.len())
            .map(|j| {
                let angle = measure_at(&self.sides[(j + n - 1) % n], &self.sides[j], self.locations[j], self.kinds[j], j)?;
                Ok(PolygonVertex { location: self.locations[j], kind: self.kinds[j], angle })
            })
            .collect()
    }

    /// Largest first-integral drift over the sides.
    pub fn max_drift(&self) -> f64 {
        self.sides.iter().map(|s| s.drift).fold(0.0, f64::max)
    }

    /// Boundary polyline, closed.
    pub fn boundary(&self) -> Vec<Complex64> {
        let mut out: Vec<Complex64> = Vec::new();
        for s in &self.sides {
            out.extend_from_slice(&s.points);
        }
        out
    }

    pub fn rotated(&self, theta: f64) -> GeodesicPolygon {
        let rot = |l: SpherePoint| match l {
            SpherePoint::Finite(p) => SpherePoint::Finite(p * Complex64::from_polar(1.0, theta)),
            inf => inf,
        };
        GeodesicPolygon {
            sides: self.sides.iter().map(|s| s.rotated(theta)).collect(),
            locations: self.locations.iter().map(|&l| rot(l)).collect(),
            kinds: self.kinds.clone(),
            enclosed: self.enclosed,
        }
    }
}

/// Both sides of an identity and their difference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FormulaCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// Indices (into the connection's poles) counted as enclosed, when known.
    pub enclosed: Vec<usize>,
    pub enclosed_sum: f64,
}

impl FormulaCheck {
    fn new(lhs: f64, rhs: f64, enclosed: Vec<usize>, enclosed_sum: f64) -> Self {
        FormulaCheck { lhs, rhs, residual: (lhs - rhs).abs(), enclosed, enclosed_sum }
    }
}

/// Polygon inside an adapted chart with the pole as vertex 0:
/// `Σ_{j≥1} (π − v_j) = π + v_0 (ρ+1)`.
pub fn check_chart_polygon(chart: &AdaptedChart, polygon: &GeodesicPolygon) -> Result<FormulaCheck, TeichError> {
    check_chart_polygon_rho(chart.rho(), polygon)
}

/// As [`check_chart_polygon`] for a `(ρ/w) dw` chart given by its residue.
pub fn check_chart_polygon_rho(rho: f64, polygon: &GeodesicPolygon) -> Result<FormulaCheck, TeichError> {
    let is_pole_at_origin = matches!(polygon.kinds.first(), Some(VertexKind::Pole { .. }))
        && matches!(polygon.locations[0], SpherePoint::Finite(p) if p.norm() == 0.0);
    if !is_pole_at_origin {
        return Err(TeichError::PoleNotVertexZero);
    }
    let vs = polygon.vertices()?;
    let lhs: f64 = vs[1..].iter().map(|v| PI - v.angle).sum();
    let rhs = PI + vs[0].angle * (rho + 1.0);
    Ok(FormulaCheck::new(lhs, rhs, Vec::new(), 0.0))
}

/// Geodesic polygon on the sphere: `Σ (π − v_j(ρ_j+1)) = 2π(1 + Σ Re Res)`
/// over the enclosed poles.
pub fn check_p1_formula(conn: &FuchsianConnection, polygon: &GeodesicPolygon) -> Result<FormulaCheck, TeichError> {
    let mut vertex_poles = Vec::new();
    let mut lhs = 0.0;
    let vs = polygon.vertices()?;
    for (j, v) in vs.iter().enumerate() {
        let rho = match v.kind {
            VertexKind::Regular => 0.0,
            VertexKind::Pole { .. } => {
                let idx = conn.pole_index(v.location).ok_or(TeichError::UnknownPole(j))?;
                vertex_poles.push(idx);
                conn.poles()[idx].residue.re
            }
        };
        if rho <= -1.0 {
            return Err(TeichError::VertexResidueTooLow(j, rho));
        }
        lhs += PI - v.angle * (rho + 1.0);
    }
    let enclosed = enclosed_poles(conn, &polygon.boundary(), polygon.enclosed, &vertex_poles)?;
    let sum: f64 = enclosed.iter().map(|&k| conn.poles()[k].residue.re).sum();
    Ok(FormulaCheck::new(lhs, TAU * (1.0 + sum), enclosed, sum))
}

/// Poles on the chosen side of a closed boundary, skipping `skip`.
pub fn enclosed_poles(
    conn: &FuchsianConnection,
    boundary: &[Complex64],
    side: Enclosed,
    skip: &[usize],
) -> Result<Vec<usize>, TeichError> {
    let mut pts = boundary.to_vec();
    if pts.len() > 1 && pts[0] == *pts.last().unwrap() {
        pts.pop();
    }
    let path = LoopPath::closing(pts).map_err(|_| TeichError::Shape)?;
    let mut out = Vec::new();
    for (k, pole) in conn.poles().iter().enumerate() {
        if skip.contains(&k) {
            continue;
        }
        let inside = match pole.location {
            SpherePoint::Infinity => false,
            SpherePoint::Finite(p) => path.winding_number(p).map_err(|_| TeichError::PoleOnBoundary(k))? != 0,
        };
        if inside == (side == Enclosed::Interior) {
            out.push(k);
        }
    }
    Ok(out)
}

/// Part topology for the general identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartTopology {
    /// Number of free boundary components, at least 1.
    pub m_f: usize,
    pub genus_filling: usize,
    pub enclosed_residues: Vec<f64>,
}

impl PartTopology {
    fn euler_term(&self) -> f64 {
        2.0 - self.m_f as f64 - 2.0 * self.genus_filling as f64 + self.enclosed_residues.iter().sum::<f64>()
    }
}

/// `Σ (π − (ρ_j+1) v_j) = 2π (2 − m_f − 2g + Σ Re Res)`.
pub fn check_general_formula(topology: &PartTopology, vertices: &[PolygonVertex]) -> FormulaCheck {
    let lhs: f64 = vertices.iter().map(|v| PI - (v.rho() + 1.0) * v.angle).sum();
    FormulaCheck::new(lhs, TAU * topology.euler_term(), Vec::new(), topology.enclosed_residues.iter().sum())
}

/// Regular boundary with external angles `ε_j`: `Σ ε_j = 2π (2 − m_f − 2g + Σ Re Res)`.
pub fn check_regular_formula(topology: &PartTopology, external_angles: &[f64]) -> FormulaCheck {
    FormulaCheck::new(external_angles.iter().sum(), TAU * topology.euler_term(), Vec::new(), topology.enclosed_residues.iter().sum())
}

/// Two-gon with pole vertices: `(ρ_0+1) v_0 + (ρ_1+1) v_1 = −2π Σ Re Res`.
pub fn check_two_gon(v0: PolygonVertex, v1: PolygonVertex, enclosed_residues: &[f64]) -> FormulaCheck {
    let lhs = (v0.rho() + 1.0) * v0.angle + (v1.rho() + 1.0) * v1.angle;
    let sum: f64 = enclosed_residues.iter().sum();
    FormulaCheck::new(lhs, -TAU * sum, Vec::new(), sum)
}

/// Random polygon in a `(ρ/w) dw` chart with the pole as vertex 0.
///
/// Built in the flat coordinate `u = w^{ρ+1}` as a star-shaped polygon
/// inside a wedge of opening `(ρ+1)v_0 < π`, then mapped back.
/// Returns the polygon and the prescribed `v_0`.
pub fn generate_chart_polygon<R: Rng>(rho: f64, rng: &mut R) -> (GeodesicPolygon, f64) {
    let e = rho + 1.0;
    let v0_max = (PI / e).min(TAU);
    let v0 = rng.gen_range(0.1..0.95) * v0_max;
    let wedge = e * v0;
    let alpha = rng.gen_range(0.0..TAU);
    let regular = rng.gen_range(2..=6);
    let mut angles: Vec<f64> = (0..regular - 2).map(|_| rng.gen_range(0.02..0.98) * wedge).collect();
    angles.sort_by(f64::total_cmp);
    let mut us = vec![Complex64::new(rng.gen_range(0.3..1.0), 0.0)];
    for a in angles {
        us.push(Complex64::from_polar(rng.gen_range(0.3..1.0), a));
    }
    us.push(Complex64::from_polar(rng.gen_range(0.3..1.0), wedge));

    let zero = Complex64::new(0.0, 0.0);
    let n = 48;
    let mut sides = vec![Side::chart_arc(rho, alpha, zero, us[0], n)];
    for w in us.windows(2) {
        sides.push(Side::chart_arc(rho, alpha, w[0], w[1], n));
    }
    sides.push(Side::chart_arc(rho, alpha, *us.last().unwrap(), zero, n));

    let mut vertices = vec![(SpherePoint::Finite(zero), VertexKind::Pole { rho })];
    for s in &sides[1..] {
        vertices.push((SpherePoint::Finite(s.start()), VertexKind::Regular));
    }
    (GeodesicPolygon::new(sides, vertices, Enclosed::Interior).expect("generated polygon closes"), v0)
}

/// Settings for the shooting search of [`connect_unique`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConnectOptions {
    pub seed: u64,
    /// Launch directions scanned before refinement.
    pub grid: usize,
    /// Time budget per shot, at unit initial Euclidean speed.
    pub t_max: Option<f64>,
    /// Accepted miss distance, relative to `|z1 − z0|`.
    pub tol: f64,
    pub trace: TraceOptions,
}

impl Default for ConnectOptions {
    fn default() -> Self {
        ConnectOptions { seed: 0, grid: 72, t_max: None, tol: 1e-9, trace: TraceOptions::default() }
    }
}

#[derive(Debug, Clone)]
pub struct ConnectResult {
    /// The arc, trimmed to end at the target.
    pub trajectory: Trajectory,
    pub launch_angle: f64,
    pub miss: f64,
    /// Poles enclosed by the arc and the chord have non-negative residues,
    /// so the arc is the only simple one in its class.
    pub hypothesis_holds: bool,
    pub enclosed_poles: Vec<usize>,
}

struct Shot {
    miss: f64,
    t_hit: f64,
}

fn shoot(conn: &FuchsianConnection, z0: Complex64, z1: Complex64, theta: f64, t_max: f64, opts: &TraceOptions) -> Option<(Trajectory, Shot)> {
    let st = GeodesicState::new(conn, z0, Complex64::from_polar(1.0, theta));
    let tr = trace(conn, st, t_max, opts).ok()?;
    let pl = tr.std_polyline();
    if pl.len() < 2 {
        return None;
    }
    let (i, _) = pl
        .windows(2)
        .enumerate()
        .map(|(i, w)| (i, crate::connection::segment_distance(z1, w[0].1, w[1].1)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let lo = pl[i.saturating_sub(1)].0;
    let hi = pl[(i + 2).min(pl.len() - 1)].0;
    let dist = |t: f64| tr.state_at(t).and_then(|(s, _)| s.std_z()).map(|z| (z - z1).norm()).unwrap_or(f64::INFINITY);
    let (t_hit, miss) = golden_min(lo, hi, 90, dist);
    Some((tr, Shot { miss, t_hit }))
}

/// Simple geodesic arc from `z0` to `z1` by shooting over the launch angle.
pub fn connect_unique(
    conn: &FuchsianConnection,
    z0: Complex64,
    z1: Complex64,
    opts: &ConnectOptions,
) -> Result<ConnectResult, TeichError> {
    let chord = (z1 - z0).norm();
    if chord == 0.0 {
        return Err(TeichError::NotFound);
    }
    let t_max = opts.t_max.unwrap_or(20.0 * chord);
    let mut topts = opts.trace.clone();
    topts.escape_radius = Some(topts.escape_radius.unwrap_or(10.0 * (z0.norm() + z1.norm() + chord) + 10.0));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let phase = rng.gen_range(0.0..1.0) * TAU / opts.grid as f64;
    let thetas: Vec<f64> = (0..opts.grid).map(|k| phase + TAU * k as f64 / opts.grid as f64).collect();
    let miss_at = |th: f64| shoot(conn, z0, z1, th, t_max, &topts).map(|s| s.1.miss).unwrap_or(f64::INFINITY);
    let scan: Vec<f64> = thetas.iter().map(|&t| miss_at(t)).collect();

    let n = thetas.len();
    let step = TAU / n as f64;
    let mut hits: Vec<(f64, Trajectory, Shot)> = Vec::new();
    for k in 0..n {
        let (a, b, c) = (scan[(k + n - 1) % n], scan[k], scan[(k + 1) % n]);
        if !(b <= a && b <= c) || !b.is_finite() {
            continue;
        }
        let (th, m) = golden_min(thetas[k] - step, thetas[k] + step, 100, miss_at);
        if m > opts.tol * (1.0 + chord) {
            continue;
        }
        if let Some((tr, shot)) = shoot(conn, z0, z1, th, t_max, &topts) {
            hits.push((wrap_tau(th), tr, shot));
        }
    }
    if hits.is_empty() {
        return Err(TeichError::NotFound);
    }
    hits.sort_by(|x, y| x.2.t_hit.total_cmp(&y.2.t_hit));
    let mut any = false;
    for (th, _, shot) in hits {
        any = true;
        let st = GeodesicState::new(conn, z0, Complex64::from_polar(1.0, th));
        let Ok(arc) = trace(conn, st, shot.t_hit, &topts) else { continue };
        if !self_intersections(&arc, 1).is_empty() {
            continue;
        }
        let mut lp = arc.std_points();
        lp.push(z0);
        let (hypothesis_holds, enclosed_poles) = match enclosed_poles(conn, &lp, Enclosed::Interior, &[]) {
            Ok(enc) => (enc.iter().all(|&k| conn.poles()[k].residue.re >= 0.0), enc),
            Err(_) => (false, Vec::new()),
        };
        return Ok(ConnectResult { trajectory: arc, launch_angle: th, miss: shot.miss, hypothesis_holds, enclosed_poles });
    }
    if any {
        Err(TeichError::NonSimpleArc)
    } else {
        Err(TeichError::NotFound)
    }
}
