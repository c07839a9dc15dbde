//! Numerical geodesics of a Fuchsian connection.
//!
//! The geodesic equation `z'' + f(z) z'² = 0` is integrated together with
//! the branch-continued primitive `K = Σ ρ_j log(z − p_j)` and the flat
//! metric arclength. `K` is always kept in the normalisation of the
//! standard chart, so `c = z'·exp(K)` is a single constant along the whole
//! trajectory and doubles as an error monitor.

mod dop853;
pub mod intersect;

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{Chart, ConnectionError, FuchsianConnection, SpherePoint};
use crate::quad::GaussLegendre;

pub use intersect::{polyline_crossings, self_intersections, trajectory_crossings, IntersectionRecord, PolylineCrossing};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeodesicError {
    #[error("initial point is a pole")]
    StartAtPole,
    #[error("initial velocity is zero")]
    ZeroVelocity,
    #[error("t_max must be positive and finite")]
    BadTimeSpan,
    #[error("connection has non-real residues; the flat metric is undefined")]
    NonRealResidues,
    #[error("interval [{0}, {1}] is not inside the trajectory span")]
    OutOfSpan(f64, f64),
    #[error("path passes through a pole at {0}")]
    PathThroughPole(Complex64),
    #[error("trajectory is empty")]
    Empty,
}

impl From<ConnectionError> for GeodesicError {
    fn from(e: ConnectionError) -> Self {
        match e {
            ConnectionError::EvalAtPole(z) | ConnectionError::LoopThroughPole(z) => GeodesicError::PathThroughPole(z),
            _ => GeodesicError::StartAtPole,
        }
    }
}

/// Position and velocity in one chart plus the continued primitive `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub chart: Chart,
    pub z: Complex64,
    pub v: Complex64,
    /// `K` continued along the path, standard-chart normalisation.
    pub k_phase: Complex64,
}

impl GeodesicState {
    /// State at a point of the standard chart with principal-branch `K`.
    pub fn new(conn: &FuchsianConnection, z: Complex64, v: Complex64) -> Self {
        let k_phase = conn.finite_poles().map(|(p, rho)| rho * (z - p).ln()).sum();
        GeodesicState { chart: Chart::Standard, z, v, k_phase }
    }

    /// State given in an arbitrary chart.
    pub fn in_chart(conn: &FuchsianConnection, chart: Chart, point: Complex64, velocity: Complex64) -> Self {
        match chart {
            Chart::Standard => Self::new(conn, point, velocity),
            Chart::Infinity => {
                let z = point.inv();
                let k_phase = conn.finite_poles().map(|(p, rho)| rho * (z - p).ln()).sum();
                GeodesicState { chart, z: point, v: velocity, k_phase }
            }
        }
    }

    /// Position in the standard chart (`None` at infinity).
    pub fn std_z(&self) -> Option<Complex64> {
        match self.chart {
            Chart::Standard => Some(self.z),
            Chart::Infinity if self.z.norm() > 0.0 => Some(self.z.inv()),
            Chart::Infinity => None,
        }
    }

    /// Velocity in the standard chart.
    pub fn std_v(&self) -> Option<Complex64> {
        match self.chart {
            Chart::Standard => Some(self.v),
            Chart::Infinity if self.z.norm() > 0.0 => Some(-self.v / (self.z * self.z)),
            Chart::Infinity => None,
        }
    }

    pub fn sphere_point(&self) -> SpherePoint {
        match self.std_z() {
            Some(z) => SpherePoint::Finite(z),
            None => SpherePoint::Infinity,
        }
    }

    /// First integral `z'·exp(K)` in standard normalisation.
    pub fn first_integral(&self) -> Complex64 {
        match self.chart {
            Chart::Standard => self.v * self.k_phase.exp(),
            Chart::Infinity => -self.v * self.k_phase.exp() / (self.z * self.z),
        }
    }

    /// Same geometric state expressed in the other chart.
    pub fn switched(&self) -> Self {
        let w = self.z.inv();
        GeodesicState { chart: self.chart.other(), z: w, v: -self.v * w * w, k_phase: self.k_phase }
    }

    /// Time-reversed state.
    pub fn reversed(&self) -> Self {
        GeodesicState { v: -self.v, ..*self }
    }
}

/// Integrator settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest accepted relative change of `z'·exp(K)` in one step.
    pub first_integral_budget: f64,
    /// Termination distance to a pole, in the coordinates of the current chart.
    pub pole_floor: f64,
    pub chart_switching: bool,
    /// Overrides the connection's switch radius.
    pub switch_radius: Option<f64>,
    /// Radius (chart units) of the pole neighbourhoods whose entries and exits are logged.
    pub pole_chart_radius: f64,
    /// Stop once `|z|` exceeds this radius in the standard chart.
    pub escape_radius: Option<f64>,
    pub max_steps: usize,
    pub max_seconds: Option<f64>,
    pub h_max: Option<f64>,
    pub h_init: Option<f64>,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            rtol: 1e-10,
            atol: 1e-12,
            first_integral_budget: 1e-11,
            pole_floor: 1e-6,
            chart_switching: true,
            switch_radius: None,
            pole_chart_radius: 0.1,
            escape_radius: None,
            max_steps: 1_000_000,
            max_seconds: None,
            h_max: None,
            h_init: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub state: GeodesicState,
    /// Cumulative flat-metric arclength.
    pub s_g: f64,
    /// `z'·exp(K)` at this sample.
    pub c: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Termination {
    /// Reached `t_max`.
    TimeLimit,
    /// Came within the pole floor of pole `pole` (index into the connection's poles).
    PoleApproach { pole: usize, distance: f64 },
    /// Step size underflow; `pole` is the nearest pole at that moment.
    StepCollapse { pole: usize, distance: f64 },
    /// Non-finite values or repeated rejection without progress.
    ErrorControlFailure,
    StepBudget,
    WallClock,
    LeftRegion,
}

impl Termination {
    /// Pole the trajectory ran into, if any.
    pub fn pole(&self) -> Option<usize> {
        match *self {
            Termination::PoleApproach { pole, .. } | Termination::StepCollapse { pole, .. } => Some(pole),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TraceEvent {
    ChartSwitch { t: f64, to: Chart },
    PoleChartEntry { t: f64, pole: usize },
    PoleChartExit { t: f64, pole: usize },
    Terminated { t: f64, reason: Termination },
}

impl TraceEvent {
    pub fn time(&self) -> f64 {
        match *self {
            TraceEvent::ChartSwitch { t, .. }
            | TraceEvent::PoleChartEntry { t, .. }
            | TraceEvent::PoleChartExit { t, .. }
            | TraceEvent::Terminated { t, .. } => t,
        }
    }
}

/// A traced geodesic: samples at every accepted step and an event log.
#[derive(Debug, Clone)]
pub struct Trajectory {
    samples: Vec<TrajectorySample>,
    events: Vec<TraceEvent>,
    termination: Termination,
    conn: Arc<FuchsianConnection>,
    opts: TraceOptions,
}

type Y = [Complex64; 4];

/// Right-hand side and bookkeeping shared by tracing and re-integration.
struct Field<'a> {
    conn: &'a FuchsianConnection,
}

impl Field<'_> {
    fn density(&self, chart: Chart, pos: Complex64, vel: Complex64) -> f64 {
        let (z, zv) = match chart {
            Chart::Standard => (pos, vel),
            Chart::Infinity => (pos.inv(), -vel / (pos * pos)),
        };
        let log: f64 = self.conn.finite_poles().map(|(p, rho)| rho.re * (z - p).norm().ln()).sum();
        log.exp() * zv.norm()
    }

    fn rhs(&self, chart: Chart, y: &Y) -> Option<Y> {
        let (pos, vel) = (y[0], y[1]);
        let f = self.conn.eval_unchecked(chart, pos);
        let dk = match chart {
            Chart::Standard => f * vel,
            Chart::Infinity => (f + 2.0 / pos) * vel,
        };
        let ds = self.density(chart, pos, vel);
        let out = [vel, -f * vel * vel, dk, Complex64::new(ds, 0.0)];
        out.iter().all(|c| c.re.is_finite() && c.im.is_finite()).then_some(out)
    }

    fn step(&self, chart: Chart, t: f64, y: &Y, h: f64, rtol: f64, atol: f64) -> dop853::Step<4> {
        let f = |_t: f64, y: &Y| self.rhs(chart, y);
        dop853::step(&f, t, y, h, rtol, atol)
    }
}

fn pack(s: &GeodesicState, s_g: f64) -> Y {
    [s.z, s.v, s.k_phase, Complex64::new(s_g, 0.0)]
}

fn unpack(chart: Chart, y: &Y) -> (GeodesicState, f64) {
    (GeodesicState { chart, z: y[0], v: y[1], k_phase: y[2] }, y[3].re)
}

fn initial_step(field: &Field, chart: Chart, y: &Y, rtol: f64) -> f64 {
    // Scale from the local geometry: distance to the nearest pole over speed.
    let speed = y[1].norm().max(1e-300);
    let d = field
        .conn
        .distance_to_nearest_pole(chart, y[0])
        .map(|(d, _)| d)
        .unwrap_or(1.0)
        .min(1.0 + y[0].norm());
    (0.1 * d / speed * rtol.powf(0.125) * 10.0).max(1e-12)
}

/// Traces the geodesic through `initial` for `t ∈ [0, t_max]`.
pub fn trace(
    conn: &FuchsianConnection,
    initial: GeodesicState,
    t_max: f64,
    opts: &TraceOptions,
) -> Result<Trajectory, GeodesicError> {
    if !(t_max > 0.0) || t_max.is_nan() {
        return Err(GeodesicError::BadTimeSpan);
    }
    if initial.v.norm() == 0.0 || !initial.v.norm().is_finite() {
        return Err(GeodesicError::ZeroVelocity);
    }
    if let Some((d, _)) = conn.distance_to_nearest_pole(initial.chart, initial.z) {
        if d <= crate::connection::POLE_EVAL_TOL {
            return Err(GeodesicError::StartAtPole);
        }
    }
    let conn = Arc::new(conn.clone());
    let field = Field { conn: &conn };
    let switch_r = opts.switch_radius.unwrap_or(conn.switch_radius());
    let started = Instant::now();
    let wall = opts.max_seconds.map(Duration::from_secs_f64);

    let mut chart = initial.chart;
    let mut state = initial;
    // Start in the chart that the switching rule would pick.
    if opts.chart_switching {
        if chart == Chart::Standard && state.z.norm() > switch_r {
            state = state.switched();
            chart = Chart::Infinity;
        } else if chart == Chart::Infinity && state.z.norm() > 1.25 / switch_r {
            state = state.switched();
            chart = Chart::Standard;
        }
    }
    let mut y = pack(&state, 0.0);
    let mut t = 0.0;
    let c0 = state.first_integral();
    let mut samples = vec![TrajectorySample { t, state, s_g: 0.0, c: c0 }];
    let mut events = Vec::new();
    let mut inside: Vec<bool> = conn
        .poles()
        .iter()
        .map(|p| {
            p.location
                .in_chart(chart)
                .map(|c| (c - y[0]).norm() < opts.pole_chart_radius)
                .unwrap_or(false)
        })
        .collect();

    let mut h = opts.h_init.unwrap_or_else(|| initial_step(&field, chart, &y, opts.rtol));
    if let Some(hm) = opts.h_max {
        h = h.min(hm);
    }
    let mut steps = 0usize;
    let mut c_prev = c0;
    let mut rejects_in_row = 0usize;

    let termination = loop {
        if t >= t_max {
            break Termination::TimeLimit;
        }
        if steps >= opts.max_steps {
            break Termination::StepBudget;
        }
        if let Some(w) = wall {
            if steps.is_multiple_of(256) && started.elapsed() > w {
                break Termination::WallClock;
            }
        }
        let h_try = h.min(t_max - t);
        if h_try <= 1e-14 * t.abs().max(1.0) && t_max - t > 1e-14 * t.abs().max(1.0) {
            let (d, pole) = conn.distance_to_nearest_pole(chart, y[0]).unwrap_or((f64::INFINITY, 0));
            break Termination::StepCollapse { pole, distance: d };
        }
        let st = field.step(chart, t, &y, h_try, opts.rtol, opts.atol);
        let mut accept = st.err <= 1.0;
        let mut fac = dop853::step_factor(st.err);
        if accept {
            let (cand, _) = unpack(chart, &st.y);
            let c_new = cand.first_integral();
            let drift = (c_new - c_prev).norm() / c_prev.norm();
            if !(drift <= opts.first_integral_budget) {
                accept = false;
                fac = 0.5;
            }
        }
        if !accept {
            rejects_in_row += 1;
            if rejects_in_row > 200 || !fac.is_finite() {
                break Termination::ErrorControlFailure;
            }
            h = h_try * fac.clamp(0.1, 1.0);
            continue;
        }
        rejects_in_row = 0;
        steps += 1;
        t = if h_try == t_max - t { t_max } else { t + h_try };
        y = st.y;
        if t < t_max {
            h = h_try * fac;
        }
        if let Some(hm) = opts.h_max {
            h = h.min(hm);
        }

        // Chart switch with hysteresis.
        if opts.chart_switching {
            let flip = match chart {
                Chart::Standard => y[0].norm() > switch_r,
                Chart::Infinity => y[0].norm() > 1.25 / switch_r,
            };
            if flip {
                let (s, sg) = unpack(chart, &y);
                let s = s.switched();
                chart = s.chart;
                y = pack(&s, sg);
                // Rescale the step to the new coordinates' natural time scale.
                h = initial_step(&field, chart, &y, opts.rtol).max(h * 0.01).min(h.max(1e-12));
                events.push(TraceEvent::ChartSwitch { t, to: chart });
                for (k, p) in conn.poles().iter().enumerate() {
                    inside[k] = p.location.in_chart(chart).map(|c| (c - y[0]).norm() < opts.pole_chart_radius).unwrap_or(false);
                }
            }
        }

        let (s, sg) = unpack(chart, &y);
        let c_now = s.first_integral();
        c_prev = c_now;
        samples.push(TrajectorySample { t, state: s, s_g: sg, c: c_now });

        for (k, p) in conn.poles().iter().enumerate() {
            let now = p
                .location
                .in_chart(chart)
                .map(|c| (c - y[0]).norm() < opts.pole_chart_radius)
                .unwrap_or(false);
            if now != inside[k] {
                events.push(if now {
                    TraceEvent::PoleChartEntry { t, pole: k }
                } else {
                    TraceEvent::PoleChartExit { t, pole: k }
                });
                inside[k] = now;
            }
        }

        if let Some((d, pole)) = conn.distance_to_nearest_pole(chart, y[0]) {
            if d < opts.pole_floor {
                break Termination::PoleApproach { pole, distance: d };
            }
        }
        if let Some(r) = opts.escape_radius {
            if s.std_z().map(|z| z.norm() > r).unwrap_or(true) {
                break Termination::LeftRegion;
            }
        }
        if !y.iter().all(|c| c.re.is_finite() && c.im.is_finite()) {
            break Termination::ErrorControlFailure;
        }
    };
    events.push(TraceEvent::Terminated { t, reason: termination });
    Ok(Trajectory { samples, events, termination, conn, opts: opts.clone() })
}

impl Trajectory {
    pub fn samples(&self) -> &[TrajectorySample] {
        &self.samples
    }

    pub fn events(&self) -> &[TraceEvent] {
        &self.events
    }

    pub fn termination(&self) -> Termination {
        self.termination
    }

    pub fn connection(&self) -> &Arc<FuchsianConnection> {
        &self.conn
    }

    pub fn options(&self) -> &TraceOptions {
        &self.opts
    }

    pub fn t_end(&self) -> f64 {
        self.samples.last().map(|s| s.t).unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sample positions in the standard chart (the point at infinity is skipped).
    pub fn std_points(&self) -> Vec<Complex64> {
        self.samples.iter().filter_map(|s| s.state.std_z()).collect()
    }

    /// `(t, z)` pairs in the standard chart.
    pub fn std_polyline(&self) -> Vec<(f64, Complex64)> {
        self.samples.iter().filter_map(|s| s.state.std_z().map(|z| (s.t, z))).collect()
    }

    /// Index of the last sample with time `<= t`.
    pub fn sample_index(&self, t: f64) -> usize {
        match self.samples.binary_search_by(|s| s.t.total_cmp(&t)) {
            Ok(i) => i,
            Err(0) => 0,
            Err(i) => i - 1,
        }
    }

    /// State and arclength at time `dt` after sample `i`, by one integration
    /// step in that sample's chart. `dt` must not exceed the step that was
    /// accepted there.
    fn substep(&self, i: usize, dt: f64) -> (GeodesicState, f64) {
        let s = &self.samples[i];
        if dt == 0.0 {
            return (s.state, s.s_g);
        }
        let field = Field { conn: &self.conn };
        let y = pack(&s.state, s.s_g);
        let st = field.step(s.state.chart, s.t, &y, dt, self.opts.rtol, self.opts.atol);
        unpack(s.state.chart, &st.y)
    }

    /// State at an arbitrary time inside the trajectory span.
    pub fn state_at(&self, t: f64) -> Option<(GeodesicState, f64)> {
        if self.samples.is_empty() || t < self.samples[0].t || t > self.t_end() {
            return None;
        }
        let i = self.sample_index(t);
        Some(self.substep(i, t - self.samples[i].t))
    }

    /// Continues integration from the end of this trajectory.
    pub fn extend(&self, extra_t: f64) -> Result<Trajectory, GeodesicError> {
        let last = *self.samples.last().ok_or(GeodesicError::Empty)?;
        let mut tail = trace(&self.conn, last.state, extra_t, &self.opts)?;
        let mut samples = self.samples.clone();
        let mut events: Vec<TraceEvent> =
            self.events.iter().filter(|e| !matches!(e, TraceEvent::Terminated { .. })).cloned().collect();
        for s in tail.samples.drain(..).skip(1) {
            samples.push(TrajectorySample { t: s.t + last.t, s_g: s.s_g + last.s_g, ..s });
        }
        for e in tail.events.drain(..) {
            events.push(shift_event(e, last.t));
        }
        Ok(Trajectory { samples, events, termination: tail.termination, conn: self.conn.clone(), opts: self.opts.clone() })
    }

    /// Writes the CSV export (`t,re_z,im_z,re_v,im_v,s_g`) in standard coordinates.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,re_z,im_z,re_v,im_v,s_g")?;
        for s in &self.samples {
            if let (Some(z), Some(v)) = (s.state.std_z(), s.state.std_v()) {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    fmt17(s.t),
                    fmt17(z.re),
                    fmt17(z.im),
                    fmt17(v.re),
                    fmt17(v.im),
                    fmt17(s.s_g)
                )?;
            }
        }
        Ok(())
    }
}

fn shift_event(e: TraceEvent, dt: f64) -> TraceEvent {
    match e {
        TraceEvent::ChartSwitch { t, to } => TraceEvent::ChartSwitch { t: t + dt, to },
        TraceEvent::PoleChartEntry { t, pole } => TraceEvent::PoleChartEntry { t: t + dt, pole },
        TraceEvent::PoleChartExit { t, pole } => TraceEvent::PoleChartExit { t: t + dt, pole },
        TraceEvent::Terminated { t, reason } => TraceEvent::Terminated { t: t + dt, reason },
    }
}

/// 17 significant digits in scientific notation.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

/// Sample-0 value of `z'·exp(K)` and the largest relative deviation from it.
pub fn first_integral(traj: &Trajectory) -> (Complex64, f64) {
    let Some(first) = traj.samples.first() else {
        return (ZERO, 0.0);
    };
    let c0 = first.c;
    let drift = traj
        .samples
        .iter()
        .map(|s| (s.state.first_integral() - c0).norm() / c0.norm())
        .fold(0.0, f64::max);
    (c0, drift)
}

/// Flat-metric length `∫ Π|z − p_j|^{ρ_j} |z'| dt` over `[t_a, t_b]`.
///
/// Gauss–Legendre quadrature on every sample interval; interior nodes are
/// reached by a single integration step from the interval's left sample.
pub fn g_length(traj: &Trajectory, t_a: f64, t_b: f64) -> Result<f64, GeodesicError> {
    if !traj.conn.has_real_periods() {
        return Err(GeodesicError::NonRealResidues);
    }
    if traj.samples.is_empty() {
        return Err(GeodesicError::Empty);
    }
    let (lo, hi) = (traj.samples[0].t, traj.t_end());
    if !(t_a < t_b) || t_a < lo || t_b > hi {
        return Err(GeodesicError::OutOfSpan(t_a, t_b));
    }
    let field = Field { conn: &traj.conn };
    let gl = GaussLegendre::new(8);
    let mut total = 0.0;
    let first = traj.sample_index(t_a);
    for i in first..traj.samples.len() - 1 {
        let (s0, s1) = (traj.samples[i].t, traj.samples[i + 1].t);
        if s0 >= t_b {
            break;
        }
        let a = s0.max(t_a);
        let b = s1.min(t_b);
        if b <= a {
            continue;
        }
        total += gl.integrate(a, b, |t| {
            let (st, _) = traj.substep(i, t - s0);
            field.density(st.chart, st.z, st.v)
        });
    }
    Ok(total)
}

/// Symmetric Hausdorff distance between two polylines (vertices of one
/// against segments of the other).
pub fn hausdorff_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    fn one_way(a: &[Complex64], b: &[Complex64]) -> f64 {
        if b.len() == 1 {
            return a.iter().map(|p| (p - b[0]).norm()).fold(0.0, f64::max);
        }
        a.iter()
            .map(|&p| {
                b.windows(2)
                    .map(|w| crate::connection::segment_distance(p, w[0], w[1]))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max)
    }
    if a.is_empty() || b.is_empty() {
        return f64::INFINITY;
    }
    one_way(a, b).max(one_way(b, a))
}

/// `K` continued along a polyline in the standard chart, one value per vertex.
///
/// Starts from the principal branch at the first vertex; every edge is split
/// so that `Im K` moves by less than `π/2` per piece.
pub fn continue_k(conn: &FuchsianConnection, path: &[Complex64]) -> Result<Vec<Complex64>, GeodesicError> {
    let Some(&start) = path.first() else {
        return Ok(Vec::new());
    };
    for (p, _) in conn.finite_poles() {
        for e in path.windows(2) {
            if crate::connection::segment_distance(p, e[0], e[1]) <= crate::connection::POLE_EVAL_TOL {
                return Err(GeodesicError::PathThroughPole(p));
            }
        }
        if path.len() == 1 && (start - p).norm() <= crate::connection::POLE_EVAL_TOL {
            return Err(GeodesicError::PathThroughPole(p));
        }
    }
    let poles: Vec<(Complex64, Complex64)> = conn.finite_poles().collect();
    let mut k: Complex64 = poles.iter().map(|&(p, rho)| rho * (start - p).ln()).sum();
    let mut out = Vec::with_capacity(path.len());
    out.push(k);
    for e in path.windows(2) {
        // Per-pole increment of log(z - p) along a straight edge is the
        // principal log of the ratio; the edge subtends less than π.
        let incr = |a: Complex64, b: Complex64| -> Complex64 {
            poles.iter().map(|&(p, rho)| rho * ((b - p) / (a - p)).ln()).sum()
        };
        let whole = incr(e[0], e[1]);
        let pieces = ((whole.im.abs() / FRAC_PI_2).floor() as usize + 1).max(1);
        for j in 0..pieces {
            let a = e[0] + (e[1] - e[0]) * (j as f64 / pieces as f64);
            let b = e[0] + (e[1] - e[0]) * ((j + 1) as f64 / pieces as f64);
            k += incr(a, b);
        }
        out.push(k);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PoleSpec;
    use std::f64::consts::{PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn circle_conn() -> FuchsianConnection {
        FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap()
    }

    #[test]
    fn unit_circle_trace() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), TAU, &TraceOptions::default()).unwrap();
        assert_eq!(tr.termination(), Termination::TimeLimit);
        for s in tr.samples() {
            let z = s.state.std_z().unwrap();
            assert!((z - Complex64::from_polar(1.0, s.t)).norm() < 1e-8, "t={} z={z}", s.t);
        }
        let (c0, drift) = first_integral(&tr);
        assert!((c0 - c(0.0, 1.0)).norm() < 1e-15);
        assert!(drift <= 1e-9, "{drift}");
        let len = g_length(&tr, 0.0, TAU).unwrap();
        assert!((len - TAU).abs() < 1e-8, "{len}");
        assert!((tr.samples().last().unwrap().s_g - TAU).abs() < 1e-8);
    }

    #[test]
    fn straight_line_on_flat_plane() {
        let conn = FuchsianConnection::build(&[PoleSpec::at_infinity(-2.0)]).unwrap();
        let tr = trace(&conn, GeodesicState::new(&conn, c(0.0, 0.0), c(1.0, 0.0)), 5.0, &TraceOptions::default()).unwrap();
        for s in tr.samples() {
            assert!((s.state.std_z().unwrap() - c(s.t, 0.0)).norm() < 1e-12);
        }
        let (c0, drift) = first_integral(&tr);
        assert_eq!(c0, c(1.0, 0.0));
        assert!(drift < 1e-14);
        assert!((g_length(&tr, 0.0, 1.0).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn square_root_geodesic() {
        // ρ = 1 at 0: z(t) = (2t+1)^{1/2}, z·z' = 1.
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 1.0)]).unwrap();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(1.0, 0.0)), 4.0, &TraceOptions::default()).unwrap();
        for s in tr.samples() {
            let exact = (2.0 * s.t + 1.0).sqrt();
            assert!((s.state.std_z().unwrap() - c(exact, 0.0)).norm() < 1e-8);
        }
        let (c0, drift) = first_integral(&tr);
        assert!((c0 - c(1.0, 0.0)).norm() < 1e-15);
        assert!(drift < 1e-9);
        let len = g_length(&tr, 0.0, 1.0).unwrap();
        assert!((len - 1.0).abs() < 1e-9, "{len}");
    }

    #[test]
    fn rejects_bad_input() {
        let conn = circle_conn();
        let s = GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(trace(&conn, s, 1.0, &TraceOptions::default()).unwrap_err(), GeodesicError::ZeroVelocity);
        let s = GeodesicState { chart: Chart::Standard, z: c(0.0, 0.0), v: c(1.0, 0.0), k_phase: c(0.0, 0.0) };
        assert_eq!(trace(&conn, s, 1.0, &TraceOptions::default()).unwrap_err(), GeodesicError::StartAtPole);
        let s = GeodesicState::new(&conn, c(1.0, 0.0), c(1.0, 0.0));
        assert_eq!(trace(&conn, s, 0.0, &TraceOptions::default()).unwrap_err(), GeodesicError::BadTimeSpan);
    }

    #[test]
    fn spiral_reaches_infinity_through_chart_switch() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(1.0, 1.0)), 100.0, &TraceOptions::default()).unwrap();
        assert!(matches!(tr.termination(), Termination::PoleApproach { pole: 1, .. }), "{:?}", tr.termination());
        assert!(tr.events().iter().any(|e| matches!(e, TraceEvent::ChartSwitch { to: Chart::Infinity, .. })));
        // z = e^{(1+i)t}, so the floor |w| = 1e-6 is reached near t = ln 1e6.
        assert!((tr.t_end() - 1e6_f64.ln()).abs() < 0.1, "{} {:?} {}", tr.t_end(), tr.termination(), tr.len());
        let (_, drift) = first_integral(&tr);
        assert!(drift < 1e-9, "{drift}");
    }

    #[test]
    fn critical_geodesic_hits_pole() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.5)]).unwrap();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(-1.0, 0.0)), 10.0, &TraceOptions::default()).unwrap();
        assert_eq!(tr.termination().pole(), Some(0));
        assert!(tr.events().iter().any(|e| matches!(e, TraceEvent::PoleChartEntry { pole: 0, .. })));
    }

    #[test]
    fn non_real_residues_refuse_g_length() {
        let opts = crate::connection::BuildOptions { allow_non_real_periods: true, ..Default::default() };
        let conn = FuchsianConnection::build_with(&[PoleSpec::complex(SpherePoint::finite(0.0, 0.0), c(-1.0, 0.1))], opts).unwrap();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 1.0, &TraceOptions::default()).unwrap();
        assert_eq!(g_length(&tr, 0.0, 0.5).unwrap_err(), GeodesicError::NonRealResidues);
    }

    #[test]
    fn g_length_span_checked() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 1.0, &TraceOptions::default()).unwrap();
        assert!(matches!(g_length(&tr, 0.5, 2.0), Err(GeodesicError::OutOfSpan(..))));
        assert!(matches!(g_length(&tr, 0.5, 0.5), Err(GeodesicError::OutOfSpan(..))));
    }

    #[test]
    fn continue_k_examples() {
        let conn = circle_conn();
        let circle: Vec<Complex64> = (0..=64).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 64.0)).collect();
        let ks = continue_k(&conn, &circle).unwrap();
        assert!((ks.last().unwrap() - ks[0] - c(0.0, -TAU)).norm() < 1e-12);

        let off: Vec<Complex64> = circle.iter().map(|z| z + c(3.0, 0.0)).collect();
        let ks = continue_k(&conn, &off).unwrap();
        assert!((ks.last().unwrap() - ks[0]).norm() < 1e-10);

        let half = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.5)]).unwrap();
        let ks = continue_k(&half, &circle).unwrap();
        let gain = ks.last().unwrap() - ks[0];
        // Oracle: trapezoid quadrature of ∫ f dz on a fine circle.
        let n = 20000;
        let mut q = c(0.0, 0.0);
        for j in 0..n {
            let a = Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
            let b = Complex64::from_polar(1.0, TAU * (j + 1) as f64 / n as f64);
            q += (half.f_standard(a) + half.f_standard(b)) * 0.5 * (b - a);
        }
        assert!((gain - q).norm() < 1e-6);
        assert!((gain.im - PI).abs() < 1e-12);
    }

    #[test]
    fn continue_k_subdivides_large_jumps() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 5.0)]).unwrap();
        let path = vec![c(1.0, -1.0), c(1.0, 1.0), c(-1.0, 1.0), c(-1.0, -1.0), c(1.0, -1.0)];
        let ks = continue_k(&conn, &path).unwrap();
        assert!((ks[4] - ks[0] - c(0.0, 10.0 * PI)).norm() < 1e-10);
        assert!(matches!(continue_k(&conn, &[c(-1.0, 0.0), c(1.0, 0.0)]), Err(GeodesicError::PathThroughPole(_))));
    }

    #[test]
    fn csv_header_and_digits() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 1.0, &TraceOptions::default()).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "t,re_z,im_z,re_v,im_v,s_g");
        let row: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(row.len(), 6);
        assert_eq!(row[1], "1.0000000000000000e0");
        let mantissa = row[1].split('e').next().unwrap();
        assert_eq!(mantissa.chars().filter(|ch| ch.is_ascii_digit()).count(), 17);
    }

    #[test]
    fn state_at_matches_closed_form() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 10.0, &TraceOptions::default()).unwrap();
        for t in [0.1, 1.234, 5.5, 9.99] {
            let (s, _) = tr.state_at(t).unwrap();
            assert!((s.std_z().unwrap() - Complex64::from_polar(1.0, t)).norm() < 1e-9);
        }
        assert!(tr.state_at(11.0).is_none());
    }

    #[test]
    fn extend_continues_smoothly() {
        let conn = circle_conn();
        let tr = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 2.0, &TraceOptions::default()).unwrap();
        let tr = tr.extend(3.0).unwrap();
        assert!((tr.t_end() - 5.0).abs() < 1e-12);
        let z = tr.samples().last().unwrap().state.std_z().unwrap();
        assert!((z - Complex64::from_polar(1.0, 5.0)).norm() < 1e-9);
        assert!(tr.samples().windows(2).all(|w| w[1].t > w[0].t));
    }
}
