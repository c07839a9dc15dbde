//! Long-horizon classification of where a geodesic goes.
//!
//! Verdicts mirror the possible ω-limit sets of a simple geodesic on the
//! sphere with real periods: a pole, a periodic orbit, a transversally
//! Cantor-like set, a region bounded by saddle connections, or everything.
//! Two further tags (accumulation on a foreign periodic orbit or on a graph
//! of saddle connections) cannot occur with real residues; they exist so the
//! audit can look for them.

use std::f64::consts::{PI, TAU};
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{wrap_pi, Chart, FuchsianConnection, SpherePoint};
use crate::geodesic::{first_integral, trace, trajectory_crossings, GeodesicError, GeodesicState, Termination, TraceOptions, Trajectory};
use crate::local::LocalError;
use crate::quad::golden_min;

mod audit;
mod ring;
mod saddle;
mod transversal;

pub use audit::{exclusion_audit, random_complex_case, random_real_case, AuditCase, AuditRecord, AuditReport};
pub use ring::{ring_domain_probe, BoundaryComponent, LeafSample, RingDomainReport, RingProbeOptions};
pub use saddle::{saddle_connection_search, SaddleConnection, SaddleSearchOptions};
pub use transversal::{crossing_statistics, middle_thirds_points, transversal_analysis, TransversalSection, TransversalStats};

#[derive(Debug, Error)]
pub enum OmegaError {
    #[error("only {0} crossings recorded, need at least {MIN_CROSSINGS}")]
    TooFewCrossings(usize),
    #[error("seed trajectory is not periodic within its span")]
    SeedNotPeriodic,
    #[error("connection has non-real residues")]
    NonRealResidues,
    #[error("section must have positive half-width")]
    BadSection,
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Local(#[from] LocalError),
}

/// Crossings needed before gap statistics mean anything.
pub const MIN_CROSSINGS: usize = 20;

/// Direction of a geodesic: the argument of its first integral, modulo the
/// subgroup generated by `2π` and the `2πρ_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionClass {
    pub angle: f64,
    /// Distinct non-integer residues generating the subgroup.
    pub generators: Vec<f64>,
}

impl DirectionClass {
    pub const TOL: f64 = 1e-9;
    /// Largest coefficient tried per generator.
    const MAX_MULT: i32 = 6;

    pub fn new(conn: &FuchsianConnection, c: Complex64) -> Self {
        let mut generators: Vec<f64> = Vec::new();
        for p in conn.poles() {
            let frac = p.rho() - p.rho().round();
            if frac.abs() > 1e-12 && !generators.iter().any(|g| (g - p.rho()).abs() < 1e-12) {
                generators.push(p.rho());
            }
        }
        DirectionClass { angle: c.arg(), generators }
    }

    pub fn of_state(conn: &FuchsianConnection, s: &GeodesicState) -> Self {
        Self::new(conn, s.first_integral())
    }

    /// Equal modulo the subgroup, coefficients bounded by 6 per generator.
    pub fn equivalent(&self, other: &DirectionClass, tol: f64) -> bool {
        let d = wrap_pi(self.angle - other.angle);
        let g = &self.generators;
        let m = g.len();
        let span = (2 * Self::MAX_MULT + 1) as usize;
        let total = span.pow(m as u32);
        (0..total).any(|mut code| {
            let mut shift = 0.0;
            for gj in g {
                let n = (code % span) as i32 - Self::MAX_MULT;
                code /= span;
                shift += n as f64 * TAU * gj;
            }
            wrap_pi(d - shift).abs() <= tol
        })
    }

    /// Equivalent up to reversing the orientation.
    pub fn equivalent_unoriented(&self, other: &DirectionClass, tol: f64) -> bool {
        let flipped = DirectionClass { angle: other.angle + PI, generators: other.generators.clone() };
        self.equivalent(other, tol) || self.equivalent(&flipped, tol)
    }
}

/// Summary statistics behind the evidence-graded verdicts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvidenceSummary {
    pub crossings: usize,
    pub distinct: usize,
    pub isolated: bool,
    pub dense: bool,
    pub dimension: Option<f64>,
    /// Fraction of a coarse grid around the poles the trajectory visited.
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VerdictTag {
    ConvergesToPole { pole: usize, location: SpherePoint },
    Periodic { period: f64, recurrence_error: f64 },
    CantorLikeEvidence(EvidenceSummary),
    FillsRegionEvidence(EvidenceSummary),
    FillsAllEvidence(EvidenceSummary),
    AccumulatesOnForeignPeriodic { period: f64, gaps: Vec<f64> },
    AccumulatesOnSaddleGraph { pole: usize, approaches: Vec<f64> },
    Undetermined { reason: String },
}

impl VerdictTag {
    pub fn name(&self) -> &'static str {
        match self {
            VerdictTag::ConvergesToPole { .. } => "ConvergesToPole",
            VerdictTag::Periodic { .. } => "Periodic",
            VerdictTag::CantorLikeEvidence(_) => "CantorLikeEvidence",
            VerdictTag::FillsRegionEvidence(_) => "FillsRegionEvidence",
            VerdictTag::FillsAllEvidence(_) => "FillsAllEvidence",
            VerdictTag::AccumulatesOnForeignPeriodic { .. } => "AccumulatesOnForeignPeriodic",
            VerdictTag::AccumulatesOnSaddleGraph { .. } => "AccumulatesOnSaddleGraph",
            VerdictTag::Undetermined { .. } => "Undetermined",
        }
    }

    pub fn is_anomalous(&self) -> bool {
        matches!(self, VerdictTag::AccumulatesOnForeignPeriodic { .. } | VerdictTag::AccumulatesOnSaddleGraph { .. })
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VerdictTag::ConvergesToPole { location, .. } => write!(f, "ConvergesToPole({location})"),
            VerdictTag::Periodic { period, .. } => write!(f, "Periodic(T={period:.12})"),
            VerdictTag::Undetermined { reason } => write!(f, "Undetermined({reason})"),
            other => write!(f, "{}", other.name()),
        }
    }
}

/// Run diagnostics attached to every verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t_end: f64,
    pub steps: usize,
    pub termination: Termination,
    /// Relative drift of the first integral over the run.
    pub drift: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaVerdict {
    pub tag: VerdictTag,
    pub diagnostics: Diagnostics,
}

/// Limits and thresholds for [`classify`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyBudget {
    pub t_max: f64,
    pub max_steps: usize,
    /// Wall-clock cap per trajectory; `None` keeps runs reproducible.
    pub max_seconds: Option<f64>,
    /// Recurrence tolerance on `|z − z0| + |v̂ − v̂0|`.
    pub recurrence_tol: f64,
    /// Chart distance below which a steady approach counts as convergence.
    pub pole_threshold: f64,
    pub trace: TraceOptions,
}

impl Default for ClassifyBudget {
    fn default() -> Self {
        ClassifyBudget {
            t_max: 200.0,
            max_steps: 1_000_000,
            max_seconds: Some(30.0),
            recurrence_tol: 1e-8,
            pole_threshold: 1e-3,
            trace: TraceOptions::default(),
        }
    }
}

impl ClassifyBudget {
    pub(crate) fn trace_options(&self) -> TraceOptions {
        TraceOptions { max_steps: self.max_steps, max_seconds: self.max_seconds, ..self.trace.clone() }
    }
}

/// Position and velocity relative to pole `idx`, in a coordinate centred there.
pub(crate) fn pole_local(conn: &FuchsianConnection, idx: usize, s: &GeodesicState) -> Option<(Complex64, Complex64)> {
    match conn.poles()[idx].location {
        SpherePoint::Finite(p) => Some((s.std_z()? - p, s.std_v()?)),
        SpherePoint::Infinity => match s.chart {
            Chart::Infinity => Some((s.z, s.v)),
            Chart::Standard => (s.z.norm() > 0.0).then(|| (s.z.inv(), -s.v / (s.z * s.z))),
        },
    }
}

/// Phase-space coordinates (position, unit velocity) in the standard chart
/// near the unit disc and in the infinity chart outside it.
fn phase_point(s: &GeodesicState, outer: bool) -> Option<(Complex64, Complex64)> {
    let (z, v) = (s.std_z(), s.std_v());
    let (p, dp) = if outer {
        match s.chart {
            Chart::Infinity => (s.z, s.v),
            Chart::Standard => {
                let z = z?;
                (z.inv(), -v? / (z * z))
            }
        }
    } else {
        (z?, v?)
    };
    (dp.norm() > 0.0).then(|| (p, dp / dp.norm()))
}

fn recurrence(s: &GeodesicState, outer: bool, z0: Complex64, vh0: Complex64) -> f64 {
    phase_point(s, outer).map_or(f64::INFINITY, |(z, vh)| (z - z0).norm() + (vh - vh0).norm())
}

/// First return of the trajectory to the phase-space point of sample `i0`
/// with refined recurrence error below `accept`. Returns `(t, error)`.
pub(crate) fn first_return(traj: &Trajectory, i0: usize, accept: f64) -> Option<(f64, f64)> {
    let s = traj.samples();
    let st0 = s.get(i0)?.state;
    let outer = st0.std_z().is_none_or(|z| z.norm() > 1.0);
    let (z0, vh0) = phase_point(&st0, outer)?;
    let m: Vec<f64> = s.iter().map(|x| recurrence(&x.state, outer, z0, vh0)).collect();
    let leave = (1e4 * accept).clamp(1e-6, 1e-2);
    let mut left = false;
    let mut refinements = 0;
    for i in i0 + 1..s.len().saturating_sub(1) {
        if m[i] > leave {
            left = true;
        }
        if !left || m[i] > m[i - 1] || m[i] > m[i + 1] {
            continue;
        }
        let chord = match (phase_point(&s[i - 1].state, outer), phase_point(&s[i + 1].state, outer)) {
            (Some((a, va)), Some((b, vb))) => (b - a).norm() + (vb - va).norm(),
            _ => continue,
        };
        if m[i] > chord {
            continue;
        }
        refinements += 1;
        if refinements > 400 {
            return None;
        }
        let f = |t: f64| traj.state_at(t).map(|(st, _)| recurrence(&st, outer, z0, vh0)).unwrap_or(f64::INFINITY);
        let (t, err) = golden_min(s[i - 1].t, s[i + 1].t, 90, f);
        if err < accept {
            return Some((t, err));
        }
    }
    None
}

/// Period of a trajectory that returns to its initial phase-space point
/// with the same first-integral class and modulus.
pub fn detect_period(traj: &Trajectory, tol: f64) -> Option<(f64, f64)> {
    let conn = traj.connection();
    let (t, err) = first_return(traj, 0, tol)?;
    let c0 = traj.samples()[0].state.first_integral();
    let (st, _) = traj.state_at(t)?;
    let c1 = st.first_integral();
    let cls_tol = (100.0 * tol).max(DirectionClass::TOL);
    let same = DirectionClass::new(conn, c0).equivalent(&DirectionClass::new(conn, c1), cls_tol);
    (same && ((c1.norm() / c0.norm()) - 1.0).abs() <= cls_tol).then_some((t - traj.samples()[0].t, err))
}

/// Pole the tail of the trajectory is settling into, if any: the tail
/// after the last time it was outside the pole neighbourhood approaches
/// the pole monotonically.
fn tail_convergence(conn: &FuchsianConnection, traj: &Trajectory, threshold: f64) -> Option<usize> {
    let radius = traj.options().pole_chart_radius;
    for (idx, pole) in conn.poles().iter().enumerate() {
        let d: Vec<f64> = traj
            .samples()
            .iter()
            .map(|x| pole_local(conn, idx, &x.state).map_or(f64::INFINITY, |p| p.0.norm()))
            .collect();
        let start = d.iter().rposition(|&x| x >= radius).map_or(0, |i| i + 1);
        let d = &d[start..];
        if d.len() < 3 {
            continue;
        }
        let monotone = d.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
        let last = *d.last().unwrap();
        // Around a real residue ρ ≤ −1, |w| decreasing inside the chart
        // only ever continues down to the pole; circles (ρ = −1) stay level.
        let funnel = pole.residue.im == 0.0 && pole.rho() <= -1.0 && last < 0.99 * d[0];
        if monotone && (last < threshold || funnel) {
            return Some(idx);
        }
    }
    None
}

/// Successive near-returns, each to the previous return point: `(times, gaps)`.
/// Chains are started at several points and the longest is kept.
fn return_chain(traj: &Trajectory, links: usize) -> (Vec<f64>, Vec<f64>) {
    let n = traj.len();
    let mut best = (Vec::new(), Vec::new());
    for start in [0, n / 8, n / 4, n / 2] {
        let mut times = Vec::new();
        let mut gaps = Vec::new();
        let mut i0 = start;
        for _ in 0..links {
            let Some((t, err)) = first_return(traj, i0, 0.1) else { break };
            times.push(t);
            gaps.push(err);
            let next = traj.sample_index(t) + 1;
            if next >= n {
                break;
            }
            i0 = next;
        }
        if times.len() > best.0.len() {
            best = (times, gaps);
        }
    }
    best
}

fn geometric_decay(seq: &[f64], n: usize, ratio: f64, floor: f64) -> bool {
    if seq.len() < n {
        return false;
    }
    let tail = &seq[seq.len() - n..];
    tail.windows(2).all(|w| w[1] < ratio * w[0]) && *tail.last().unwrap() < floor
}

fn saddle_graph_accumulation(conn: &FuchsianConnection, traj: &Trajectory) -> Option<(usize, Vec<f64>)> {
    let s = traj.samples();
    for (idx, pole) in conn.poles().iter().enumerate() {
        if pole.rho() <= -1.0 {
            continue;
        }
        let d: Vec<f64> = s.iter().map(|x| pole_local(conn, idx, &x.state).map_or(f64::INFINITY, |p| p.0.norm())).collect();
        let minima: Vec<f64> = (1..d.len().saturating_sub(1))
            .filter(|&i| d[i] < 0.1 && d[i] <= d[i - 1] && d[i] <= d[i + 1])
            .map(|i| d[i])
            .collect();
        if geometric_decay(&minima, 5, 0.9, 1e-4) {
            return Some((idx, minima));
        }
    }
    None
}

/// Fraction of a 20×20 grid around the poles visited by the trajectory.
fn coverage(conn: &FuchsianConnection, traj: &Trajectory) -> f64 {
    let r = 2.0 * conn.finite_poles().map(|(p, _)| p.norm()).fold(0.0, f64::max) + 1.0;
    let n = 20usize;
    let mut seen = vec![false; n * n];
    for z in traj.std_points() {
        let (x, y) = ((z.re + r) / (2.0 * r), (z.im + r) / (2.0 * r));
        if (0.0..1.0).contains(&x) && (0.0..1.0).contains(&y) {
            seen[(y * n as f64) as usize * n + (x * n as f64) as usize] = true;
        }
    }
    seen.iter().filter(|&&b| b).count() as f64 / (n * n) as f64
}

/// Section through the middle of the trajectory, perpendicular to it.
fn mid_section(conn: &FuchsianConnection, traj: &Trajectory, opts: &TraceOptions) -> Option<TransversalSection> {
    let t_mid = 0.5 * traj.t_end();
    let (st, _) = traj.state_at(t_mid)?;
    let (z, v) = (st.std_z()?, st.std_v()?);
    let d = conn.distance_to_nearest_pole(Chart::Standard, z).map_or(1.0, |x| x.0);
    let delta = (0.25 * d).min(0.25);
    TransversalSection::geodesic(conn, z, Complex64::i() * v / v.norm(), delta, opts).ok()
}

fn verdict(tag: VerdictTag, traj: &Trajectory, notes: Vec<String>) -> OmegaVerdict {
    OmegaVerdict {
        tag,
        diagnostics: Diagnostics {
            t_end: traj.t_end(),
            steps: traj.len().saturating_sub(1),
            termination: traj.termination(),
            drift: first_integral(traj).1,
            notes,
        },
    }
}

/// Classifies the forward orbit of `initial`.
pub fn classify(conn: &FuchsianConnection, initial: GeodesicState, budget: &ClassifyBudget) -> Result<OmegaVerdict, OmegaError> {
    let traj = trace(conn, initial, budget.t_max, &budget.trace_options())?;
    Ok(classify_trajectory(conn, &traj, budget))
}

/// Classification of an already traced trajectory.
pub fn classify_trajectory(conn: &FuchsianConnection, traj: &Trajectory, budget: &ClassifyBudget) -> OmegaVerdict {
    let mut notes = Vec::new();
    let pole_tag = |idx: usize| VerdictTag::ConvergesToPole { pole: idx, location: conn.poles()[idx].location };

    if let Some(idx) = traj.termination().pole() {
        return verdict(pole_tag(idx), traj, notes);
    }
    if let Some(idx) = tail_convergence(conn, traj, budget.pole_threshold) {
        notes.push("steady approach inside the pole neighbourhood".into());
        return verdict(pole_tag(idx), traj, notes);
    }
    if let Some((period, err)) = detect_period(traj, budget.recurrence_tol) {
        return verdict(VerdictTag::Periodic { period, recurrence_error: err }, traj, notes);
    }
    let (times, gaps) = return_chain(traj, 16);
    if geometric_decay(&gaps, 5, 0.9, 0.05) {
        let n = times.len();
        let period = times[n - 1] - times[n - 2];
        return verdict(VerdictTag::AccumulatesOnForeignPeriodic { period, gaps }, traj, notes);
    }
    if let Some((pole, approaches)) = saddle_graph_accumulation(conn, traj) {
        return verdict(VerdictTag::AccumulatesOnSaddleGraph { pole, approaches }, traj, notes);
    }
    let Some(mut section) = mid_section(conn, traj, &budget.trace) else {
        return verdict(VerdictTag::Undetermined { reason: "no section".into() }, traj, notes);
    };
    let stats = match transversal_analysis(traj, &mut section) {
        Ok(s) => s,
        Err(e) => {
            notes.push(e.to_string());
            let reason = format!("{} after t = {:.6}", termination_name(&traj.termination()), traj.t_end());
            return verdict(VerdictTag::Undetermined { reason }, traj, notes);
        }
    };
    let summary = EvidenceSummary {
        crossings: stats.crossings.len(),
        distinct: stats.distinct,
        isolated: stats.isolated,
        dense: stats.dense,
        dimension: stats.dimension,
        coverage: coverage(conn, traj),
    };
    let tag = if summary.dense && summary.coverage > 0.9 {
        VerdictTag::FillsAllEvidence(summary)
    } else if summary.dense {
        VerdictTag::FillsRegionEvidence(summary)
    } else if !summary.isolated {
        VerdictTag::CantorLikeEvidence(summary)
    } else {
        VerdictTag::Undetermined { reason: "isolated crossings without recurrence".into() }
    };
    verdict(tag, traj, notes)
}

pub(crate) fn termination_name(t: &Termination) -> &'static str {
    match t {
        Termination::TimeLimit => "time limit",
        Termination::PoleApproach { .. } => "pole approach",
        Termination::StepCollapse { .. } => "step collapse",
        Termination::ErrorControlFailure => "error control failure",
        Termination::StepBudget => "step budget",
        Termination::WallClock => "wall clock",
        Termination::LeftRegion => "left region",
    }
}

/// Crossing count of two trajectories, used for disjointness checks.
pub(crate) fn crosses(a: &Trajectory, b: &Trajectory) -> bool {
    !trajectory_crossings(a, b, 1).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::{BuildOptions, PoleSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn log_conn() -> FuchsianConnection {
        FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap()
    }

    #[test]
    fn unit_circle_is_periodic() {
        let conn = log_conn();
        let v = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), &ClassifyBudget { t_max: 20.0, ..Default::default() }).unwrap();
        match v.tag {
            VerdictTag::Periodic { period, recurrence_error } => {
                assert!((period - TAU).abs() < 1e-6, "{period}");
                assert!(recurrence_error < 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn spiral_goes_to_infinity() {
        let conn = log_conn();
        let v = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(1.0, 1.0)), &ClassifyBudget::default()).unwrap();
        assert_eq!(v.tag.to_string(), "ConvergesToPole(inf)");
        let v = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(-1.0, 1.0)), &ClassifyBudget::default()).unwrap();
        assert_eq!(v.tag.to_string(), "ConvergesToPole(0)");
    }

    #[test]
    fn lines_escape() {
        let conn = FuchsianConnection::build(&[PoleSpec::at_infinity(-2.0)]).unwrap();
        let budget = ClassifyBudget { t_max: 100.0, ..Default::default() };
        let v = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.5), c(-0.3, 1.0)), &budget).unwrap();
        assert_eq!(v.tag.to_string(), "ConvergesToPole(inf)");
    }

    #[test]
    fn direction_classes() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.25), PoleSpec::at(1.0, 0.0, 0.5)]).unwrap();
        let a = DirectionClass::new(&conn, Complex64::from_polar(1.0, 0.3));
        let b = DirectionClass::new(&conn, Complex64::from_polar(1.0, 0.3 + TAU * 0.25));
        let d = DirectionClass::new(&conn, Complex64::from_polar(1.0, 0.3 + TAU * 0.75 + PI));
        let e = DirectionClass::new(&conn, Complex64::from_polar(1.0, 0.3 + 0.1));
        assert!(a.equivalent(&b, DirectionClass::TOL));
        assert!(a.equivalent(&d, DirectionClass::TOL));
        assert!(!a.equivalent(&e, DirectionClass::TOL));
        // Integer residues generate nothing beyond 2π.
        let flat = log_conn();
        let x = DirectionClass::new(&flat, c(1.0, 0.0));
        assert!(x.generators.is_empty());
        assert!(!x.equivalent(&DirectionClass::new(&flat, c(0.0, 1.0)), 1e-9));
        assert!(x.equivalent_unoriented(&DirectionClass::new(&flat, c(-1.0, 0.0)), 1e-9));
    }

    #[test]
    fn classification_is_deterministic() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -0.5), PoleSpec::at(1.0, 0.5, 0.2)]).unwrap();
        let b = ClassifyBudget { t_max: 30.0, max_seconds: None, ..Default::default() };
        let s = GeodesicState::new(&conn, c(0.4, -0.7), c(1.0, 0.2));
        assert_eq!(classify(&conn, s, &b).unwrap(), classify(&conn, s, &b).unwrap());
    }

    #[test]
    fn closed_but_not_periodic_with_complex_residue() {
        // With complex residues the holonomy scales speeds: orbits wind
        // onto a limiting circle without closing up.
        let beta = 0.05;
        let conn = FuchsianConnection::build_with(
            &[PoleSpec::complex(SpherePoint::finite(0.0, 0.0), c(-1.0, beta)), PoleSpec::complex(SpherePoint::Infinity, c(-1.0, -beta))],
            BuildOptions { allow_non_real_periods: true, ..Default::default() },
        )
        .unwrap();
        let b = ClassifyBudget { t_max: 400.0, max_seconds: None, ..Default::default() };
        let v = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.02, -1.0)), &b).unwrap();
        assert!(matches!(v.tag, VerdictTag::AccumulatesOnForeignPeriodic { .. }), "{:?}", v.tag);
    }
}
