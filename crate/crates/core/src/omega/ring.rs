use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{crosses, detect_period, saddle_connection_search, DirectionClass, OmegaError, SaddleConnection, SaddleSearchOptions};
use crate::connection::{Chart, FuchsianConnection};
use crate::geodesic::{g_length, trace, GeodesicState, TraceOptions, Trajectory};
use crate::quad::bisect;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RingProbeOptions {
    /// Flat-metric distance between consecutive leaves along the transversal.
    pub step: f64,
    /// Leaves probed on each side of the seed.
    pub max_leaves: usize,
    pub recurrence_tol: f64,
    /// Also search for saddle connections parallel to the seed.
    pub search_saddles: bool,
    pub trace: TraceOptions,
}

impl Default for RingProbeOptions {
    fn default() -> Self {
        RingProbeOptions { step: 0.25, max_leaves: 6, recurrence_tol: 1e-8, search_saddles: false, trace: TraceOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeafSample {
    /// Signed flat distance from the seed along the transversal.
    pub offset: f64,
    pub z0: Complex64,
    pub v0: Complex64,
    pub period: f64,
    pub g_length: f64,
}

/// Why the probe stopped on one side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BoundaryComponent {
    /// The transversal itself ran into a pole; `unbounded` when the pole is
    /// at infinite flat distance (residue at most −1).
    Pole { pole: usize, residue: f64, unbounded: bool },
    /// Leaf at this offset hit a pole.
    LeafHitsPole { offset: f64, pole: usize },
    /// Leaf at this offset did not close up within the budget.
    NonPeriodicLeaf { offset: f64 },
    /// Probe stopped at the leaf limit.
    ProbeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RingDomainReport {
    pub seed_period: f64,
    pub direction: DirectionClass,
    /// Periodic leaves sorted by offset, the seed included.
    pub leaves: Vec<LeafSample>,
    /// Flat distance between the extreme leaves.
    pub width: f64,
    pub leaf_g_lengths: Vec<f64>,
    /// Largest relative deviation of a leaf length from their mean.
    pub g_length_spread: f64,
    pub leaves_disjoint: bool,
    /// Boundary found on the negative and the positive side.
    pub boundary: [BoundaryComponent; 2],
    /// Saddle connections with the seed's direction, when searched.
    pub parallel_saddles: Vec<SaddleConnection>,
}

struct Leaf {
    sample: LeafSample,
    traj: Trajectory,
}

fn leaf_through(conn: &FuchsianConnection, state: GeodesicState, offset: f64, period_guess: f64, opts: &RingProbeOptions) -> Result<Leaf, BoundaryComponent> {
    let traj = trace(conn, state, 1.3 * period_guess, &opts.trace).map_err(|_| BoundaryComponent::NonPeriodicLeaf { offset })?;
    if let Some(pole) = traj.termination().pole() {
        return Err(BoundaryComponent::LeafHitsPole { offset, pole });
    }
    let (period, _) = detect_period(&traj, opts.recurrence_tol).ok_or(BoundaryComponent::NonPeriodicLeaf { offset })?;
    let len = g_length(&traj, 0.0, period).map_err(|_| BoundaryComponent::NonPeriodicLeaf { offset })?;
    let s = traj.samples()[0].state;
    let sample = LeafSample { offset, z0: s.std_z().unwrap_or_default(), v0: s.std_v().unwrap_or_default(), period, g_length: len };
    Ok(Leaf { sample, traj })
}

/// Marches across the family of periodic geodesics parallel to `periodic`.
///
/// Leaves are seeded along the geodesic normal to the seed at its initial
/// point, with the seed's first integral, at flat distances `k · step`.
pub fn ring_domain_probe(conn: &FuchsianConnection, periodic: &Trajectory, opts: &RingProbeOptions) -> Result<RingDomainReport, OmegaError> {
    if !conn.has_real_periods() {
        return Err(OmegaError::NonRealResidues);
    }
    let (seed_period, _) = detect_period(periodic, opts.recurrence_tol).ok_or(OmegaError::SeedNotPeriodic)?;
    let s0 = periodic.samples()[0].state;
    let (z0, v0) = (s0.std_z().ok_or(OmegaError::SeedNotPeriodic)?, s0.std_v().ok_or(OmegaError::SeedNotPeriodic)?);
    let c0 = s0.first_integral();
    let seed_len = g_length(periodic, 0.0, seed_period)?;
    let mut leaves = vec![Leaf {
        sample: LeafSample { offset: 0.0, z0, v0, period: seed_period, g_length: seed_len },
        traj: trace(conn, s0, seed_period, &opts.trace)?,
    }];
    let unbounded = BoundaryComponent::ProbeLimit;
    let mut boundary = [unbounded.clone(), unbounded];

    for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let normal0 = GeodesicState { v: sign * Complex64::i() * v0 / v0.norm(), chart: Chart::Standard, z: z0, k_phase: s0.k_phase };
        // Long enough in time to cover every requested offset, or to hit a pole.
        let reach = opts.step * opts.max_leaves as f64;
        let mut t_span = reach;
        let normal = loop {
            let tr = trace(conn, normal0, t_span, &opts.trace)?;
            let total = if tr.t_end() > 0.0 { g_length(&tr, 0.0, tr.t_end())? } else { 0.0 };
            if total >= reach || tr.termination().pole().is_some() || t_span > 1e6 {
                break tr;
            }
            t_span *= 4.0;
        };
        let total = if normal.t_end() > 0.0 { g_length(&normal, 0.0, normal.t_end())? } else { 0.0 };
        for k in 1..=opts.max_leaves {
            let target = k as f64 * opts.step;
            if target > total {
                if let Some(pole) = normal.termination().pole() {
                    let residue = conn.poles()[pole].rho();
                    boundary[side] = BoundaryComponent::Pole { pole, residue, unbounded: residue <= -1.0 };
                }
                break;
            }
            let t = bisect(0.0, normal.t_end(), 100, |t| {
                if t <= 0.0 {
                    -target
                } else {
                    g_length(&normal, 0.0, t).unwrap_or(f64::NAN) - target
                }
            });
            let Some((st, _)) = normal.state_at(t) else { break };
            let (Some(z), Some(_)) = (st.std_z(), st.std_v()) else { break };
            let leaf_state = GeodesicState { chart: Chart::Standard, z, v: c0 * (-st.k_phase).exp(), k_phase: st.k_phase };
            match leaf_through(conn, leaf_state, sign * target, seed_period, opts) {
                Ok(leaf) => leaves.push(leaf),
                Err(b) => {
                    boundary[side] = b;
                    break;
                }
            }
        }
    }

    leaves.sort_by(|a, b| a.sample.offset.total_cmp(&b.sample.offset));
    let lengths: Vec<f64> = leaves.iter().map(|l| l.sample.g_length).collect();
    let mean = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let spread = lengths.iter().map(|l| ((l - mean) / mean).abs()).fold(0.0, f64::max);
    let disjoint = leaves.windows(2).all(|w| !crosses(&w[0].traj, &w[1].traj));
    let width = leaves.last().unwrap().sample.offset - leaves[0].sample.offset;
    let direction = DirectionClass::new(conn, c0);
    let parallel_saddles = if opts.search_saddles {
        saddle_connection_search(conn, &SaddleSearchOptions::default())
            .into_iter()
            .filter(|s| s.direction.equivalent_unoriented(&direction, 1e-6))
            .collect()
    } else {
        Vec::new()
    };
    Ok(RingDomainReport {
        seed_period,
        direction,
        leaves: leaves.iter().map(|l| l.sample.clone()).collect(),
        width,
        leaf_g_lengths: lengths,
        g_length_spread: spread,
        leaves_disjoint: disjoint,
        boundary,
        parallel_saddles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PoleSpec;
    use std::f64::consts::TAU;

    #[test]
    fn concentric_circles() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap();
        let seed = trace(&conn, GeodesicState::new(&conn, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), 1.3 * TAU, &TraceOptions::default()).unwrap();
        let rep = ring_domain_probe(&conn, &seed, &RingProbeOptions::default()).unwrap();
        assert_eq!(rep.leaves.len(), 13);
        for l in &rep.leaf_g_lengths {
            assert!((l - TAU).abs() < 1e-6, "{l}");
        }
        assert!(rep.g_length_spread < 1e-6);
        assert!(rep.leaves_disjoint);
        let r1 = rep.leaves[0].z0.norm();
        let r2 = rep.leaves.last().unwrap().z0.norm();
        assert!((rep.width - (r2 / r1).ln().abs()).abs() < 1e-6, "{} {}", rep.width, (r2 / r1).ln());
        assert!((rep.width - 3.0).abs() < 1e-9);
    }

    #[test]
    fn probing_into_the_pole_is_unbounded() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap();
        let seed = trace(&conn, GeodesicState::new(&conn, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), 1.3 * TAU, &TraceOptions::default()).unwrap();
        let opts = RingProbeOptions { step: 4.0, max_leaves: 5, ..Default::default() };
        let rep = ring_domain_probe(&conn, &seed, &opts).unwrap();
        // The negative side points outward from the counter-clockwise seed.
        assert_eq!(rep.boundary[0], BoundaryComponent::Pole { pole: 1, residue: -1.0, unbounded: true });
        assert_eq!(rep.boundary[1], BoundaryComponent::Pole { pole: 0, residue: -1.0, unbounded: true });
    }

    #[test]
    fn seed_must_be_periodic() {
        let conn = FuchsianConnection::build(&[PoleSpec::at_infinity(-2.0)]).unwrap();
        let line = trace(&conn, GeodesicState::new(&conn, Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)), 5.0, &TraceOptions::default()).unwrap();
        assert!(matches!(ring_domain_probe(&conn, &line, &RingProbeOptions::default()), Err(OmegaError::SeedNotPeriodic)));
    }
}
