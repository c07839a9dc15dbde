use std::f64::consts::TAU;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pole_local, DirectionClass};
use crate::connection::{FuchsianConnection, SpherePoint};
use crate::geodesic::{trace, GeodesicState, TraceOptions, Trajectory};
use crate::local::{AdaptedChart, DEFAULT_ORDER};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaddleSearchOptions {
    /// Launch directions per pole.
    pub grid: usize,
    /// Time budget per shot (unit launch speed in the adapted chart).
    pub t_max: f64,
    /// Chart distance within which a pass near a target pole is tracked.
    pub capture: f64,
    pub bisect_iters: usize,
    pub trace: TraceOptions,
}

impl Default for SaddleSearchOptions {
    fn default() -> Self {
        SaddleSearchOptions { grid: 360, t_max: 20.0, capture: 0.5, bisect_iters: 80, trace: TraceOptions::default() }
    }
}

/// A geodesic joining two poles (possibly the same one).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleConnection {
    pub from: usize,
    pub to: usize,
    /// Launch angle in the adapted chart at `from`.
    pub launch_angle: f64,
    pub direction: DirectionClass,
    /// Standard-chart polyline of the traced part.
    pub points: Vec<Complex64>,
}

/// Launch state on the critical ray of angle `theta` leaving pole `idx`.
struct Launcher {
    idx: usize,
    chart: Option<AdaptedChart>,
    location: SpherePoint,
    eps: f64,
}

impl Launcher {
    fn new(conn: &FuchsianConnection, idx: usize) -> Self {
        let location = conn.poles()[idx].location;
        let chart = AdaptedChart::new(conn, location, DEFAULT_ORDER).ok();
        let eps = match &chart {
            Some(c) => 0.5 * c.radius(),
            None => {
                let d = conn
                    .poles()
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != idx)
                    .filter_map(|(_, q)| match (q.location, location) {
                        (SpherePoint::Finite(a), SpherePoint::Finite(b)) => Some((a - b).norm()),
                        _ => None,
                    })
                    .fold(1.0, f64::min);
                1e-3 * d
            }
        };
        Launcher { idx, chart, location, eps }
    }

    fn state(&self, conn: &FuchsianConnection, theta: f64) -> Option<GeodesicState> {
        let dir = Complex64::from_polar(1.0, theta);
        match &self.chart {
            Some(c) => c.from_chart(self.eps * dir, dir),
            None => match self.location {
                SpherePoint::Finite(p) => Some(GeodesicState::new(conn, p + self.eps * dir, dir)),
                SpherePoint::Infinity => {
                    let w = self.eps * dir;
                    Some(GeodesicState::in_chart(conn, crate::connection::Chart::Infinity, w, dir))
                }
            },
        }
    }
}

/// What a shot did near pole `target`: `0` for a hit, otherwise the side
/// of the first close pass, `None` when it never came close.
fn side_of(conn: &FuchsianConnection, traj: &Trajectory, source: usize, target: usize, capture: f64) -> Option<f64> {
    if traj.termination().pole() == Some(target) {
        return Some(0.0);
    }
    let s = traj.samples();
    let d: Vec<Option<(Complex64, Complex64)>> = s.iter().map(|x| pole_local(conn, target, &x.state)).collect();
    let r = |i: usize| d[i].map_or(f64::INFINITY, |p| p.0.norm());
    // A loop back to the source must first leave the capture disc.
    let mut armed = target != source;
    for i in 1..s.len().saturating_sub(1) {
        if r(i) > capture {
            armed = true;
        }
        if armed && r(i) < capture && r(i) <= r(i - 1) && r(i) <= r(i + 1) {
            let (zeta, dz) = d[i]?;
            let l = (zeta.conj() * dz).im;
            return Some(if l >= 0.0 { 1.0 } else { -1.0 });
        }
    }
    None
}

fn shoot(conn: &FuchsianConnection, l: &Launcher, theta: f64, opts: &SaddleSearchOptions) -> Option<Trajectory> {
    trace(conn, l.state(conn, theta)?, opts.t_max, &opts.trace).ok()
}

/// Saddle connections between poles of residue greater than −1, found by
/// shooting critical geodesics from every such pole and bisecting on the
/// side on which they pass each other pole.
pub fn saddle_connection_search(conn: &FuchsianConnection, opts: &SaddleSearchOptions) -> Vec<SaddleConnection> {
    let eligible: Vec<usize> = conn
        .poles()
        .iter()
        .enumerate()
        .filter(|(_, p)| p.residue.im == 0.0 && p.rho() > -1.0)
        .map(|(j, _)| j)
        .collect();
    let mut found: Vec<SaddleConnection> = Vec::new();
    let n = opts.grid.max(3);
    for &src in &eligible {
        let launcher = Launcher::new(conn, src);
        let thetas: Vec<f64> = (0..n).map(|k| TAU * k as f64 / n as f64).collect();
        let sides: Vec<Vec<Option<f64>>> = thetas
            .par_iter()
            .map(|&th| match shoot(conn, &launcher, th, opts) {
                Some(tr) => eligible.iter().map(|&q| side_of(conn, &tr, src, q, opts.capture)).collect(),
                None => vec![None; eligible.len()],
            })
            .collect();
        let mut candidates: Vec<(usize, f64, f64)> = Vec::new();
        for (qi, &q) in eligible.iter().enumerate() {
            if q < src {
                continue;
            }
            for k in 0..n {
                let (a, b) = (sides[k][qi], sides[(k + 1) % n][qi]);
                let hi = if k + 1 == n { TAU } else { thetas[k + 1] };
                match (a, b) {
                    (Some(0.0), _) => candidates.push((q, thetas[k], thetas[k])),
                    (Some(x), Some(y)) if y != 0.0 && x != y => candidates.push((q, thetas[k], hi)),
                    _ => {}
                }
            }
        }
        let refined: Vec<Option<SaddleConnection>> = candidates
            .par_iter()
            .map(|&(q, lo, hi)| refine(conn, &launcher, q, lo, hi, opts))
            .collect();
        for c in refined.into_iter().flatten() {
            let dup = found.iter().any(|f| f.from == c.from && f.to == c.to && angle_gap(f.launch_angle, c.launch_angle) < 1e-6);
            if !dup {
                found.push(c);
            }
        }
    }
    found
}

fn angle_gap(a: f64, b: f64) -> f64 {
    crate::connection::wrap_pi(a - b).abs()
}

fn refine(conn: &FuchsianConnection, l: &Launcher, target: usize, mut lo: f64, mut hi: f64, opts: &SaddleSearchOptions) -> Option<SaddleConnection> {
    let side = |th: f64| shoot(conn, l, th, opts).and_then(|tr| side_of(conn, &tr, l.idx, target, opts.capture));
    if lo != hi {
        let s_lo = side(lo)?;
        for _ in 0..opts.bisect_iters {
            let mid = 0.5 * (lo + hi);
            match side(mid) {
                Some(0.0) => {
                    lo = mid;
                    hi = mid;
                    break;
                }
                Some(s) if s == s_lo => lo = mid,
                Some(_) => hi = mid,
                None => return None,
            }
        }
    }
    let theta = 0.5 * (lo + hi);
    let tr = shoot(conn, l, theta, opts)?;
    if tr.termination().pole() != Some(target) {
        return None;
    }
    let st = tr.samples()[0].state;
    Some(SaddleConnection {
        from: l.idx,
        to: target,
        launch_angle: theta,
        direction: DirectionClass::of_state(conn, &st),
        points: tr.std_points(),
    })
}
