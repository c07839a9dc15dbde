//! Numerical verification suites with closed forms as oracles.
//!
//! Each suite returns named [`CheckResult`]s; a check passes when its value
//! is at most its tolerance.

use std::f64::consts::TAU;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::connection::{wrap_pi, FuchsianConnection, PoleSpec, SpherePoint};
use crate::geodesic::{trace, GeodesicState, TraceOptions};
use crate::local::{critical_length, diameter_bound, local_params, radial_witness_length};
use crate::omega::{saddle_connection_search, SaddleConnection, SaddleSearchOptions};
use crate::teichmuller::{
    check_chart_polygon_rho, check_p1_formula, check_two_gon, generate_chart_polygon, Enclosed, GeodesicPolygon, Side, VertexKind,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl CheckResult {
    pub fn new(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckResult { name: name.into(), value, tolerance, pass: value <= tolerance }
    }

    fn failed(name: impl Into<String>) -> Self {
        CheckResult { name: name.into(), value: f64::INFINITY, tolerance: 0.0, pass: false }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} value={:.3e} tol={:.1e}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.value, self.tolerance)
    }
}

/// All checks pass.
pub fn all_pass(checks: &[CheckResult]) -> bool {
    checks.iter().all(|c| c.pass)
}

pub fn first_failure(checks: &[CheckResult]) -> Option<&CheckResult> {
    checks.iter().find(|c| !c.pass)
}

/// `{0: ρ, ∞: −2−ρ}`; the standard chart is already adapted at 0.
pub fn single_pole(rho: f64) -> FuchsianConnection {
    FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, rho)]).expect("single pole connection")
}

/// Closed-form agreement, critical lengths and the diameter bound at each residue.
pub fn local_suite(rhos: &[f64], samples: usize, seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for &rho in rhos {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ rho.to_bits());
        let conn = single_pole(rho);
        let opts = TraceOptions { escape_radius: Some(1.0), ..Default::default() };

        let (mut sup, mut slowest) = (0.0f64, 0.0f64);
        let mut ok = true;
        for _ in 0..samples {
            let z0 = Complex64::from_polar(rng.gen_range(0.2..0.8), rng.gen_range(0.0..TAU));
            let v0 = Complex64::from_polar(rng.gen_range(0.5..1.5), rng.gen_range(0.0..TAU));
            let p = match local_params(rho, 1.0, z0, v0) {
                Ok(p) => p,
                Err(_) => {
                    ok = false;
                    continue;
                }
            };
            let start = Instant::now();
            let tr = match trace(&conn, GeodesicState::new(&conn, z0, v0), 100.0, &opts) {
                Ok(t) => t,
                Err(_) => {
                    ok = false;
                    continue;
                }
            };
            slowest = slowest.max(start.elapsed().as_secs_f64());
            for s in tr.samples() {
                if let Some(z) = s.state.std_z() {
                    sup = sup.max((z - p.eval(s.t)).norm());
                }
            }
        }
        out.push(CheckResult::new(format!("local.closed_form rho={rho}"), if ok { sup } else { f64::INFINITY }, 1e-8));
        out.push(CheckResult::new(format!("local.trace_seconds rho={rho}"), slowest, 1.0));

        let (lengths, ok) = critical_lengths(&conn, rho, 100, &mut rng);
        let exact = critical_length(rho, 1.0);
        if ok && !lengths.is_empty() && exact.is_finite() {
            let (lo, hi) = lengths.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            out.push(CheckResult::new(format!("local.critical_spread rho={rho}"), hi - lo, 1e-9));
            let err = lengths.iter().map(|l| (l - exact).abs()).fold(0.0, f64::max);
            out.push(CheckResult::new(format!("local.critical_length rho={rho}"), err, 1e-9));
        } else {
            out.push(CheckResult::failed(format!("local.critical_length rho={rho}")));
        }

        let bound = diameter_bound(rho, 1.0);
        let violations = (0..1000)
            .filter(|_| {
                let z1 = Complex64::from_polar(rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..TAU));
                let z2 = Complex64::from_polar(rng.gen_range(0.0f64..1.0).sqrt(), rng.gen_range(0.0..TAU));
                radial_witness_length(rho, z1, z2) > bound
            })
            .count();
        out.push(CheckResult::new(format!("local.diameter_bound rho={rho}"), violations as f64, 0.0));
    }
    out
}

/// g-length from radius 1 down to the pole along `n` random critical rays:
/// the traced length plus the closed-form tail below the last sample.
pub fn critical_lengths<R: Rng>(conn: &FuchsianConnection, rho: f64, n: usize, rng: &mut R) -> (Vec<f64>, bool) {
    let opts = TraceOptions::default();
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let dir = Complex64::from_polar(1.0, rng.gen_range(0.0..TAU));
        let tr = match trace(conn, GeodesicState::new(conn, dir, -dir), 1e3, &opts) {
            Ok(t) => t,
            Err(_) => return (out, false),
        };
        if tr.termination().pole() != Some(0) {
            return (out, false);
        }
        let last = tr.samples().last().unwrap();
        let r_end = last.state.std_z().map_or(0.0, |z| z.norm());
        out.push(last.s_g + critical_length(rho, r_end));
    }
    (out, true)
}

/// Chart-polygon identity on generated polygons, the exact unit-circle
/// instance and the symmetric two-gon.
pub fn teichmuller_suite(seed: u64, polygons: usize, saddle_grid: usize) -> Vec<CheckResult> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..polygons {
        let rho = rng.gen_range(-0.49..3.0);
        let (poly, _) = generate_chart_polygon(rho, &mut rng);
        worst = worst.max(check_chart_polygon_rho(rho, &poly).map_or(f64::INFINITY, |c| c.residual));
    }
    out.push(CheckResult::new("teichmuller.chart_polygons", worst, 1e-6));
    out.push(unit_circle_check());
    out.push(two_gon_check(saddle_grid));
    out
}

fn unit_circle_check() -> CheckResult {
    let name = "teichmuller.unit_circle";
    let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap();
    let Ok(tr) = trace(&conn, GeodesicState::new(&conn, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), TAU, &TraceOptions::default()) else {
        return CheckResult::failed(name);
    };
    let mut side = Side::from_trajectory(&tr);
    // The orbit closes up to integration error; the identity is combinatorial.
    *side.points.last_mut().unwrap() = side.points[0];
    match GeodesicPolygon::new(vec![side], vec![], Enclosed::Interior).and_then(|p| check_p1_formula(&conn, &p)) {
        Ok(c) if c.enclosed == [0] && c.enclosed_sum == -1.0 => CheckResult::new(name, c.residual, 0.0),
        _ => CheckResult::failed(name),
    }
}

/// `{−1: 1/2, 1: 1/2}`; the two-gon is the slit along the saddle connection.
pub fn symmetric_two_gon_connection() -> FuchsianConnection {
    FuchsianConnection::build(&[PoleSpec::at(-1.0, 0.0, 0.5), PoleSpec::at(1.0, 0.0, 0.5)]).unwrap()
}

fn two_gon_check(grid: usize) -> CheckResult {
    let name = "teichmuller.two_gon";
    let conn = symmetric_two_gon_connection();
    let found = saddle_connection_search(&conn, &SaddleSearchOptions { grid, ..Default::default() });
    let Some(sc) = found.iter().find(|s| s.from == 0 && s.to == 1) else {
        return CheckResult::failed(name);
    };
    two_gon_residual(&conn, sc).map_or(CheckResult::failed(name), |r| CheckResult::new(name, r, 1e-3))
}

/// Residual of the two-gon identity for the slit along a saddle connection
/// between two distinct finite poles.
pub fn two_gon_residual(conn: &FuchsianConnection, sc: &SaddleConnection) -> Option<f64> {
    let (a, b) = (conn.poles()[sc.from].location.as_finite()?, conn.poles()[sc.to].location.as_finite()?);
    let mut points = Vec::with_capacity(sc.points.len() + 2);
    points.push(a);
    points.extend_from_slice(&sc.points);
    points.push(b);
    let n = points.len();
    let side = Side { start_tangent: points[1] - points[0], end_tangent: points[n - 1] - points[n - 2], points, drift: 0.0 };
    let kind = |i: usize| VertexKind::Pole { rho: conn.poles()[i].rho() };
    let poly = GeodesicPolygon::new(
        vec![side.clone(), side.reversed()],
        vec![(SpherePoint::Finite(a), kind(sc.from)), (SpherePoint::Finite(b), kind(sc.to))],
        Enclosed::Exterior,
    )
    .ok()?;
    let p1 = check_p1_formula(conn, &poly).ok()?;
    let vs = poly.vertices().ok()?;
    let enclosed: Vec<f64> = p1.enclosed.iter().map(|&i| conn.poles()[i].rho()).collect();
    let two = check_two_gon(vs[0], vs[1], &enclosed);
    Some(p1.residual.max(two.residual))
}

/// The saddle connections found on a grid reappear on the doubled grid.
pub fn saddle_suite(conn: &FuchsianConnection, grid: usize) -> Vec<CheckResult> {
    let coarse = saddle_connection_search(conn, &SaddleSearchOptions { grid, ..Default::default() });
    let fine = saddle_connection_search(conn, &SaddleSearchOptions { grid: 2 * grid, ..Default::default() });
    let worst = coarse
        .iter()
        .map(|c| {
            fine.iter()
                .filter(|f| f.from == c.from && f.to == c.to)
                .map(|f| wrap_pi(f.launch_angle - c.launch_angle).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    vec![
        CheckResult::new("saddles.grid_stability", worst, 1e-6),
        CheckResult::new("saddles.count_change", (coarse.len() as f64 - fine.len() as f64).abs(), 0.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_suite_passes() {
        let checks = local_suite(&[-0.5, 0.5, 1.0, 2.5], 6, 3);
        for c in &checks {
            println!("{c}");
        }
        assert!(all_pass(&checks), "{:#?}", first_failure(&checks));
    }

    #[test]
    fn teichmuller_suite_passes() {
        let checks = teichmuller_suite(11, 20, 90);
        for c in &checks {
            println!("{c}");
        }
        assert!(all_pass(&checks), "{checks:#?}");
    }

    #[test]
    fn saddle_suite_on_symmetric_pair() {
        let checks = saddle_suite(&symmetric_two_gon_connection(), 60);
        assert!(all_pass(&checks), "{checks:#?}");
    }

    #[test]
    fn display_line() {
        let c = CheckResult::new("x", 2.0, 1.0);
        assert!(!c.pass);
        assert_eq!(c.to_string(), "FAIL x value=2.000e0 tol=1.0e0");
    }
}
