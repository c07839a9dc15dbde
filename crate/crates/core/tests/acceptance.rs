//! Acceptance battery: one PASS/FAIL line per criterion, non-zero exit on
//! any failure. Runs without the libtest harness so that the lines always
//! reach the output.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use connexion::config::{ConfigError, SceneConfig};
use connexion::connection::{ConnectionError, FuchsianConnection, PoleSpec, SpherePoint};
use connexion::geodesic::{first_integral, self_intersections, trace, trajectory_crossings, GeodesicState, TraceOptions, Trajectory};
use connexion::local::{must_cross, self_intersection_radius, LocalGeodesicParams};
use connexion::omega::{
    classify, crossing_statistics, exclusion_audit, middle_thirds_points, random_real_case, ring_domain_probe, ClassifyBudget,
    RingProbeOptions, TransversalSection, VerdictTag,
};
use connexion::render::{RenderScene, Viewport};
use connexion::verify::{local_suite, single_pole, teichmuller_suite, CheckResult};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20_241;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn from_checks(checks: &[CheckResult]) -> Outcome {
    let failing: Vec<String> = checks.iter().filter(|c| !c.pass).map(|c| c.to_string()).collect();
    if failing.is_empty() {
        let worst = checks.iter().map(|c| format!("{}={:.1e}", c.name, c.value)).collect::<Vec<_>>().join(" ");
        outcome(true, worst)
    } else {
        outcome(false, failing.join("; "))
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn log_conn() -> FuchsianConnection {
    FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap()
}

fn artifact_dir() -> PathBuf {
    let d = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance");
    fs::create_dir_all(&d).unwrap();
    d
}

fn closed_form() -> Outcome {
    let checks: Vec<CheckResult> = local_suite(&[-0.5, 0.5, 1.0, 2.5], 20, SEED)
        .into_iter()
        .filter(|c| c.name.starts_with("local.closed_form") || c.name.starts_with("local.trace_seconds"))
        .collect();
    from_checks(&checks)
}

fn drift() -> Outcome {
    let mut worst = 0.0f64;
    for i in 0..20 {
        let case = random_real_case(SEED + i);
        let conn = FuchsianConnection::build(&case.poles).unwrap();
        let tr = match trace(&conn, GeodesicState::new(&conn, case.z0, case.v0), 50.0, &TraceOptions::default()) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("case {i}: {e}")),
        };
        worst = worst.max(first_integral(&tr).1);
    }
    outcome(worst <= 1e-9, format!("max relative drift {worst:.2e} over 20 connections"))
}

fn periodicity_and_spirals() -> Outcome {
    let conn = log_conn();
    let budget = ClassifyBudget { max_seconds: None, ..Default::default() };
    let circle = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), &budget).unwrap();
    let period_err = match circle.tag {
        VerdictTag::Periodic { period, .. } => (period - TAU).abs(),
        _ => f64::INFINITY,
    };
    let out = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.1, 1.0)), &budget).unwrap();
    let inw = classify(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(-0.1, 1.0)), &budget).unwrap();
    let spirals_ok = out.tag.to_string() == "ConvergesToPole(inf)" && inw.tag.to_string() == "ConvergesToPole(0)";

    // Circles and spirals of the logarithmic connection.
    let opts = TraceOptions { h_max: Some(0.02), ..Default::default() };
    let mut scene = RenderScene::with_connection(&conn);
    for r in [0.5, 1.0, 1.5] {
        scene.add_trajectory(&trace(&conn, GeodesicState::new(&conn, c(r, 0.0), c(0.0, r)), TAU, &opts).unwrap());
    }
    for v in [c(0.15, 1.0), c(-0.15, 1.0)] {
        scene.add_trajectory(&trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), v), 40.0, &opts).unwrap());
    }
    let vp = Viewport { center: c(0.0, 0.0), half_width: 2.0, width: 600, height: 600 };
    let svg = scene.to_svg(&vp);
    let closed = svg.matches("class=\"trajectory closed\"").count();
    let path = artifact_dir().join("log_connection_portrait.svg");
    fs::write(&path, &svg).unwrap();
    outcome(
        period_err <= 1e-6 && spirals_ok && closed == 3 && svg == scene.to_svg(&vp),
        format!("|T-2pi|={period_err:.2e} outward={} inward={} closed polylines={closed} svg={}", out.tag, inw.tag, path.display()),
    )
}

fn residue_gate() -> Outcome {
    let far = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-0.9)]);
    let near = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0 + 5e-12)]);
    let rejected = matches!(far, Err(ConnectionError::SumMismatch { .. })) && matches!(near, Err(ConnectionError::SumMismatch { .. }));
    let cfg = SceneConfig::parse(r#"{"connection": {"poles": [{"re": 0, "im": 0, "residue": -1}, {"at": "inf", "residue": -0.9}]}}"#).unwrap();
    let cfg_rejected = matches!(cfg.validate(), Err(ConfigError::ResidueSum { .. }) | Err(ConfigError::Connection(_)));
    let implied = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.5), PoleSpec::at(1.0, 0.0, 0.25), PoleSpec::at(0.0, 1.0, -0.125)]).unwrap();
    let inf = implied.residue_at_infinity();
    let exact = inf == c(-2.625, 0.0) && implied.pole_index(SpherePoint::Infinity).is_some();
    outcome(rejected && cfg_rejected && exact, format!("rejections ok={} implied infinity residue {inf}", rejected && cfg_rejected))
}

fn critical_length_and_diameter() -> Outcome {
    let checks: Vec<CheckResult> = local_suite(&[-0.5, 0.5, 1.0, 2.5], 1, SEED)
        .into_iter()
        .filter(|c| c.name.starts_with("local.critical") || c.name.starts_with("local.diameter"))
        .collect();
    from_checks(&checks)
}

/// Traced geodesic `w = e^{iα}(t + iτ)^{1/(ρ+1)}` for `t ∈ [−1, 1]`.
fn chart_geodesic(conn: &FuchsianConnection, rho: f64, alpha: f64, tau: f64) -> Trajectory {
    let p = LocalGeodesicParams { rho, r: 1.0, alpha, a: c(1.0, 0.0), b: c(0.0, tau) };
    let opts = TraceOptions { h_max: Some(0.002), ..Default::default() };
    trace(conn, GeodesicState::new(conn, p.eval(-1.0), p.velocity(-1.0)), 2.0, &opts).unwrap()
}

fn self_intersection_and_crossing() -> Outcome {
    let rho = -0.9;
    let delta0 = self_intersection_radius(rho, 1.0).unwrap();
    let conn = single_pole(rho);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let (mut entered, mut looped) = (0, 0);
    for _ in 0..10 {
        let z0 = Complex64::from_polar(0.99, rng.gen_range(0.0..TAU));
        let v0 = -z0 * Complex64::from_polar(1.0, rng.gen_range(-1.0..1.0));
        let opts = TraceOptions { escape_radius: Some(1.0), h_max: Some(0.01), ..Default::default() };
        let tr = trace(&conn, GeodesicState::new(&conn, z0, v0), 200.0, &opts).unwrap();
        let closest = tr.std_points().iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if closest.powf(rho + 1.0) / (rho + 1.0) < delta0 && tr.termination().pole().is_none() {
            entered += 1;
            if !self_intersections(&tr, 1).is_empty() {
                looped += 1;
            }
        }
    }

    let rho = 0.5;
    let conn = single_pole(rho);
    let limit = PI / (rho + 1.0);
    let (mut disjoint, mut crossing, mut predicted) = (0, 0, 0);
    for _ in 0..50 {
        let a1 = rng.gen_range(0.0..TAU);
        let far = a1 + rng.gen_range(limit + 0.05..PI);
        let tau = rng.gen_range(1e-3..1e-2);
        let g1 = chart_geodesic(&conn, rho, a1, tau);
        if trajectory_crossings(&g1, &chart_geodesic(&conn, rho, far, tau), 1).is_empty() {
            disjoint += 1;
        }
        let near = a1 + rng.gen_range(0.05..limit - 0.05);
        if must_cross(rho, a1, near) {
            predicted += 1;
            if !trajectory_crossings(&g1, &chart_geodesic(&conn, rho, near, tau), 1).is_empty() {
                crossing += 1;
            }
        }
    }
    outcome(
        entered >= 1 && looped == entered && disjoint == 50 && predicted == 50 && crossing == 50,
        format!("delta0={delta0:.4} rho=-0.9 looped {looped}/{entered}; rho=0.5 disjoint {disjoint}/50, crossing {crossing}/{predicted}"),
    )
}

fn teichmuller() -> Outcome {
    from_checks(&teichmuller_suite(SEED, 50, 180))
}

fn k_differential() -> Outcome {
    let q = FuchsianConnection::from_k_differential(&[(c(0.0, 0.0), 1)], &[], 2).unwrap();
    let at0 = q.poles()[q.pole_index(SpherePoint::finite(0.0, 0.0)).unwrap()].rho();
    let at_inf = q.residue_at_infinity().re;
    // A second differential with several zeros and a pole, k = 3.
    let roots = [(c(0.0, 0.0), 1), (c(1.0, 0.5), 2)];
    let poles = [(c(-0.5, -1.0), 1)];
    let q3 = FuchsianConnection::from_k_differential(&roots, &poles, 3).unwrap();
    let spread = |conn: &FuchsianConnection, qabs: &dyn Fn(Complex64) -> f64, k: f64| {
        let ratios: Vec<f64> = (0..100)
            .map(|i| c(-2.05 + 0.41 * (i % 10) as f64, -2.03 + 0.43 * (i / 10) as f64))
            .map(|z| qabs(z).powf(1.0 / k) / conn.finite_poles().map(|(p, r)| (z - p).norm().powf(r.re)).product::<f64>())
            .collect();
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        (hi - lo) / hi
    };
    let s2 = spread(&q, &|z| z.norm(), 2.0);
    let s3 = spread(&q3, &|z| (z * (z - roots[1].0).powi(2) / (z - poles[0].0)).norm(), 3.0);
    outcome(
        at0 == 0.5 && at_inf == -2.5 && s2 <= 1e-9 && s3 <= 1e-9,
        format!("residue at 0 {at0}, at infinity {at_inf}; ratio spread {s2:.1e} (k=2), {s3:.1e} (k=3)"),
    )
}

fn ring_domain() -> Outcome {
    let conn = log_conn();
    let seed = trace(&conn, GeodesicState::new(&conn, c(1.0, 0.0), c(0.0, 1.0)), 1.3 * TAU, &TraceOptions::default()).unwrap();
    let rep = match ring_domain_probe(&conn, &seed, &RingProbeOptions::default()) {
        Ok(r) => r,
        Err(e) => return outcome(false, e.to_string()),
    };
    let len_err = rep.leaf_g_lengths.iter().map(|l| (l - TAU).abs()).fold(0.0, f64::max);
    let radii: Vec<f64> = rep.leaves.iter().map(|l| l.z0.norm()).collect();
    let (r1, r2) = radii.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &r| (a.min(r), b.max(r)));
    let width_err = (rep.width - (r2 / r1).ln()).abs();
    outcome(
        len_err <= 1e-6 && width_err <= 1e-6 && rep.leaves_disjoint,
        format!("{} leaves, max |L-2pi|={len_err:.1e}, width {:.9} vs log(r2/r1) {:.9}", rep.leaves.len(), rep.width, (r2 / r1).ln()),
    )
}

fn exclusion() -> Outcome {
    let budget = ClassifyBudget { max_seconds: None, ..Default::default() };
    let start = Instant::now();
    let rep = exclusion_audit(random_real_case, 200, SEED, &budget);
    let secs = start.elapsed().as_secs_f64();
    let path = artifact_dir().join("exclusion_audit.txt");
    fs::write(&path, rep.to_text()).unwrap();
    let forbidden = rep
        .records
        .iter()
        .filter(|r| r.admitted && r.simple)
        .filter(|r| matches!(r.tag, Some(VerdictTag::AccumulatesOnForeignPeriodic { .. }) | Some(VerdictTag::AccumulatesOnSaddleGraph { .. })))
        .count();
    outcome(
        forbidden == 0 && rep.anomalies == 0 && secs <= 600.0,
        format!("{} simple non-periodic, {forbidden} forbidden verdicts, {secs:.1} s, report {}", rep.simple_non_periodic, path.display()),
    )
}

fn cantor() -> Outcome {
    let section = TransversalSection::synthetic(1.0, middle_thirds_points(10, 1.0));
    match crossing_statistics(&section) {
        Ok(s) => {
            let target = 2f64.ln() / 3f64.ln();
            let dim = s.dimension.unwrap_or(f64::NAN);
            outcome(
                !s.isolated && !s.dense && (dim - target).abs() <= 0.05,
                format!("{} points, isolated={} dense={} dimension {dim:.4} (log2/log3 = {target:.4})", s.distinct, s.isolated, s.dense),
            )
        }
        Err(e) => outcome(false, e.to_string()),
    }
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("closed-form agreement", closed_form),
        ("first-integral conservation", drift),
        ("residue -1 periodicity and spirals", periodicity_and_spirals),
        ("residue-sum gate", residue_gate),
        ("critical length and diameter bound", critical_length_and_diameter),
        ("self-intersection and forced crossings", self_intersection_and_crossing),
        ("Teichmuller identities", teichmuller),
        ("k-differential metric", k_differential),
        ("ring-domain probe", ring_domain),
        ("exclusion audit", exclusion),
        ("transversal Cantor statistics", cantor),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = run();
        failed += usize::from(!o.pass);
        println!("{} [{:>2}] {name} ({:.1} s): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, t.elapsed().as_secs_f64(), o.detail);
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
