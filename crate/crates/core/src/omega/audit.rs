use std::f64::consts::TAU;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{classify_trajectory, ClassifyBudget, VerdictTag};
use crate::connection::{BuildOptions, FuchsianConnection, PoleSpec, SpherePoint};
use crate::geodesic::{self_intersections, trace, GeodesicState};

/// One randomly generated connection and initial condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCase {
    pub seed: u64,
    pub poles: Vec<PoleSpec>,
    pub z0: Complex64,
    pub v0: Complex64,
}

fn random_layout(rng: &mut ChaCha8Rng) -> (Vec<Complex64>, Complex64, Complex64) {
    let n = rng.gen_range(2..=4);
    let mut locs: Vec<Complex64> = Vec::new();
    while locs.len() < n {
        let p = Complex64::from_polar(rng.gen_range(0.0..2.0f64).sqrt() * 1.4, rng.gen_range(0.0..TAU));
        if locs.iter().all(|q| (p - q).norm() > 0.4) {
            locs.push(p);
        }
    }
    let z0 = loop {
        let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        if locs.iter().all(|q| (z - q).norm() > 0.2) {
            break z;
        }
    };
    (locs, z0, Complex64::from_polar(1.0, rng.gen_range(0.0..TAU)))
}

/// Two to four finite poles with real residues in `(−0.9, 1.5)`; the pole
/// at infinity takes the remainder.
pub fn random_real_case(seed: u64) -> AuditCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (locs, z0, v0) = random_layout(&mut rng);
    let poles = locs.iter().map(|&p| PoleSpec::new(SpherePoint::Finite(p), rng.gen_range(-0.9..1.5))).collect();
    AuditCase { seed, poles, z0, v0 }
}

/// As [`random_real_case`] with small imaginary parts on the residues.
pub fn random_complex_case(seed: u64) -> AuditCase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (locs, z0, v0) = random_layout(&mut rng);
    let poles = locs
        .iter()
        .map(|&p| PoleSpec::complex(SpherePoint::Finite(p), Complex64::new(rng.gen_range(-0.9..1.5), rng.gen_range(-0.2..0.2))))
        .collect();
    AuditCase { seed, poles, z0, v0 }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub index: usize,
    pub case: AuditCase,
    /// Residues real, so the exclusion statements apply.
    pub admitted: bool,
    /// No self-intersection found within the budget.
    pub simple: bool,
    pub verdict: String,
    pub tag: Option<VerdictTag>,
    pub t_end: f64,
    pub drift: f64,
    pub anomaly: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub base_seed: u64,
    pub records: Vec<AuditRecord>,
    /// Anomalies among admitted, simple, non-periodic trajectories.
    pub anomalies: usize,
    /// Anomalous verdicts on non-admitted cases (not counted).
    pub uncounted: usize,
    pub simple_non_periodic: usize,
}

impl AuditReport {
    /// One line per trajectory.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            let _ = writeln!(
                out,
                "index={} seed={} verdict={} admitted={} simple={} anomaly={} t_end={:.6} drift={:.3e}{}",
                r.index,
                r.case.seed,
                r.verdict,
                r.admitted,
                r.simple,
                r.anomaly,
                r.t_end,
                r.drift,
                r.error.as_ref().map(|e| format!(" error={e}")).unwrap_or_default()
            );
        }
        let _ = writeln!(
            out,
            "summary cases={} simple_non_periodic={} anomalies={} uncounted={}",
            self.records.len(),
            self.simple_non_periodic,
            self.anomalies,
            self.uncounted
        );
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit report serialises")
    }
}

fn audit_one(index: usize, case: AuditCase, budget: &ClassifyBudget) -> AuditRecord {
    let mut rec = AuditRecord {
        index,
        admitted: case.poles.iter().all(|p| p.residue.im == 0.0),
        case,
        simple: false,
        verdict: String::new(),
        tag: None,
        t_end: 0.0,
        drift: 0.0,
        anomaly: false,
        error: None,
    };
    let built = FuchsianConnection::build_with(&rec.case.poles, BuildOptions { allow_non_real_periods: true, ..Default::default() });
    let conn = match built {
        Ok(c) => c,
        Err(e) => {
            rec.verdict = "Invalid".into();
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let traj = match trace(&conn, GeodesicState::new(&conn, rec.case.z0, rec.case.v0), budget.t_max, &budget.trace_options()) {
        Ok(t) => t,
        Err(e) => {
            rec.verdict = "TraceError".into();
            rec.error = Some(e.to_string());
            return rec;
        }
    };
    let v = classify_trajectory(&conn, &traj, budget);
    rec.simple = self_intersections(&traj, 1).is_empty();
    rec.verdict = v.tag.to_string();
    rec.t_end = v.diagnostics.t_end;
    rec.drift = v.diagnostics.drift;
    let periodic = matches!(v.tag, VerdictTag::Periodic { .. });
    rec.anomaly = rec.admitted && rec.simple && !periodic && v.tag.is_anomalous();
    rec.tag = Some(v.tag);
    rec
}

/// Classifies `count` generated cases (seeds `base_seed + i`) and counts
/// verdicts that the exclusion statements rule out.
pub fn exclusion_audit<G>(generator: G, count: usize, base_seed: u64, budget: &ClassifyBudget) -> AuditReport
where
    G: Fn(u64) -> AuditCase + Sync,
{
    let records: Vec<AuditRecord> = (0..count)
        .into_par_iter()
        .map(|i| audit_one(i, generator(base_seed.wrapping_add(i as u64)), budget))
        .collect();
    let is_anomalous = |r: &AuditRecord| r.tag.as_ref().is_some_and(|t| t.is_anomalous());
    let anomalies = records.iter().filter(|r| r.anomaly).count();
    let uncounted = records.iter().filter(|r| !r.admitted && is_anomalous(r)).count();
    let simple_non_periodic = records
        .iter()
        .filter(|r| r.admitted && r.simple && !matches!(r.tag, Some(VerdictTag::Periodic { .. })))
        .count();
    AuditReport { base_seed, records, anomalies, uncounted, simple_non_periodic }
}
