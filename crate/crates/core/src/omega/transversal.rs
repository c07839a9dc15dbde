use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OmegaError, MIN_CROSSINGS};
use crate::connection::FuchsianConnection;
use crate::geodesic::{trace, trajectory_crossings, GeodesicState, TraceOptions, Trajectory};

/// A short geodesic segment `γ(s)`, `s ∈ [−δ, δ]`, and the parameters where
/// a studied trajectory crosses it.
#[derive(Debug, Clone)]
pub struct TransversalSection {
    base: Option<Trajectory>,
    delta: f64,
    crossings: Vec<f64>,
}

/// Minimum `|sin|` for a crossing to count.
const MIN_SIN: f64 = 1e-3;
/// Cap on recorded crossings per trajectory.
const MAX_CROSSINGS: usize = 100_000;

impl TransversalSection {
    /// Unit-speed geodesic through `center` with direction `dir`, half-length `delta` in time.
    pub fn geodesic(conn: &FuchsianConnection, center: Complex64, dir: Complex64, delta: f64, opts: &TraceOptions) -> Result<Self, OmegaError> {
        if !(delta > 0.0) {
            return Err(OmegaError::BadSection);
        }
        let unit = dir / dir.norm();
        let back = trace(conn, GeodesicState::new(conn, center, -unit), delta, opts)?;
        let start = back.samples().last().unwrap().state.reversed();
        if (back.t_end() - delta).abs() > 1e-12 * delta.max(1.0) {
            return Err(OmegaError::BadSection);
        }
        let base = trace(conn, start, 2.0 * delta, opts)?;
        Ok(TransversalSection { base: Some(base), delta, crossings: Vec::new() })
    }

    /// A section with given crossing parameters and no geometry.
    pub fn synthetic(delta: f64, crossings: Vec<f64>) -> Self {
        let mut crossings: Vec<f64> = crossings.into_iter().filter(|s| s.abs() <= delta).collect();
        crossings.sort_by(f64::total_cmp);
        TransversalSection { base: None, delta, crossings }
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn crossings(&self) -> &[f64] {
        &self.crossings
    }

    pub fn base(&self) -> Option<&Trajectory> {
        self.base.as_ref()
    }

    /// Adds the transversal crossings of `traj`; returns how many were added.
    pub fn record(&mut self, traj: &Trajectory) -> usize {
        let Some(base) = &self.base else { return 0 };
        let found: Vec<f64> = trajectory_crossings(traj, base, MAX_CROSSINGS)
            .into_iter()
            .filter(|r| r.sin_angle >= MIN_SIN)
            .map(|r| r.t2 - self.delta)
            .collect();
        let n = found.len();
        self.crossings.extend(found);
        self.crossings.sort_by(f64::total_cmp);
        n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransversalStats {
    /// Sorted crossing parameters.
    pub crossings: Vec<f64>,
    /// Number of distinct crossing points after merging coincident ones.
    pub distinct: usize,
    /// Nearest-neighbour gap of every distinct point.
    pub nearest_gaps: Vec<f64>,
    pub median_gap: f64,
    /// Some point has both neighbours farther than ten median gaps.
    pub isolated: bool,
    /// Some subinterval is filled down to the sampling resolution.
    pub dense: bool,
    /// Box-counting dimension estimate, when enough scales are available.
    pub dimension: Option<f64>,
}

/// Records the crossings of `traj` with the section and computes statistics.
pub fn transversal_analysis(traj: &Trajectory, section: &mut TransversalSection) -> Result<TransversalStats, OmegaError> {
    section.record(traj);
    crossing_statistics(section)
}

/// Gap statistics of the crossing set of a section.
pub fn crossing_statistics(section: &TransversalSection) -> Result<TransversalStats, OmegaError> {
    let xs = &section.crossings;
    if xs.len() < MIN_CROSSINGS {
        return Err(OmegaError::TooFewCrossings(xs.len()));
    }
    let resolution = 1e-8 * section.delta.max(1.0);
    let mut pts: Vec<f64> = Vec::new();
    for &x in xs {
        if pts.last().is_none_or(|&p| x - p > resolution) {
            pts.push(x);
        }
    }
    let gaps: Vec<f64> = pts.windows(2).map(|w| w[1] - w[0]).collect();
    let median_gap = median(&gaps);
    let n = pts.len();
    let left = |k: usize| if k == 0 { f64::INFINITY } else { gaps[k - 1] };
    let right = |k: usize| if k + 1 == n { f64::INFINITY } else { gaps[k] };
    let nearest_gaps: Vec<f64> = (0..n).map(|k| left(k).min(right(k))).filter(|g| g.is_finite()).collect();
    let isolated = n < 3 || (0..n).any(|k| left(k) > 10.0 * median_gap && right(k) > 10.0 * median_gap);

    let span = pts[n - 1] - pts[0];
    let dense = n >= 3 && {
        let thr = 8.0 * span / (n - 1) as f64;
        let window = span / 10.0;
        let mut run_start = pts[0];
        let mut best = 0.0f64;
        for k in 0..gaps.len() {
            if gaps[k] > thr {
                run_start = pts[k + 1];
            }
            best = best.max(pts[k + 1] - run_start);
        }
        best >= window
    };
    Ok(TransversalStats {
        crossings: xs.clone(),
        distinct: n,
        nearest_gaps,
        median_gap,
        isolated,
        dense,
        dimension: box_dimension(&pts),
    })
}

fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::INFINITY;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Least-squares slope of `ln N(ε)` against `ln(1/ε)` over unsaturated
/// scales `ε = 2^{-j/2}` of the normalised set.
fn box_dimension(pts: &[f64]) -> Option<f64> {
    let n = pts.len();
    let span = pts[n - 1] - pts[0];
    if n < 8 || span <= 0.0 {
        return None;
    }
    let mut xy = Vec::new();
    for j in 2..=120 {
        let eps = 2f64.powf(-(j as f64) / 2.0);
        let mut count = 0usize;
        let mut last = i64::MIN;
        for &p in pts {
            let b = (((p - pts[0]) / span) / eps).floor() as i64;
            if b != last {
                count += 1;
                last = b;
            }
        }
        if count * 4 > n {
            break;
        }
        if count >= 4 {
            xy.push(((1.0 / eps).ln(), (count as f64).ln()));
        }
    }
    if xy.len() < 3 {
        return None;
    }
    let k = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / k;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Left endpoints of the level-`k` middle-thirds intervals, mapped to `[−δ, δ]`.
pub fn middle_thirds_points(level: u32, delta: f64) -> Vec<f64> {
    let mut pts = vec![0.0f64];
    let mut len = 1.0;
    for _ in 0..level {
        len /= 3.0;
        pts = pts.iter().flat_map(|&p| [p, p + 2.0 * len]).collect();
    }
    pts.into_iter().map(|p| delta * (2.0 * p - 1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PoleSpec;
    use rand::{Rng, SeedableRng};

    #[test]
    fn middle_thirds_statistics() {
        let sec = TransversalSection::synthetic(1.0, middle_thirds_points(10, 1.0));
        let st = crossing_statistics(&sec).unwrap();
        assert_eq!(st.distinct, 1024);
        assert!(!st.isolated);
        assert!(!st.dense);
        let d = st.dimension.unwrap();
        assert!((d - 2f64.ln() / 3f64.ln()).abs() < 0.05, "{d}");
    }

    #[test]
    fn equidistributed_is_dense() {
        let even: Vec<f64> = (0..500).map(|k| -1.0 + 2.0 * k as f64 / 499.0).collect();
        let st = crossing_statistics(&TransversalSection::synthetic(1.0, even)).unwrap();
        assert!(st.dense && !st.isolated);
        assert!((st.dimension.unwrap() - 1.0).abs() < 0.1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let random: Vec<f64> = (0..2000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        assert!(crossing_statistics(&TransversalSection::synthetic(1.0, random)).unwrap().dense);
    }

    #[test]
    fn repeated_point_is_isolated() {
        let st = crossing_statistics(&TransversalSection::synthetic(0.5, vec![0.1; 30])).unwrap();
        assert_eq!(st.distinct, 1);
        assert!(st.isolated && !st.dense);
        assert!(matches!(crossing_statistics(&TransversalSection::synthetic(0.5, vec![0.1; 5])), Err(OmegaError::TooFewCrossings(5))));
    }

    #[test]
    fn periodic_orbit_hits_section_once() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap();
        let opts = TraceOptions::default();
        let mut sec = TransversalSection::geodesic(&conn, Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0), 0.2, &opts).unwrap();
        let circle = trace(&conn, GeodesicState::new(&conn, Complex64::new(0.0, 1.0), Complex64::new(-1.0, 0.0)), 25.0 * std::f64::consts::TAU, &opts).unwrap();
        let st = transversal_analysis(&circle, &mut sec).unwrap();
        assert!(st.crossings.len() >= 25);
        assert_eq!(st.distinct, 1);
        assert!(st.isolated);
        assert!(st.crossings[0].abs() < 1e-8);
    }
}
