//! Crossings of polylines and traced geodesics.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::Trajectory;

/// Crossing of segment `seg_a` (parameter `s`) with segment `seg_b` (parameter `u`).
/// Parameters are half-open, `s, u ∈ [0, 1)`, so a crossing at a shared
/// vertex is reported once.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineCrossing {
    pub seg_a: usize,
    pub seg_b: usize,
    pub s: f64,
    pub u: f64,
    pub point: Complex64,
}

/// Refined crossing between two parameter values of traced geodesics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntersectionRecord {
    pub t1: f64,
    pub t2: f64,
    pub point: Complex64,
    /// `|sin|` of the crossing angle.
    pub sin_angle: f64,
    pub transversal: bool,
}

const TRANSVERSAL_SIN: f64 = 1e-3;
const MAX_CELLS_PER_SEGMENT: i64 = 64;

fn cross(a: Complex64, b: Complex64) -> f64 {
    a.re * b.im - a.im * b.re
}

fn segment_hit(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> Option<(f64, f64)> {
    let da = a1 - a0;
    let db = b1 - b0;
    let den = cross(da, db);
    if den == 0.0 || !den.is_finite() {
        return None;
    }
    let r = b0 - a0;
    let s = cross(r, db) / den;
    let u = cross(r, da) / den;
    ((0.0..1.0).contains(&s) && (0.0..1.0).contains(&u)).then_some((s, u))
}

struct Grid {
    cell: f64,
    map: HashMap<(i64, i64), Vec<usize>>,
    oversize: Vec<usize>,
}

impl Grid {
    fn key(&self, z: Complex64) -> (i64, i64) {
        ((z.re / self.cell).floor() as i64, (z.im / self.cell).floor() as i64)
    }

    fn cells(&self, a: Complex64, b: Complex64) -> Option<((i64, i64), (i64, i64))> {
        let (ka, kb) = (self.key(a), self.key(b));
        let lo = (ka.0.min(kb.0), ka.1.min(kb.1));
        let hi = (ka.0.max(kb.0), ka.1.max(kb.1));
        (hi.0 - lo.0 <= MAX_CELLS_PER_SEGMENT && hi.1 - lo.1 <= MAX_CELLS_PER_SEGMENT).then_some((lo, hi))
    }

    fn build(pts: &[Complex64], cell: f64) -> Grid {
        let mut g = Grid { cell, map: HashMap::new(), oversize: Vec::new() };
        for (i, w) in pts.windows(2).enumerate() {
            match g.cells(w[0], w[1]) {
                Some((lo, hi)) => {
                    for x in lo.0..=hi.0 {
                        for y in lo.1..=hi.1 {
                            g.map.entry((x, y)).or_default().push(i);
                        }
                    }
                }
                None => g.oversize.push(i),
            }
        }
        g
    }

    fn candidates(&self, a: Complex64, b: Complex64, n_segments: usize, out: &mut Vec<usize>) {
        out.clear();
        match self.cells(a, b) {
            Some((lo, hi)) => {
                for x in lo.0..=hi.0 {
                    for y in lo.1..=hi.1 {
                        if let Some(v) = self.map.get(&(x, y)) {
                            out.extend_from_slice(v);
                        }
                    }
                }
                out.extend_from_slice(&self.oversize);
            }
            None => out.extend(0..n_segments),
        }
        out.sort_unstable();
        out.dedup();
    }
}

fn cell_size(pts: &[Complex64]) -> f64 {
    let mut lens: Vec<f64> = pts.windows(2).map(|w| (w[1] - w[0]).norm()).filter(|l| l.is_finite() && *l > 0.0).collect();
    if lens.is_empty() {
        return 1.0;
    }
    let mid = lens.len() / 2;
    let (_, m, _) = lens.select_nth_unstable_by(mid, f64::total_cmp);
    (2.0 * *m).max(1e-12)
}

/// Crossings of polyline `a` with itself (`b = None`, adjacent segments
/// skipped) or with polyline `b`.
pub fn polyline_crossings(a: &[Complex64], b: Option<&[Complex64]>) -> Vec<PolylineCrossing> {
    let other = b.unwrap_or(a);
    if a.len() < 2 || other.len() < 2 {
        return Vec::new();
    }
    let grid = Grid::build(other, cell_size(other));
    let n_other = other.len() - 1;
    let mut out = Vec::new();
    let mut cand = Vec::new();
    for (i, w) in a.windows(2).enumerate() {
        grid.candidates(w[0], w[1], n_other, &mut cand);
        for &j in &cand {
            if b.is_none() && j <= i + 1 {
                continue;
            }
            if let Some((s, u)) = segment_hit(w[0], w[1], other[j], other[j + 1]) {
                out.push(PolylineCrossing { seg_a: i, seg_b: j, s, u, point: w[0] + (w[1] - w[0]) * s });
            }
        }
    }
    out.sort_by_key(|x| (x.seg_a, x.seg_b));
    out
}

fn std_pos_vel(traj: &Trajectory, t: f64) -> Option<(Complex64, Complex64)> {
    let (s, _) = traj.state_at(t)?;
    Some((s.std_z()?, s.std_v()?))
}

/// Newton refinement of `z_a(s) = z_b(u)` from a polyline guess.
fn refine(a: &Trajectory, b: &Trajectory, mut s: f64, mut u: f64) -> Option<IntersectionRecord> {
    let (lo_a, hi_a) = (a.samples()[0].t, a.t_end());
    let (lo_b, hi_b) = (b.samples()[0].t, b.t_end());
    let mut best = None;
    for _ in 0..40 {
        let (za, va) = std_pos_vel(a, s)?;
        let (zb, vb) = std_pos_vel(b, u)?;
        let f = za - zb;
        let scale = 1.0 + za.norm();
        if f.norm() <= 1e-14 * scale {
            best = Some((za, va, vb));
            break;
        }
        // [va, -vb] · (ds, du) = -f as a real 2×2 system.
        let det = cross(va, -vb);
        if det.abs() < 1e-300 {
            return None;
        }
        let ds = cross(-f, -vb) / det;
        let du = cross(va, -f) / det;
        s = (s + ds).clamp(lo_a, hi_a);
        u = (u + du).clamp(lo_b, hi_b);
        if ds.abs() + du.abs() < 1e-15 * (1.0 + s.abs() + u.abs()) {
            best = Some((za, va, vb));
            break;
        }
    }
    let (za, va, vb) = best?;
    let (zb, _) = std_pos_vel(b, u)?;
    if (za - zb).norm() > 1e-9 * (1.0 + za.norm()) {
        return None;
    }
    let sin = (cross(va, vb) / (va.norm() * vb.norm())).abs();
    Some(IntersectionRecord { t1: s, t2: u, point: za, sin_angle: sin, transversal: sin > TRANSVERSAL_SIN })
}

fn crossings_between(a: &Trajectory, b: &Trajectory, same: bool, max_count: usize) -> Vec<IntersectionRecord> {
    let pa = a.std_polyline();
    let pb = b.std_polyline();
    let za: Vec<Complex64> = pa.iter().map(|p| p.1).collect();
    let zb: Vec<Complex64> = pb.iter().map(|p| p.1).collect();
    let raw = polyline_crossings(&za, if same { None } else { Some(&zb) });
    let mut out: Vec<IntersectionRecord> = Vec::new();
    for x in raw {
        if out.len() >= max_count {
            break;
        }
        let s = pa[x.seg_a].0 + x.s * (pa[x.seg_a + 1].0 - pa[x.seg_a].0);
        let u = pb[x.seg_b].0 + x.u * (pb[x.seg_b + 1].0 - pb[x.seg_b].0);
        let Some(mut r) = refine(a, b, s, u) else { continue };
        if same {
            if r.t1 > r.t2 {
                std::mem::swap(&mut r.t1, &mut r.t2);
            }
            // Newton may slide onto the diagonal t1 = t2.
            if (r.t2 - r.t1).abs() < 1e-9 * (1.0 + r.t2.abs()) {
                continue;
            }
        }
        let dup = out.iter().any(|o| (o.t1 - r.t1).abs() < 1e-8 && (o.t2 - r.t2).abs() < 1e-8);
        if !dup {
            out.push(r);
        }
    }
    out.sort_by(|x, y| x.t1.total_cmp(&y.t1).then(x.t2.total_cmp(&y.t2)));
    out
}

/// Self-crossings refined to the true curve, at most `max_count` of them
/// (in polyline order).
pub fn self_intersections(traj: &Trajectory, max_count: usize) -> Vec<IntersectionRecord> {
    crossings_between(traj, traj, true, max_count)
}

/// Crossings between two traced geodesics (`t1` on `a`, `t2` on `b`).
pub fn trajectory_crossings(a: &Trajectory, b: &Trajectory, max_count: usize) -> Vec<IntersectionRecord> {
    crossings_between(a, b, false, max_count)
}
