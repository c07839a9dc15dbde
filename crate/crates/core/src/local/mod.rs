//! Geometry inside an adapted chart around a Fuchsian pole with real residue.
//!
//! In the adapted coordinate the connection is `(ρ/w) dw` and every geodesic
//! is `χ_ρ^α(at + b)` with `χ_ρ^α(u) = e^{iα} u^{1/(ρ+1)}` (or `r e^{iu}`
//! for `ρ = −1`). The flat metric is `|w|^ρ |dw|`.

mod chart;

use std::f64::consts::{FRAC_PI_4, PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::connection::{wrap_pi, wrap_tau};
use crate::geodesic::TrajectorySample;
use crate::quad::{bisect, GaussLegendre};

pub use chart::{AdaptedChart, DEFAULT_ORDER, RESIDUAL_TOL};

/// Half-width `β` of the overlap of the sector `H_ρ` beyond the half-plane.
pub const SECTOR_SLACK: f64 = FRAC_PI_4;
/// Default criticality tolerance, relative to `|b|`.
pub const CRITICAL_TOL: f64 = 1e-9;
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LocalError {
    #[error("residue {0} is at most -1 and resonant or below the chart range")]
    ResonantOrLow(f64),
    #[error("pullback residual test failed at every candidate radius")]
    SeriesDivergence,
    #[error("point is not a pole of the connection")]
    NotAPole,
    #[error("residue is not real")]
    NonRealResidue,
    #[error("series order {0} is below 4")]
    OrderTooSmall(usize),
    #[error("initial point is the pole")]
    AtPole,
    #[error("initial velocity is zero")]
    ZeroVelocity,
    #[error("{0} lies outside the domain of the closed form")]
    OutOfDomain(Complex64),
    #[error("residue {0} outside (-1, -1/2)")]
    OutOfRange(f64),
    #[error("segment does not start inside the chart")]
    SegmentOutsideChart,
}

/// `(α, a, b)` with `w(t) = χ_ρ^α(a t + b)`.
///
/// For `ρ ≠ −1`, `a` is real and signed: positive for clockwise motion
/// around the pole, negative for counter-clockwise motion. For `ρ = −1`,
/// `a` is complex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalGeodesicParams {
    pub rho: f64,
    pub r: f64,
    pub alpha: f64,
    pub a: Complex64,
    pub b: Complex64,
}

impl LocalGeodesicParams {
    /// Chart position at time `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let u = self.a * t + self.b;
        if self.rho == -1.0 {
            self.r * (Complex64::i() * u).exp()
        } else {
            let arg = sector_arg(u).unwrap_or_else(|| u.arg());
            Complex64::from_polar(u.norm().powf(1.0 / (self.rho + 1.0)), self.alpha + arg / (self.rho + 1.0))
        }
    }

    /// Chart velocity at time `t`.
    pub fn velocity(&self, t: f64) -> Complex64 {
        let z = self.eval(t);
        if self.rho == -1.0 {
            Complex64::i() * self.a * z
        } else {
            self.a * z / ((self.rho + 1.0) * (self.a * t + self.b))
        }
    }

    pub fn is_critical(&self, tol: f64) -> bool {
        is_critical(self, tol)
    }
}

/// Argument of `u` in `(−β, π + β)`, if it lies in that sector.
fn sector_arg(u: Complex64) -> Option<f64> {
    if u.norm() == 0.0 {
        return None;
    }
    let mut a = u.arg();
    if a <= -SECTOR_SLACK {
        a += TAU;
    }
    (a > -SECTOR_SLACK && a < PI + SECTOR_SLACK).then_some(a)
}

/// Closed-form parameters reproducing `(z0, v0)` at `t = 0` in a chart of radius `r`.
pub fn local_params(rho: f64, r: f64, z0: Complex64, v0: Complex64) -> Result<LocalGeodesicParams, LocalError> {
    if z0.norm() == 0.0 {
        return Err(LocalError::AtPole);
    }
    if v0.norm() == 0.0 {
        return Err(LocalError::ZeroVelocity);
    }
    if rho == -1.0 {
        let b = Complex64::new(z0.arg(), -(z0.norm() / r).ln());
        let a = -Complex64::i() * v0 / z0;
        let alpha = wrap_tau(a.arg());
        return Ok(LocalGeodesicParams { rho, r, alpha, a, b });
    }
    let e = rho + 1.0;
    let phi = z0.arg();
    let theta = v0.arg();
    let e_arg = if e > 0.0 { 0.0 } else { PI };
    let cand = wrap_pi(phi - theta - e_arg);
    // Critical rays sit on the boundary ψ ∈ {0, π}; the tie goes to ψ = 0.
    let psi = if (cand - PI).abs() < TIE_TOL || cand.abs() < TIE_TOL {
        0.0
    } else if cand > 0.0 {
        cand
    } else {
        cand + PI
    };
    let b = Complex64::from_polar(z0.norm().powf(e), psi);
    let alpha = wrap_tau(phi - psi / e);
    let a = (e * v0 * b / z0).re;
    Ok(LocalGeodesicParams { rho, r, alpha, a: Complex64::new(a, 0.0), b })
}

/// `χ_ρ^α(w)`, principal branch on the sector `H_ρ`.
pub fn chi(rho: f64, alpha: f64, r: f64, w: Complex64) -> Result<Complex64, LocalError> {
    if rho == -1.0 {
        if w.im < 0.0 || !w.re.is_finite() {
            return Err(LocalError::OutOfDomain(w));
        }
        return Ok(r * (Complex64::i() * w).exp());
    }
    let arg = sector_arg(w).ok_or(LocalError::OutOfDomain(w))?;
    Ok(Complex64::from_polar(w.norm().powf(1.0 / (rho + 1.0)), alpha + arg / (rho + 1.0)))
}

/// `χ_ρ^α` along a path, with the argument continued from the first point.
pub fn chi_path(rho: f64, alpha: f64, r: f64, path: &[Complex64]) -> Result<Vec<Complex64>, LocalError> {
    let Some(&first) = path.first() else {
        return Ok(Vec::new());
    };
    if rho == -1.0 {
        return path.iter().map(|&w| chi(rho, alpha, r, w)).collect();
    }
    let mut arg = sector_arg(first).ok_or(LocalError::OutOfDomain(first))?;
    let mut prev = first;
    let mut out = Vec::with_capacity(path.len());
    for &w in path {
        if w.norm() == 0.0 {
            return Err(LocalError::OutOfDomain(w));
        }
        arg += (w / prev).arg();
        prev = w;
        out.push(Complex64::from_polar(w.norm().powf(1.0 / (rho + 1.0)), alpha + arg / (rho + 1.0)));
    }
    Ok(out)
}

/// Critical geodesics run along a ray into the pole.
pub fn is_critical(p: &LocalGeodesicParams, tol: f64) -> bool {
    if p.rho == -1.0 {
        p.a.re.abs() <= tol * p.a.norm()
    } else {
        p.b.im.abs() <= tol * p.b.norm()
    }
}

/// g-length `r^{ρ+1}/(ρ+1)` of every critical geodesic in a chart of radius `r`.
pub fn critical_length(rho: f64, r: f64) -> f64 {
    if rho <= -1.0 {
        return f64::INFINITY;
    }
    r.powf(rho + 1.0) / (rho + 1.0)
}

/// Upper bound `2 r^{ρ+1}/(ρ+1)` on the g-distance of two chart points.
pub fn diameter_bound(rho: f64, r: f64) -> f64 {
    2.0 * critical_length(rho, r)
}

/// g-length of the two radial segments `z1 → 0 → z2`.
pub fn radial_witness_length(rho: f64, z1: Complex64, z2: Complex64) -> f64 {
    (z1.norm().powf(rho + 1.0) + z2.norm().powf(rho + 1.0)) / (rho + 1.0)
}

/// Whether noncritical geodesics with directions `α1, α2` deep in the chart must meet.
pub fn must_cross(rho: f64, alpha1: f64, alpha2: f64) -> bool {
    let gap = wrap_pi(alpha1 - alpha2).abs();
    gap > 0.0 && gap < PI / (rho + 1.0)
}

/// Angle `β(τ)` subtended at 0 by the horizontal chord `Im u = τ` of the
/// half-disc of radius `big_r`.
pub fn chord_turning(tau: f64, big_r: f64) -> f64 {
    PI - 2.0 * (tau / big_r).clamp(-1.0, 1.0).asin()
}

/// Height `τ0` below which every horizontal chord turns by more than
/// `2π(ρ+1)`, found by bisection.
pub fn self_intersection_height(rho: f64, r: f64) -> Result<f64, LocalError> {
    if !(rho > -1.0 && rho < -0.5) {
        return Err(LocalError::OutOfRange(rho));
    }
    let big_r = r.powf(rho + 1.0);
    let target = TAU * (rho + 1.0);
    Ok(bisect(0.0, big_r, 60, |tau| chord_turning(tau, big_r) - target))
}

/// g-distance `δ0` such that noncritical geodesics entering the
/// `δ0`-neighbourhood of the pole cross themselves.
pub fn self_intersection_radius(rho: f64, r: f64) -> Result<f64, LocalError> {
    let tau0 = self_intersection_height(rho, r)?;
    // Length of u = i s, s ∈ [0, τ0], mapped by χ and measured with |w|^ρ|dw|.
    let e = rho + 1.0;
    let gl = GaussLegendre::new(8);
    Ok(gl.integrate(0.0, tau0, |s| {
        let u = Complex64::new(0.0, s);
        let w = u.powf(1.0 / e);
        let dw = w / (e * u) * Complex64::i();
        w.norm().powf(rho) * dw.norm()
    }))
}

/// Direction `α` of the geodesic segment at its first sample.
pub fn entry_direction(chart: &AdaptedChart, segment: &[TrajectorySample]) -> Result<f64, LocalError> {
    let first = segment.first().ok_or(LocalError::SegmentOutsideChart)?;
    let (w, v) = chart.to_chart(&first.state).ok_or(LocalError::SegmentOutsideChart)?;
    Ok(local_params(chart.rho(), chart.radius(), w, v)?.alpha)
}

/// The direction set `I^ρ[β1, β2]`: the arc `[β1, β2]` when it is shorter
/// than `π/(ρ+1)`, otherwise the complementary pair of arcs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionInterval {
    pub rho: f64,
    pub beta1: f64,
    pub beta2: f64,
}

impl DirectionInterval {
    /// `0 ≤ β1 < β2 < 2π`.
    pub fn new(rho: f64, beta1: f64, beta2: f64) -> Option<Self> {
        (0.0 <= beta1 && beta1 < beta2 && beta2 < TAU).then_some(DirectionInterval { rho, beta1, beta2 })
    }

    pub fn is_single_arc(&self) -> bool {
        self.beta2 - self.beta1 < PI / (self.rho + 1.0)
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = wrap_tau(angle);
        if self.is_single_arc() {
            self.beta1 <= a && a <= self.beta2
        } else {
            a <= self.beta1 || a >= self.beta2
        }
    }

    /// Total angular measure of the set.
    pub fn measure(&self) -> f64 {
        if self.is_single_arc() {
            self.beta2 - self.beta1
        } else {
            TAU - (self.beta2 - self.beta1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn reproduces(rho: f64, r: f64, z0: Complex64, v0: Complex64) {
        let p = local_params(rho, r, z0, v0).unwrap();
        assert!((p.eval(0.0) - z0).norm() < 1e-13 * (1.0 + z0.norm()), "{p:?}");
        assert!((p.velocity(0.0) - v0).norm() < 1e-12 * (1.0 + v0.norm()), "{p:?} {}", p.velocity(0.0));
        assert!(p.b.im >= -1e-15);
        assert!((0.0..TAU).contains(&p.alpha));
    }

    #[test]
    fn params_examples() {
        let p = local_params(1.0, 2.0, c(1.0, 0.0), c(1.0, 0.0)).unwrap();
        assert!(p.alpha.abs() < 1e-15);
        assert!((p.a - c(2.0, 0.0)).norm() < 1e-15);
        assert!((p.b - c(1.0, 0.0)).norm() < 1e-15);

        let r = 0.7;
        let p = local_params(-1.0, r, c(r, 0.0), c(0.0, r)).unwrap();
        for t in [0.0, 0.5, 3.0] {
            assert!((p.eval(t) - Complex64::from_polar(r, t)).norm() < 1e-14);
        }

        let ray = Complex64::from_polar(1.0, 0.4);
        let p = local_params(0.5, 1.0, 0.5 * ray, ray).unwrap();
        assert!(p.b.im.abs() < 1e-15);
        assert!(p.is_critical(CRITICAL_TOL));
        assert!((p.alpha - 0.4).abs() < 1e-14);
    }

    #[test]
    fn inward_critical_ray_keeps_its_angle() {
        let ray = Complex64::from_polar(1.0, 0.3);
        let p = local_params(0.5, 1.0, 0.5 * ray, -ray).unwrap();
        assert!((p.alpha - 0.3).abs() < 1e-14);
        assert!(p.a.re < 0.0);
        reproduces(0.5, 1.0, 0.5 * ray, -ray);
    }

    #[test]
    fn params_reproduce_generic_states() {
        for rho in [-0.9, -0.5, 0.5, 1.0, 2.5, -1.7] {
            for k in 0..12 {
                let z0 = Complex64::from_polar(0.3 + 0.05 * k as f64, 0.7 * k as f64);
                let v0 = Complex64::from_polar(1.0 + 0.1 * k as f64, 1.3 * k as f64 + 0.2);
                reproduces(rho, 1.0, z0, v0);
            }
        }
        reproduces(-1.0, 1.0, c(0.3, 0.4), c(-0.2, 0.9));
    }

    #[test]
    fn params_errors() {
        assert_eq!(local_params(0.5, 1.0, c(0.0, 0.0), c(1.0, 0.0)).unwrap_err(), LocalError::AtPole);
        assert_eq!(local_params(0.5, 1.0, c(0.1, 0.0), c(0.0, 0.0)).unwrap_err(), LocalError::ZeroVelocity);
    }

    #[test]
    fn chi_examples() {
        assert!((chi(1.0, 0.0, 1.0, c(4.0, 0.0)).unwrap() - c(2.0, 0.0)).norm() < 1e-15);
        assert!((chi(-1.0, 0.0, 0.8, c(0.0, 0.0)).unwrap() - c(0.8, 0.0)).norm() < 1e-15);
        assert!((chi(0.5, PI / 2.0, 1.0, c(1.0, 0.0)).unwrap() - c(0.0, 1.0)).norm() < 1e-15);
        assert!(matches!(chi(0.5, 0.0, 1.0, c(0.0, -1.0)), Err(LocalError::OutOfDomain(_))));
        assert!(matches!(chi(-1.0, 0.0, 1.0, c(0.0, -1.0)), Err(LocalError::OutOfDomain(_))));
        // Slightly below the negative real axis is still inside the sector.
        let z = chi(1.0, 0.0, 1.0, Complex64::from_polar(1.0, PI + 0.1)).unwrap();
        assert!((z - Complex64::from_polar(1.0, (PI + 0.1) / 2.0)).norm() < 1e-15);
    }

    #[test]
    fn chi_path_is_continuous() {
        let path: Vec<Complex64> = (0..=100).map(|k| Complex64::from_polar(1.0, PI * k as f64 / 100.0)).collect();
        let out = chi_path(-0.8, 0.0, 1.0, &path).unwrap();
        for w in out.windows(2) {
            assert!((w[1] - w[0]).norm() < 0.2);
        }
        assert!((out[100] - Complex64::from_polar(1.0, 5.0 * PI)).norm() < 1e-12);
    }

    #[test]
    fn criticality_examples() {
        let mk = |b| LocalGeodesicParams { rho: 0.5, r: 1.0, alpha: 0.0, a: c(1.0, 0.0), b };
        assert!(is_critical(&mk(c(1.0, 0.0)), 1e-12));
        assert!(!is_critical(&mk(c(0.0, 1.0)), 1e-12));
        assert!(is_critical(&mk(c(1.0, 1e-14)), 1e-12));
    }

    #[test]
    fn metric_closed_forms() {
        assert!((critical_length(0.0, 1.0) - 1.0).abs() < 1e-15);
        assert!((critical_length(1.0, 1.0) - 0.5).abs() < 1e-15);
        assert!((critical_length(-0.5, 0.25) - 1.0).abs() < 1e-15);
        assert!((diameter_bound(0.0, 1.0) - 2.0).abs() < 1e-15);
        assert!((diameter_bound(1.0, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(critical_length(-1.0, 1.0), f64::INFINITY);
    }

    #[test]
    fn critical_length_by_quadrature() {
        // ∫_0^{0.25} s^{-1/2} ds, with s = x² to remove the endpoint singularity.
        let q = GaussLegendre::new(10).integrate(0.0, 0.5, |x| 2.0 * x * (x * x).powf(-0.5));
        assert!((q - critical_length(-0.5, 0.25)).abs() < 1e-14);
    }

    #[test]
    fn must_cross_examples() {
        assert!(must_cross(0.5, 0.0, 1.0));
        assert!(!must_cross(0.5, 1.0, 1.0));
        assert!(!must_cross(0.5, 0.0, 2.2));
        assert!(must_cross(0.5, 0.1, TAU - 0.1));
    }

    #[test]
    fn self_intersection_radius_examples() {
        for rho in [-0.9, -0.6, -0.75] {
            let tau0 = self_intersection_height(rho, 1.0).unwrap();
            assert!((tau0 - (PI * (rho + 1.0)).cos()).abs() < 1e-12);
            let d0 = self_intersection_radius(rho, 1.0).unwrap();
            assert!(d0 > 0.0);
            assert!((d0 - tau0 / (rho + 1.0)).abs() < 1e-12);
        }
        assert_eq!(self_intersection_radius(-0.4, 1.0).unwrap_err(), LocalError::OutOfRange(-0.4));
        assert!(self_intersection_radius(-0.5, 1.0).is_err());
    }

    #[test]
    fn direction_intervals() {
        let i = DirectionInterval::new(0.5, 1.0, 2.0).unwrap();
        assert!(i.is_single_arc());
        assert!(i.contains(1.5) && !i.contains(2.5));
        assert!((i.measure() - 1.0).abs() < 1e-15);
        let j = DirectionInterval::new(0.5, 0.5, 5.5).unwrap();
        assert!(!j.is_single_arc());
        assert!(j.contains(0.2) && j.contains(6.0) && !j.contains(3.0));
        assert!((j.measure() - (TAU - 5.0)).abs() < 1e-15);
        assert!(DirectionInterval::new(0.5, 2.0, 1.0).is_none());
    }
}
