//! Adapted charts around Fuchsian poles.
//!
//! With `ζ` the natural coordinate centred at the pole, the connection reads
//! `(ρ/ζ + h(ζ)) dζ`. Writing `e^F = Σ c_j ζ^j` for the primitive `F` of `h`,
//! the coordinate `w = ζ·K(ζ)` with `K = (Σ c_j ζ^j/(j+ρ+1))^{1/(ρ+1)}`
//! turns the connection into `(ρ/w) dw`.

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::LocalError;
use crate::connection::{Chart, FuchsianConnection, SpherePoint};
use crate::geodesic::GeodesicState;

/// Pullback residual accepted for a chart.
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const DEFAULT_ORDER: usize = 24;
const SHRINK: f64 = 0.8;
const MAX_SHRINKS: usize = 80;
const ISOLATED_RADIUS: f64 = 1.0;

#[derive(Debug, Clone, Serialize)]
pub struct AdaptedChart {
    pole: SpherePoint,
    pole_index: usize,
    rho: f64,
    /// Sphere chart the natural coordinate lives in.
    host: Chart,
    center: Complex64,
    /// Radius in the adapted coordinate `w`.
    radius: f64,
    /// Radius in the natural coordinate `ζ`.
    zeta_radius: f64,
    series: Vec<Complex64>,
    taylor_c: Vec<Complex64>,
    residual: f64,
    #[serde(skip)]
    conn: FuchsianConnection,
}

/// Taylor coefficients of the holomorphic part `h` of the local representation.
fn holomorphic_part(conn: &FuchsianConnection, host: Chart, center: Complex64, n: usize) -> Vec<Complex64> {
    let mut h = vec![Complex64::new(0.0, 0.0); n + 1];
    match host {
        Chart::Standard => {
            for (p, rho) in conn.finite_poles() {
                let d = p - center;
                if d.norm() == 0.0 {
                    continue;
                }
                // ρ/(ζ − d) = −ρ Σ ζ^m / d^{m+1}
                let inv = d.inv();
                let mut pow = inv;
                for hm in h.iter_mut() {
                    *hm -= rho * pow;
                    pow *= inv;
                }
            }
        }
        Chart::Infinity => {
            // −Σ ρ_j p_j / (1 − p_j w) = −Σ_m (Σ ρ_j p_j^{m+1}) w^m
            for (p, rho) in conn.finite_poles() {
                let mut pow = p;
                for hm in h.iter_mut() {
                    *hm -= rho * pow;
                    pow *= p;
                }
            }
        }
    }
    h
}

/// Coefficients of `exp(g)` for a series `g` with `g_0 = 0`.
fn series_exp(g: &[Complex64]) -> Vec<Complex64> {
    let n = g.len();
    let mut c = vec![Complex64::new(0.0, 0.0); n];
    c[0] = Complex64::new(1.0, 0.0);
    for j in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=j {
            acc += g[k] * (k as f64) * c[j - k];
        }
        c[j] = acc / j as f64;
    }
    c
}

/// Coefficients of `a^e` with `a_0 > 0` real, principal branch at the origin.
fn series_pow(a: &[Complex64], e: f64) -> Vec<Complex64> {
    let n = a.len();
    let mut g = vec![Complex64::new(0.0, 0.0); n];
    g[0] = a[0].powf(e);
    for j in 1..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 1..=j {
            acc += a[k] * ((e + 1.0) * k as f64 - j as f64) * g[j - k];
        }
        g[j] = acc / (j as f64 * a[0]);
    }
    g
}

/// `(p, p', p'')` of a power series at `x` by Horner.
fn horner2(c: &[Complex64], x: Complex64) -> (Complex64, Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    let (mut p, mut d, mut dd) = (zero, zero, zero);
    for &a in c.iter().rev() {
        dd = dd * x + d * 2.0;
        d = d * x + p;
        p = p * x + a;
    }
    (p, d, dd)
}

impl AdaptedChart {
    /// Builds the adapted chart of order `n` at `pole`.
    pub fn new(conn: &FuchsianConnection, pole: SpherePoint, n: usize) -> Result<Self, LocalError> {
        if n < 4 {
            return Err(LocalError::OrderTooSmall(n));
        }
        let idx = conn.pole_index(pole).ok_or(LocalError::NotAPole)?;
        let res = conn.poles()[idx].residue;
        if res.im.abs() > 1e-12 {
            return Err(LocalError::NonRealResidue);
        }
        let rho = res.re;
        if rho < -1.0 {
            return Err(LocalError::ResonantOrLow(rho));
        }
        let (host, center) = match pole {
            SpherePoint::Finite(p) => (Chart::Standard, p),
            SpherePoint::Infinity => (Chart::Infinity, Complex64::new(0.0, 0.0)),
        };

        let h = holomorphic_part(conn, host, center, n);
        let mut big_f = vec![Complex64::new(0.0, 0.0); n + 1];
        for m in 1..=n {
            big_f[m] = h[m - 1] / m as f64;
        }
        let taylor_c = series_exp(&big_f);
        let series = if rho == -1.0 {
            let mut l = vec![Complex64::new(0.0, 0.0); n + 1];
            for j in 1..=n {
                l[j] = taylor_c[j] / j as f64;
            }
            series_exp(&l)
        } else {
            let s: Vec<Complex64> = taylor_c.iter().enumerate().map(|(j, c)| c / (j as f64 + rho + 1.0)).collect();
            series_pow(&s, 1.0 / (rho + 1.0))
        };

        let r0 = conn
            .poles_in_chart(host)
            .filter(|&(k, _)| k != idx)
            .map(|(_, q)| 0.5 * (q - center).norm())
            .fold(ISOLATED_RADIUS, f64::min);

        let mut chart = AdaptedChart {
            pole,
            pole_index: idx,
            rho,
            host,
            center,
            radius: 0.0,
            zeta_radius: 0.0,
            series,
            taylor_c,
            residual: f64::INFINITY,
            conn: conn.clone(),
        };
        let mut rz = r0;
        for _ in 0..MAX_SHRINKS {
            let res = chart.residual_at(rz);
            if res <= RESIDUAL_TOL && chart.winds_once(rz) {
                let rw = (0..256)
                    .map(|k| chart.w_of_zeta(Complex64::from_polar(rz, TAU * k as f64 / 256.0)).norm())
                    .fold(f64::INFINITY, f64::min);
                chart.zeta_radius = rz;
                // Stay strictly inside the image of |ζ| < rz.
                chart.radius = rw * 0.999;
                chart.residual = res;
                return Ok(chart);
            }
            rz *= SHRINK;
        }
        Err(LocalError::SeriesDivergence)
    }

    pub fn pole(&self) -> SpherePoint {
        self.pole
    }

    pub fn pole_index(&self) -> usize {
        self.pole_index
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn zeta_radius(&self) -> f64 {
        self.zeta_radius
    }

    pub fn order(&self) -> usize {
        self.series.len() - 1
    }

    /// Coefficients of `K`.
    pub fn series(&self) -> &[Complex64] {
        &self.series
    }

    /// Coefficients `c_j` of `e^F`.
    pub fn taylor_c(&self) -> &[Complex64] {
        &self.taylor_c
    }

    /// Largest pullback residual measured at the chosen radius.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn host_chart(&self) -> Chart {
        self.host
    }

    pub fn w_of_zeta(&self, zeta: Complex64) -> Complex64 {
        zeta * horner2(&self.series, zeta).0
    }

    /// `dw/dζ`.
    pub fn xi(&self, zeta: Complex64) -> Complex64 {
        let (k, dk, _) = horner2(&self.series, zeta);
        k + zeta * dk
    }

    /// Local representation in the `w` coordinate, evaluated at `ζ`.
    fn pulled_back(&self, zeta: Complex64) -> Complex64 {
        let (k, dk, ddk) = horner2(&self.series, zeta);
        let xi = k + zeta * dk;
        let dxi = 2.0 * dk + zeta * ddk;
        let f = self.conn.eval_unchecked(self.host, self.center + zeta);
        (f - dxi / xi) / xi
    }

    /// Largest `|η_w − ρ/w|` on a polar grid inside `|ζ| ≤ radius`.
    pub fn residual_at(&self, radius: f64) -> f64 {
        let mut worst: f64 = 0.0;
        for ring in [0.25, 0.5, 0.75, 1.0] {
            for k in 0..64 {
                let zeta = Complex64::from_polar(radius * ring, TAU * (k as f64 + 0.5 * ring) / 64.0);
                let w = self.w_of_zeta(zeta);
                let r = (self.pulled_back(zeta) - self.rho / w).norm();
                worst = worst.max(if r.is_finite() { r } else { f64::INFINITY });
            }
        }
        worst
    }

    /// The boundary circle maps to a curve winding once around `w = 0`.
    fn winds_once(&self, radius: f64) -> bool {
        let n = 512;
        let mut total = 0.0;
        let mut prev = self.w_of_zeta(Complex64::new(radius, 0.0));
        for k in 1..=n {
            let cur = self.w_of_zeta(Complex64::from_polar(radius, TAU * k as f64 / n as f64));
            let step = (cur / prev).arg();
            if step.abs() > 0.5 {
                return false;
            }
            total += step;
            prev = cur;
        }
        (total - TAU).abs() < 1e-6
    }

    /// Inverse of `ζ ↦ w` by Newton iteration.
    pub fn zeta_of_w(&self, w: Complex64) -> Option<Complex64> {
        let mut zeta = w / self.series[0];
        for _ in 0..60 {
            let dz = (self.w_of_zeta(zeta) - w) / self.xi(zeta);
            zeta -= dz;
            if !zeta.re.is_finite() || zeta.norm() > 2.0 * self.zeta_radius {
                return None;
            }
            if dz.norm() <= 1e-15 * (1e-300 + zeta.norm()) {
                break;
            }
        }
        ((self.w_of_zeta(zeta) - w).norm() <= 1e-13 * (1e-300 + w.norm())).then_some(zeta)
    }

    /// Position and velocity of a geodesic state in the adapted coordinate,
    /// `None` outside the chart disc.
    pub fn to_chart(&self, state: &GeodesicState) -> Option<(Complex64, Complex64)> {
        let s = if state.chart == self.host { *state } else { state.switched() };
        let zeta = s.z - self.center;
        if zeta.norm() >= self.zeta_radius {
            return None;
        }
        let w = self.w_of_zeta(zeta);
        (w.norm() < self.radius).then(|| (w, self.xi(zeta) * s.v))
    }

    /// Geodesic state (in the host sphere chart) for a chart point and velocity.
    pub fn from_chart(&self, w: Complex64, w_dot: Complex64) -> Option<GeodesicState> {
        let zeta = self.zeta_of_w(w)?;
        let v = w_dot / self.xi(zeta);
        Some(GeodesicState::in_chart(&self.conn, self.host, self.center + zeta, v))
    }

    /// Key-value diagnostics.
    pub fn report(&self) -> Vec<(String, String)> {
        vec![
            ("pole".into(), self.pole.to_string()),
            ("rho".into(), format!("{}", self.rho)),
            ("order".into(), self.order().to_string()),
            ("radius_w".into(), format!("{:.6e}", self.radius)),
            ("radius_zeta".into(), format!("{:.6e}", self.zeta_radius)),
            ("residual".into(), format!("{:.3e}", self.residual)),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PoleSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_pole_is_a_rescale() {
        let rho = 0.5;
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, rho)]).unwrap();
        let ch = AdaptedChart::new(&conn, SpherePoint::finite(0.0, 0.0), DEFAULT_ORDER).unwrap();
        let k0 = (1.0 / (rho + 1.0)).powf(1.0 / (rho + 1.0));
        assert!((ch.series()[0] - c(k0, 0.0)).norm() < 1e-15);
        assert!(ch.series()[1..].iter().all(|s| s.norm() < 1e-15));
        assert!((ch.zeta_radius() - 1.0).abs() < 1e-15);
        assert!(ch.residual() < 1e-12);
    }

    #[test]
    fn exponential_taylor_coefficients() {
        // ρ = 0 at 0 with a single other pole far away: h ≈ const is not exact,
        // so check series_exp directly on F = c·ζ.
        let cc = c(0.3, -0.7);
        let mut f = vec![c(0.0, 0.0); 10];
        f[1] = cc;
        let e = series_exp(&f);
        let mut fact = 1.0;
        for (j, ej) in e.iter().enumerate() {
            if j > 0 {
                fact *= j as f64;
            }
            assert!((ej - cc.powu(j as u32) / fact).norm() < 1e-15);
        }
    }

    #[test]
    fn series_pow_matches_direct() {
        let mut a = vec![c(0.0, 0.0); 30];
        a[0] = c(2.0, 0.0);
        a[1] = c(0.3, 0.1);
        a[2] = c(-0.2, 0.05);
        let g = series_pow(&a, 2.0 / 3.0);
        let x = c(0.1, 0.05);
        let direct = horner2(&a, x).0.powf(2.0 / 3.0);
        assert!((horner2(&g, x).0 - direct).norm() < 1e-14);
    }

    #[test]
    fn two_pole_residual_oracle() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.5), PoleSpec::at(1.0, 0.0, 0.5)]).unwrap();
        let ch = AdaptedChart::new(&conn, SpherePoint::finite(0.0, 0.0), 20).unwrap();
        assert!(ch.residual_at(0.25) <= 1e-10, "{}", ch.residual_at(0.25));
        assert!(ch.residual() <= RESIDUAL_TOL);
        assert!(ch.zeta_radius() <= 0.5);
    }

    #[test]
    fn infinity_pole_chart() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(1.0, 0.0, -0.7), PoleSpec::at(-1.0, 0.0, -0.7), PoleSpec::at_infinity(-0.6)]).unwrap();
        let ch = AdaptedChart::new(&conn, SpherePoint::Infinity, DEFAULT_ORDER).unwrap();
        assert_eq!(ch.host_chart(), Chart::Infinity);
        assert!(ch.residual() <= RESIDUAL_TOL);
        let w = c(0.5 * ch.radius(), 0.1 * ch.radius());
        let zeta = ch.zeta_of_w(w).unwrap();
        assert!((ch.w_of_zeta(zeta) - w).norm() < 1e-14);
    }

    #[test]
    fn chart_round_trip() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, 0.5), PoleSpec::at(1.0, 0.0, 0.5)]).unwrap();
        let ch = AdaptedChart::new(&conn, SpherePoint::finite(0.0, 0.0), DEFAULT_ORDER).unwrap();
        let w = Complex64::from_polar(0.5 * ch.radius(), 2.0);
        let st = ch.from_chart(w, c(0.3, 0.4)).unwrap();
        let (w2, v2) = ch.to_chart(&st).unwrap();
        assert!((w2 - w).norm() < 1e-14);
        assert!((v2 - c(0.3, 0.4)).norm() < 1e-13);
    }

    #[test]
    fn rejects_low_and_non_poles() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.5)]).unwrap();
        assert!(matches!(AdaptedChart::new(&conn, SpherePoint::finite(0.0, 0.0), 24), Err(LocalError::ResonantOrLow(_))));
        assert!(matches!(AdaptedChart::new(&conn, SpherePoint::finite(1.0, 0.0), 24), Err(LocalError::NotAPole)));
        assert!(matches!(AdaptedChart::new(&conn, SpherePoint::Infinity, 3), Err(LocalError::OrderTooSmall(3))));
    }

    #[test]
    fn log_branch_for_minus_one() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at(2.0, 0.0, 0.5)]).unwrap();
        let ch = AdaptedChart::new(&conn, SpherePoint::finite(0.0, 0.0), DEFAULT_ORDER).unwrap();
        assert!((ch.series()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!(ch.residual() <= RESIDUAL_TOL);
    }
}
