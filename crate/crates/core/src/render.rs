//! Deterministic SVG output.
//!
//! The main panel shows the standard chart inside the configured window; a
//! round inset shows the neighbourhood of infinity in the coordinate `1/z`.
//! Every coordinate is printed with six decimals.

use std::fmt::Write as _;

use num_complex::Complex64;

use crate::connection::{FuchsianConnection, SpherePoint};
use crate::geodesic::Trajectory;

#[derive(Debug, Clone, PartialEq)]
struct Curve {
    points: Vec<SpherePoint>,
    closed: bool,
    class: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
struct PoleMark {
    location: SpherePoint,
    residue: f64,
}

/// Layered geometry; layers are drawn in a fixed order: critical rays,
/// trajectories, polygons, section markers, poles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RenderScene {
    rays: Vec<Curve>,
    trajectories: Vec<Curve>,
    polygons: Vec<Vec<Complex64>>,
    markers: Vec<Complex64>,
    poles: Vec<PoleMark>,
}

/// Standard-chart window and pixel size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Viewport {
    pub center: Complex64,
    pub half_width: f64,
    pub width: u32,
    pub height: u32,
}

fn f6(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" {
        "0.000000".into()
    } else {
        s
    }
}

impl RenderScene {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_connection(conn: &FuchsianConnection) -> Self {
        let mut s = Self::new();
        for p in conn.poles() {
            s.poles.push(PoleMark { location: p.location, residue: p.rho() });
        }
        s
    }

    /// Adds a traced geodesic; it is drawn closed when it returns to its start.
    pub fn add_trajectory(&mut self, traj: &Trajectory) {
        let points: Vec<SpherePoint> = traj.samples().iter().map(|s| s.state.sphere_point()).collect();
        let closed = match (points.first(), points.last()) {
            (Some(SpherePoint::Finite(a)), Some(SpherePoint::Finite(b))) => points.len() > 2 && (a - b).norm() <= 1e-6 * (1.0 + a.norm()),
            _ => false,
        };
        self.trajectories.push(Curve { points, closed, class: "trajectory" });
    }

    pub fn add_polyline(&mut self, points: &[Complex64]) {
        self.trajectories.push(Curve { points: points.iter().map(|&z| SpherePoint::Finite(z)).collect(), closed: false, class: "trajectory" });
    }

    pub fn add_critical_ray(&mut self, points: &[Complex64]) {
        self.rays.push(Curve { points: points.iter().map(|&z| SpherePoint::Finite(z)).collect(), closed: false, class: "ray" });
    }

    pub fn add_polygon(&mut self, boundary: &[Complex64]) {
        self.polygons.push(boundary.to_vec());
    }

    pub fn add_marker(&mut self, z: Complex64) {
        self.markers.push(z);
    }

    pub fn trajectory_count(&self) -> usize {
        self.trajectories.len()
    }

    pub fn to_svg(&self, vp: &Viewport) -> String {
        let (w, h) = (vp.width as f64, vp.height as f64);
        let scale = w.min(h) / (2.0 * vp.half_width);
        let main = |z: Complex64| (0.5 * w + (z.re - vp.center.re) * scale, 0.5 * h - (z.im - vp.center.im) * scale);
        // The inset shows |1/z| < 1/r_in where r_in bounds the window.
        let r_in = vp.center.norm() + vp.half_width * std::f64::consts::SQRT_2;
        let inset_r = 0.15 * w.min(h);
        let (icx, icy) = (w - inset_r - 8.0, inset_r + 8.0);
        let inset = |p: SpherePoint| -> Option<(f64, f64)> {
            let u = match p {
                SpherePoint::Infinity => Complex64::new(0.0, 0.0),
                SpherePoint::Finite(z) if z.norm() >= r_in => z.inv() * r_in,
                _ => return None,
            };
            Some((icx + u.re * inset_r, icy - u.im * inset_r))
        };
        let limit = 10.0 * w.max(h);
        let on_main = |p: SpherePoint| -> Option<(f64, f64)> {
            let (x, y) = main(p.as_finite()?);
            (x.is_finite() && y.is_finite() && x.abs() < limit && y.abs() < limit).then_some((x, y))
        };

        let mut out = String::new();
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#, vp.width, vp.height, vp.width, vp.height);
        let _ = writeln!(out, r#"<defs><clipPath id="main"><rect x="0" y="0" width="{}" height="{}"/></clipPath><clipPath id="inset"><circle cx="{}" cy="{}" r="{}"/></clipPath></defs>"#, vp.width, vp.height, f6(icx), f6(icy), f6(inset_r));
        let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, vp.width, vp.height);
        let _ = writeln!(out, r##"<g clip-path="url(#main)" fill="none" stroke-width="1">"##);
        for c in &self.rays {
            emit_curve(&mut out, c, &on_main, "#999999", false);
        }
        for c in &self.trajectories {
            emit_curve(&mut out, c, &on_main, "#1f4e9c", c.closed);
        }
        for poly in &self.polygons {
            let pts: Vec<String> = poly.iter().map(|&z| main(z)).map(|(x, y)| format!("{},{}", f6(x), f6(y))).collect();
            let _ = writeln!(out, r##"<polygon class="polygon" points="{}" stroke="#b03030" fill="#b03030" fill-opacity="0.1"/>"##, pts.join(" "));
        }
        for &m in &self.markers {
            let (x, y) = main(m);
            let _ = writeln!(out, r##"<circle class="section" cx="{}" cy="{}" r="2" fill="#208020"/>"##, f6(x), f6(y));
        }
        for p in &self.poles {
            if let SpherePoint::Finite(z) = p.location {
                let (x, y) = main(z);
                let _ = writeln!(out, r##"<circle class="pole" cx="{}" cy="{}" r="4" fill="black"/>"##, f6(x), f6(y));
                let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" fill="black">{}</text>"#, f6(x + 6.0), f6(y - 6.0), residue_label(p.residue));
            }
        }
        let _ = writeln!(out, "</g>");

        let _ = writeln!(out, r##"<circle cx="{}" cy="{}" r="{}" fill="white" stroke="black"/>"##, f6(icx), f6(icy), f6(inset_r));
        let _ = writeln!(out, r##"<g class="inset" clip-path="url(#inset)" fill="none" stroke-width="1">"##);
        for c in &self.trajectories {
            emit_curve(&mut out, c, &inset, "#1f4e9c", false);
        }
        for p in &self.poles {
            if p.location.is_infinity() {
                let _ = writeln!(out, r##"<circle class="pole" cx="{}" cy="{}" r="4" fill="black"/>"##, f6(icx), f6(icy));
                let _ = writeln!(out, r#"<text x="{}" y="{}" font-size="12" fill="black">inf {}</text>"#, f6(icx + 6.0), f6(icy - 6.0), residue_label(p.residue));
            }
        }
        let _ = writeln!(out, "</g>");
        let _ = writeln!(out, "</svg>");
        out
    }
}

fn residue_label(r: f64) -> String {
    format!("rho={r}")
}

/// Emits the maximal runs of mappable points as polylines.
fn emit_curve<F: Fn(SpherePoint) -> Option<(f64, f64)>>(out: &mut String, c: &Curve, map: &F, color: &str, closed: bool) {
    let mut runs: Vec<Vec<(f64, f64)>> = vec![Vec::new()];
    for &p in &c.points {
        match map(p) {
            Some(xy) => runs.last_mut().unwrap().push(xy),
            None => {
                if !runs.last().unwrap().is_empty() {
                    runs.push(Vec::new());
                }
            }
        }
    }
    let whole = runs.len() == 1;
    for run in runs.iter().filter(|r| r.len() >= 2) {
        let mut pts: Vec<String> = run.iter().map(|&(x, y)| format!("{},{}", f6(x), f6(y))).collect();
        let class = if closed && whole {
            pts.pop();
            pts.push(pts[0].clone());
            format!("{} closed", c.class)
        } else {
            c.class.to_string()
        };
        let _ = writeln!(out, r#"<polyline class="{}" points="{}" stroke="{}"/>"#, class, pts.join(" "), color);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::PoleSpec;
    use crate::geodesic::{trace, GeodesicState, TraceOptions};
    use std::f64::consts::TAU;

    fn vp() -> Viewport {
        Viewport { center: Complex64::new(0.0, 0.0), half_width: 2.0, width: 400, height: 400 }
    }

    #[test]
    fn circle_is_one_closed_polyline() {
        let conn = FuchsianConnection::build(&[PoleSpec::at(0.0, 0.0, -1.0), PoleSpec::at_infinity(-1.0)]).unwrap();
        let tr = trace(&conn, GeodesicState::new(&conn, Complex64::new(1.0, 0.0), Complex64::new(0.0, 1.0)), TAU, &TraceOptions::default()).unwrap();
        let mut scene = RenderScene::with_connection(&conn);
        scene.add_trajectory(&tr);
        let svg = scene.to_svg(&vp());
        assert_eq!(svg.matches("class=\"trajectory closed\"").count(), 1);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("inf rho=-1"));
        assert_eq!(svg, scene.to_svg(&vp()));
    }

    #[test]
    fn numbers_have_six_decimals() {
        let mut scene = RenderScene::new();
        scene.add_polyline(&[Complex64::new(0.1, 0.2), Complex64::new(-1.0 / 3.0, 1e-9)]);
        let svg = scene.to_svg(&vp());
        assert!(svg.contains("points=\"210.000000,180.000000 166.666667,200.000000\""), "{svg}");
        assert!(!svg.contains("NaN") && !svg.contains("inf,"));
    }

    #[test]
    fn far_points_go_to_the_inset() {
        let mut scene = RenderScene::new();
        scene.add_polyline(&[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0), Complex64::new(100.0, 0.0), Complex64::new(1e6, 0.0)]);
        let svg = scene.to_svg(&vp());
        let inset = &svg[svg.find("class=\"inset\"").unwrap()..];
        assert_eq!(inset.matches("<polyline").count(), 1);
    }
}
