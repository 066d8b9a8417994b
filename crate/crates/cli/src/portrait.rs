//! Phase portraits of three-strategy games as plain SVG.
//!
//! The simplex is drawn in barycentric projection with `e1` at the lower
//! left, `e2` at the lower right and `e3` on top. Indifference lines follow
//! the usual conventions: `Z12` solid, `Z13` dashed, `Z23` dotted,
//! black where they matter for the dynamic shown and gray otherwise.

use std::fmt::Write;

use egd_core::basins::{construct_sector, sector_polygon};
use egd_core::brd::{best_response_set, solve_brd, BrdOptions, TIE_TOL};
use egd_core::equilibria::{enumerate_nash, rest_points, Equilibrium, Stability, NASH_TOL};
use egd_core::game::{indifference_form, indifference_forms, vertex_condition, GameMatrix, LinearForm};
use egd_core::rd::{integrate_rd, rd_field, RdOptions};
use egd_core::simplex::{clip_polygon, line_segment_in_triangle, sample_simplex, SimplexPoint};
use egd_core::trajectory::Dynamic;
use egd_core::{Error, Result};

const SIDE: f64 = 400.0;
const MARGIN: f64 = 50.0;
const HEIGHT: f64 = SIDE * 0.866_025_403_784_438_6;
const BLACK: &str = "#000000";
const GRAY: &str = "#a0a0a0";
const ORBIT: &str = "#1f5fa8";
const SHADE: &str = "#f2d9a6";
/// Orbit polylines are thinned to at most this many points.
const MAX_POINTS: usize = 400;

/// What to draw and how.
#[derive(Debug, Clone, PartialEq)]
pub struct PortraitSpec {
    pub title: String,
    /// One panel per entry, left to right.
    pub panels: Vec<Dynamic>,
    /// Number of sampled orbits per panel.
    pub orbits: usize,
    pub seed: u64,
    pub horizon: f64,
    /// Vertices (0-based) whose sector is shaded.
    pub sectors: Vec<usize>,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        PortraitSpec {
            title: String::new(),
            panels: vec![Dynamic::Rd, Dynamic::Brd],
            orbits: 24,
            seed: 1,
            horizon: 40.0,
            sectors: Vec::new(),
        }
    }
}

/// Barycentric projection onto the unit equilateral triangle.
pub fn project(x: &[f64]) -> (f64, f64) {
    (x[1] + 0.5 * x[2], 0.866_025_403_784_438_6 * x[2])
}

/// Dash pattern for the indifference set of a 0-based pair.
pub fn line_style(pair: (usize, usize)) -> Option<&'static str> {
    match pair {
        (0, 1) => None,
        (0, 2) => Some("8 5"),
        _ => Some("2 4"),
    }
}

struct Canvas {
    out: String,
    dx: f64,
}

impl Canvas {
    fn xy(&self, x: &[f64]) -> (f64, f64) {
        let (u, v) = project(x);
        (self.dx + MARGIN + SIDE * u, MARGIN + HEIGHT * (1.0 - v / 0.866_025_403_784_438_6))
    }

    fn points(&self, pts: &[Vec<f64>]) -> String {
        pts.iter()
            .map(|p| {
                let (x, y) = self.xy(p);
                format!("{x:.2},{y:.2}")
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn line(&mut self, p: &[f64], q: &[f64], stroke: &str, width: f64, dash: Option<&str>, attrs: &str) {
        let (x1, y1) = self.xy(p);
        let (x2, y2) = self.xy(q);
        let dash = dash.map(|d| format!(" stroke-dasharray=\"{d}\"")).unwrap_or_default();
        let _ = writeln!(
            self.out,
            "<line x1=\"{x1:.2}\" y1=\"{y1:.2}\" x2=\"{x2:.2}\" y2=\"{y2:.2}\" stroke=\"{stroke}\" stroke-width=\"{width}\"{dash}{attrs}/>"
        );
    }

    /// Small filled triangle at `at` pointing along `dir` (simplex coordinates).
    fn arrow(&mut self, at: &[f64], dir: &[f64], fill: &str) {
        let (x0, y0) = self.xy(at);
        let tip: Vec<f64> = at.iter().zip(dir).map(|(a, d)| a + d).collect();
        let (x1, y1) = self.xy(&tip);
        let (ux, uy) = (x1 - x0, y1 - y0);
        let len = (ux * ux + uy * uy).sqrt();
        if len < 1e-12 {
            return;
        }
        let (ux, uy) = (ux / len, uy / len);
        let (s, w) = (7.0, 3.5);
        let (tx, ty) = (x0 + ux * s * 0.5, y0 + uy * s * 0.5);
        let (bx, by) = (x0 - ux * s * 0.5, y0 - uy * s * 0.5);
        let _ = writeln!(
            self.out,
            "<polygon class=\"arrow\" points=\"{tx:.2},{ty:.2} {:.2},{:.2} {:.2},{:.2}\" fill=\"{fill}\"/>",
            bx - uy * w,
            by + ux * w,
            bx + uy * w,
            by - ux * w
        );
    }

    fn text(&mut self, x: &[f64], dx: f64, dy: f64, body: &str, attrs: &str) {
        let (px, py) = self.xy(x);
        let _ = writeln!(
            self.out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-family=\"serif\" font-size=\"14\" text-anchor=\"middle\"{attrs}>{body}</text>",
            px + dx,
            py + dy
        );
    }
}

fn lerp(p: &[f64], q: &[f64], t: f64) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| a + t * (b - a)).collect()
}

fn sub(p: &[f64], q: &[f64]) -> Vec<f64> {
    p.iter().zip(q).map(|(a, b)| a - b).collect()
}

fn dot(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| a * b).sum()
}

/// Parameters in `(0, 1)` at which the segment `p -> q` meets another
/// indifference line or passes through a rest point, plus both ends.
fn breakpoints(p: &[f64], q: &[f64], others: &[&LinearForm], rests: &[SimplexPoint]) -> Vec<f64> {
    let mut ts = vec![0.0, 1.0];
    for f in others {
        let (fp, fq) = (f.eval(p), f.eval(q));
        if fp != fq {
            let t = fp / (fp - fq);
            if t > 1e-9 && t < 1.0 - 1e-9 {
                ts.push(t);
            }
        }
    }
    let d = sub(q, p);
    let dd = dot(&d, &d);
    for r in rests {
        let t = dot(&sub(r.as_slice(), p), &d) / dd;
        if t > 1e-9 && t < 1.0 - 1e-9 && lerp(p, q, t).iter().zip(r.as_slice()).all(|(a, b)| (a - b).abs() < 1e-7) {
            ts.push(t);
        }
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    ts
}

/// Direction of best-response motion from `x`, if it stays on `form`'s zero set.
fn brd_direction_on(a: &GameMatrix, form: &LinearForm, x: &[f64], eqs: &[Equilibrium]) -> Option<Vec<f64>> {
    let start = SimplexPoint::renormalized(x.to_vec()).ok()?;
    let opts = BrdOptions { record: false, ..BrdOptions::default() };
    let sol = solve_brd(a, &start, 0.02, &opts, eqs).ok()?;
    let end = sol.final_state();
    let scale = form.tangent_norm().max(f64::MIN_POSITIVE);
    if form.eval(&end).abs() / scale > 1e-9 {
        return None;
    }
    let d = sub(&end, x);
    (dot(&d, &d).sqrt() > 1e-12).then_some(d)
}

/// Point at fraction `f` of the arc length of a polyline, with the direction
/// of the segment it falls on. `None` for orbits too short to show.
fn along_polyline(pts: &[Vec<f64>], f: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let lens: Vec<f64> = pts.windows(2).map(|w| dot(&sub(&w[1], &w[0]), &sub(&w[1], &w[0])).sqrt()).collect();
    let total: f64 = lens.iter().sum();
    if total < 0.03 {
        return None;
    }
    let mut left = f * total;
    for (k, &l) in lens.iter().enumerate() {
        if left <= l && l > 0.0 {
            return Some((lerp(&pts[k], &pts[k + 1], left / l), sub(&pts[k + 1], &pts[k])));
        }
        left -= l;
    }
    None
}

fn scaled(d: &[f64], len: f64) -> Vec<f64> {
    let n = dot(d, d).sqrt();
    d.iter().map(|v| v * len / n).collect()
}

fn draw_panel(canvas: &mut Canvas, a: &GameMatrix, dynamic: Dynamic, spec: &PortraitSpec, eqs: &[Equilibrium]) -> Result<()> {
    let verts: Vec<Vec<f64>> = (0..3).map(|k| SimplexPoint::vertex(3, k).into_vec()).collect();
    let _ = writeln!(canvas.out, "<g class=\"panel\" data-dynamic=\"{}\">", dynamic.name());

    for &s in &spec.sectors {
        let region = construct_sector(a, s)?;
        if let Some(poly) = sector_polygon(&region) {
            let _ = writeln!(
                canvas.out,
                "<polygon class=\"sector\" data-vertex=\"{}\" points=\"{}\" fill=\"{SHADE}\" stroke=\"none\"/>",
                s + 1,
                canvas.points(&poly)
            );
        }
    }

    let _ = writeln!(
        canvas.out,
        "<polygon class=\"simplex\" points=\"{}\" fill=\"none\" stroke=\"{BLACK}\" stroke-width=\"1.5\"/>",
        canvas.points(&verts)
    );
    let offsets = [(-14.0, 16.0), (14.0, 16.0), (0.0, -10.0)];
    for (k, v) in verts.iter().enumerate() {
        let (dx, dy) = offsets[k];
        canvas.text(v, dx, dy, &format!("e{}", k + 1), "");
    }

    let rests = rest_points(a);
    let forms = indifference_forms(a);

    if dynamic == Dynamic::Brd {
        // Best response inside each region bounded by the indifference lines.
        for k in 0..3 {
            let mut poly = verts.clone();
            for m in (0..3).filter(|&m| m != k) {
                poly = clip_polygon(&poly, &indifference_form(a, k, m)?.coeffs, 1.0);
            }
            if poly.len() >= 3 {
                let c: Vec<f64> = (0..3).map(|d| poly.iter().map(|p| p[d]).sum::<f64>() / poly.len() as f64).collect();
                canvas.text(&c, 0.0, 5.0, &format!("[{}]", k + 1), " class=\"br-label\"");
            }
        }
    }

    for form in &forms {
        let (i, j) = form.pair;
        let Some((p, q)) = line_segment_in_triangle(&form.coeffs) else {
            continue;
        };
        let invariant = vertex_condition(a, i, j);
        let others: Vec<&LinearForm> = forms.iter().filter(|f| f.pair != form.pair).collect();
        let ts = breakpoints(&p, &q, &others, &rests);
        let dir = sub(&q, &p);
        for w in ts.windows(2) {
            let (s, e) = (lerp(&p, &q, w[0]), lerp(&p, &q, w[1]));
            let mid = lerp(&p, &q, 0.5 * (w[0] + w[1]));
            let black = match dynamic {
                Dynamic::Rd => invariant,
                Dynamic::Brd => {
                    let br = best_response_set(a, &mid, TIE_TOL);
                    br.contains(&i) && br.contains(&j)
                }
            };
            let stroke = if black { BLACK } else { GRAY };
            let attrs = format!(" class=\"indifference\" data-pair=\"{}{}\" data-invariant=\"{invariant}\"", i + 1, j + 1);
            canvas.line(&s, &e, stroke, 1.6, line_style((i, j)), &attrs);
            if invariant {
                let along = match dynamic {
                    Dynamic::Rd => {
                        let v = rd_field(a, &SimplexPoint::renormalized(mid.clone())?);
                        let sgn = dot(&v, &dir);
                        (sgn.abs() > 1e-12).then(|| dir.iter().map(|d| d * sgn.signum()).collect::<Vec<_>>())
                    }
                    Dynamic::Brd => brd_direction_on(a, form, &mid, eqs),
                };
                if let Some(d) = along {
                    canvas.arrow(&mid, &scaled(&d, 0.01), BLACK);
                }
            }
        }
    }

    if dynamic == Dynamic::Rd {
        // The boundary is invariant: mark the flow direction along each edge.
        for k in 0..3 {
            let (p, q) = (&verts[k], &verts[(k + 1) % 3]);
            let ts = breakpoints(p, q, &[], &rests);
            let dir = sub(q, p);
            for w in ts.windows(2) {
                let mid = lerp(p, q, 0.5 * (w[0] + w[1]));
                let v = rd_field(a, &SimplexPoint::renormalized(mid.clone())?);
                let sgn = dot(&v, &dir);
                if sgn.abs() > 1e-12 {
                    let d: Vec<f64> = dir.iter().map(|x| x * sgn.signum()).collect();
                    canvas.arrow(&mid, &scaled(&d, 0.01), BLACK);
                }
            }
        }
    }

    for x0 in sample_simplex(3, spec.orbits, spec.seed) {
        let pts: Vec<Vec<f64>> = match dynamic {
            Dynamic::Rd => {
                let tr = integrate_rd(a, &x0, spec.horizon, &RdOptions::default(), eqs)?;
                let stride = tr.states.len().div_ceil(MAX_POINTS).max(1);
                let mut pts: Vec<Vec<f64>> = tr.states.iter().step_by(stride).map(|s| s.as_slice().to_vec()).collect();
                pts.push(tr.last_state().as_slice().to_vec());
                pts
            }
            Dynamic::Brd => {
                let opts = BrdOptions { record: false, ..BrdOptions::default() };
                let sol = solve_brd(a, &x0, spec.horizon, &opts, eqs)?;
                let mut pts: Vec<Vec<f64>> = sol.pieces.iter().take(MAX_POINTS).map(|p| p.x0.clone()).collect();
                pts.push(sol.final_state());
                pts
            }
        };
        let _ = writeln!(
            canvas.out,
            "<polyline class=\"orbit\" points=\"{}\" fill=\"none\" stroke=\"{ORBIT}\" stroke-width=\"0.8\" stroke-opacity=\"0.7\"/>",
            canvas.points(&pts)
        );
        if let Some((at, dir)) = along_polyline(&pts, 0.35) {
            canvas.arrow(&at, &scaled(&dir, 0.01), ORBIT);
        }
    }

    for e in eqs {
        let (x, y) = canvas.xy(e.point.as_slice());
        let stable = e.stability == Stability::Stable;
        let fill = if stable { BLACK } else { "#ffffff" };
        let _ = writeln!(
            canvas.out,
            "<circle class=\"equilibrium\" data-label=\"{}\" data-stable=\"{stable}\" cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"4.5\" fill=\"{fill}\" stroke=\"{BLACK}\" stroke-width=\"1.2\"/>",
            e.label()
        );
    }

    let top = vec![0.0, 0.0, 1.0];
    canvas.text(&top, 0.0, -28.0, &dynamic.name().to_uppercase(), " font-weight=\"bold\"");
    let _ = writeln!(canvas.out, "</g>");
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Renders the portrait. Only three-strategy games can be drawn.
pub fn render_portrait(a: &GameMatrix, spec: &PortraitSpec) -> Result<String> {
    if a.n() != 3 {
        return Err(Error::Unsupported(format!("portraits need 3 strategies, game has {}", a.n())));
    }
    if spec.panels.is_empty() {
        return Err(Error::InvalidArgument("no panel requested".into()));
    }
    let eqs = enumerate_nash(a, NASH_TOL);
    let panel_w = SIDE + 2.0 * MARGIN;
    let width = panel_w * spec.panels.len() as f64;
    let height = HEIGHT + 2.0 * MARGIN + 20.0;
    let mut canvas = Canvas { out: String::new(), dx: 0.0 };
    let _ = writeln!(
        canvas.out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width:.0}\" height=\"{height:.0}\" viewBox=\"0 0 {width:.0} {height:.0}\">"
    );
    let _ = writeln!(canvas.out, "<title>{}</title>", escape(&spec.title));
    let _ = writeln!(canvas.out, "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>");
    for (k, &d) in spec.panels.iter().enumerate() {
        canvas.dx = panel_w * k as f64;
        draw_panel(&mut canvas, a, d, spec, &eqs)?;
    }
    canvas.out.push_str("</svg>\n");
    Ok(canvas.out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use egd_core::corpus::zeeman_fixture;

    #[test]
    fn projection_corners() {
        assert_eq!(project(&[1.0, 0.0, 0.0]), (0.0, 0.0));
        assert_eq!(project(&[0.0, 1.0, 0.0]), (1.0, 0.0));
        let (u, v) = project(&[0.0, 0.0, 1.0]);
        assert_eq!(u, 0.5);
        assert!((v - 3f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_other_dimensions() {
        let g = GameMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        assert!(matches!(render_portrait(&g, &PortraitSpec::default()), Err(Error::Unsupported(_))));
    }

    #[test]
    fn one_group_per_panel() {
        let a = zeeman_fixture("4_1").unwrap().matrix();
        let spec = PortraitSpec { orbits: 3, ..PortraitSpec::default() };
        let svg = render_portrait(&a, &spec).unwrap();
        assert_eq!(svg.matches("<g class=\"panel\"").count(), 2);
        assert!(svg.contains("data-dynamic=\"rd\"") && svg.contains("data-dynamic=\"brd\""));
    }
}
