//! Static SVG figures built from report tables.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2, Vector3};

use crate::config::ScenarioKind;
use crate::report::{Cell, ExperimentReport, Table};

const W: f64 = 360.0;
const H: f64 = 300.0;
const MARGIN: f64 = 40.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#7f7f7f"];

struct Panel {
    body: String,
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Panel {
    fn new(title: &str, (x0, x1): (f64, f64), (y0, y1): (f64, f64), dx: f64) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            r##"<g transform="translate({dx},0)"><rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            W - 2.0 * MARGIN,
            H - 2.0 * MARGIN
        );
        let _ = write!(body, r#"<text x="{}" y="22" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, escape(title));
        Self { body, x0, x1, y0, y1 }
    }

    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) / (self.x1 - self.x0) * (W - 2.0 * MARGIN)
    }

    fn py(&self, y: f64) -> f64 {
        H - MARGIN - (y - self.y0) / (self.y1 - self.y0) * (H - 2.0 * MARGIN)
    }

    fn dot(&mut self, x: f64, y: f64, r: f64, color: &str) {
        let _ = write!(self.body, r#"<circle cx="{:.2}" cy="{:.2}" r="{r}" fill="{color}"/>"#, self.px(x), self.py(y));
    }

    fn path(&mut self, pts: &[(f64, f64)], color: &str, closed: bool) {
        if pts.is_empty() {
            return;
        }
        let mut d = String::new();
        for (i, (x, y)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if i == 0 { "M" } else { "L" }, self.px(*x), self.py(*y));
        }
        if closed {
            d.push('Z');
        }
        let _ = write!(self.body, r#"<path d="{d}" fill="none" stroke="{color}" stroke-width="1.5"/>"#);
    }

    fn label(&mut self, x: f64, y: f64, text: &str, anchor: &str) {
        let _ = write!(
            self.body,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="{anchor}" font-size="10">{}</text>"#,
            self.px(x),
            self.py(y),
            escape(text)
        );
    }

    fn axis_note(&mut self, text: &str) {
        let _ = write!(self.body, r#"<text x="{}" y="{}" text-anchor="middle" font-size="10">{}</text>"#, W / 2.0, H - 10.0, escape(text));
    }

    fn finish(mut self) -> String {
        self.body.push_str("</g>");
        self.body
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn document(panels: Vec<String>, legend: &[(&str, &str)]) -> String {
    let width = W * panels.len().max(1) as f64;
    let height = H + if legend.is_empty() { 0.0 } else { 24.0 };
    let mut s = format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif">"#
    );
    s.push('\n');
    for p in panels {
        s.push_str(&p);
        s.push('\n');
    }
    for (i, (name, color)) in legend.iter().enumerate() {
        let x = MARGIN + i as f64 * 110.0;
        let _ = writeln!(
            s,
            r#"<circle cx="{x}" cy="{}" r="4" fill="{color}"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            H + 10.0,
            x + 8.0,
            H + 14.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.filter(|v| v.is_finite()).fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    let pad = ((hi - lo) * 0.08).max(1e-9);
    (lo - pad, hi + pad)
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = p * (sorted.len() - 1) as f64;
    let i = h.floor() as usize;
    let j = (i + 1).min(sorted.len() - 1);
    sorted[i] + (h - i as f64) * (sorted[j] - sorted[i])
}

/// Box-and-whisker plot of `ln(value)` per group (whiskers at 1.5 IQR).
pub fn log_boxplot(title: &str, groups: &[(String, Vec<f64>)]) -> String {
    let logs: Vec<(String, Vec<f64>)> = groups
        .iter()
        .map(|(g, v)| {
            let mut l: Vec<f64> = v.iter().filter(|x| **x > 0.0).map(|x| x.ln()).collect();
            l.sort_by(f64::total_cmp);
            (g.clone(), l)
        })
        .collect();
    let (y0, y1) = range(logs.iter().flat_map(|(_, v)| v.iter().copied()));
    let mut p = Panel::new(title, (0.0, logs.len() as f64), (y0, y1), 0.0);
    for (i, (name, v)) in logs.iter().enumerate() {
        let cx = i as f64 + 0.5;
        p.label(cx, y0, name, "middle");
        if v.is_empty() {
            continue;
        }
        let (q1, q2, q3) = (quantile(v, 0.25), quantile(v, 0.5), quantile(v, 0.75));
        let iqr = q3 - q1;
        let lo = v.iter().copied().find(|x| *x >= q1 - 1.5 * iqr).unwrap_or(q1);
        let hi = v.iter().rev().copied().find(|x| *x <= q3 + 1.5 * iqr).unwrap_or(q3);
        let color = PALETTE[i % PALETTE.len()];
        let (l, r) = (cx - 0.3, cx + 0.3);
        p.path(&[(l, q1), (r, q1), (r, q3), (l, q3)], color, true);
        p.path(&[(l, q2), (r, q2)], color, false);
        p.path(&[(cx, q3), (cx, hi)], color, false);
        p.path(&[(cx, q1), (cx, lo)], color, false);
        for x in v.iter().filter(|x| **x < lo || **x > hi) {
            p.dot(cx, *x, 2.0, color);
        }
    }
    p.label(0.05, y1, &format!("{y1:.2}"), "start");
    p.label(0.05, y0 + 0.04 * (y1 - y0), &format!("{y0:.2}"), "start");
    p.axis_note("log estimation error");
    document(vec![p.finish()], &[])
}

/// Tangent-plane chart at a reference axis.
#[derive(Debug, Clone)]
pub struct AxisChart {
    pub reference: Vector3<f64>,
    pub u1: Vector3<f64>,
    pub u2: Vector3<f64>,
}

impl AxisChart {
    pub fn new(reference: Vector3<f64>) -> Self {
        let m = reference.normalize();
        let i = (0..3).min_by(|&a, &b| m[a].abs().total_cmp(&m[b].abs())).unwrap_or(0);
        let e = Vector3::ith(i, 1.0);
        let u1 = (e - m * m.dot(&e)).normalize();
        let u2 = m.cross(&u1);
        Self { reference: m, u1, u2 }
    }

    /// Log-map coordinates of an axis after aligning its sign with the reference.
    pub fn coords(&self, x: &Vector3<f64>) -> (f64, f64) {
        let x = x.normalize();
        let c = self.reference.dot(&x);
        let x = if c < 0.0 { -x } else { x };
        let c = c.abs();
        let perp = x - self.reference * c;
        let s = perp.norm();
        if s == 0.0 {
            return (0.0, 0.0);
        }
        let theta = s.atan2(c);
        (theta * self.u1.dot(&perp) / s, theta * self.u2.dot(&perp) / s)
    }
}

/// Boundary of a tangent-Mahalanobis region, as axes.
pub fn ellipse_boundary(center: Vector3<f64>, u1: Vector3<f64>, u2: Vector3<f64>, cov: Matrix2<f64>, radius2: f64) -> Vec<Vector3<f64>> {
    let Some(chol) = cov.cholesky() else {
        return Vec::new();
    };
    let l = chol.l();
    (0..=72)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 72.0;
            let w: Vector2<f64> = l * Vector2::new(t.cos(), t.sin()) * radius2.sqrt();
            exp_axis(center, u1, u2, w)
        })
        .collect()
}

fn exp_axis(center: Vector3<f64>, u1: Vector3<f64>, u2: Vector3<f64>, w: Vector2<f64>) -> Vector3<f64> {
    let r = w.norm();
    if r == 0.0 {
        return center;
    }
    let dir = (u1 * w[0] + u2 * w[1]) / r;
    center * r.cos() + dir * r.sin()
}

fn angular_circle(center: Vector3<f64>, radius: f64) -> Vec<Vector3<f64>> {
    let chart = AxisChart::new(center);
    (0..=72)
        .map(|i| {
            let t = i as f64 * std::f64::consts::TAU / 72.0;
            exp_axis(chart.reference, chart.u1, chart.u2, Vector2::new(t.cos(), t.sin()) * radius)
        })
        .collect()
}

fn f(row: &[Cell], t: &Table, col: &str) -> f64 {
    t.column(col).and_then(|c| row[c].as_f64()).unwrap_or(f64::NAN)
}

fn s<'a>(row: &'a [Cell], t: &Table, col: &str) -> &'a str {
    t.column(col).and_then(|c| row[c].as_str()).unwrap_or("")
}

fn vec3(row: &[Cell], t: &Table, cols: [&str; 3]) -> Vector3<f64> {
    Vector3::new(f(row, t, cols[0]), f(row, t, cols[1]), f(row, t, cols[2]))
}

/// Ellipse curves from a `bootstrap_ellipses`-style table, indexed by axis number.
fn region_curves(t: &Table, rows: &[&Vec<Cell>]) -> Vec<(usize, Vec<Vector3<f64>>)> {
    rows.iter()
        .map(|row| {
            let axis = f(row, t, "axis") as usize;
            let center = vec3(row, t, ["cx", "cy", "cz"]);
            let curve = if s(row, t, "degenerate") == "true" {
                angular_circle(center, f(row, t, "angular_radius"))
            } else {
                let u1 = vec3(row, t, ["u1x", "u1y", "u1z"]);
                let u2 = vec3(row, t, ["u2x", "u2y", "u2z"]);
                let cov = Matrix2::new(f(row, t, "s11"), f(row, t, "s12"), f(row, t, "s12"), f(row, t, "s22"));
                ellipse_boundary(center, u1, u2, cov, f(row, t, "radius2"))
            };
            (axis, curve)
        })
        .collect()
}

struct Layer {
    color: &'static str,
    radius: f64,
    points: Vec<Vector3<f64>>,
}

fn axis_panels(titles: &[String], charts: &[AxisChart], layers: &[Vec<Layer>], curves: &[Vec<Vec<Vector3<f64>>>]) -> Vec<String> {
    (0..charts.len())
        .map(|a| {
            let chart = &charts[a];
            let pts: Vec<(f64, f64)> = layers[a].iter().flat_map(|l| l.points.iter().map(|p| chart.coords(p))).chain(
                curves[a].iter().flat_map(|c| c.iter().map(|p| chart.coords(p))),
            ).collect();
            let ext = pts.iter().fold(0.02f64, |m, (x, y)| m.max(x.abs()).max(y.abs())) * 1.1;
            let mut p = Panel::new(&titles[a], (-ext, ext), (-ext, ext), W * a as f64);
            p.path(&[(-ext, 0.0), (ext, 0.0)], "#ddd", false);
            p.path(&[(0.0, -ext), (0.0, ext)], "#ddd", false);
            for layer in &layers[a] {
                for x in &layer.points {
                    let (u, v) = chart.coords(x);
                    p.dot(u, v, layer.radius, layer.color);
                }
            }
            for c in &curves[a] {
                let xy: Vec<(f64, f64)> = c.iter().map(|x| chart.coords(x)).collect();
                p.path(&xy, PALETTE[1], true);
            }
            p.axis_note(&format!("tangent coordinates (rad), half-width {ext:.3}"));
            p.finish()
        })
        .collect()
}

fn shape_figures(report: &ExperimentReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    let (Some(errors), Some(confs)) = (report.table("errors"), report.table("configurations")) else {
        return out;
    };
    let mut cells: Vec<(i64, i64)> = Vec::new();
    for row in &errors.rows {
        if let (Cell::Int(sh), Cell::Int(o)) = (&row[0], &row[1]) {
            if !cells.contains(&(*sh, *o)) {
                cells.push((*sh, *o));
            }
        }
    }
    for (sh, o) in cells {
        let key = [("shape", Cell::Int(sh)), ("outliers", Cell::Int(o))];
        let mut groups: Vec<(String, Vec<f64>)> = Vec::new();
        for row in errors.filter(&key) {
            let est = s(row, errors, "estimator").to_owned();
            let e = f(row, errors, "error");
            match groups.iter_mut().find(|(g, _)| *g == est) {
                Some((_, v)) => v.push(e),
                None => groups.push((est, vec![e])),
            }
        }
        out.push((
            format!("errors_shape{sh}_outliers{o}"),
            log_boxplot(&format!("Shape {sh}, {o} outliers"), &groups),
        ));

        let mut polys: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
        for row in confs.filter(&key) {
            let est = s(row, confs, "estimator").to_owned();
            let xy = (f(row, confs, "x"), f(row, confs, "y"));
            match polys.iter_mut().find(|(g, _)| *g == est) {
                Some((_, v)) => v.push(xy),
                None => polys.push((est, vec![xy])),
            }
        }
        if polys.is_empty() {
            continue;
        }
        let (x0, x1) = range(polys.iter().flat_map(|(_, v)| v.iter().map(|p| p.0)));
        let (y0, y1) = range(polys.iter().flat_map(|(_, v)| v.iter().map(|p| p.1)));
        let half = (x1 - x0).max(y1 - y0) / 2.0;
        let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
        let mut p = Panel::new(&format!("Shape {sh}, {o} outliers, replicate 0"), (cx - half, cx + half), (cy - half, cy + half), 0.0);
        let mut legend = Vec::new();
        for (i, (name, pts)) in polys.iter().enumerate() {
            let color = if name == "truth" { "#000" } else { PALETTE[i % PALETTE.len()] };
            p.path(pts, color, true);
            for (x, y) in pts {
                p.dot(*x, *y, 2.0, color);
            }
            legend.push((name.as_str(), color));
        }
        p.axis_note("aligned landmark configurations");
        out.push((format!("configurations_shape{sh}_outliers{o}"), document(vec![p.finish()], &legend)));
    }
    out
}

fn frame_figures(report: &ExperimentReport) -> Vec<(String, String)> {
    let (Some(est), Some(reps), Some(ell)) =
        (report.table("bootstrap_estimates"), report.table("bootstrap_replicates"), report.table("bootstrap_ellipses"))
    else {
        return Vec::new();
    };
    let charts: Vec<AxisChart> = (0..3).map(|a| AxisChart::new(Vector3::ith(a, 1.0))).collect();
    let mut layers: Vec<Vec<Layer>> = Vec::new();
    let mut curves: Vec<Vec<Vec<Vector3<f64>>>> = vec![Vec::new(); 3];
    let all: Vec<&Vec<Cell>> = ell.rows.iter().collect();
    for (axis, c) in region_curves(ell, &all) {
        if (1..=3).contains(&axis) {
            curves[axis - 1].push(c);
        }
    }
    for a in 1..=3i64 {
        let key = [("axis", Cell::Int(a))];
        let replicate_axes = reps.filter(&key).map(|r| vec3(r, reps, ["x", "y", "z"])).collect();
        let pick = |name: &str| {
            est.filter(&[("estimator", Cell::Text(name.into())), ("axis", Cell::Int(a))])
                .map(|r| vec3(r, est, ["x", "y", "z"]))
                .collect::<Vec<_>>()
        };
        layers.push(vec![
            Layer { color: "#bbb", radius: 1.5, points: replicate_axes },
            Layer { color: PALETTE[0], radius: 4.0, points: pick("mean") },
            Layer { color: PALETTE[1], radius: 4.0, points: pick("median") },
            Layer { color: "#000", radius: 3.0, points: vec![Vector3::ith(a as usize - 1, 1.0)] },
        ]);
    }
    let titles: Vec<String> = (1..=3).map(|a| format!("axis m{a}")).collect();
    let panels = axis_panels(&titles, &charts, &layers, &curves);
    vec![(
        "bootstrap_example".into(),
        document(panels, &[("bootstrap median", "#bbb"), ("mean", PALETTE[0]), ("median", PALETTE[1]), ("truth", "#000")]),
    )]
}

fn quake_figures(report: &ExperimentReport) -> Vec<(String, String)> {
    let (Some(axes), Some(est)) = (report.table("axes"), report.table("estimates")) else {
        return Vec::new();
    };
    let labels = ["T", "B", "P"];
    let center = |label: &str| {
        est.filter(&[("variant", Cell::Text("full".into())), ("estimator", Cell::Text("median".into()))])
            .find(|r| s(r, est, "axis") == label)
            .map(|r| vec3(r, est, ["x", "y", "z"]))
    };
    let Some(refs) = labels.iter().map(|l| center(l)).collect::<Option<Vec<_>>>() else {
        return Vec::new();
    };
    let charts: Vec<AxisChart> = refs.into_iter().map(AxisChart::new).collect();
    let mut curves: Vec<Vec<Vec<Vector3<f64>>>> = vec![Vec::new(); 3];
    if let Some(ell) = report.table("ellipses") {
        let rows: Vec<&Vec<Cell>> = ell.rows.iter().filter(|r| s(r, ell, "variant") == "full").collect();
        for (axis, c) in region_curves(ell, &rows) {
            if (1..=3).contains(&axis) {
                curves[axis - 1].push(c);
            }
        }
    }
    let variants = ["full", "sub", "cont"];
    let mut layers = Vec::new();
    for label in labels {
        let data = axes.rows.iter().filter(|r| s(r, axes, "axis") == label).map(|r| vec3(r, axes, ["x", "y", "z"])).collect();
        let mut l = vec![Layer { color: "#999", radius: 2.5, points: data }];
        for (vi, v) in variants.iter().enumerate() {
            for (name, color) in [("mean", PALETTE[0]), ("median", PALETTE[1])] {
                let pts: Vec<_> = est
                    .filter(&[("variant", Cell::Text((*v).into())), ("estimator", Cell::Text(name.into()))])
                    .filter(|r| s(r, est, "axis") == label)
                    .map(|r| vec3(r, est, ["x", "y", "z"]))
                    .collect();
                l.push(Layer { color, radius: 4.5 - vi as f64, points: pts });
            }
        }
        layers.push(l);
    }
    let titles: Vec<String> = labels.iter().map(|l| format!("{l} axis")).collect();
    let panels = axis_panels(&titles, &charts, &layers, &curves);
    vec![("axes".into(), document(panels, &[("events", "#999"), ("mean", PALETTE[0]), ("median", PALETTE[1])]))]
}

/// `(name, svg)` pairs for the report's scenario.
pub fn figures(report: &ExperimentReport) -> Vec<(String, String)> {
    match report.scenario {
        ScenarioKind::ShapeTable => shape_figures(report),
        ScenarioKind::FrameTable => frame_figures(report),
        ScenarioKind::Earthquake => quake_figures(report),
        ScenarioKind::Bench => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_coordinates_are_sign_invariant() {
        let chart = AxisChart::new(Vector3::new(0.0, 0.0, 1.0));
        let x = Vector3::new(0.1f64.sin(), 0.0, 0.1f64.cos());
        let (a, b) = chart.coords(&x);
        let (c, d) = chart.coords(&-x);
        assert_eq!((a, b), (c, d));
        assert!(((a * a + b * b).sqrt() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn ellipse_boundary_sits_at_the_radius() {
        let center = Vector3::new(0.0, 0.0, 1.0);
        let chart = AxisChart::new(center);
        let cov = Matrix2::new(0.01, 0.0, 0.0, 0.01);
        for x in ellipse_boundary(center, chart.u1, chart.u2, cov, 4.0) {
            let (u, v) = chart.coords(&x);
            assert!(((u * u + v * v).sqrt() - 0.2).abs() < 1e-12);
        }
    }
}
