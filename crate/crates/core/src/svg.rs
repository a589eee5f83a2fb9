//! SVG rendering of networks with their ellipses, and of sweep curves.
//!
//! An ellipse drawn at scale `k` has semi-axes `√(k·λ)` for each eigenvalue
//! `λ` of the plotted matrix: `√(kμ)`, `√(kη)` for the information ellipse
//! and `√(k/η)`, `√(k/μ)` for the error ellipse. `k = 1` is the default.

use std::fmt::Write as _;

use crate::ellipse::{ie_to_ee, EllipseParams};
use crate::error::{Error, Result};
use crate::report::{AnalysisReport, SweepRow};

const SIZE: f64 = 720.0;
const MARGIN: f64 = 60.0;
const IE_COLOR: &str = "#1f5fbf";
const EE_COLOR: &str = "#c0392b";
const PALETTE: [&str; 6] = ["#1f5fbf", "#c0392b", "#2e8b57", "#8e44ad", "#d68910", "#34495e"];

fn f(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" { "0.000".into() } else { s }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Step from {1, 2, 5}·10^m giving roughly `target` intervals over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let r = raw / mag;
    let m = if r < 1.5 {
        1.0
    } else if r < 3.5 {
        2.0
    } else if r < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let step = nice_step(hi - lo, 8.0);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|i| i as f64 * step).collect()
}

fn tick_label(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Affine map from data coordinates to the canvas, y pointing up.
struct Frame {
    x0: f64,
    y1: f64,
    sx: f64,
    sy: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        MARGIN + (x - self.x0) * self.sx
    }
    fn py(&self, y: f64) -> f64 {
        MARGIN + (self.y1 - y) * self.sy
    }
}

fn axes(s: &mut String, fr: &Frame, xr: (f64, f64), yr: (f64, f64), xlabel: &str, ylabel: &str) {
    let bottom = MARGIN + SIZE;
    let _ = writeln!(
        s,
        r##"<rect x="{m}" y="{m}" width="{w}" height="{w}" fill="none" stroke="#888" stroke-width="1"/>"##,
        m = f(MARGIN),
        w = f(SIZE)
    );
    for t in ticks(xr.0, xr.1) {
        let x = fr.px(t);
        let _ = writeln!(
            s,
            r##"<line x1="{x}" y1="{b}" x2="{x}" y2="{b2}" stroke="#888"/><text x="{x}" y="{ty}" font-size="11" text-anchor="middle">{l}</text>"##,
            x = f(x),
            b = f(bottom),
            b2 = f(bottom + 5.0),
            ty = f(bottom + 18.0),
            l = tick_label(t)
        );
    }
    for t in ticks(yr.0, yr.1) {
        let y = fr.py(t);
        let _ = writeln!(
            s,
            r##"<line x1="{a}" y1="{y}" x2="{m}" y2="{y}" stroke="#888"/><text x="{tx}" y="{ty}" font-size="11" text-anchor="end">{l}</text>"##,
            a = f(MARGIN - 5.0),
            m = f(MARGIN),
            y = f(y),
            tx = f(MARGIN - 8.0),
            ty = f(y + 4.0),
            l = tick_label(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle">{l}</text>"#,
        x = f(MARGIN + SIZE / 2.0),
        y = f(bottom + 40.0),
        l = escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="12" text-anchor="middle" transform="rotate(-90 {x} {y})">{l}</text>"#,
        x = f(18.0),
        y = f(MARGIN + SIZE / 2.0),
        l = escape(ylabel)
    );
}

fn open(s: &mut String) {
    let total = SIZE + 2.0 * MARGIN;
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{t}" height="{t}" viewBox="0 0 {t} {t}" font-family="sans-serif">"#,
        t = f(total)
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
}

/// Semi-axis lengths and orientation of an ellipse drawn at scale `k`.
fn drawn(e: &EllipseParams, k: f64) -> (f64, f64, f64) {
    ((k * e.major).sqrt(), (k * e.minor).sqrt(), e.angle)
}

/// Half-widths of the bounding box of a rotated ellipse.
fn half_extent(a: f64, b: f64, t: f64) -> (f64, f64) {
    let (s, c) = t.sin_cos();
    ((a * a * c * c + b * b * s * s).sqrt(), (a * a * s * s + b * b * c * c).sqrt())
}

/// Which ellipses to draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EllipseSelection {
    pub information: bool,
    pub error: bool,
}

impl Default for EllipseSelection {
    fn default() -> Self {
        Self {
            information: true,
            error: true,
        }
    }
}

/// Network plot: anchors, sources and the ellipses of the requested nodes
/// (all reported nodes when `nodes` is empty).
pub fn render_report(report: &AnalysisReport, k: f64, nodes: &[String], which: EllipseSelection) -> Result<String> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::DegenerateInput("k must be positive"));
    }
    let selected: Vec<_> = if nodes.is_empty() {
        report.nodes.iter().collect()
    } else {
        nodes
            .iter()
            .map(|id| {
                report
                    .nodes
                    .iter()
                    .find(|n| &n.id == id)
                    .ok_or_else(|| Error::UnknownNodeId(id.clone()))
            })
            .collect::<Result<_>>()?
    };

    let mut ellipses = Vec::new();
    for n in &selected {
        let ie = n.ie.params()?;
        if which.information {
            ellipses.push((n.id.as_str(), n.x_m, n.y_m, drawn(&ie, k), IE_COLOR, ""));
        }
        if which.error {
            let ee = ie_to_ee(&ie)?;
            ellipses.push((n.id.as_str(), n.x_m, n.y_m, drawn(&ee, k), EE_COLOR, r#" stroke-dasharray="6 4""#));
        }
    }

    let mut xs: Vec<(f64, f64)> = Vec::new();
    let mut ys: Vec<(f64, f64)> = Vec::new();
    for a in &report.anchors {
        xs.push((a.x_m, a.x_m));
        ys.push((a.y_m, a.y_m));
    }
    for s in &report.sources {
        xs.push((s.x_m, s.x_m));
        ys.push((s.y_m, s.y_m));
    }
    for (_, x, y, (a, b, t), _, _) in &ellipses {
        let (hx, hy) = half_extent(*a, *b, *t);
        xs.push((x - hx, x + hx));
        ys.push((y - hy, y + hy));
    }
    let lo = |v: &[(f64, f64)]| v.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let hi = |v: &[(f64, f64)]| v.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut x0, mut x1, mut y0, mut y1) = (lo(&xs), hi(&xs), lo(&ys), hi(&ys));
    if !(x0.is_finite() && x1.is_finite() && y0.is_finite() && y1.is_finite()) {
        (x0, x1, y0, y1) = (-1.0, 1.0, -1.0, 1.0);
    }
    // equal scale on both axes, 8% padding
    let span = (x1 - x0).max(y1 - y0).max(1e-9) * 1.08;
    let (cx, cy) = ((x0 + x1) / 2.0, (y0 + y1) / 2.0);
    let (x0, x1, y0, y1) = (cx - span / 2.0, cx + span / 2.0, cy - span / 2.0, cy + span / 2.0);
    let scale = SIZE / span;
    let fr = Frame {
        x0,
        y1,
        sx: scale,
        sy: scale,
    };

    let mut s = String::new();
    open(&mut s);
    axes(&mut s, &fr, (x0, x1), (y0, y1), "x (m)", "y (m)");
    let _ = writeln!(s, r#"<g id="ellipses" fill="none" stroke-width="1.5">"#);
    for (id, x, y, (a, b, t), color, dash) in &ellipses {
        let (px, py) = (f(fr.px(*x)), f(fr.py(*y)));
        let _ = writeln!(
            s,
            r#"<ellipse data-node="{id}" cx="{px}" cy="{py}" rx="{rx}" ry="{ry}" transform="rotate({deg} {px} {py})" stroke="{color}"{dash}/>"#,
            id = escape(id),
            rx = f(a * scale),
            ry = f(b * scale),
            deg = f(-t.to_degrees()),
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="anchors" font-size="10">"#);
    for a in &report.anchors {
        let (px, py) = (fr.px(a.x_m), fr.py(a.y_m));
        let fill = if a.kind == "uncertain" { "white" } else { "black" };
        let _ = writeln!(
            s,
            r#"<rect class="{kind}" x="{x}" y="{y}" width="8.000" height="8.000" fill="{fill}" stroke="black"/><text x="{tx}" y="{ty}">{id}</text>"#,
            kind = escape(&a.kind),
            x = f(px - 4.0),
            y = f(py - 4.0),
            tx = f(px + 6.0),
            ty = f(py - 6.0),
            id = escape(&a.id)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(s, r#"<g id="sources" font-size="10">"#);
    for src in &report.sources {
        let (px, py) = (fr.px(src.x_m), fr.py(src.y_m));
        let (class, fill) = if src.known_position { ("known", "white") } else { ("unknown", EE_COLOR) };
        let _ = writeln!(
            s,
            r#"<circle class="{class}" cx="{x}" cy="{y}" r="4.000" fill="{fill}" stroke="{EE_COLOR}"/><text x="{tx}" y="{ty}">{id}</text>"#,
            x = f(px),
            y = f(py),
            tx = f(px + 6.0),
            ty = f(py - 6.0),
            id = escape(&src.id)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" font-size="12">k = {k}</text>"#,
        x = f(MARGIN),
        y = f(MARGIN - 12.0),
        k = tick_label(k)
    );
    s.push_str("</svg>\n");
    Ok(s)
}

/// Metric of a sweep table drawn against the swept value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMetric {
    Mu,
    Eta,
    Eccentricity,
    Area,
    Peb,
}

impl SweepMetric {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "mu" => Self::Mu,
            "eta" => Self::Eta,
            "eccentricity" => Self::Eccentricity,
            "area" => Self::Area,
            "peb_m" | "peb" => Self::Peb,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Self::Mu => "mu",
            Self::Eta => "eta",
            Self::Eccentricity => "eccentricity",
            Self::Area => "area",
            Self::Peb => "peb_m",
        }
    }

    fn value(self, r: &SweepRow) -> f64 {
        match self {
            Self::Mu => r.ie.major,
            Self::Eta => r.ie.minor,
            Self::Eccentricity => r.eccentricity,
            Self::Area => r.area,
            Self::Peb => r.peb_m,
        }
    }
}

/// One polyline per node, in order of first appearance.
pub fn render_sweep(axis: &str, rows: &[SweepRow], metric: SweepMetric, nodes: &[String]) -> Result<String> {
    let mut ids: Vec<&str> = Vec::new();
    for r in rows {
        if !ids.contains(&r.node_id.as_str()) {
            ids.push(&r.node_id);
        }
    }
    if !nodes.is_empty() {
        for n in nodes {
            if !ids.contains(&n.as_str()) {
                return Err(Error::UnknownNodeId(n.clone()));
            }
        }
        ids.retain(|i| nodes.iter().any(|n| n == i));
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| ids.contains(&r.node_id.as_str()))
        .map(|r| (r.axis_value, metric.value(r)))
        .filter(|p| p.0.is_finite() && p.1.is_finite())
        .collect();
    let range = |v: Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi - lo < 1e-12 * lo.abs().max(1.0) {
            (lo - 0.5, hi + 0.5)
        } else {
            let pad = 0.04 * (hi - lo);
            (lo - pad, hi + pad)
        }
    };
    let (x0, x1) = range(pts.iter().map(|p| p.0).collect());
    let (y0, y1) = range(pts.iter().map(|p| p.1).collect());
    let fr = Frame {
        x0,
        y1,
        sx: SIZE / (x1 - x0),
        sy: SIZE / (y1 - y0),
    };
    let mut s = String::new();
    open(&mut s);
    axes(&mut s, &fr, (x0, x1), (y0, y1), axis, metric.name());
    for (i, id) in ids.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = rows
            .iter()
            .filter(|r| r.node_id == *id)
            .map(|r| (r.axis_value, metric.value(r)))
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|(x, y)| format!("{},{}", f(fr.px(x)), f(fr.py(y))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-node="{id}" points="{p}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            id = escape(id),
            p = coords.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<text x="{x}" y="{y}" font-size="11" fill="{color}">{id}</text>"#,
            x = f(MARGIN + SIZE + 6.0 - 60.0),
            y = f(MARGIN + 14.0 * (i as f64 + 1.0)),
            id = escape(id)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}
