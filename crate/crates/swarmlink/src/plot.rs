//! Minimal SVG renderings of run results: the per-tick edge-count series
//! and a snapshot of the final topology. Output is plain standalone SVG
//! with no external references, suitable for dropping next to the CSV
//! exports.

use std::fmt::Write;

use crate::estimation::UncertaintyRegion;
use crate::graph::{Edge, NodeId};
use crate::metrics::RunMetrics;
use crate::Point;

const SERIES_W: f64 = 720.0;
const SERIES_H: f64 = 420.0;
const MARGIN: f64 = 52.0;

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    w: f64,
    h: f64,
}

impl Frame {
    fn new(x0: f64, x1: f64, y0: f64, y1: f64, w: f64, h: f64) -> Self {
        let spread = |a: f64, b: f64| if (b - a).abs() < 1e-12 { (a, a + 1.0) } else { (a, b) };
        let (x0, x1) = spread(x0, x1);
        let (y0, y1) = spread(y0, y1);
        Frame { x0, x1, y0, y1, w, h }
    }

    fn x(&self, v: f64) -> f64 {
        MARGIN + (v - self.x0) / (self.x1 - self.x0) * (self.w - 2.0 * MARGIN)
    }

    /// SVG y grows downward; flip so larger values plot higher.
    fn y(&self, v: f64) -> f64 {
        self.h - MARGIN - (v - self.y0) / (self.y1 - self.y0) * (self.h - 2.0 * MARGIN)
    }
}

fn svg_open(out: &mut String, w: f64, h: f64) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {w:.0} {h:.0}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect x=\"0\" y=\"0\" width=\"{w:.0}\" height=\"{h:.0}\" fill=\"#ffffff\"/>\n"
    );
}

fn polyline(out: &mut String, pts: &[(f64, f64)], color: &str, dash: Option<&str>) {
    if pts.is_empty() {
        return;
    }
    let coords: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
    let dash = dash.map_or(String::new(), |d| format!(" stroke-dasharray=\"{d}\""));
    let _ = write!(
        out,
        "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"{dash} points=\"{}\"/>\n",
        coords.join(" ")
    );
}

/// Per-tick edge counts: committed, realized, and stressed series, with an
/// optional horizontal annotation line (e.g. a stressed-count alert level).
pub fn edge_series_svg(metrics: &RunMetrics, annotation: Option<f64>) -> String {
    let mut out = String::new();
    svg_open(&mut out, SERIES_W, SERIES_H);
    if metrics.steps.is_empty() {
        let _ = write!(out, "<text x=\"20\" y=\"30\">no samples</text>\n</svg>\n");
        return out;
    }
    let max_step = metrics.steps.last().unwrap().step as f64;
    let mut max_count = metrics
        .steps
        .iter()
        .map(|s| s.committed_edges.max(s.realized_edges))
        .max()
        .unwrap() as f64;
    if let Some(a) = annotation {
        max_count = max_count.max(a);
    }
    let f = Frame::new(0.0, max_step, 0.0, max_count * 1.05, SERIES_W, SERIES_H);

    // Axes and ticks.
    let _ = write!(
        out,
        "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n\
         <line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
        f.x(f.x0), f.y(f.y0), f.x(f.x1), f.y(f.y0),
        f.x(f.x0), f.y(f.y0), f.x(f.x0), f.y(f.y1),
    );
    for k in 0..=4 {
        let v = f.y0 + (f.y1 - f.y0) * k as f64 / 4.0;
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{:.0}</text>\n",
            f.x(f.x0) - 6.0,
            f.y(v) + 4.0,
            v
        );
        let s = f.x0 + (f.x1 - f.x0) * k as f64 / 4.0;
        let _ = write!(
            out,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{:.0}</text>\n",
            f.x(s),
            f.y(f.y0) + 16.0,
            s
        );
    }
    let _ = write!(
        out,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">tick</text>\n",
        (f.x(f.x0) + f.x(f.x1)) / 2.0,
        SERIES_H - 10.0
    );

    let series: [(&str, &str, Box<dyn Fn(&crate::metrics::StepSample) -> f64>); 3] = [
        ("committed", "#1f6feb", Box::new(|s| s.committed_edges as f64)),
        ("realized", "#2da44e", Box::new(|s| s.realized_edges as f64)),
        ("stressed", "#cf222e", Box::new(|s| s.stressed_edges as f64)),
    ];
    for (i, (name, color, get)) in series.iter().enumerate() {
        let pts: Vec<(f64, f64)> = metrics
            .steps
            .iter()
            .map(|s| (f.x(s.step as f64), f.y(get(s))))
            .collect();
        polyline(&mut out, &pts, color, None);
        let lx = f.x(f.x1) - 110.0;
        let ly = f.y(f.y1) + 16.0 * i as f64 + 4.0;
        let _ = write!(
            out,
            "<line x1=\"{:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"{color}\" stroke-width=\"2\"/>\
             <text x=\"{:.1}\" y=\"{:.1}\">{name}</text>\n",
            lx, ly, lx + 22.0, ly, lx + 28.0, ly + 4.0
        );
    }
    if let Some(a) = annotation {
        polyline(
            &mut out,
            &[(f.x(f.x0), f.y(a)), (f.x(f.x1), f.y(a))],
            "#57606a",
            Some("6,4"),
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Snapshot of a topology: edges, nodes with ids, the central node starred,
/// and (optionally) position-uncertainty discs around every node.
pub fn topology_svg(
    positions: &[Point],
    edges: &[Edge],
    central: NodeId,
    regions: Option<&[UncertaintyRegion]>,
) -> String {
    let size = 640.0;
    let mut out = String::new();
    svg_open(&mut out, size, size);
    if positions.is_empty() {
        let _ = write!(out, "<text x=\"20\" y=\"30\">no nodes</text>\n</svg>\n");
        return out;
    }
    let pad = regions
        .map(|rs| rs.iter().map(|r| r.spread()).fold(0.0, f64::max))
        .unwrap_or(0.0)
        + 1.0;
    let (mut x0, mut x1, mut y0, mut y1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in positions {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let f = Frame::new(x0 - pad, x1 + pad, y0 - pad, y1 + pad, size, size);
    // Uniform scale: meters per pixel must match on both axes or circles
    // would render as ellipses; reuse the tighter axis.
    let scale = ((f.w - 2.0 * MARGIN) / (f.x1 - f.x0)).min((f.h - 2.0 * MARGIN) / (f.y1 - f.y0));

    for e in edges {
        let (a, b) = (positions[e.a()], positions[e.b()]);
        let _ = write!(
            out,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"#8899aa\" stroke-width=\"1\"/>\n",
            f.x(a.x), f.y(a.y), f.x(b.x), f.y(b.y)
        );
    }
    if let Some(rs) = regions {
        for r in rs {
            let c = r.centroid();
            let _ = write!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"{:.2}\" fill=\"none\" stroke=\"#d4a72c\" stroke-dasharray=\"3,3\"/>\n",
                f.x(c.x),
                f.y(c.y),
                (r.spread().max(0.08)) * scale
            );
        }
    }
    for (i, p) in positions.iter().enumerate() {
        let (cx, cy) = (f.x(p.x), f.y(p.y));
        if i == central {
            let _ = write!(out, "<polygon points=\"{}\" fill=\"#cf222e\"/>\n", star_points(cx, cy, 9.0));
        } else {
            let _ = write!(
                out,
                "<circle cx=\"{cx:.2}\" cy=\"{cy:.2}\" r=\"4.5\" fill=\"#1f6feb\"/>\n"
            );
        }
        let _ = write!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"10\">{i}</text>\n",
            cx + 6.0,
            cy - 6.0
        );
    }
    out.push_str("</svg>\n");
    out
}

fn star_points(cx: f64, cy: f64, r: f64) -> String {
    let mut pts = Vec::with_capacity(10);
    for k in 0..10 {
        let rad = if k % 2 == 0 { r } else { r * 0.42 };
        let a = std::f64::consts::PI * (k as f64 / 5.0) - std::f64::consts::FRAC_PI_2;
        pts.push(format!("{:.2},{:.2}", cx + rad * a.cos(), cy + rad * a.sin()));
    }
    pts.join(" ")
}
