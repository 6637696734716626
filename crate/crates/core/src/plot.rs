//! Static SVG rendering of a map over the input positions.

use std::fmt::Write;

use crate::map::TopologicalMap;
use crate::metrics::Vec2;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Default)]
pub struct PlotOptions<'a> {
    /// Per-node class index, aligned with node ids.
    pub node_labels: Option<&'a [usize]>,
    pub label_names: &'a [String],
    /// Capture positions drawn underneath the map.
    pub inputs: &'a [Vec2],
    /// Output width in pixels; height follows the data aspect ratio.
    pub width: f64,
}

/// Nodes are `<circle class="node">`, edges `<line class="edge">`, input
/// positions `<circle class="input">`.
pub fn render_svg(map: &TopologicalMap, opts: &PlotOptions<'_>) -> String {
    let pts = map.nodes().iter().map(|n| n.p).chain(opts.inputs.iter().copied());
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    if !x0.is_finite() {
        (x0, y0, x1, y1) = (0.0, 0.0, 1.0, 1.0);
    }
    let margin = 0.05 * (x1 - x0).max(y1 - y0).max(1.0);
    let (w_m, h_m) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let width = if opts.width > 0.0 { opts.width } else { 800.0 };
    let scale = width / w_m;
    let height = h_m * scale;
    let tx = |p: Vec2| ((p.x - x0 + margin) * scale, (y1 + margin - p.y) * scale);
    let r = (0.12 * scale).clamp(2.0, 8.0);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.2} {height:.2}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for &p in opts.inputs {
        let (x, y) = tx(p);
        let _ = writeln!(s, r##"<circle class="input" cx="{x:.2}" cy="{y:.2}" r="1" fill="#bbbbbb"/>"##);
    }
    for e in map.edges() {
        let (ax, ay) = tx(map.nodes()[e.0].p);
        let (bx, by) = tx(map.nodes()[e.1].p);
        let _ = writeln!(
            s,
            r##"<line class="edge" x1="{ax:.2}" y1="{ay:.2}" x2="{bx:.2}" y2="{by:.2}" stroke="#444444" stroke-width="1"/>"##
        );
    }
    for n in map.nodes() {
        let (x, y) = tx(n.p);
        let label = opts.node_labels.and_then(|l| l.get(n.id)).copied();
        let fill = label.map_or("#000000", |l| PALETTE[l % PALETTE.len()]);
        let title = match label {
            Some(l) => format!("node {} ({})", n.id, opts.label_names.get(l).map_or("?", |s| s.as_str())),
            None => format!("node {}", n.id),
        };
        let _ = writeln!(
            s,
            r#"<circle class="node" cx="{x:.2}" cy="{y:.2}" r="{r:.1}" fill="{fill}"><title>{}</title></circle>"#,
            escape(&title)
        );
    }
    if opts.node_labels.is_some() {
        for (i, name) in opts.label_names.iter().enumerate() {
            let y = 16.0 + 16.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text class="legend" x="10" y="{y:.0}" font-size="12" fill="{}">{}</text>"#,
                PALETTE[i % PALETTE.len()],
                escape(name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}
