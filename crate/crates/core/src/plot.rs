//! Standalone SVG scatter plots of pools and subsampled instances.

use std::fmt::Write as _;

use crate::model::{Instance, Problem};
use crate::subsample::BaseNodeDistribution;

/// Canvas side length in SVG user units.
pub const CANVAS: f64 = 600.0;
pub const MARGIN: f64 = 20.0;

/// Maps unit-square coordinates to canvas coordinates (y axis pointing up).
pub fn to_canvas(x: f64, y: f64) -> (f64, f64) {
    let span = CANVAS - 2.0 * MARGIN;
    (MARGIN + x * span, CANVAS - MARGIN - y * span)
}

/// Inverse of [`to_canvas`].
pub fn from_canvas(cx: f64, cy: f64) -> (f64, f64) {
    let span = CANVAS - 2.0 * MARGIN;
    ((cx - MARGIN) / span, (CANVAS - MARGIN - cy) / span)
}

/// Renders the pool as light points and the instance (if any) as dark
/// points on top. The depot is drawn as a red square.
pub fn render_svg(base: Option<&BaseNodeDistribution>, instance: Option<&Instance>, title: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{CANVAS}" height="{CANVAS}" viewBox="0 0 {CANVAS} {CANVAS}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r##"<rect x="0" y="0" width="{CANVAS}" height="{CANVAS}" fill="#ffffff"/>"##);
    let (x0, y1) = to_canvas(0.0, 0.0);
    let (x1, y0) = to_canvas(1.0, 1.0);
    let _ = writeln!(
        s,
        r##"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="#999999" stroke-width="1"/>"##,
        x1 - x0,
        y1 - y0
    );

    let mut depot = None;
    if let Some(base) = base {
        let radius = if base.n_base > 2000 { 0.8 } else { 1.6 };
        let _ = writeln!(s, r##"<g class="pool" fill="#9aa5b1">"##);
        for v in &base.nodes {
            let (cx, cy) = to_canvas(v.x, v.y);
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{radius}"/>"#);
        }
        let _ = writeln!(s, "</g>");
        depot = base.depot.map(|d| (d.x, d.y));
    }
    if let Some(inst) = instance {
        let _ = writeln!(s, r##"<g class="instance" fill="#1f3a93">"##);
        for v in &inst.nodes[inst.customers()] {
            let (cx, cy) = to_canvas(v.x, v.y);
            let _ = writeln!(s, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3"/>"#);
        }
        let _ = writeln!(s, "</g>");
        if inst.problem == Problem::Cvrp {
            depot = inst.depot().map(|d| (d.x, d.y));
        }
    }
    if let Some((x, y)) = depot {
        let (cx, cy) = to_canvas(x, y);
        let _ = writeln!(
            s,
            r##"<rect class="depot" x="{:.2}" y="{:.2}" width="10" height="10" fill="#d62728" stroke="#000000"/>"##,
            cx - 5.0,
            cy - 5.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
