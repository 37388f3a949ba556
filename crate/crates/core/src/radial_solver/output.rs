//! Serialization of radial solutions: CSV, JSON and a static SVG line chart.

use std::fmt::Write as _;

use super::RadialSolution;

impl RadialSolution {
    /// CSV with header `r,u,flux`; numbers use the shortest round-trip form.
    pub fn to_csv(&self) -> String {
        let flux = self.nodal_flux();
        let mut out = String::from("r,u,flux\n");
        for ((r, u), f) in self.grid.nodes.iter().zip(&self.values).zip(flux) {
            let _ = writeln!(out, "{r:e},{u:e},{f:e}");
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    /// A polyline chart of `(r, u)` with labelled axes.
    pub fn to_svg(&self) -> String {
        let title = format!(
            "{} | p = {} | Lambda = {}",
            self.manifold.label(),
            self.p,
            self.lambda.label()
        );
        svg_chart(&title, &self.grid.nodes, &self.values)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Static line chart of `ys` against `xs`.
pub fn svg_chart(title: &str, xs: &[f64], ys: &[f64]) -> String {
    let (w, h) = (640.0, 400.0);
    let (ml, mr, mt, mb) = (60.0, 20.0, 40.0, 40.0);
    let x0 = xs.first().copied().unwrap_or(0.0);
    let x1 = xs.last().copied().unwrap_or(1.0);
    let y_max = ys.iter().fold(0.0f64, |m, &v| m.max(v));
    let y_min = ys.iter().fold(0.0f64, |m, &v| m.min(v));
    let y_span = if y_max > y_min { y_max - y_min } else { 1.0 };
    let x_span = if x1 > x0 { x1 - x0 } else { 1.0 };
    let px = |x: f64| ml + (x - x0) / x_span * (w - ml - mr);
    let py = |y: f64| h - mb - (y - y_min) / y_span * (h - mt - mb);
    let mut pts = String::new();
    for (&x, &y) in xs.iter().zip(ys) {
        let _ = write!(pts, "{:.2},{:.2} ", px(x), py(y));
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        w / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<line x1="{ml}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        h - mb,
        w - mr,
        h - mb
    );
    let _ = writeln!(s, r#"<line x1="{ml}" y1="{mt}" x2="{ml}" y2="{}" stroke="black"/>"#, h - mb);
    for (v, anchor_y) in [(y_min, h - mb), (y_max, mt)] {
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="11" text-anchor="end">{v:.3}</text>"#,
            ml - 4.0,
            anchor_y + 4.0
        );
    }
    for (v, anchor_x) in [(x0, ml), (x1, w - mr)] {
        let _ = writeln!(
            s,
            r#"<text x="{anchor_x}" y="{}" font-family="sans-serif" font-size="11" text-anchor="middle">{v:.3}</text>"#,
            h - mb + 16.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">r</text>"#,
        (ml + w - mr) / 2.0,
        h - 6.0
    );
    let _ = writeln!(
        s,
        r#"<polyline fill="none" stroke="steelblue" stroke-width="1.5" points="{}"/>"#,
        pts.trim_end()
    );
    s.push_str("</svg>\n");
    s
}
