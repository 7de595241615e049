//! Minimal deterministic SVG writer. Coordinates are printed with two decimals.

use std::fmt::Write;

pub(crate) fn num(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".into()
    } else {
        s
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

pub(crate) struct Svg {
    out: String,
}

impl Svg {
    pub fn new(width: f64, height: f64, style: &str) -> Self {
        let mut out = String::new();
        let (w, h) = (num(width), num(height));
        writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
        writeln!(out, "<style>{style}</style>").unwrap();
        Self { out }
    }

    pub fn raw(&mut self, text: &str) {
        self.out.push_str(text);
        self.out.push('\n');
    }

    pub fn rect(&mut self, x: f64, y: f64, w: f64, h: f64, class: &str) {
        writeln!(self.out, r#"<rect class="{class}" x="{}" y="{}" width="{}" height="{}"/>"#, num(x), num(y), num(w), num(h))
            .unwrap();
    }

    pub fn line(&mut self, x1: f64, y1: f64, x2: f64, y2: f64, class: &str) {
        writeln!(self.out, r#"<line class="{class}" x1="{}" y1="{}" x2="{}" y2="{}"/>"#, num(x1), num(y1), num(x2), num(y2))
            .unwrap();
    }

    pub fn circle(&mut self, cx: f64, cy: f64, r: f64, class: &str) {
        writeln!(self.out, r#"<circle class="{class}" cx="{}" cy="{}" r="{}"/>"#, num(cx), num(cy), num(r)).unwrap();
    }

    pub fn polyline(&mut self, points: &[(f64, f64)], class: &str) {
        let pts = points.iter().map(|(x, y)| format!("{},{}", num(*x), num(*y))).collect::<Vec<_>>().join(" ");
        writeln!(self.out, r#"<polyline class="{class}" points="{pts}"/>"#).unwrap();
    }

    pub fn text(&mut self, x: f64, y: f64, anchor: &str, class: &str, content: &str) {
        writeln!(
            self.out,
            r#"<text class="{class}" x="{}" y="{}" text-anchor="{anchor}">{}</text>"#,
            num(x),
            num(y),
            escape(content)
        )
        .unwrap();
    }

    pub fn finish(mut self) -> String {
        self.out.push_str("</svg>\n");
        self.out
    }
}
