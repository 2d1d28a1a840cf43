use std::fmt::Write;

use expbrush::brush::SubBrush;
use expbrush::curve::{BoxFamily, CurveBuild, Route};
use expbrush::rational::rational_to_f64;

const SIZE: f64 = 800.0;
const MARGIN: f64 = 20.0;
const LEVEL_COLORS: [&str; 6] = ["#999999", "#1f77b4", "#2ca02c", "#9467bd", "#8c564b", "#17becf"];

/// Affine map from model coordinates to SVG user units, with `y` flipped.
struct Frame {
    x0: f64,
    y1: f64,
    scale: f64,
    width: f64,
    height: f64,
}

impl Frame {
    fn fit(xs: (f64, f64), ys: (f64, f64)) -> Frame {
        let dx = (xs.1 - xs.0).max(1e-12);
        let dy = (ys.1 - ys.0).max(1e-12);
        let scale = SIZE / dx.max(dy);
        Frame {
            x0: xs.0,
            y1: ys.1,
            scale,
            width: dx * scale + 2.0 * MARGIN,
            height: dy * scale + 2.0 * MARGIN,
        }
    }

    fn x(&self, x: f64) -> f64 {
        MARGIN + self.scale * (x - self.x0)
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + self.scale * (self.y1 - y)
    }

    fn header(&self, out: &mut String, title: &str) {
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.3}" height="{:.3}" viewBox="0 0 {:.3} {:.3}">"#,
            self.width, self.height, self.width, self.height
        );
        let _ = writeln!(
            out,
            "<!-- {title}; affine: X = {MARGIN} + {:.9} * (x - ({:.9})), Y = {MARGIN} + {:.9} * ({:.9} - y); \
x = potential T, y = embedding height h(s) -->",
            self.scale, self.x0, self.scale, self.y1
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    }

    fn polyline(&self, out: &mut String, pts: impl Iterator<Item = (f64, f64)>, stroke: &str, width: f64, extra: &str) {
        let coords: Vec<String> = pts.map(|(x, y)| format!("{:.4},{:.4}", self.x(x), self.y(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{extra}/>"#,
            coords.join(" ")
        );
    }
}

fn hairs(out: &mut String, f: &Frame, sb: &SubBrush, x_end: f64, ys: (f64, f64)) {
    let _ = writeln!(out, r##"<g id="hairs" stroke="#d62728" stroke-width="0.8">"##);
    for (s, t) in sb.hairs() {
        let y = s.approx_height();
        if t < x_end && ys.0 <= y && y <= ys.1 {
            let _ = writeln!(
                out,
                r#"<line x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"><title>{s}</title></line>"#,
                f.x(t),
                f.y(y),
                f.x(x_end),
                f.y(y)
            );
        }
    }
    out.push_str("</g>\n");
}

fn boxes(out: &mut String, f: &Frame, families: &[BoxFamily]) {
    let _ = writeln!(
        out,
        r##"<g id="boxes" fill="none" stroke="#ff7f0e" stroke-width="0.6">"##
    );
    for fam in families.iter().skip(1) {
        for b in &fam.boxes {
            let (c, d) = (rational_to_f64(&b.c), rational_to_f64(&b.d));
            let _ = writeln!(
                out,
                r#"<rect x="{:.4}" y="{:.4}" width="{:.4}" height="{:.4}" data-level="{}"/>"#,
                f.x(b.a),
                f.y(d),
                f.scale * (b.b - b.a),
                f.scale * (d - c),
                fam.level
            );
        }
    }
    out.push_str("</g>\n");
}

pub fn curve_svg(build: &CurveBuild, sb: &SubBrush) -> String {
    let seed = &build.seed;
    let right = build.schedule.edge(build.level_reached);
    let pad = 0.1 * (right - seed.a);
    let xs = (seed.a - pad, right + pad);
    let ys = (rational_to_f64(&seed.c), rational_to_f64(&seed.d));
    let pady = 0.05 * (ys.1 - ys.0);
    let ys = (ys.0 - pady, ys.1 + pady);
    let f = Frame::fit(xs, ys);
    let mut out = String::new();
    f.header(&mut out, "detour curves g_k and closed curve");
    hairs(&mut out, &f, sb, xs.1, ys);
    boxes(&mut out, &f, &build.families);
    for g in &build.curves {
        let color = LEVEL_COLORS[(g.level as usize).min(LEVEL_COLORS.len() - 1)];
        let pts = g.vertices.iter().map(|v| (v.x, rational_to_f64(&v.y)));
        f.polyline(&mut out, pts, color, 1.0, &format!(r#" data-level="{}""#, g.level));
    }
    let arc = build.arc();
    let (sa, sc, sd) = (seed.a, rational_to_f64(&seed.c), rational_to_f64(&seed.d));
    let beta = arc
        .vertices
        .iter()
        .map(|v| (v.x, rational_to_f64(&v.y)))
        .chain([(sa, sd), (sa, sc), (seed.b, sc)]);
    f.polyline(&mut out, beta, "#000000", 2.0, r#" id="beta""#);
    out.push_str("</svg>\n");
    out
}

pub fn path_svg(route: &Route, sb: &SubBrush) -> String {
    let xs: Vec<f64> = route
        .points
        .iter()
        .map(|p| p.x)
        .chain(sb.hairs().map(|(_, t)| t))
        .collect();
    let ys: Vec<f64> = route
        .points
        .iter()
        .map(|p| p.approx_y())
        .chain(sb.hairs().map(|(s, _)| s.approx_height()))
        .collect();
    let lo = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (x0, x1) = (lo(&xs) - 1.0, hi(&xs) + 1.0);
    let (y0, y1) = (lo(&ys) - 0.5, hi(&ys) + 0.5);
    let f = Frame::fit((x0, x1), (y0, y1));
    let mut out = String::new();
    f.header(&mut out, "route between two points");
    hairs(&mut out, &f, sb, x1, (y0, y1));
    f.polyline(
        &mut out,
        route.points.iter().map(|p| (p.x, p.approx_y())),
        "#000000",
        1.5,
        r#" id="route""#,
    );
    out.push_str("</svg>\n");
    out
}
