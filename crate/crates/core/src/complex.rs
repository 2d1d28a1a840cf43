//! Orbits of `f_a(z) = e^z + a` for `a <= -1` in the complex plane.
//!
//! Escape verdicts here are heuristic. Certified escape lives in [`crate::brush`].

use std::f64::consts::TAU;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ComplexError {
    #[error("parameter a = {0} is outside (-inf, -1]")]
    Parameter(f64),
    #[error("invalid {0}")]
    Invalid(&'static str),
    #[error("png encoding failed: {0}")]
    Png(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExpParameter {
    a: f64,
}

impl ExpParameter {
    pub fn new(a: f64) -> Result<Self, ComplexError> {
        if a.is_finite() && a <= -1.0 {
            Ok(ExpParameter { a })
        } else {
            Err(ComplexError::Parameter(a))
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        z.exp() + self.a
    }
}

/// The real fixed point `p* <= 0` of `f_a`, by bisection of `e^x + a - x` on `[a, 0]`.
pub fn find_fixed_point(p: ExpParameter) -> f64 {
    let g = |x: f64| x.exp() + p.a - x;
    if g(0.0) == 0.0 {
        return 0.0;
    }
    let (mut lo, mut hi) = (p.a, 0.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if g(lo).abs() <= g(hi).abs() {
        lo
    } else {
        hi
    }
}

/// `f_a'(p*) = e^{p*}`.
pub fn multiplier(p: ExpParameter) -> f64 {
    find_fixed_point(p).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrbitClass {
    FatouAttracted,
    EscapingHeuristic,
    Unknown,
}

impl std::fmt::Display for OrbitClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OrbitClass::FatouAttracted => "FATOU_ATTRACTED",
            OrbitClass::EscapingHeuristic => "ESCAPING_HEURISTIC",
            OrbitClass::Unknown => "UNKNOWN",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OrbitVerdict {
    pub class: OrbitClass,
    pub steps: u32,
    /// `|z_n - p*|` for attracted orbits, `Re z_n` otherwise.
    pub witness: f64,
    /// The orbit overflowed `f64`.
    pub overflow: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub max_steps: u32,
    pub escape_radius: f64,
    pub eps_attract: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            max_steps: 512,
            escape_radius: 50.0,
            eps_attract: 1e-8,
        }
    }
}

/// Iterates `z ↦ e^z + a` and sorts the orbit into one of three classes.
///
/// * `FATOU_ATTRACTED`: `|z_n - p*| < eps`; or `Re z_n < 0` after at least one
///   step (the left half-plane maps into `{Re < a + 1}` and so lies in the basin
///   of `p*`); or, for `a < -1`, `|z_n - p*| < |p*|/2`, a disc on which
///   `|f'| < 1`.
/// * `ESCAPING_HEURISTIC`: `Re z_n > R`, or the orbit overflowed.
/// * `UNKNOWN`: neither within `max_steps`.
///
/// Imaginary parts are reduced mod `2π` after each step.
pub fn classify_orbit(z: Complex64, p: ExpParameter, fixed: f64, th: &Thresholds) -> OrbitVerdict {
    let pstar = Complex64::new(fixed, 0.0);
    let dist = (z - pstar).norm();
    if dist < th.eps_attract {
        return OrbitVerdict {
            class: OrbitClass::FatouAttracted,
            steps: 0,
            witness: dist,
            overflow: false,
        };
    }
    let disc = if p.a < -1.0 { fixed.abs() / 2.0 } else { 0.0 };
    let mut z = z;
    for n in 1..=th.max_steps {
        z = p.apply(z);
        z.im = z.im.rem_euclid(TAU);
        if !z.re.is_finite() || !z.im.is_finite() {
            return OrbitVerdict {
                class: OrbitClass::EscapingHeuristic,
                steps: n,
                witness: f64::INFINITY,
                overflow: true,
            };
        }
        if z.re > th.escape_radius {
            return OrbitVerdict {
                class: OrbitClass::EscapingHeuristic,
                steps: n,
                witness: z.re,
                overflow: false,
            };
        }
        let dist = (z - pstar).norm();
        if dist < th.eps_attract || z.re < 0.0 || dist < disc {
            return OrbitVerdict {
                class: OrbitClass::FatouAttracted,
                steps: n,
                witness: dist,
                overflow: false,
            };
        }
    }
    OrbitVerdict {
        class: OrbitClass::Unknown,
        steps: th.max_steps,
        witness: z.re,
        overflow: false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Viewport {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Viewport {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self, ComplexError> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if ok {
            Ok(Viewport {
                re_min,
                re_max,
                im_min,
                im_max,
            })
        } else {
            Err(ComplexError::Invalid("viewport"))
        }
    }

    /// Center of pixel `(i, j)`, row 0 at the top.
    pub fn pixel_center(&self, i: u32, j: u32, w: u32, h: u32) -> Complex64 {
        let re = self.re_min + (f64::from(i) + 0.5) / f64::from(w) * (self.re_max - self.re_min);
        let im = self.im_max - (f64::from(j) + 0.5) / f64::from(h) * (self.im_max - self.im_min);
        Complex64::new(re, im)
    }
}

impl Default for Viewport {
    fn default() -> Self {
        Viewport {
            re_min: -4.0,
            re_max: 4.0,
            im_min: -4.0,
            im_max: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RasterImage {
    pub width: u32,
    pub height: u32,
    pub parameter: ExpParameter,
    pub viewport: Viewport,
    pub thresholds: Thresholds,
    pub fixed_point: f64,
    /// Row-major, row 0 at the top.
    pub pixels: Vec<OrbitVerdict>,
}

/// Verdict colours before shading.
pub const PALETTE: [(OrbitClass, [u8; 3]); 3] = [
    (OrbitClass::FatouAttracted, [40, 90, 200]),
    (OrbitClass::EscapingHeuristic, [245, 160, 30]),
    (OrbitClass::Unknown, [0, 0, 0]),
];

pub const LEGEND: &str = "FATOU_ATTRACTED=#285ac8 ESCAPING_HEURISTIC=#f5a01e UNKNOWN=#000000; \
luminance = 1 - 0.75*min(steps,64)/64";

fn shade(v: &OrbitVerdict) -> [u8; 3] {
    let base = PALETTE
        .iter()
        .find(|(c, _)| *c == v.class)
        .map(|(_, rgb)| *rgb)
        .expect("every class has a colour");
    let l = 1.0 - 0.75 * f64::from(v.steps.min(64)) / 64.0;
    base.map(|c| (f64::from(c) * l).round() as u8)
}

impl RasterImage {
    pub fn tally(&self) -> [(OrbitClass, usize); 3] {
        PALETTE.map(|(c, _)| (c, self.pixels.iter().filter(|p| p.class == c).count()))
    }

    pub fn verdict(&self, i: u32, j: u32) -> &OrbitVerdict {
        &self.pixels[(j * self.width + i) as usize]
    }

    pub fn rgb(&self) -> Vec<u8> {
        self.pixels.iter().flat_map(shade).collect()
    }

    pub fn write_png<W: Write>(&self, out: W) -> Result<(), ComplexError> {
        let err = |e: png::EncodingError| ComplexError::Png(e.to_string());
        let mut enc = png::Encoder::new(out, self.width, self.height);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        enc.add_text_chunk("Legend".into(), LEGEND.into()).map_err(err)?;
        let params = format!(
            "a={} viewport={},{},{},{} size={}x{} max_steps={} escape_radius={} eps_attract={}",
            self.parameter.a,
            self.viewport.re_min,
            self.viewport.re_max,
            self.viewport.im_min,
            self.viewport.im_max,
            self.width,
            self.height,
            self.thresholds.max_steps,
            self.thresholds.escape_radius,
            self.thresholds.eps_attract
        );
        enc.add_text_chunk("Parameters".into(), params).map_err(err)?;
        let mut writer = enc.write_header().map_err(err)?;
        writer.write_image_data(&self.rgb()).map_err(err)?;
        writer.finish().map_err(err)
    }

    pub fn png_bytes(&self) -> Result<Vec<u8>, ComplexError> {
        let mut buf = Vec::new();
        self.write_png(&mut buf)?;
        Ok(buf)
    }
}

/// Classifies every pixel center.
pub fn render(
    p: ExpParameter,
    viewport: Viewport,
    width: u32,
    height: u32,
    th: &Thresholds,
) -> Result<RasterImage, ComplexError> {
    if width == 0 || height == 0 {
        return Err(ComplexError::Invalid("image size"));
    }
    if !(th.escape_radius > 0.0) || !(th.eps_attract > 0.0) {
        return Err(ComplexError::Invalid("thresholds"));
    }
    let fixed = find_fixed_point(p);
    let pixels = (0..width * height)
        .into_par_iter()
        .map(|n| classify_orbit(viewport.pixel_center(n % width, n / width, width, height), p, fixed, th))
        .collect();
    Ok(RasterImage {
        width,
        height,
        parameter: p,
        viewport,
        thresholds: *th,
        fixed_point: fixed,
        pixels,
    })
}
