//! Box families, detour curves and the Jordan curve built from them.
//!
//! Starting from a seed rectangle, each level `k` places boxes of width
//! `F^{-(l+k)²}(1)` on the right edges of the previous level wherever a hair
//! of the sub-brush crosses. The curve `g_k` is `g_{k-1}` with every such left
//! edge replaced by the walk along the other three sides of its box.
//!
//! Vertical coordinates are exact rationals throughout. Horizontal edge
//! positions come from one shared [`EdgeSchedule`] and are compared by bit
//! identity.

mod family;
mod jordan;
mod path;
mod polyline;

pub use family::{next_family, seed_family, validate_family, BoxFamily, BrushBox, ConditionReport, ValidationReport};
pub use jordan::{assemble_jordan, find_self_intersection, winding_number, JordanCurve, RingPoint};
pub use path::{path_between, PathCase, PathPoint, PathY, Route, RouteContact};
pub use polyline::{
    build_curve, build_localized, coarse_tail_bound, curve_from_families, escape_soundness, localized_seed,
    max_deviation, offset_for_radius, refine_curve, sqrt2_tail_bound, CauchyCertificate, ContactCheck, CurveBuild,
    LevelDeviation, LocalizedBuild, Polyline, Vertex, WitnessCheck,
};

use num_rational::BigRational;
use serde::Serialize;
use thiserror::Error;

use crate::address::AddressError;
use crate::brush::BrushError;
use crate::rational::{rational_from_f64, serialize_rational};
use crate::tower::inv_square_terms;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("seed rectangle is degenerate (need a < b and c < d)")]
    DegenerateSeed,
    #[error("seed {edge} edge meets the hair of address {address}")]
    SeedMeetsBrush { edge: &'static str, address: String },
    #[error(
        "level {level} box with left edge at [{c}, {d}] does not sit on an upward vertical run of the previous curve"
    )]
    LeftEdgeNotOnCurve { level: u32, c: String, d: String },
    #[error("arc must run from the lower right corner to the upper right corner of the seed")]
    ArcEndpoints,
    #[error("segments {0} and {1} of the closed curve intersect")]
    SelfIntersection(usize, usize),
    #[error("segment {0} is neither horizontal nor vertical")]
    NonRectilinear(usize),
    #[error("no route found: {0}")]
    NoRoute(String),
    #[error("no admissible seed box of radius <= {0} around the point")]
    NoLocalSeed(f64),
    #[error(transparent)]
    Address(#[from] AddressError),
    #[error(transparent)]
    Brush(#[from] BrushError),
}

/// `[a, b] × [c, d]` with rational vertical sides.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rect {
    pub a: f64,
    pub b: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub c: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub d: BigRational,
}

impl Rect {
    pub fn new(a: f64, b: f64, c: BigRational, d: BigRational) -> Result<Self, CurveError> {
        if !(a < b) || c >= d || !a.is_finite() || !b.is_finite() {
            return Err(CurveError::DegenerateSeed);
        }
        Ok(Rect { a, b, c, d })
    }

    /// `[-1, 1]²`.
    pub fn unit() -> Self {
        let one = BigRational::from_integer(1.into());
        Rect {
            a: -1.0,
            b: 1.0,
            c: -one.clone(),
            d: one,
        }
    }

    pub fn center(&self) -> (f64, BigRational) {
        (
            0.5 * (self.a + self.b),
            (&self.c + &self.d) / BigRational::from_integer(2.into()),
        )
    }
}

/// Box widths `F^{-(l+k)²}(1)` and right edges `b_k = b_0 + Σ_{i<=k} width_i`,
/// computed once so every consumer sees identical doubles.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeSchedule {
    pub offset: u32,
    widths: Vec<f64>,
    edges: Vec<f64>,
}

impl EdgeSchedule {
    pub fn new(seed_right: f64, offset: u32, kmax: u32) -> Self {
        let all = inv_square_terms(u64::from(offset + kmax));
        let widths: Vec<f64> = all[offset as usize..].to_vec();
        let mut edges = Vec::with_capacity(widths.len() + 1);
        edges.push(seed_right);
        for w in &widths {
            let last = *edges.last().expect("nonempty");
            edges.push(last + w);
        }
        EdgeSchedule { offset, widths, edges }
    }

    pub fn kmax(&self) -> u32 {
        self.widths.len() as u32
    }

    /// Width of level-`k` boxes, `k >= 1`.
    pub fn width(&self, k: u32) -> f64 {
        self.widths[(k - 1) as usize]
    }

    pub fn width_exact(&self, k: u32) -> BigRational {
        rational_from_f64(self.width(k))
    }

    /// Right edge of level `k`; `edge(0)` is the seed's right side.
    pub fn edge(&self, k: u32) -> f64 {
        self.edges[k as usize]
    }

    /// `l + k`, the index used in widths and certificate exponents.
    pub fn shifted(&self, k: u32) -> u32 {
        self.offset + k
    }

    /// `2(l+k)²`, the prefix length shared inside a level-`k` box.
    pub fn cylinder_depth(&self, k: u32) -> usize {
        let j = self.shifted(k) as usize;
        2 * j * j
    }
}
