use num_rational::BigRational;
use serde::Serialize;

use super::polyline::Polyline;
use super::{CurveError, Rect};
use crate::rational::serialize_rational;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RingPoint {
    pub x: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub y: BigRational,
}

/// The seed's left, top and bottom sides closed up by the arc.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JordanCurve {
    pub seed: Rect,
    pub arc: Polyline,
    /// Arc vertices followed by `(a, d)` and `(a, c)`; the last point joins the first.
    pub ring: Vec<RingPoint>,
}

impl JordanCurve {
    pub fn winding_number(&self, px: f64, py: &BigRational) -> i32 {
        winding_number(&self.ring, px, py)
    }
}

pub fn assemble_jordan(arc: &Polyline, seed: &Rect) -> Result<JordanCurve, CurveError> {
    let (Some(first), Some(last)) = (arc.vertices.first(), arc.vertices.last()) else {
        return Err(CurveError::ArcEndpoints);
    };
    if first.x != seed.b || first.y != seed.c || last.x != seed.b || last.y != seed.d {
        return Err(CurveError::ArcEndpoints);
    }
    let mut ring: Vec<RingPoint> = arc
        .vertices
        .iter()
        .map(|v| RingPoint { x: v.x, y: v.y.clone() })
        .collect();
    ring.push(RingPoint {
        x: seed.a,
        y: seed.d.clone(),
    });
    ring.push(RingPoint {
        x: seed.a,
        y: seed.c.clone(),
    });
    if let Some(i) = first_oblique(&ring) {
        return Err(CurveError::NonRectilinear(i));
    }
    if let Some((i, j)) = find_self_intersection(&ring) {
        return Err(CurveError::SelfIntersection(i, j));
    }
    Ok(JordanCurve {
        seed: seed.clone(),
        arc: arc.clone(),
        ring,
    })
}

fn first_oblique(ring: &[RingPoint]) -> Option<usize> {
    let n = ring.len();
    (0..n).find(|&i| {
        let (p, q) = (&ring[i], &ring[(i + 1) % n]);
        p.x != q.x && p.y != q.y
    })
}

struct Seg<'a> {
    x0: f64,
    x1: f64,
    y0: &'a BigRational,
    y1: &'a BigRational,
}

fn seg(ring: &[RingPoint], i: usize) -> Seg<'_> {
    let (p, q) = (&ring[i], &ring[(i + 1) % ring.len()]);
    let (y0, y1) = if p.y <= q.y { (&p.y, &q.y) } else { (&q.y, &p.y) };
    Seg {
        x0: p.x.min(q.x),
        x1: p.x.max(q.x),
        y0,
        y1,
    }
}

/// First pair of segments of the closed rectilinear ring that meet, other
/// than neighbours meeting at their shared vertex. Segments are swept in
/// order of their left ends.
pub fn find_self_intersection(ring: &[RingPoint]) -> Option<(usize, usize)> {
    let n = ring.len();
    if n < 3 {
        return None;
    }
    let segs: Vec<Seg> = (0..n).map(|i| seg(ring, i)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| segs[a].x0.total_cmp(&segs[b].x0));
    let mut active: Vec<usize> = Vec::new();
    let mut found: Option<(usize, usize)> = None;
    for &i in &order {
        let s = &segs[i];
        active.retain(|&j| segs[j].x1 >= s.x0);
        for &j in &active {
            let t = &segs[j];
            let (xl, xh) = (s.x0.max(t.x0), s.x1.min(t.x1));
            let (yl, yh) = (s.y0.max(t.y0), s.y1.min(t.y1));
            if xl > xh || yl > yh {
                continue;
            }
            let neighbours = (i + 1) % n == j || (j + 1) % n == i;
            if neighbours && xl == xh && yl == yh {
                continue;
            }
            let pair = (i.min(j), i.max(j));
            if found.is_none_or(|f| pair < f) {
                found = Some(pair);
            }
        }
        active.push(i);
    }
    found
}

/// Winding number of the closed ring around `(px, py)`, counting crossings of
/// the rightward ray with vertical edges (half-open in `y`).
pub fn winding_number(ring: &[RingPoint], px: f64, py: &BigRational) -> i32 {
    let n = ring.len();
    let mut w = 0;
    for i in 0..n {
        let (p, q) = (&ring[i], &ring[(i + 1) % n]);
        if p.x != q.x || p.x <= px {
            continue;
        }
        if p.y <= *py && *py < q.y {
            w += 1;
        } else if q.y <= *py && *py < p.y {
            w -= 1;
        }
    }
    w
}
