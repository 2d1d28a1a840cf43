use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Serialize, Serializer};

use super::polyline::build_curve;
use super::{CurveError, Rect};
use crate::address::ExternalAddress;
use crate::brush::{certify_escape, ModelPoint, SubBrush, MIN_CERT_K};
use crate::rational::format_rational;

/// Vertical coordinate of a path point: a rational (never on a hair) or the
/// height of a hair given by its address.
#[derive(Clone, Debug, PartialEq)]
pub enum PathY {
    Exact(BigRational),
    Hair(ExternalAddress),
}

impl Serialize for PathY {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            PathY::Exact(r) => s.serialize_str(&format_rational(r)),
            PathY::Hair(a) => s.serialize_str(&format!("h({a})")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathPoint {
    pub x: f64,
    pub y: PathY,
}

impl PathPoint {
    pub fn exact(x: f64, y: BigRational) -> Self {
        PathPoint { x, y: PathY::Exact(y) }
    }

    pub fn on_hair(t: f64, s: ExternalAddress) -> Self {
        PathPoint {
            x: t,
            y: PathY::Hair(s),
        }
    }

    /// Height for plotting.
    pub fn approx_y(&self) -> f64 {
        match &self.y {
            PathY::Exact(r) => crate::rational::rational_to_f64(r),
            PathY::Hair(s) => s.approx_height(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathCase {
    Trivial,
    ComplementComplement,
    ComplementEscaping,
    EscapingEscaping,
}

/// A sub-brush point on the route with its escape certificate outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RouteContact {
    pub address: String,
    pub t: f64,
    pub certified: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Route {
    pub case: PathCase,
    pub points: Vec<PathPoint>,
    pub contacts: Vec<RouteContact>,
}

impl Route {
    pub fn all_certified(&self) -> bool {
        self.contacts.iter().all(|c| c.certified)
    }
}

fn certified(t: f64, s: &ExternalAddress) -> bool {
    ModelPoint::new(t, s.clone())
        .ok()
        .and_then(|p| certify_escape(&p, MIN_CERT_K).ok())
        .is_some_and(|c| c.passed())
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Rectilinear route between two rational-height points. Horizontal legs sit
/// at rational heights and so miss every hair; vertical legs are used only
/// where no hair crosses, falling back to a column left of every tip.
fn complement_route(
    x0: f64,
    y0: &BigRational,
    x1: f64,
    y1: &BigRational,
    sb: &SubBrush,
) -> Result<Vec<PathPoint>, CurveError> {
    let (lo, hi) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
    let clear = |x: f64| -> Result<bool, CurveError> { Ok(sb.hairs_on_vertical(x, lo, hi)?.is_empty()) };
    let p0 = PathPoint::exact(x0, y0.clone());
    let p1 = PathPoint::exact(x1, y1.clone());
    if y0 == y1 {
        return Ok(vec![p0, p1]);
    }
    if x0 == x1 && clear(x0)? {
        return Ok(vec![p0, p1]);
    }
    if clear(x1)? {
        return Ok(vec![p0, PathPoint::exact(x1, y0.clone()), p1]);
    }
    if clear(x0)? {
        return Ok(vec![p0, PathPoint::exact(x0, y1.clone()), p1]);
    }
    let min_tip = sb.hairs().map(|(_, t)| t).fold(0.0, f64::min);
    let xl = x0.min(x1).min(min_tip) - 1.0;
    Ok(vec![
        p0,
        PathPoint::exact(xl, y0.clone()),
        PathPoint::exact(xl, y1.clone()),
        p1,
    ])
}

/// Route from a rational point to the certified hair point `(t1, s1)`:
/// around the outside to the lower right corner of a seed square
/// `[-n, n]²` whose right side the hair crosses, up the constructed arc to
/// its crossing with the hair, then along the hair.
fn to_hair(
    x0: f64,
    y0: &BigRational,
    t1: f64,
    s1: &ExternalAddress,
    sb: &SubBrush,
    kmax: u32,
) -> Result<(Vec<PathPoint>, Vec<RouteContact>), CurveError> {
    let idx = (0..sb.len())
        .find(|&i| sb.address(i) == s1)
        .ok_or_else(|| CurveError::NoRoute(format!("address {s1} is not in the sub-brush")))?;
    let s0 = s1.entry(0).unsigned_abs() as f64;
    let n = (s0 + 2.0).max(sb.tip(idx).ceil() + 1.0).to_i64().unwrap_or(i64::MAX);
    let seed = Rect::new(-(n as f64), n as f64, rat(-n), rat(n))?;
    let build = build_curve(sb, kmax, 0, &seed)?;
    let arc = build.arc();

    let mut points = complement_route(x0, y0, seed.b, &seed.c, sb)?;
    let mut contacts = Vec::new();
    let mut reached = None;
    for w in arc.vertices.windows(2) {
        let (p, q) = (&w[0], &w[1]);
        if p.x == q.x && p.y < q.y {
            for i in sb.hairs_on_vertical(p.x, &p.y, &q.y)? {
                let s = sb.address(i);
                contacts.push(RouteContact {
                    address: s.to_string(),
                    t: p.x,
                    certified: certified(p.x, s),
                });
            }
            if s1.height_in(&p.y, &q.y)? && sb.tip(idx) <= p.x {
                reached = Some(p.x);
                break;
            }
        }
        points.push(PathPoint::exact(q.x, q.y.clone()));
    }
    let Some(xz) = reached else {
        return Err(CurveError::NoRoute(format!(
            "the curve around [-{n}, {n}]² does not meet the hair of {s1}"
        )));
    };
    points.push(PathPoint::on_hair(xz, s1.clone()));
    let t_min = xz.min(t1);
    contacts.push(RouteContact {
        address: s1.to_string(),
        t: t_min,
        certified: certified(t_min, s1),
    });
    if t1 != xz {
        points.push(PathPoint::on_hair(t1, s1.clone()));
    }
    Ok((points, contacts))
}

fn require_certified(t: f64, s: &ExternalAddress) -> Result<(), CurveError> {
    if certified(t, s) {
        Ok(())
    } else {
        Err(CurveError::NoRoute(format!("({t}, {s}) is not certified escaping")))
    }
}

/// A path from `x0` to `x1` meeting the sub-brush only in certified escaping
/// points. Rational-height points lie off every hair; hair points must pass
/// the escape certificate.
pub fn path_between(x0: &PathPoint, x1: &PathPoint, sb: &SubBrush, kmax: u32) -> Result<Route, CurveError> {
    if x0 == x1 {
        let contacts = match &x0.y {
            PathY::Hair(s) => vec![RouteContact {
                address: s.to_string(),
                t: x0.x,
                certified: certified(x0.x, s),
            }],
            PathY::Exact(_) => Vec::new(),
        };
        return Ok(Route {
            case: PathCase::Trivial,
            points: vec![x0.clone()],
            contacts,
        });
    }
    match (&x0.y, &x1.y) {
        (PathY::Exact(y0), PathY::Exact(y1)) => Ok(Route {
            case: PathCase::ComplementComplement,
            points: complement_route(x0.x, y0, x1.x, y1, sb)?,
            contacts: Vec::new(),
        }),
        (PathY::Exact(y0), PathY::Hair(s1)) => {
            require_certified(x1.x, s1)?;
            let (points, contacts) = to_hair(x0.x, y0, x1.x, s1, sb, kmax)?;
            Ok(Route {
                case: PathCase::ComplementEscaping,
                points,
                contacts,
            })
        }
        (PathY::Hair(_), PathY::Exact(_)) => {
            let mut r = path_between(x1, x0, sb, kmax)?;
            r.points.reverse();
            Ok(r)
        }
        (PathY::Hair(s0), PathY::Hair(s1)) => {
            require_certified(x0.x, s0)?;
            require_certified(x1.x, s1)?;
            let min_tip = sb.hairs().map(|(_, t)| t).fold(0.0, f64::min);
            let waypoint = PathPoint::exact(min_tip - 1.0, rat(0));
            let PathY::Exact(wy) = &waypoint.y else { unreachable!() };
            let (mut first, mut contacts) = to_hair(waypoint.x, wy, x0.x, s0, sb, kmax)?;
            first.reverse();
            let (second, more) = to_hair(waypoint.x, wy, x1.x, s1, sb, kmax)?;
            first.extend(second.into_iter().skip(1));
            contacts.extend(more);
            Ok(Route {
                case: PathCase::EscapingEscaping,
                points: first,
                contacts,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn sb(addrs: &[&str]) -> SubBrush {
        SubBrush::new(addrs.iter().map(|s| s.parse().unwrap()).collect(), 64).unwrap()
    }

    #[test]
    fn same_point() {
        let b = sb(&["0"]);
        let p = PathPoint::exact(3.0, r(1, 3));
        let route = path_between(&p, &p, &b, 3).unwrap();
        assert_eq!(route.case, PathCase::Trivial);
        assert_eq!(route.points.len(), 1);
    }

    #[test]
    fn straight_in_one_gap() {
        // both points at x = 5 between the hairs of 0̄ (≈ 0.707) and 1̄ (> 1)
        let b = sb(&["0", "1"]);
        let p = PathPoint::exact(5.0, r(3, 4));
        let q = PathPoint::exact(5.0, r(9, 10));
        let route = path_between(&p, &q, &b, 3).unwrap();
        assert_eq!(route.case, PathCase::ComplementComplement);
        assert_eq!(route.points, vec![p, q]);
    }

    #[test]
    fn detour_left_of_tips() {
        let b = sb(&["0"]);
        let p = PathPoint::exact(5.0, r(0, 1));
        let q = PathPoint::exact(6.0, r(1, 1));
        let route = path_between(&p, &q, &b, 3).unwrap();
        assert_eq!(route.points.len(), 4);
        assert!(route.points[1].x < 0.0);
    }

    #[test]
    fn to_zero_hair() {
        let b = sb(&["0", "0,0,1", "1"]);
        let p = PathPoint::exact(-5.0, r(7, 1));
        let q = PathPoint::on_hair(1.0, ExternalAddress::zero());
        let route = path_between(&p, &q, &b, 3).unwrap();
        assert_eq!(route.case, PathCase::ComplementEscaping);
        assert_eq!(route.points.last(), Some(&q));
        assert!(!route.contacts.is_empty());
        assert!(route.all_certified(), "{:?}", route.contacts);
        let back = path_between(&q, &p, &b, 3).unwrap();
        assert_eq!(back.points.first(), Some(&q));
    }

    #[test]
    fn between_two_hairs() {
        let b = sb(&["0", "1"]);
        let p = PathPoint::on_hair(1.0, ExternalAddress::zero());
        let q = PathPoint::on_hair(4.0, "1".parse().unwrap());
        let route = path_between(&p, &q, &b, 2).unwrap();
        assert_eq!(route.case, PathCase::EscapingEscaping);
        assert_eq!(route.points.first(), Some(&p));
        assert_eq!(route.points.last(), Some(&q));
        assert!(route.all_certified());
    }

    #[test]
    fn uncertified_endpoint_rejected() {
        let b = sb(&["0"]);
        let p = PathPoint::exact(-1.0, r(0, 1));
        let q = PathPoint::on_hair(1e-6, ExternalAddress::zero());
        assert!(matches!(path_between(&p, &q, &b, 3), Err(CurveError::NoRoute(_))));
    }
}
