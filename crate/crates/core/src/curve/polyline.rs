use std::f64::consts::SQRT_2;

use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use super::family::{next_family, seed_family, validate_family, BoxFamily, ValidationReport};
use super::jordan::{assemble_jordan, JordanCurve};
use super::{CurveError, EdgeSchedule, Rect};
use crate::address::ExternalAddress;
use crate::brush::{double_square, orbit_lower_bounds, ModelPoint, SubBrush};
use crate::rational::{rational_from_f64, rational_to_f64, serialize_rational};
use crate::tower::{inv_square_terms, TowerScalar};

/// Exact terms summed before switching to the `3/j²` tail.
const EXACT_TAIL_TERMS: u64 = 64;

fn serialize_approx<S: serde::Serializer>(r: &BigRational, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(rational_to_f64(r))
}

/// A corner of the curve at an exact parameter `t`. Deep boxes are far
/// thinner than an ulp of `[0, 1]`, so `t` is kept rational; it is written
/// out rounded.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Vertex {
    #[serde(serialize_with = "serialize_approx")]
    pub t: BigRational,
    pub x: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub y: BigRational,
}

impl Vertex {
    fn same_point(&self, other: &Vertex) -> bool {
        self.x == other.x && self.y == other.y
    }
}

/// A parametrised rectilinear curve `[0, 1] → ℝ × ℚ`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub level: u32,
    pub vertices: Vec<Vertex>,
    /// Upper bound on the distance from this curve to the limit curve.
    pub cauchy_bound: f64,
}

impl Polyline {
    /// `g_0`: the seed's right side traversed upward.
    pub fn seed_edge(seed: &Rect, offset: u32) -> Polyline {
        Polyline {
            level: 0,
            vertices: vec![
                Vertex {
                    t: BigRational::zero(),
                    x: seed.b,
                    y: seed.c.clone(),
                },
                Vertex {
                    t: BigRational::one(),
                    x: seed.b,
                    y: seed.d.clone(),
                },
            ],
            cauchy_bound: sqrt2_tail_bound(offset),
        }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Exact position at parameter `t`.
    pub fn position(&self, t: &BigRational) -> (BigRational, BigRational) {
        let v = &self.vertices;
        if v.len() == 1 {
            return (rational_from_f64(v[0].x), v[0].y.clone());
        }
        let i = v.partition_point(|p| p.t <= *t).clamp(1, v.len() - 1);
        let (p, q) = (&v[i - 1], &v[i]);
        let (px, qx) = (rational_from_f64(p.x), rational_from_f64(q.x));
        if q.t <= p.t {
            return (px, p.y.clone());
        }
        let mut s = (t - &p.t) / (&q.t - &p.t);
        s = s.max(BigRational::zero()).min(BigRational::one());
        (&px + &s * (&qx - &px), &p.y + &s * (&q.y - &p.y))
    }

    /// Upward vertical runs `(x, lo, hi)`.
    pub fn vertical_runs(&self) -> impl Iterator<Item = (f64, &BigRational, &BigRational)> + '_ {
        self.vertices.windows(2).filter_map(|w| {
            let (p, q) = (&w[0], &w[1]);
            if p.x == q.x {
                if p.y <= q.y {
                    Some((p.x, &p.y, &q.y))
                } else {
                    Some((p.x, &q.y, &p.y))
                }
            } else {
                None
            }
        })
    }

    /// Horizontal runs `(x_lo, x_hi, y)`.
    pub fn horizontal_runs(&self) -> impl Iterator<Item = (f64, f64, &BigRational)> + '_ {
        self.vertices.windows(2).filter_map(|w| {
            let (p, q) = (&w[0], &w[1]);
            (p.y == q.y && p.x != q.x).then(|| (p.x.min(q.x), p.x.max(q.x), &p.y))
        })
    }
}

/// `√2 Σ_{j > n} F^{-j²}(1)`, with the first 64 terms exact and the rest
/// bounded by `F^{-m}(1) < 3/m`.
pub fn sqrt2_tail_bound(n: u32) -> f64 {
    let top = u64::from(n) + EXACT_TAIL_TERMS;
    let terms = inv_square_terms(top);
    let exact: f64 = terms[n as usize..].iter().sum();
    SQRT_2 * (exact + 3.0 / top as f64)
}

/// `5 Σ_{j > n} 1/j² = 5 (π²/6 - Σ_{j <= n} 1/j²)`.
pub fn coarse_tail_bound(n: u32) -> f64 {
    let head: f64 = (1..=n).map(|j| 1.0 / f64::from(j).powi(2)).sum();
    5.0 * (std::f64::consts::PI.powi(2) / 6.0 - head)
}

fn param_at(p: &Vertex, q: &Vertex, y: &BigRational) -> BigRational {
    &p.t + (&q.t - &p.t) * ((y - &p.y) / (&q.y - &p.y))
}

/// Replaces each box's left edge on `g_prev` by the walk along its bottom,
/// right and top sides, parametrised proportionally to arclength.
pub fn refine_curve(g_prev: &Polyline, fam: &BoxFamily) -> Result<Polyline, CurveError> {
    let mut used = vec![false; fam.boxes.len()];
    let mut out: Vec<Vertex> = Vec::with_capacity(g_prev.len() + 4 * fam.boxes.len());
    let push = |out: &mut Vec<Vertex>, v: Vertex| {
        if out.last().is_none_or(|l: &Vertex| !l.same_point(&v)) {
            out.push(v);
        }
    };
    for (i, p) in g_prev.vertices.iter().enumerate() {
        push(&mut out, p.clone());
        let Some(q) = g_prev.vertices.get(i + 1) else {
            break;
        };
        if p.x != q.x || p.y >= q.y {
            continue;
        }
        let mut inside: Vec<usize> = (0..fam.boxes.len())
            .filter(|&j| {
                let bx = &fam.boxes[j];
                !used[j] && bx.a == p.x && p.y <= bx.c && bx.d <= q.y
            })
            .collect();
        inside.sort_by(|&x, &y| fam.boxes[x].c.cmp(&fam.boxes[y].c));
        for j in inside {
            used[j] = true;
            let bx = &fam.boxes[j];
            let (tc, td) = (param_at(p, q, &bx.c), param_at(p, q, &bx.d));
            let w = rational_from_f64(bx.b) - rational_from_f64(bx.a);
            let len = &bx.d - &bx.c;
            let perimeter = &w * BigRational::from_integer(2.into()) + &len;
            let at = |s: BigRational| &tc + (&td - &tc) * s;
            let t1 = at(&w / &perimeter);
            let t2 = at((&w + &len) / &perimeter);
            push(
                &mut out,
                Vertex {
                    t: tc.clone(),
                    x: bx.a,
                    y: bx.c.clone(),
                },
            );
            push(
                &mut out,
                Vertex {
                    t: t1,
                    x: bx.b,
                    y: bx.c.clone(),
                },
            );
            push(
                &mut out,
                Vertex {
                    t: t2,
                    x: bx.b,
                    y: bx.d.clone(),
                },
            );
            push(
                &mut out,
                Vertex {
                    t: td.clone(),
                    x: bx.a,
                    y: bx.d.clone(),
                },
            );
        }
    }
    if let Some(j) = used.iter().position(|u| !u) {
        let bx = &fam.boxes[j];
        return Err(CurveError::LeftEdgeNotOnCurve {
            level: fam.level,
            c: crate::rational::format_rational(&bx.c),
            d: crate::rational::format_rational(&bx.d),
        });
    }
    Ok(Polyline {
        level: fam.level,
        vertices: out,
        cauchy_bound: sqrt2_tail_bound(fam.offset + fam.level),
    })
}

/// `max_t |g(t) - h(t)|`, attained at a breakpoint of one of the curves.
pub fn max_deviation(g: &Polyline, h: &Polyline) -> f64 {
    let mut ts: Vec<&BigRational> = g.vertices.iter().chain(&h.vertices).map(|v| &v.t).collect();
    ts.sort();
    ts.dedup();
    ts.par_iter()
        .map(|t| {
            let (a, b) = (g.position(t), h.position(t));
            rational_to_f64(&(&a.0 - &b.0)).hypot(rational_to_f64(&(&a.1 - &b.1)))
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelDeviation {
    pub level: u32,
    /// `l + k`.
    pub shifted: u32,
    pub max_deviation: f64,
    /// `√2 F^{-(l+k)²}(1)`.
    pub sqrt2_bound: f64,
    /// `5/(l+k)²`.
    pub coarse_bound: f64,
    pub within_sqrt2: bool,
    pub within_coarse: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CauchyCertificate {
    pub offset: u32,
    pub levels: Vec<LevelDeviation>,
    /// `√2 Σ_{j > l+k} F^{-j²}(1)` for the last level built.
    pub tail_bound: f64,
    /// `5 Σ_{j > l+k} 1/j²` for the last level built.
    pub coarse_tail_bound: f64,
}

impl CauchyCertificate {
    pub fn passed(&self) -> bool {
        self.levels.iter().all(|l| l.within_sqrt2 && l.within_coarse)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurveBuild {
    pub seed: Rect,
    pub offset: u32,
    pub kmax: u32,
    /// Last level with a nonempty family.
    pub level_reached: u32,
    pub terminated_early: bool,
    pub schedule: EdgeSchedule,
    pub families: Vec<BoxFamily>,
    /// `g_0, …, g_{level_reached}`.
    pub curves: Vec<Polyline>,
    pub cauchy: CauchyCertificate,
    pub validation: ValidationReport,
}

impl CurveBuild {
    pub fn arc(&self) -> &Polyline {
        self.curves.last().expect("g_0 is always present")
    }

    pub fn jordan(&self) -> Result<JordanCurve, CurveError> {
        assemble_jordan(self.arc(), &self.seed)
    }
}

/// Runs the box construction for `k = 1..=kmax` and refines `g_0` level by level.
pub fn build_curve(sb: &SubBrush, kmax: u32, offset: u32, seed: &Rect) -> Result<CurveBuild, CurveError> {
    let schedule = EdgeSchedule::new(seed.b, offset, kmax);
    let mut families = vec![seed_family(seed, sb, offset)?];
    let mut terminated_early = false;
    for k in 1..=kmax {
        let fam = next_family(families.last().expect("nonempty"), sb, k, &schedule)?;
        if fam.boxes.is_empty() {
            terminated_early = true;
            break;
        }
        families.push(fam);
    }
    let mut build = curve_from_families(families, sb)?;
    build.kmax = kmax;
    build.terminated_early = terminated_early;
    Ok(build)
}

/// Refines `g_0` along given families, whose first entry holds the seed alone.
/// The families are validated but not required to pass.
pub fn curve_from_families(families: Vec<BoxFamily>, sb: &SubBrush) -> Result<CurveBuild, CurveError> {
    let first = families
        .first()
        .and_then(|f| f.boxes.first())
        .ok_or(CurveError::DegenerateSeed)?;
    let seed = Rect::new(first.a, first.b, first.c.clone(), first.d.clone())?;
    let offset = families[0].offset;
    let level_reached = families.len() as u32 - 1;
    let schedule = EdgeSchedule::new(seed.b, offset, level_reached);
    let mut curves = vec![Polyline::seed_edge(&seed, offset)];
    let mut levels = Vec::new();
    for (i, fam) in families[1..].iter().enumerate() {
        let k = i as u32 + 1;
        let prev = curves.last().expect("nonempty");
        let g = refine_curve(prev, fam)?;
        let j = schedule.shifted(k);
        let dev = max_deviation(prev, &g);
        let sqrt2_bound = SQRT_2 * schedule.width(k);
        let coarse_bound = 5.0 / f64::from(j).powi(2);
        levels.push(LevelDeviation {
            level: k,
            shifted: j,
            max_deviation: dev,
            sqrt2_bound,
            coarse_bound,
            within_sqrt2: dev <= sqrt2_bound,
            within_coarse: dev < coarse_bound,
        });
        curves.push(g);
    }
    let validation = validate_family(&families, sb)?;
    let last = offset + level_reached;
    Ok(CurveBuild {
        seed,
        offset,
        kmax: level_reached,
        level_reached,
        terminated_early: false,
        schedule,
        families,
        curves,
        cauchy: CauchyCertificate {
            offset,
            levels,
            tail_bound: sqrt2_tail_bound(last),
            coarse_tail_bound: coarse_tail_bound(last),
        },
        validation,
    })
}

/// One level of the witness argument for a contact `w` on the final curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WitnessCheck {
    pub level: u32,
    /// `j = l + k`.
    pub shifted: u32,
    pub witness: Option<String>,
    /// Potential of `z`, the right-edge point with the witness's address.
    pub z_t: f64,
    /// Lower bound on `T(F^{2j²}(z))`.
    pub bound: Option<TowerScalar>,
    /// Upper bound on `F^{j²}(1)`.
    pub required: TowerScalar,
    pub orbit_pass: bool,
    /// `w` and `z` share their first `2j²` entries.
    pub prefix_agrees: bool,
    /// `T(z) <= T(w)`.
    pub left_of_contact: bool,
    /// The same inequality read off `w`'s own orbit.
    pub direct_pass: bool,
    pub pass: bool,
}

/// A sub-brush point on the final curve and its witness checks.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContactCheck {
    pub address: String,
    pub x: f64,
    pub checks: Vec<WitnessCheck>,
    pub pass: bool,
}

fn orbit_bound(t: f64, s: &ExternalAddress, n: usize) -> Option<TowerScalar> {
    let p = ModelPoint::new(t, s.clone()).ok()?;
    orbit_lower_bounds(&p, n).ok().and_then(|o| o.last().copied())
}

/// Checks, for every sub-brush point `w` on the final curve and every level
/// `k`, that a witness hair `y` in the level-`k` box around `w` gives a
/// point `z` on the box's right edge with `T(F^{2j²}(z)) >= F^{j²}(1)`,
/// `z` agreeing with `w` to `2j²` entries and lying left of `w`.
pub fn escape_soundness(build: &CurveBuild, sb: &SubBrush) -> Result<Vec<ContactCheck>, CurveError> {
    let arc = build.arc();
    for (_, hi, y) in arc.horizontal_runs() {
        sb.hairs_on_horizontal(hi, y)?;
    }
    let mut contacts: Vec<(usize, f64)> = Vec::new();
    for (x, lo, hi) in arc.vertical_runs() {
        for i in sb.hairs_on_vertical(x, lo, hi)? {
            if !contacts.contains(&(i, x)) {
                contacts.push((i, x));
            }
        }
    }
    let mut out = Vec::with_capacity(contacts.len());
    for (i, x) in contacts {
        let sw = sb.address(i);
        let mut checks = Vec::new();
        for k in 1..=build.level_reached {
            let j = build.schedule.shifted(k);
            let n = double_square(j);
            let required = TowerScalar::f_iter_of_one_upper(j * j);
            let mut bx = None;
            for b in &build.families[k as usize].boxes {
                if sw.height_in(&b.c, &b.d)? {
                    bx = Some(b);
                    break;
                }
            }
            let direct = orbit_bound(x, sw, n);
            let direct_pass = direct.is_some_and(|d| d >= required);
            let Some(bx) = bx else {
                checks.push(WitnessCheck {
                    level: k,
                    shifted: j,
                    witness: None,
                    z_t: f64::NAN,
                    bound: None,
                    required,
                    orbit_pass: false,
                    prefix_agrees: false,
                    left_of_contact: false,
                    direct_pass,
                    pass: false,
                });
                continue;
            };
            let witness = if sb.tip(i) <= bx.a {
                Some(i)
            } else {
                sb.hairs_on_vertical(bx.a, &bx.c, &bx.d)?.first().copied()
            };
            let Some(y) = witness else {
                checks.push(WitnessCheck {
                    level: k,
                    shifted: j,
                    witness: None,
                    z_t: bx.b,
                    bound: None,
                    required,
                    orbit_pass: false,
                    prefix_agrees: false,
                    left_of_contact: bx.b <= x,
                    direct_pass,
                    pass: false,
                });
                continue;
            };
            let sy = sb.address(y);
            let bound = orbit_bound(bx.b, sy, n);
            let orbit_pass = bound.is_some_and(|b| b >= required);
            let prefix_agrees = sy.truncate(n) == sw.truncate(n);
            let left_of_contact = bx.b <= x;
            checks.push(WitnessCheck {
                level: k,
                shifted: j,
                witness: Some(sy.to_string()),
                z_t: bx.b,
                bound,
                required,
                orbit_pass,
                prefix_agrees,
                left_of_contact,
                direct_pass,
                pass: orbit_pass && prefix_agrees && left_of_contact,
            });
        }
        let pass = checks.iter().all(|c| c.pass);
        out.push(ContactCheck {
            address: sw.to_string(),
            x,
            checks,
            pass,
        });
    }
    Ok(out)
}

/// Smallest offset `l` whose limit-curve displacement bound is below `eps / 2`.
pub fn offset_for_radius(eps: f64) -> u32 {
    (0..)
        .find(|&l| sqrt2_tail_bound(l) < eps / 2.0)
        .expect("tail bound tends to zero")
}

/// A square seed of half-side at most `0.99 eps / (2√2)` centred at `(cx, cy)`,
/// halved until its left, top and bottom sides miss the sub-brush.
pub fn localized_seed(cx: f64, cy: f64, eps: f64, sb: &SubBrush, offset: u32) -> Result<Rect, CurveError> {
    let mut r = 0.99 * eps / (2.0 * SQRT_2);
    for _ in 0..64 {
        let rect = Rect::new(cx - r, cx + r, rational_from_f64(cy - r), rational_from_f64(cy + r))?;
        match seed_family(&rect, sb, offset) {
            Ok(_) => return Ok(rect),
            Err(CurveError::SeedMeetsBrush { .. }) => r /= 2.0,
            Err(e) => return Err(e),
        }
    }
    Err(CurveError::NoLocalSeed(eps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalizedBuild {
    pub center: (f64, f64),
    pub eps: f64,
    pub build: CurveBuild,
    pub jordan: JordanCurve,
    /// Largest distance from the center to a vertex of the closed curve.
    pub max_distance: f64,
    pub winding: i32,
}

impl LocalizedBuild {
    pub fn inside_ball(&self) -> bool {
        self.max_distance < self.eps
    }

    pub fn encloses_center(&self) -> bool {
        self.winding.abs() == 1
    }
}

/// A closed curve within `eps` of `(cx, cy)` that winds once around it.
pub fn build_localized(cx: f64, cy: f64, eps: f64, sb: &SubBrush, kmax: u32) -> Result<LocalizedBuild, CurveError> {
    let offset = offset_for_radius(eps);
    let seed = localized_seed(cx, cy, eps, sb, offset)?;
    let build = build_curve(sb, kmax, offset, &seed)?;
    let jordan = build.jordan()?;
    let max_distance = jordan
        .ring
        .iter()
        .map(|p| (p.x - cx).hypot(rational_to_f64(&p.y) - cy))
        .fold(0.0, f64::max);
    let winding = jordan.winding_number(cx, &rational_from_f64(cy));
    Ok(LocalizedBuild {
        center: (cx, cy),
        eps,
        build,
        jordan,
        max_distance,
        winding,
    })
}
