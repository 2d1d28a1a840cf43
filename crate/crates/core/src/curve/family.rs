use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::Serialize;

use super::{CurveError, EdgeSchedule, Rect};
use crate::address::{cylinder_interval, embed_point, prefix_of_point, Cylinder, ExternalAddress};
use crate::brush::SubBrush;
use crate::rational::{format_rational, half, serialize_rational};
use crate::tower::f_inv_iter;

/// `[a, b] × [c, d]` at a given level.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BrushBox {
    pub a: f64,
    pub b: f64,
    #[serde(serialize_with = "serialize_rational")]
    pub c: BigRational,
    #[serde(serialize_with = "serialize_rational")]
    pub d: BigRational,
    pub level: u32,
}

impl BrushBox {
    fn label(&self) -> String {
        format!(
            "[{}, {}]x[{}, {}]",
            self.a,
            self.b,
            format_rational(&self.c),
            format_rational(&self.d)
        )
    }

    fn intersects(&self, other: &BrushBox) -> bool {
        self.a <= other.b && other.a <= self.b && self.c <= other.d && other.c <= self.d
    }
}

/// The boxes of one level. Level 0 holds only the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxFamily {
    pub level: u32,
    pub offset: u32,
    pub boxes: Vec<BrushBox>,
    /// Shared right edge of the previous level (the seed's left side for level 0).
    pub parent_right_edge: f64,
    /// Shared right edge of this level.
    pub right_edge: f64,
}

/// Level-0 family `{seed}`; the seed's left, top and bottom sides must miss every hair.
pub fn seed_family(seed: &Rect, sb: &SubBrush, offset: u32) -> Result<BoxFamily, CurveError> {
    let seed = Rect::new(seed.a, seed.b, seed.c.clone(), seed.d.clone())?;
    if let Some(&i) = sb.hairs_on_vertical(seed.a, &seed.c, &seed.d)?.first() {
        return Err(CurveError::SeedMeetsBrush {
            edge: "left",
            address: sb.address(i).to_string(),
        });
    }
    for (edge, y) in [("bottom", &seed.c), ("top", &seed.d)] {
        for (s, t) in sb.hairs() {
            if t <= seed.b && s.height_cmp(y).is_err() {
                return Err(CurveError::SeedMeetsBrush {
                    edge,
                    address: s.to_string(),
                });
            }
        }
    }
    Ok(BoxFamily {
        level: 0,
        offset,
        boxes: vec![BrushBox {
            a: seed.a,
            b: seed.b,
            c: seed.c,
            d: seed.d,
            level: 0,
        }],
        parent_right_edge: seed.a,
        right_edge: seed.b,
    })
}

/// Rational bound on `h(s)` strictly between `h(s)` and `p`, from a cylinder
/// fine enough to exclude `p`.
fn separating_bound(
    s: &ExternalAddress,
    p: &BigRational,
    below: bool,
    start: usize,
) -> Result<BigRational, CurveError> {
    let mut depth = start.max(1);
    loop {
        let iv = embed_point(s, depth);
        if below && iv.hi < *p {
            return Ok(iv.hi);
        }
        if !below && iv.lo > *p {
            return Ok(iv.lo);
        }
        if depth > crate::address::MAX_HEIGHT_DIGITS {
            return Err(crate::address::AddressError::Undecided(s.to_string(), format_rational(p)).into());
        }
        depth += 8;
    }
}

fn hairs_in(sb: &SubBrush, hairs: &[usize], lo: &BigRational, hi: &BigRational) -> Result<Vec<usize>, CurveError> {
    let mut out = Vec::new();
    for &i in hairs {
        if sb.address(i).height_in(lo, hi)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// Level-`k` family from level `k-1`.
///
/// `K` is the set of sub-brush hairs crossing the previous right edges. The
/// breakpoints are the previous `c, d` values plus the depth-`2(l+k)²`
/// cylinder ends of every hair in `K`; gaps holding a hair are cut to width
/// `<= F^{-(l+k)²}(1)`, adjacent occupied gaps are pulled apart with extra
/// rationals, and each occupied gap becomes a box.
pub fn next_family(prev: &BoxFamily, sb: &SubBrush, k: u32, sched: &EdgeSchedule) -> Result<BoxFamily, CurveError> {
    let bp = prev.right_edge;
    let b = sched.edge(k);
    let depth = sched.cylinder_depth(k);
    let w = sched.width_exact(k);

    let mut crossing: Vec<usize> = Vec::new();
    for parent in &prev.boxes {
        for i in sb.hairs_on_vertical(bp, &parent.c, &parent.d)? {
            if !crossing.contains(&i) {
                crossing.push(i);
            }
        }
    }
    let mut family = BoxFamily {
        level: k,
        offset: prev.offset,
        boxes: Vec::new(),
        parent_right_edge: bp,
        right_edge: b,
    };
    if crossing.is_empty() {
        return Ok(family);
    }

    let mut qs: Vec<BigRational> = Vec::new();
    for parent in &prev.boxes {
        qs.push(parent.c.clone());
        qs.push(parent.d.clone());
    }
    for &i in &crossing {
        let iv = embed_point(sb.address(i), depth);
        qs.push(iv.lo);
        qs.push(iv.hi);
    }
    qs.sort();
    qs.dedup();

    // Cut occupied gaps to width <= w.
    let mut fine: Vec<BigRational> = vec![qs[0].clone()];
    for pair in qs.windows(2) {
        let (lo, hi) = (&pair[0], &pair[1]);
        if !hairs_in(sb, &crossing, lo, hi)?.is_empty() {
            let len = hi - lo;
            let parts = (&len / &w).ceil().to_integer().to_u64().unwrap_or(1).max(1);
            let step = len / BigRational::from_integer(parts.into());
            for j in 1..parts {
                fine.push(lo + &step * BigRational::from_integer(j.into()));
            }
        }
        fine.push(hi.clone());
    }

    // Pull adjacent occupied gaps apart so the closed boxes are disjoint.
    let occupancy: Vec<Vec<usize>> = fine
        .windows(2)
        .map(|p| hairs_in(sb, &crossing, &p[0], &p[1]))
        .collect::<Result<_, _>>()?;
    let mut extra: Vec<BigRational> = Vec::new();
    for g in 1..occupancy.len() {
        if occupancy[g - 1].is_empty() || occupancy[g].is_empty() {
            continue;
        }
        let p = &fine[g];
        let mut below = fine[g - 1].clone();
        for &i in &occupancy[g - 1] {
            below = below.max(separating_bound(sb.address(i), p, true, depth)?);
        }
        let mut above = fine[g + 1].clone();
        for &i in &occupancy[g] {
            above = above.min(separating_bound(sb.address(i), p, false, depth)?);
        }
        extra.push((&below + p) * half());
        extra.push((&above + p) * half());
    }
    fine.extend(extra);
    fine.sort();
    fine.dedup();

    for pair in fine.windows(2) {
        if !hairs_in(sb, &crossing, &pair[0], &pair[1])?.is_empty() {
            family.boxes.push(BrushBox {
                a: bp,
                b,
                c: pair[0].clone(),
                d: pair[1].clone(),
                level: k,
            });
        }
    }
    Ok(family)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub witnesses: Vec<String>,
}

impl ConditionReport {
    fn new(id: u8, name: &'static str) -> Self {
        ConditionReport {
            id,
            name,
            passed: true,
            witnesses: Vec::new(),
        }
    }

    fn fail(&mut self, witness: String) {
        self.passed = false;
        if self.witnesses.len() < 16 {
            self.witnesses.push(witness);
        }
    }
}

/// Outcome of checking the eight box conditions. Conditions (5) and (8)
/// quantify over the hairs of the sub-brush, not over the whole brush.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub relative_to: &'static str,
    pub conditions: Vec<ConditionReport>,
    pub top_bottom_clear: ConditionReport,
    pub edge_recurrence: ConditionReport,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.conditions.iter().all(|c| c.passed) && self.top_bottom_clear.passed && self.edge_recurrence.passed
    }

    /// Ids of the failing numbered conditions.
    pub fn failed(&self) -> Vec<u8> {
        self.conditions.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }
}

/// Checks conditions (1)-(8) for `families[1..]` against the sub-brush,
/// plus clear top/bottom edges and the right-edge recurrence.
pub fn validate_family(families: &[BoxFamily], sb: &SubBrush) -> Result<ValidationReport, CurveError> {
    let names = [
        "rational vertical sides, a < b, c < d",
        "b - a = F^{-(l+k)^2}(1)",
        "d - c <= F^{-(l+k)^2}(1)",
        "left edge inside a parent right edge",
        "left edge meets the sub-brush",
        "boxes of one level pairwise disjoint",
        "box spans a single depth-2(l+k)^2 cylinder",
        "sub-brush points on parent right edges are covered",
    ];
    let mut conds: Vec<ConditionReport> = names
        .iter()
        .enumerate()
        .map(|(i, n)| ConditionReport::new(i as u8 + 1, n))
        .collect();
    let mut clear = ConditionReport::new(0, "top and bottom edges miss the sub-brush");
    let mut recurrence = ConditionReport::new(0, "b_k = b_0 + sum of widths to 1e-12");

    let Some(seed_family) = families.first() else {
        return Ok(ValidationReport {
            relative_to: "sub-brush",
            conditions: conds,
            top_bottom_clear: clear,
            edge_recurrence: recurrence,
        });
    };
    let offset = seed_family.offset;
    let kmax = families.len().saturating_sub(1) as u32;
    let sched = EdgeSchedule::new(seed_family.right_edge, offset, kmax);

    for k in 1..=kmax {
        let fam = &families[k as usize];
        let prev = &families[k as usize - 1];
        let w = sched.width_exact(k);
        let depth = sched.cylinder_depth(k);

        let mut independent = seed_family.right_edge;
        for i in 1..=k {
            let j = u64::from(offset + i);
            independent += f_inv_iter(j * j, 1.0);
        }
        if (sched.edge(k) - independent).abs() > 1e-12 || (fam.right_edge - sched.edge(k)).abs() > 1e-12 {
            recurrence.fail(format!("level {k}: b_k = {} vs {}", fam.right_edge, independent));
        }

        for bx in &fam.boxes {
            let label = format!("level {k} box {}", bx.label());
            if !(bx.a < bx.b) || bx.c >= bx.d {
                conds[0].fail(label.clone());
            }
            if bx.a != sched.edge(k - 1) || bx.b != sched.edge(k) {
                conds[1].fail(format!("{label}: b - a = {}", bx.b - bx.a));
            }
            if &bx.d - &bx.c > w {
                conds[2].fail(label.clone());
            }
            let inside_parent = prev.boxes.iter().any(|p| p.b == bx.a && p.c <= bx.c && bx.d <= p.d);
            if !inside_parent {
                conds[3].fail(label.clone());
            }
            if sb.hairs_on_vertical(bx.a, &bx.c, &bx.d)?.is_empty() {
                conds[4].fail(label.clone());
            }
            let mid = (&bx.c + &bx.d) * half();
            let in_one_cylinder = match prefix_of_point(&mid, depth) {
                Some(p) => {
                    cylinder_interval(&Cylinder { prefix: p }).contains_interval(&crate::address::RationalInterval {
                        lo: bx.c.clone(),
                        hi: bx.d.clone(),
                    })
                }
                None => false,
            };
            if !in_one_cylinder {
                conds[6].fail(label.clone());
            }
            for y in [&bx.c, &bx.d] {
                if let Err(e) = sb.hairs_on_horizontal(bx.b, y) {
                    clear.fail(format!("{label}: {e}"));
                }
            }
        }

        for (i, x) in fam.boxes.iter().enumerate() {
            for (j, y) in fam.boxes.iter().enumerate().skip(i + 1) {
                if x.intersects(y) {
                    conds[5].fail(format!(
                        "level {k}: boxes {i} and {j} overlap: {} and {}",
                        x.label(),
                        y.label()
                    ));
                }
            }
        }

        for parent in &prev.boxes {
            for h in sb.hairs_on_vertical(parent.b, &parent.c, &parent.d)? {
                let s = sb.address(h);
                let mut covered = false;
                for bx in fam.boxes.iter().filter(|bx| bx.a == parent.b) {
                    if s.height_in(&bx.c, &bx.d)? {
                        covered = true;
                        break;
                    }
                }
                if !covered {
                    conds[7].fail(format!("level {k}: hair {s} at x = {} not covered", parent.b));
                }
            }
        }
    }

    Ok(ValidationReport {
        relative_to: "sub-brush",
        conditions: conds,
        top_bottom_clear: clear,
        edge_recurrence: recurrence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sb(addrs: &[&str]) -> SubBrush {
        SubBrush::new(addrs.iter().map(|s| s.parse().unwrap()).collect(), 64).unwrap()
    }

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    #[test]
    fn unit_seed_is_accepted() {
        let b = sb(&["0", "-1,1", "0,1,-1"]);
        let f = seed_family(&Rect::unit(), &b, 0).unwrap();
        assert_eq!(f.boxes.len(), 1);
        assert_eq!(f.right_edge, 1.0);
    }

    #[test]
    fn seed_rejections() {
        let b = sb(&["0"]);
        // hair of 0̄ starts at 0 at height 1/sqrt 2; a left side at x = 0.5 crosses it
        let rect = Rect {
            a: 0.5,
            b: 2.0,
            c: r(1, 2),
            d: r(3, 4),
        };
        match seed_family(&rect, &b, 0) {
            Err(CurveError::SeedMeetsBrush { edge, address }) => {
                assert_eq!(edge, "left");
                assert_eq!(address, "0");
            }
            other => panic!("{other:?}"),
        }
        let flat = Rect {
            a: -1.0,
            b: 1.0,
            c: r(1, 2),
            d: r(1, 2),
        };
        assert_eq!(seed_family(&flat, &b, 0), Err(CurveError::DegenerateSeed));
    }

    #[test]
    fn first_level_on_zero_hair() {
        let b = sb(&["0"]);
        let seed = Rect::unit();
        let f0 = seed_family(&seed, &b, 0).unwrap();
        let sched = EdgeSchedule::new(1.0, 0, 1);
        let f1 = next_family(&f0, &b, 1, &sched).unwrap();
        assert_eq!(f1.boxes.len(), 1);
        let bx = &f1.boxes[0];
        assert_eq!(bx.a, 1.0);
        assert_eq!(bx.b, 1.0 + std::f64::consts::LN_2);
        // inside the depth-2 cylinder (1/2, 3/4) of 0̄ and no taller than ln 2
        assert!(bx.c >= r(1, 2) && bx.d <= r(3, 4));
        assert!(ExternalAddress::zero().height_in(&bx.c, &bx.d).unwrap());
        let rep = validate_family(&[f0, f1], &b).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn separate_cylinders_give_disjoint_boxes() {
        // tip of (0, 1, 0̄) is about 1.09, so the seed reaches to x = 2
        let b = sb(&["0,0", "0,1"]);
        let seed = Rect::new(-1.0, 2.0, r(-1, 1), r(1, 1)).unwrap();
        let f0 = seed_family(&seed, &b, 0).unwrap();
        let sched = EdgeSchedule::new(2.0, 0, 1);
        let f1 = next_family(&f0, &b, 1, &sched).unwrap();
        assert!(f1.boxes.len() >= 2);
        let rep = validate_family(&[f0, f1], &b).unwrap();
        assert!(rep.all_passed(), "{rep:?}");
    }

    #[test]
    fn no_crossing_gives_empty_family() {
        // tip of (0, 3) is far to the right of x = 1
        let b = sb(&["0,3"]);
        let f0 = seed_family(&Rect::unit(), &b, 0).unwrap();
        let sched = EdgeSchedule::new(1.0, 0, 1);
        let f1 = next_family(&f0, &b, 1, &sched).unwrap();
        assert!(f1.boxes.is_empty());
    }

    #[test]
    fn overlap_is_reported() {
        let b = sb(&["0"]);
        let f0 = seed_family(&Rect::unit(), &b, 0).unwrap();
        let sched = EdgeSchedule::new(1.0, 0, 1);
        let mut f1 = next_family(&f0, &b, 1, &sched).unwrap();
        let mut shifted = f1.boxes[0].clone();
        shifted.c = &shifted.c - r(1, 100);
        shifted.d = &shifted.d - r(1, 100);
        f1.boxes.push(shifted);
        let rep = validate_family(&[f0, f1], &b).unwrap();
        assert!(rep.failed().contains(&6));
        assert!(rep.conditions[5].witnesses[0].contains("boxes 0 and 1"));
    }
}
