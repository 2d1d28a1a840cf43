use std::cmp::Ordering;
use std::f64::consts::TAU;

use expbrush::address::{cylinder_interval, embed_point, prefix_of_point, Cylinder, ExternalAddress};
use expbrush::brush::{check_forward_stretch, in_julia, tip, tip_upper, ModelPoint};
use expbrush::complex::{classify_orbit, find_fixed_point, multiplier, ExpParameter, OrbitClass, Thresholds};
use expbrush::tower::{f_inv_iter, TowerScalar};
use num_complex::Complex64;
use num_rational::BigRational;
use proptest::prelude::*;

fn prefix(max_len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-3i64..=3, 1..=max_len)
}

fn address() -> impl Strategy<Value = ExternalAddress> {
    prefix(6).prop_map(|p| ExternalAddress::with_zero_tail(p).unwrap())
}

fn periodic_address() -> impl Strategy<Value = ExternalAddress> {
    (prefix(4), prefix(3)).prop_map(|(p, q)| ExternalAddress::periodic(p, q).unwrap())
}

proptest! {
    #[test]
    fn tower_order_follows_real_order(u in 0.0f64..700.0, v in 0.0f64..700.0) {
        let (tu, tv) = (TowerScalar::from_f64(u).unwrap(), TowerScalar::from_f64(v).unwrap());
        if u < v {
            prop_assert_ne!(tu.cmp(&tv), Ordering::Greater);
        }
        prop_assert!(tu.to_f64_lower() <= u);
    }

    #[test]
    fn tower_iterate_is_monotone(m in 0.0f64..1.0, level in 0u32..4, n in 0u64..6) {
        let t = TowerScalar::from_parts(level, m).unwrap();
        prop_assert!(t.f_iter(n) >= t);
        prop_assert!(t.f_iter(n + 1) >= t.f_iter(n));
    }

    #[test]
    fn backward_iterates_decrease(n in 1u64..200) {
        prop_assert!(f_inv_iter(n, 1.0) <= f_inv_iter(n - 1, 1.0));
        prop_assert!(f_inv_iter(n, 1.0) < 3.0 / n as f64);
    }

    #[test]
    fn tip_grows_with_depth(s in address(), d in 1usize..40) {
        prop_assert!(tip(&s, d) <= tip(&s, d + 1));
        prop_assert!(tip(&s, d) <= tip_upper(&s, d));
        prop_assert!(tip_upper(&s, d) - tip(&s, d) < 1e-9);
    }

    #[test]
    fn tip_separates_julia_from_escape(s in address()) {
        let depth = 24;
        let above = ModelPoint::new(tip_upper(&s, depth), s.clone()).unwrap();
        prop_assert!(in_julia(&above, depth));
        let t = tip(&s, depth);
        if t > 1e-6 {
            let below = ModelPoint::new(t * (1.0 - 1e-6), s).unwrap();
            prop_assert!(!in_julia(&below, depth));
        }
    }

    #[test]
    fn forward_stretch(s in address(), dx in 0.0f64..2.0, gap in 1e-6f64..3.0, n in 1usize..=6) {
        let xt = tip_upper(&s, 64) + dx;
        let x = ModelPoint::new(xt, s.clone()).unwrap();
        let y = ModelPoint::new(xt + gap, s).unwrap();
        prop_assert!(check_forward_stretch(&x, &y, n).unwrap());
    }

    #[test]
    fn shift_undoes_prepend(s in periodic_address(), d in -5i64..=5) {
        let p = s.prepend(d);
        prop_assert_eq!(p.entry(0), d);
        prop_assert_eq!(p.shift().lex_cmp(&s), Ordering::Equal);
        for i in 0..12 {
            prop_assert_eq!(s.shift().entry(i), s.entry(i + 1));
        }
    }

    #[test]
    fn embedding_preserves_order(s in periodic_address(), t in periodic_address()) {
        let depth = 12;
        let (a, b) = (s.truncate(depth), t.truncate(depth));
        if a != b {
            let (is, it) = (embed_point(&s, depth), embed_point(&t, depth));
            match s.lex_cmp(&t) {
                Ordering::Less => prop_assert!(is.hi <= it.lo),
                Ordering::Greater => prop_assert!(it.hi <= is.lo),
                Ordering::Equal => prop_assert!(false, "distinct prefixes compare equal"),
            }
        }
    }

    #[test]
    fn cylinders_nest_and_tile(p in prefix(6), x in -4i64..=4) {
        let parent = cylinder_interval(&Cylinder::new(p.clone()).unwrap());
        let child = |d: i64| {
            let mut q = p.clone();
            q.push(d);
            cylinder_interval(&Cylinder::new(q).unwrap())
        };
        let (c, next) = (child(x), child(x + 1));
        prop_assert!(parent.contains_interval(&c));
        prop_assert!(c.lo < c.hi);
        prop_assert_eq!(&c.hi, &next.lo);
    }

    #[test]
    fn points_recover_their_cylinder(p in prefix(6)) {
        let iv = cylinder_interval(&Cylinder::new(p.clone()).unwrap());
        let mid = (&iv.lo + &iv.hi) / BigRational::from_integer(2.into());
        let got = prefix_of_point(&mid, p.len());
        prop_assert_eq!(got, Some(p));
    }

    #[test]
    fn height_lies_in_its_cylinders(s in periodic_address(), d in 1usize..10) {
        let iv = embed_point(&s, d);
        prop_assert!(s.height_in(&iv.lo, &iv.hi).unwrap());
    }

    #[test]
    fn classes_are_periodic_in_imaginary_direction(re in -4.0f64..4.0, im in -4.0f64..4.0, a in -3.0f64..=-1.0) {
        let p = ExpParameter::new(a).unwrap();
        let fixed = find_fixed_point(p);
        let th = Thresholds::default();
        let z = Complex64::new(re, im);
        let w = z + Complex64::new(0.0, TAU);
        prop_assert_eq!(classify_orbit(z, p, fixed, &th).class, classify_orbit(w, p, fixed, &th).class);
    }

    #[test]
    fn real_escape_is_monotone(x in -4.0f64..6.0, dx in 0.0f64..3.0) {
        let p = ExpParameter::new(-1.0).unwrap();
        let fixed = find_fixed_point(p);
        let th = Thresholds::default();
        let c = |x: f64| classify_orbit(Complex64::new(x, 0.0), p, fixed, &th).class;
        if c(x) == OrbitClass::EscapingHeuristic {
            prop_assert_eq!(c(x + dx), OrbitClass::EscapingHeuristic);
        }
    }

    #[test]
    fn fixed_point_is_a_root(a in -20.0f64..=-1.0) {
        let p = ExpParameter::new(a).unwrap();
        let x = find_fixed_point(p);
        prop_assert!(x <= 0.0 && x >= a);
        prop_assert!((x.exp() + a - x).abs() < 1e-12);
        prop_assert!(multiplier(p) <= 1.0);
    }

    #[test]
    fn multiplier_grows_with_parameter(a in -20.0f64..=-1.0, b in -20.0f64..=-1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let m = |a: f64| multiplier(ExpParameter::new(a).unwrap());
        prop_assert!(m(lo) <= m(hi));
    }
}
