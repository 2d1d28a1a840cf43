//! Model dynamics `⟨t, s⟩ ↦ ⟨F(t) − 2π|s0|, σ(s)⟩` on `[0, ∞) × Z^ω`,
//! hair tips, finite sub-brushes and escape certificates.
//!
//! Orbits are tracked as lower bounds in tower form. A passing
//! [`EscapeCertificate`] is sound; a failing one says nothing.

use std::cmp::Ordering;

use num_rational::BigRational;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::address::{AddressError, ExternalAddress};
use crate::tower::{TowerError, TowerScalar, TWO_PI};

/// Smallest `kmax` accepted by [`certify_escape`].
pub const MIN_CERT_K: u32 = 5;

/// Tolerance within which the orbit route and the tip route of membership
/// may disagree, caused by rounding orbit bounds down.
pub const TIP_SLACK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BrushError {
    #[error("orbit left [0,inf) at step {step}")]
    LeftDomain { step: usize },
    #[error("point is not in J(F) to depth {required}: orbit left [0,inf) at step {step}")]
    NotInJulia { required: usize, step: usize },
    #[error("escape certificates need kmax >= {MIN_CERT_K}, got {0}")]
    KmaxTooSmall(u32),
    #[error("negative potential {0}")]
    NegativePotential(f64),
    #[error("points must share an external address")]
    AddressMismatch,
    #[error("need T(y) > T(x), got T(x) = {0}, T(y) = {1}")]
    NotAbove(f64, f64),
    #[error("sub-brush depth must be at least 1")]
    ZeroDepth,
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Address(#[from] AddressError),
}

/// `2π|s0|`.
pub fn strip_offset(s0: i64) -> f64 {
    TWO_PI * s0.unsigned_abs() as f64
}

/// A point `⟨t, s⟩` with real potential `t >= 0`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModelPoint {
    pub t: f64,
    pub s: ExternalAddress,
}

impl ModelPoint {
    pub fn new(t: f64, s: ExternalAddress) -> Result<Self, BrushError> {
        if !(t >= 0.0) || t.is_infinite() {
            return Err(BrushError::NegativePotential(t));
        }
        Ok(ModelPoint { t, s })
    }
}

/// One application of the model map, with the potential as a lower bound.
pub fn step_tower(t: TowerScalar, s: &ExternalAddress) -> Result<(TowerScalar, ExternalAddress), TowerError> {
    let next = t.fsub(strip_offset(s.entry(0)))?;
    Ok((next.value, s.shift()))
}

/// One step of the model map. The new potential is a certified lower bound.
pub fn step(x: &ModelPoint) -> Result<(TowerScalar, ExternalAddress), BrushError> {
    let t = TowerScalar::from_f64(x.t)?;
    step_tower(t, &x.s).map_err(|e| match e {
        TowerError::LeftDomain(_) => BrushError::LeftDomain { step: 1 },
        other => other.into(),
    })
}

/// Lower bounds on `T(F^i(x))` for `i = 0..=n`.
pub fn orbit_lower_bounds(x: &ModelPoint, n: usize) -> Result<Vec<TowerScalar>, BrushError> {
    let mut out = Vec::with_capacity(n + 1);
    let mut t = TowerScalar::from_f64(x.t)?;
    out.push(t);
    for i in 0..n {
        // σ^i(s) has first entry s_i; no need to materialise the shifts.
        t = t
            .fsub(strip_offset(x.s.entry(i)))
            .map_err(|e| match e {
                TowerError::LeftDomain(_) => BrushError::LeftDomain { step: i + 1 },
                other => other.into(),
            })?
            .value;
        out.push(t);
    }
    Ok(out)
}

/// Depth-`depth` tip: the least `t` keeping `T(F^i(t, s)) >= 0` for `i <= depth`,
/// by the backward recursion `r_N = 0`, `r_i = F^{-1}(r_{i+1} + 2π|s_i|)`.
pub fn tip(s: &ExternalAddress, depth: usize) -> f64 {
    (0..depth)
        .rev()
        .fold(0.0_f64, |r, i| (r + strip_offset(s.entry(i))).ln_1p().max(0.0))
}

/// A value at or just above [`tip`] whose forward orbit survives `depth`
/// steps under the rounded-down arithmetic. Each backward step is nudged up
/// by a relative `1e-13`, keeping the total inflation far below [`TIP_SLACK`].
pub fn tip_upper(s: &ExternalAddress, depth: usize) -> f64 {
    (0..depth).rev().fold(0.0_f64, |r, i| {
        let v = (r + strip_offset(s.entry(i))).ln_1p();
        if v == 0.0 {
            0.0
        } else {
            v + 1e-13 * (1.0 + v)
        }
    })
}

/// Membership in `J(F)` to `depth` steps, by forward simulation.
pub fn in_julia(x: &ModelPoint, depth: usize) -> bool {
    orbit_lower_bounds(x, depth).is_ok()
}

/// Membership in `J(F)` to `depth` steps, by comparison with the tip.
pub fn in_julia_by_tip(x: &ModelPoint, depth: usize) -> bool {
    x.t >= tip(&x.s, depth)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeCheck {
    pub k: u32,
    /// Lower bound on `T(F^{2k²}(x))`.
    pub bound: TowerScalar,
    /// Upper bound on `F^{k²}(1)`.
    pub required: TowerScalar,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EscapeCertificate {
    pub point: ModelPoint,
    pub kmax: u32,
    pub checks: Vec<EscapeCheck>,
    /// The orbit lower bounds the checks were read from, `0..=2 kmax²`.
    #[serde(skip)]
    pub orbit: Vec<TowerScalar>,
}

impl EscapeCertificate {
    pub fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

/// `2k²`.
pub fn double_square(k: u32) -> usize {
    2 * (k as usize) * (k as usize)
}

/// Checks `T(F^{2k²}(x)) >= F^{k²}(1)` for every `k` in `5..=kmax`.
pub fn certify_escape(x: &ModelPoint, kmax: u32) -> Result<EscapeCertificate, BrushError> {
    if kmax < MIN_CERT_K {
        return Err(BrushError::KmaxTooSmall(kmax));
    }
    let required_depth = double_square(kmax);
    let orbit = orbit_lower_bounds(x, required_depth).map_err(|e| match e {
        BrushError::LeftDomain { step } => BrushError::NotInJulia {
            required: required_depth,
            step,
        },
        other => other,
    })?;
    let checks = (MIN_CERT_K..=kmax)
        .map(|k| {
            let bound = orbit[double_square(k)];
            let required = TowerScalar::f_iter_of_one_upper(k * k);
            EscapeCheck {
                k,
                bound,
                required,
                pass: bound >= required,
            }
        })
        .collect();
    Ok(EscapeCertificate {
        point: x.clone(),
        kmax,
        checks,
        orbit,
    })
}

/// Whether `bounds[n] >= F^k(1)` for every `n` in `[2(k-1)², 2k²]`.
pub fn window_holds(bounds: &[TowerScalar], k: u32) -> bool {
    let target = TowerScalar::f_iter_of_one_upper(k);
    let lo = double_square(k - 1);
    let hi = double_square(k).min(bounds.len().saturating_sub(1));
    (lo..=hi).all(|n| bounds[n] >= target)
}

/// Three-way escape verdict for a single model point.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING-KEBAB-CASE")]
pub enum Verdict {
    CertifiedEscaping,
    LeftDomain,
    Unknown,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::CertifiedEscaping => "CERTIFIED-ESCAPING",
            Verdict::LeftDomain => "LEFT-DOMAIN",
            Verdict::Unknown => "UNKNOWN",
        })
    }
}

pub fn classify(x: &ModelPoint, kmax: u32) -> Result<(Verdict, Option<EscapeCertificate>), BrushError> {
    match certify_escape(x, kmax) {
        Ok(cert) if cert.passed() => Ok((Verdict::CertifiedEscaping, Some(cert))),
        Ok(cert) => Ok((Verdict::Unknown, Some(cert))),
        Err(BrushError::NotInJulia { .. }) => Ok((Verdict::LeftDomain, None)),
        Err(e) => Err(e),
    }
}

/// Compares a lower bound on `T(F^n(y))` with `F^n(T(y) - T(x))`.
///
/// Both sides go through the same rounded-down tower arithmetic, so the
/// equality case (`x` on the zero orbit) compares equal instead of failing
/// by an ulp.
pub fn check_forward_stretch(x: &ModelPoint, y: &ModelPoint, n: usize) -> Result<bool, BrushError> {
    if x.s.lex_cmp(&y.s) != Ordering::Equal {
        return Err(BrushError::AddressMismatch);
    }
    if !(y.t > x.t) {
        return Err(BrushError::NotAbove(x.t, y.t));
    }
    orbit_lower_bounds(x, n).map_err(|e| match e {
        BrushError::LeftDomain { step } => BrushError::NotInJulia { required: n, step },
        other => other,
    })?;
    let lhs = *orbit_lower_bounds(y, n)
        .map_err(|e| match e {
            BrushError::LeftDomain { step } => BrushError::NotInJulia { required: n, step },
            other => other,
        })?
        .last()
        .expect("orbit has n + 1 entries");
    let eps = if x.t == 0.0 { y.t } else { (y.t - x.t).next_down() };
    let rhs = TowerScalar::from_f64(eps)?.f_iter(n as u64);
    Ok(lhs >= rhs)
}

/// A finite set of hairs `[t_s, ∞) × {h(s)}` with depth-`depth` tips.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubBrush {
    addresses: Vec<ExternalAddress>,
    depth: usize,
    tips: Vec<f64>,
}

impl SubBrush {
    pub fn new(addresses: Vec<ExternalAddress>, depth: usize) -> Result<Self, BrushError> {
        if depth == 0 {
            return Err(BrushError::ZeroDepth);
        }
        let tips = addresses.par_iter().map(|s| tip(s, depth)).collect();
        Ok(SubBrush { addresses, depth, tips })
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.addresses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.addresses.is_empty()
    }

    pub fn address(&self, i: usize) -> &ExternalAddress {
        &self.addresses[i]
    }

    pub fn tip(&self, i: usize) -> f64 {
        self.tips[i]
    }

    pub fn hairs(&self) -> impl Iterator<Item = (&ExternalAddress, f64)> + '_ {
        self.addresses.iter().zip(self.tips.iter().copied())
    }

    /// Indices of hairs meeting `{x} × [lo, hi]`.
    pub fn hairs_on_vertical(&self, x: f64, lo: &BigRational, hi: &BigRational) -> Result<Vec<usize>, AddressError> {
        let mut out = Vec::new();
        for (i, (s, t)) in self.hairs().enumerate() {
            if t <= x && s.height_in(lo, hi)? {
                out.push(i);
            }
        }
        Ok(out)
    }

    /// Indices of hairs meeting `[x0, x1] × {y}`. Hair heights are never
    /// rational endpoints, so this is empty unless a comparison is undecided,
    /// which is reported as an error.
    pub fn hairs_on_horizontal(&self, x1: f64, y: &BigRational) -> Result<Vec<usize>, AddressError> {
        for (s, t) in self.hairs() {
            if t <= x1 {
                s.height_cmp(y)?;
            }
        }
        Ok(Vec::new())
    }

    /// Indices of hairs whose height lies in `[lo, hi]`, regardless of tip.
    pub fn hairs_in_band(&self, lo: &BigRational, hi: &BigRational) -> Result<Vec<usize>, AddressError> {
        let mut out = Vec::new();
        for (i, s) in self.addresses.iter().enumerate() {
            if s.height_in(lo, hi)? {
                out.push(i);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn a(s: &str) -> ExternalAddress {
        s.parse().unwrap()
    }

    fn pt(t: f64, s: &str) -> ModelPoint {
        ModelPoint::new(t, a(s)).unwrap()
    }

    #[test]
    fn step_examples() {
        let (t, s) = step(&pt(2.0, "1")).unwrap();
        assert!((t.to_f64() - 0.10587079175106417).abs() < 1e-12);
        assert_eq!(s, ExternalAddress::zero());
        let (t, s) = step(&pt(0.0, "0")).unwrap();
        assert_eq!(t, TowerScalar::ZERO);
        assert_eq!(s, ExternalAddress::zero());
        assert_eq!(step(&pt(0.5, "1")), Err(BrushError::LeftDomain { step: 1 }));
    }

    #[test]
    fn orbit_examples() {
        let zeros = orbit_lower_bounds(&pt(0.0, "0"), 10).unwrap();
        assert!(zeros.iter().all(|t| *t == TowerScalar::ZERO));
        let o = orbit_lower_bounds(&pt(1.0, "0"), 3).unwrap();
        let direct = [1.0, 1.718281828459045, 4.57494152476088];
        for (b, d) in o.iter().zip(direct) {
            assert!((b.to_f64() - d).abs() < 1e-12 * d);
            assert!(b.to_f64_lower() <= d);
        }
        assert_eq!(o[3].level(), 4);
        assert_eq!(
            orbit_lower_bounds(&pt(1.9, "1,1"), 2),
            Err(BrushError::LeftDomain { step: 1 })
        );
    }

    #[test]
    fn tip_examples() {
        assert_eq!(tip(&ExternalAddress::zero(), 40), 0.0);
        let t1 = (1.0 + TWO_PI).ln();
        assert!((tip(&a("1"), 1) - t1).abs() < 1e-15);
        assert!((tip(&a("1"), 30) - 1.9855683087099187).abs() < 1e-12);
        let t2 = (1.0 + TWO_PI + t1).ln();
        assert!((tip(&a("1,1"), 2) - t2).abs() < 1e-15);
        assert!((tip(&a("1,1"), 9) - 2.2267).abs() < 1e-4);
        assert!(tip_upper(&a("1,1"), 9) >= tip(&a("1,1"), 9));
        assert!(tip_upper(&a("1,1"), 9) - tip(&a("1,1"), 9) < 1e-11);
    }

    #[test]
    fn membership_examples() {
        assert!(in_julia(&pt(0.0, "0"), 20));
        assert!(!in_julia(&pt(1.98, "1"), 5));
        assert!(in_julia(&pt(2.0, "1"), 5));
        assert!(!in_julia_by_tip(&pt(1.98, "1"), 5));
        assert!(in_julia_by_tip(&pt(2.0, "1"), 5));
        let s = a("2,-1,1");
        assert!(in_julia(&pt(tip_upper(&s, 12), "2,-1,1"), 12));
    }

    #[test]
    fn certificate_examples() {
        let c = certify_escape(&pt(1.0, "0"), 6).unwrap();
        assert!(c.passed());
        assert_eq!(c.checks.len(), 2);
        let c = certify_escape(&pt(0.0, "0"), 6).unwrap();
        assert!(c.checks.iter().all(|k| !k.pass));
        let x = pt(tip(&a("1"), 64) + 1.0, "1");
        assert!(certify_escape(&x, 6).unwrap().passed());
        assert_eq!(certify_escape(&x, 4), Err(BrushError::KmaxTooSmall(4)));
        assert!(matches!(
            certify_escape(&pt(1.0, "1"), 5),
            Err(BrushError::NotInJulia { required: 50, step: 1 })
        ));
    }

    #[test]
    fn classify_states() {
        assert_eq!(classify(&pt(1.0, "0"), 5).unwrap().0, Verdict::CertifiedEscaping);
        assert_eq!(classify(&pt(1.0, "3"), 5).unwrap().0, Verdict::LeftDomain);
        assert_eq!(classify(&pt(0.0, "0"), 5).unwrap().0, Verdict::Unknown);
        assert_eq!(Verdict::CertifiedEscaping.to_string(), "CERTIFIED-ESCAPING");
    }

    #[test]
    fn forward_stretch_examples() {
        assert!(check_forward_stretch(&pt(0.0, "0"), &pt(1.0, "0"), 3).unwrap());
        let t = tip_upper(&a("1"), 8);
        assert!(check_forward_stretch(&pt(t, "1"), &pt(t + 0.5, "1"), 4).unwrap());
        assert!(check_forward_stretch(&pt(2.5, "1,0,1"), &pt(2.5 + 1e-6, "1,0,1"), 6).unwrap());
        assert_eq!(
            check_forward_stretch(&pt(2.0, "1"), &pt(3.0, "2"), 2),
            Err(BrushError::AddressMismatch)
        );
        assert!(matches!(
            check_forward_stretch(&pt(3.0, "1"), &pt(2.0, "1"), 2),
            Err(BrushError::NotAbove(..))
        ));
    }

    #[test]
    fn sub_brush_tips() {
        let sb = SubBrush::new(vec![a("0"), a("1"), a("-1,2")], 16).unwrap();
        assert_eq!(sb.tip(0), 0.0);
        assert_eq!(sb.tip(1), tip(&a("1"), 16));
        assert!(SubBrush::new(vec![], 0).is_err());
    }
}
