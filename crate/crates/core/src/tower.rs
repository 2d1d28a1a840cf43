//! Arithmetic for `F(t) = e^t - 1`, its inverse and their iterates.
//!
//! Large potentials are stored as towers `F^L(m)` so that orbits which grow
//! like iterated exponentials can be compared without overflow. Every
//! operation that feeds an escape certificate rounds toward zero, so a
//! [`TowerScalar`] never exceeds the quantity it stands for.

use std::cmp::Ordering;
use std::f64::consts::LN_2;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Double-precision `2π`, used for every strip offset.
pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Largest argument for which `e^t` is finite in `f64`.
const EXP_LIMIT: f64 = 709.0;

/// Mantissa decrement used when a subtraction is absorbed by a huge value.
pub const SLACK_DELTA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error("e^{0} is not representable, promote to tower form")]
    PromoteToTower(f64),
    #[error("negative potential {0} is outside the domain")]
    NegativeInput(f64),
    #[error("orbit left [0,inf): F(u) - c has lower bound {0} < 0")]
    LeftDomain(f64),
    #[error("could not verify that subtracting {c} is negligible at level {level}")]
    SlackUnverified { level: u32, c: f64 },
}

/// `F(t) = e^t - 1` in working precision.
pub fn f_apply(t: f64) -> Result<f64, TowerError> {
    if !(t >= 0.0) {
        return Err(TowerError::NegativeInput(t));
    }
    if t > EXP_LIMIT {
        return Err(TowerError::PromoteToTower(t));
    }
    Ok(t.exp_m1())
}

/// `F^{-1}(t) = ln(t + 1)`.
pub fn f_inv(t: f64) -> Result<f64, TowerError> {
    if !(t >= 0.0) {
        return Err(TowerError::NegativeInput(t));
    }
    Ok(t.ln_1p())
}

/// `F^{-n}(t)`, the n-fold composition of `F^{-1}`. Negative input is clamped to 0.
pub fn f_inv_iter(n: u64, t: f64) -> f64 {
    let mut t = t.max(0.0);
    for _ in 0..n {
        if t == 0.0 {
            break;
        }
        t = t.ln_1p();
    }
    t
}

/// `F^{-k^2}(1)` for every `k` in `1..=kmax`, computed by continuing one chain
/// of `ln(1+x)` steps so each term is bit-identical to `f_inv_iter(k*k, 1.0)`.
pub fn inv_square_terms(kmax: u64) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax as usize);
    let mut t = 1.0_f64;
    let mut done = 0u64;
    for k in 1..=kmax {
        t = f_inv_iter(k * k - done, t);
        done = k * k;
        out.push(t);
    }
    out
}

/// `sum_{k=1}^{kmax} F^{-k^2}(1)`.
pub fn partial_sum_inv_squares(kmax: u64) -> f64 {
    inv_square_terms(kmax).iter().sum()
}

/// One ulp toward zero; zero stays zero.
fn round_down(x: f64) -> f64 {
    if x <= 0.0 {
        x.min(0.0)
    } else {
        x.next_down()
    }
}

/// Lower bound on `e^m - 1` for `m >= 0`, assuming a faithfully rounded `exp_m1`.
fn expm1_down(m: f64) -> f64 {
    if m == 0.0 {
        0.0
    } else {
        round_down(m.exp_m1()).max(0.0)
    }
}

/// A nonnegative value stored as `F^level(mantissa)`.
///
/// Canonical form: `level == 0` and `mantissa in [0, 1)`, or `level >= 1` and
/// `mantissa in [ln 2, 1)` (with `ln 2` the double nearest below). Level `L >= 1`
/// then covers `[F^{L-1}(1), F^L(1))`, so lexicographic order on
/// `(level, mantissa)` is the real order.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TowerScalar {
    level: u32,
    mantissa: f64,
}

impl Eq for TowerScalar {}

impl Ord for TowerScalar {
    fn cmp(&self, other: &Self) -> Ordering {
        self.level
            .cmp(&other.level)
            .then_with(|| self.mantissa.total_cmp(&other.mantissa))
    }
}

impl PartialOrd for TowerScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Total order of two canonical towers, consistent with their real values.
pub fn tower_cmp(u: &TowerScalar, v: &TowerScalar) -> Ordering {
    u.cmp(v)
}

/// How [`TowerScalar::fsub`] produced its bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FsubRoute {
    /// `F(u)` and the difference were evaluated in `f64`, rounded down.
    Direct,
    /// `F(u)` was out of range; `c` was absorbed by lowering the mantissa by `delta`
    /// after checking `e^u (1 - e^{-delta}) >= c`.
    Slack { delta: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Fsub {
    pub value: TowerScalar,
    pub route: FsubRoute,
}

impl TowerScalar {
    pub const ZERO: TowerScalar = TowerScalar {
        level: 0,
        mantissa: 0.0,
    };

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> f64 {
        self.mantissa
    }

    /// Canonical lower bound for `F^level(mantissa)`; any `mantissa >= 0` is accepted.
    pub fn from_parts(level: u32, mantissa: f64) -> Result<Self, TowerError> {
        if !(mantissa >= 0.0) || mantissa.is_infinite() {
            return Err(TowerError::NegativeInput(mantissa));
        }
        let mut level = level;
        let mut m = mantissa;
        while m >= 1.0 {
            m = round_down(m.ln_1p()).max(LN_2);
            level = level.saturating_add(1);
        }
        while level > 0 && m < LN_2 {
            m = expm1_down(m);
            level -= 1;
        }
        if level == 0 && m >= 1.0 {
            // expm1_down of a mantissa just under ln 2 cannot reach 1, but keep the invariant.
            m = 1.0_f64.next_down();
        }
        Ok(TowerScalar { level, mantissa: m })
    }

    /// Canonical lower bound for a real potential.
    pub fn from_f64(v: f64) -> Result<Self, TowerError> {
        Self::from_parts(0, v)
    }

    /// An upper bound for `F^n(1)`, i.e. `F^{n+1}(ln 2)` with `ln 2` rounded up.
    pub fn f_iter_of_one_upper(n: u32) -> Self {
        TowerScalar {
            level: n + 1,
            mantissa: LN_2.next_up(),
        }
    }

    /// Nearest `f64` to the represented value (`inf` when out of range).
    pub fn to_f64(&self) -> f64 {
        let mut v = self.mantissa;
        for _ in 0..self.level {
            if v > EXP_LIMIT {
                return f64::INFINITY;
            }
            v = v.exp_m1();
        }
        v
    }

    /// Lower bound on the represented value in `f64` (`inf` when out of range).
    pub fn to_f64_lower(&self) -> f64 {
        let mut v = self.mantissa;
        for _ in 0..self.level {
            if v > EXP_LIMIT {
                return f64::INFINITY;
            }
            v = expm1_down(v);
        }
        v
    }

    /// `F^n(self)`. Levels `>= 1` just add `n`; level 0 is stepped in `f64`
    /// (rounded down) until it crosses `ln 2`.
    pub fn f_iter(self, n: u64) -> Self {
        let mut t = self;
        let mut remaining = n;
        while remaining > 0 && t.level == 0 {
            if t.mantissa == 0.0 {
                return t;
            }
            if t.mantissa >= LN_2 {
                t.level = 1;
            } else {
                t.mantissa = expm1_down(t.mantissa);
            }
            remaining -= 1;
        }
        let add = u32::try_from(remaining).unwrap_or(u32::MAX);
        t.level = t.level.saturating_add(add);
        t
    }

    /// Certified lower bound on `F(self) - c` for `c >= 0`.
    pub fn fsub(self, c: f64) -> Result<Fsub, TowerError> {
        if !(c >= 0.0) {
            return Err(TowerError::NegativeInput(c));
        }
        if c == 0.0 {
            return Ok(Fsub {
                value: self.f_iter(1),
                route: FsubRoute::Direct,
            });
        }
        let u_lo = self.to_f64_lower();
        if u_lo <= EXP_LIMIT {
            let fu = expm1_down(u_lo);
            let diff = fu - c;
            if diff < 0.0 {
                return Err(TowerError::LeftDomain(diff));
            }
            return Ok(Fsub {
                value: Self::from_f64(round_down(diff).max(0.0))?,
                route: FsubRoute::Direct,
            });
        }
        // F(u) - F(u - delta) = e^u (1 - e^{-delta}); require it to cover c.
        let u_check = u_lo.min(1e300);
        let lhs = u_check + (-(-SLACK_DELTA).exp_m1()).ln() - 1e-6;
        if !(lhs >= c.ln() + 1e-6) {
            return Err(TowerError::SlackUnverified { level: self.level, c });
        }
        // dF^L/dm >= 1, so F^L(m - delta) <= u - delta.
        let lowered = round_down(self.mantissa - SLACK_DELTA).max(0.0);
        Ok(Fsub {
            value: Self::from_parts(self.level + 1, lowered)?,
            route: FsubRoute::Slack { delta: SLACK_DELTA },
        })
    }
}

/// `F^n(t)` on towers.
pub fn f_iter(n: u64, t: TowerScalar) -> TowerScalar {
    t.f_iter(n)
}

/// Lower bound on `F(u) - c`.
pub fn tower_fsub(u: TowerScalar, c: f64) -> Result<Fsub, TowerError> {
    u.fsub(c)
}

impl fmt::Display for TowerScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.level == 0 {
            write!(f, "{}", self.mantissa)
        } else {
            write!(f, "F^{}({})", self.level, self.mantissa)
        }
    }
}
