//! Floating-point comparison tolerances shared by every algorithm and checker.
//!
//! Feasibility comparisons use a relative tolerance of `1e-9` with an absolute
//! floor of `1e-12` near zero. Strict comparisons that decide combinatorial
//! structure (star maximality, pruning) use the tighter `1e-12` relative band.

/// Relative tolerance for feasibility and certificate checks.
pub const REL: f64 = 1e-9;

/// Absolute floor used when both operands are close to zero.
pub const ABS: f64 = 1e-12;

/// Relative band inside which a strict comparison is treated as equality.
pub const STRICT_REL: f64 = 1e-12;

/// Additive slack used by the triangle-inequality check.
pub const METRIC_ABS: f64 = 1e-9;

#[inline]
fn slack(a: f64, b: f64, rel: f64) -> f64 {
    (rel * a.abs().max(b.abs())).max(ABS)
}

/// `a <= b` up to the feasibility tolerance.
#[inline]
pub fn leq(a: f64, b: f64) -> bool {
    a <= b + slack(a, b, REL)
}

/// `a >= b` up to the feasibility tolerance.
#[inline]
pub fn geq(a: f64, b: f64) -> bool {
    leq(b, a)
}

/// `a > b` where near-equality counts as *not* greater.
#[inline]
pub fn gt(a: f64, b: f64) -> bool {
    !leq(a, b)
}

/// `a < b` strictly, with values inside the tight band treated as equal.
#[inline]
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b - slack(a, b, STRICT_REL)
}

/// `a <= b` with the tight band, used where ties resolve toward inclusion.
#[inline]
pub fn tight_leq(a: f64, b: f64) -> bool {
    !strictly_less(b, a)
}

#[inline]
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= slack(a, b, REL)
}
