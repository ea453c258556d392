//! Double-double arithmetic: an unevaluated sum `hi + lo` with |lo| ≤ ulp(hi)/2,
//! giving roughly 106 bits of significand. Only the operations needed by the
//! Mittag-Leffler series are provided.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

/// Unit roundoff of the format.
pub(crate) const EPS: f64 = 4.93038065763132e-32;

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.3190468138462996e-17 };
const HALF_LN_2PI: Dd = Dd { hi: 0.9189385332046728, lo: -3.8782941580672414e-17 };

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    if cfg!(target_feature = "fma") {
        (p, a.mul_add(b, -p))
    } else {
        // Dekker's product; a software fma would be far slower.
        let (ah, al) = split(a);
        let (bh, bl) = split(b);
        (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
    }
}

#[inline]
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two doubles.
    #[inline]
    pub fn prod(a: f64, b: f64) -> Dd {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    #[inline]
    pub fn abs(self) -> Dd {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    #[inline]
    fn scale(self, k: i32) -> Dd {
        let f = 2f64.powi(k);
        Dd { hi: self.hi * f, lo: self.lo * f }
    }

    pub fn exp(self) -> Dd {
        if self.hi > 709.0 {
            return Dd::from_f64(f64::INFINITY);
        }
        if self.hi < -745.0 {
            return Dd::ZERO;
        }
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2 * Dd::from_f64(k)).scale(-10);
        // expm1 on |r| < 3.4e-4: eight Taylor terms reach the format precision.
        let f = inverse_factorials();
        let mut p = f[8];
        for j in (1..8).rev() {
            p = p * r + f[j];
        }
        let mut s = p * r;
        // (e^r - 1) -> (e^{2r} - 1) = s (s + 2), once per halving.
        for _ in 0..10 {
            s = s * (s + Dd::from_f64(2.0));
        }
        (s + Dd::ONE).scale(k as i32)
    }

    /// Natural logarithm of a positive value by one Newton step on exp.
    pub fn ln(self) -> Dd {
        let y = Dd::from_f64(self.hi.ln());
        y + self * (-y).exp() - Dd::ONE
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, b.hi);
        let (t, f) = two_sum(self.lo, b.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    #[inline]
    fn sub(self, b: Dd) -> Dd {
        self + (-b)
    }
}

impl Neg for Dd {
    type Output = Dd;
    #[inline]
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, b.hi);
        let e = e + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }
}

fn inverse_factorials() -> &'static [Dd; 9] {
    static F: OnceLock<[Dd; 9]> = OnceLock::new();
    F.get_or_init(|| {
        let mut f = [Dd::ONE; 9];
        for j in 1..9 {
            f[j] = f[j - 1] / Dd::from_f64(j as f64);
        }
        f
    })
}

/// B_{2n} as exact rationals, n = 1..16.
const BERNOULLI: [(f64, f64); 16] = [
    (1.0, 6.0),
    (-1.0, 30.0),
    (1.0, 42.0),
    (-1.0, 30.0),
    (5.0, 66.0),
    (-691.0, 2730.0),
    (7.0, 6.0),
    (-3617.0, 510.0),
    (43867.0, 798.0),
    (-174611.0, 330.0),
    (854513.0, 138.0),
    (-236364091.0, 2730.0),
    (8553103.0, 6.0),
    (-23749461029.0, 870.0),
    (8615841276005.0, 14322.0),
    (-7709321041217.0, 510.0),
];

fn stirling_coefficients() -> &'static [Dd; 16] {
    static C: OnceLock<[Dd; 16]> = OnceLock::new();
    C.get_or_init(|| {
        let mut c = [Dd::ZERO; 16];
        for (i, &(num, den)) in BERNOULLI.iter().enumerate() {
            let n = (i + 1) as f64;
            c[i] = Dd::from_f64(num) / (Dd::from_f64(den) * Dd::from_f64(2.0 * n * (2.0 * n - 1.0)));
        }
        c
    })
}

/// Shift point for the asymptotic series; at y ≥ 30 sixteen terms are below 1e-36.
const STIRLING_MIN: f64 = 30.0;

/// ln|Γ(x)| and sign Γ(x) for a non-pole argument.
pub(crate) fn ln_gamma(x: Dd) -> (Dd, f64) {
    let mut y = x;
    let mut prod = Dd::ONE;
    while y.hi < STIRLING_MIN {
        prod = prod * y;
        y = y + Dd::ONE;
    }
    let c = stirling_coefficients();
    let inv = Dd::ONE / y;
    let inv2 = inv * inv;
    let mut series = Dd::ZERO;
    for k in (0..c.len()).rev() {
        series = series * inv2 + c[k];
    }
    series = series * inv;
    let lg = (y - Dd::from_f64(0.5)) * y.ln() - y + HALF_LN_2PI + series;
    let sign = if prod.hi < 0.0 { -1.0 } else { 1.0 };
    (lg - prod.abs().ln(), sign)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: Dd, hi: f64, lo: f64) -> f64 {
        ((a - Dd { hi, lo }).hi / hi).abs()
    }

    // Reference digits were produced with 50-digit arithmetic.
    #[test]
    fn exp_and_ln_reach_double_double_accuracy() {
        assert!(rel(Dd::from_f64(-20.0).exp(), 2.061153622438558e-09, -4.19755767595054e-26) < 1e-30);
        assert!(rel(Dd::from_f64(0.7).exp(), 2.0137527074704766, -2.0058243549764793e-16) < 1e-30);
        assert!(rel(Dd::from_f64(3.0).ln(), 1.0986122886681098, -9.07129723500153e-17) < 1e-30);
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        // ln(20!) with 20! = 2432902008176640000 exactly representable as a double-double.
        let (lg, s) = ln_gamma(Dd::from_f64(21.0));
        let exact = Dd::from_f64(2432902008176640000.0).ln();
        assert_eq!(s, 1.0);
        assert!(((lg - exact).hi / exact.hi).abs() < 1e-30);
        let (lg, s) = ln_gamma(Dd::from_f64(-0.5));
        // Γ(-1/2) = -2√π
        assert_eq!(s, -1.0);
        assert!((lg.hi - (2.0 * std::f64::consts::PI.sqrt()).ln()).abs() < 1e-15);
    }
}
