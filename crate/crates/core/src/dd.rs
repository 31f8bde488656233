//! Double-double arithmetic: an unevaluated sum `hi + lo` with `|lo| ≤ ulp(hi)/2`.
//!
//! Error-free transformations use Dekker splitting rather than FMA so that
//! results are bit-identical on targets without hardware FMA (wasm32).

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Rem, Sub, SubAssign};

use num_traits::{Num, One, Zero};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

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
fn split(a: f64) -> (f64, f64) {
    const SPLITTER: f64 = 134_217_729.0; // 2^27 + 1
    let t = SPLITTER * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    /// Exact sum of two doubles.
    pub fn from_sum(a: f64, b: f64) -> Self {
        let (hi, lo) = two_sum(a, b);
        Dd { hi, lo }
    }

    pub fn hi(self) -> f64 {
        self.hi
    }

    pub fn lo(self) -> f64 {
        self.lo
    }

    /// Nearest double.
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }

    pub fn abs(self) -> Self {
        if self.hi < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return if self.hi == 0.0 {
                Dd::ZERO
            } else {
                Dd::from(f64::NAN)
            };
        }
        let x = self.hi.sqrt();
        let (p, e) = two_prod(x, x);
        let r = (self - Dd { hi: p, lo: e }).hi;
        let (hi, lo) = quick_two_sum(x, r / (2.0 * x));
        Dd { hi, lo }
    }

    pub fn recip(self) -> Self {
        Dd::ONE / self
    }

    fn trunc(self) -> Self {
        let hi = self.hi.trunc();
        if hi != self.hi {
            return Dd { hi, lo: 0.0 };
        }
        let lo = if self.hi > 0.0 {
            self.lo.floor()
        } else {
            self.lo.ceil()
        };
        let (hi, lo) = quick_two_sum(hi, lo);
        Dd { hi, lo }
    }
}

impl From<f64> for Dd {
    fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }
}

impl fmt::Display for Dd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_f64(), f)
    }
}

impl PartialOrd for Dd {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.hi.partial_cmp(&other.hi)? {
            Ordering::Equal => self.lo.partial_cmp(&other.lo),
            o => Some(o),
        }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

impl Add for Dd {
    type Output = Dd;
    #[inline]
    fn add(self, b: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, b.hi);
        let (t1, t2) = two_sum(self.lo, b.lo);
        let (s1, s2) = quick_two_sum(s1, s2 + t1);
        let (hi, lo) = quick_two_sum(s1, s2 + t2);
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

impl Mul for Dd {
    type Output = Dd;
    #[inline]
    fn mul(self, b: Dd) -> Dd {
        let (p1, p2) = two_prod(self.hi, b.hi);
        let p2 = p2 + (self.hi * b.lo + self.lo * b.hi);
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    #[inline]
    fn div(self, b: Dd) -> Dd {
        let q1 = self.hi / b.hi;
        let r = self - b * Dd::from(q1);
        let q2 = r.hi / b.hi;
        let r = r - b * Dd::from(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from(q3)
    }
}

impl Rem for Dd {
    type Output = Dd;
    fn rem(self, b: Dd) -> Dd {
        self - b * (self / b).trunc()
    }
}

impl AddAssign for Dd {
    fn add_assign(&mut self, b: Dd) {
        *self = *self + b;
    }
}

impl SubAssign for Dd {
    fn sub_assign(&mut self, b: Dd) {
        *self = *self - b;
    }
}

impl MulAssign for Dd {
    fn mul_assign(&mut self, b: Dd) {
        *self = *self * b;
    }
}

impl Zero for Dd {
    fn zero() -> Self {
        Dd::ZERO
    }
    fn is_zero(&self) -> bool {
        self.hi == 0.0
    }
}

impl One for Dd {
    fn one() -> Self {
        Dd::ONE
    }
}

impl Num for Dd {
    type FromStrRadixErr = std::num::ParseFloatError;
    fn from_str_radix(s: &str, radix: u32) -> Result<Self, Self::FromStrRadixErr> {
        if radix != 10 {
            // only decimal is meaningful here; force a parse error
            return "".parse::<f64>().map(Dd::from);
        }
        s.parse::<f64>().map(Dd::from)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dd(x: f64) -> Dd {
        Dd::from(x)
    }

    #[test]
    fn quotient_carries_low_word() {
        let q = dd(1.0) / dd(3.0);
        assert!(q.lo() != 0.0);
        let back = q * dd(3.0) - dd(1.0);
        assert!(back.abs().to_f64() < 1e-31);
        // 1 / fl(0.001) = 999.99999999999997918...
        let r = dd(1.0) / dd(1e-3);
        assert_eq!(r.hi(), 1000.0);
        assert!((r.lo() + 2.0816681711721685e-14).abs() < 1e-28);
    }

    #[test]
    fn resolves_below_double_epsilon() {
        let x = dd(1.0) + dd(2f64.powi(-60));
        assert_eq!((x - dd(1.0)).to_f64(), 2f64.powi(-60));
    }

    #[test]
    fn sqrt_squares_back() {
        let s = dd(2.0).sqrt();
        assert!((s * s - dd(2.0)).abs().to_f64() < 1e-31);
        assert_eq!(dd(0.0).sqrt(), Dd::ZERO);
        assert!(dd(-1.0).sqrt().hi().is_nan());
    }

    #[test]
    fn ordering_uses_low_word() {
        let a = Dd::from_sum(1.0, 1e-20);
        let b = dd(1.0);
        assert!(a > b && b < a && a != b);
    }

    #[test]
    fn remainder_and_parse() {
        assert_eq!((dd(7.0) % dd(3.0)).to_f64(), 1.0);
        assert_eq!(Dd::from_str_radix("2.5", 10).unwrap(), dd(2.5));
        assert!(Dd::from_str_radix("2.5", 16).is_err());
    }

    proptest! {
        #[test]
        fn product_is_exact_for_doubles(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            // the exact product of two doubles fits in 106 bits
            let p = dd(a) * dd(b);
            let (h, l) = (p.hi(), p.lo());
            prop_assert_eq!(h, a * b);
            prop_assert_eq!(l, a.mul_add(b, -(a * b)));
        }

        #[test]
        fn division_inverts_multiplication(a in 1e-3f64..1e3, b in 1e-3f64..1e3) {
            let q = dd(a) / dd(b);
            let err = (q * dd(b) - dd(a)).abs().to_f64() / a;
            prop_assert!(err < 1e-30);
        }

        #[test]
        fn sum_is_exact_for_doubles(a in -1e3f64..1e3, b in -1e-12f64..1e-12) {
            let s = dd(a) + dd(b);
            prop_assert_eq!((s - dd(a)).to_f64(), b);
        }
    }
}
