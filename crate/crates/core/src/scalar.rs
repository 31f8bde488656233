//! Double-double scalars.
//!
//! At small adiabatic parameters the on-shell amplitudes are of order ε and
//! emerge from cancellations between O(1) terms, so every state and bracket
//! is carried in double-double precision (~32 significant digits). Values
//! cross the public boundary as `f64` / `Complex64`.

use num_complex::{Complex, Complex64};
use num_traits::Zero;

use crate::dd::Dd;

pub type Real = Dd;
pub type Cx = Complex<Dd>;

/// Guard added to residual denominators so that `0/0` reads as `0`.
pub const RESIDUAL_FLOOR: f64 = 1e-300;

#[inline]
pub fn real(x: f64) -> Real {
    Dd::from(x)
}

#[inline]
pub fn cx(re: f64, im: f64) -> Cx {
    Complex::new(real(re), real(im))
}

#[inline]
pub fn cx_real(re: Real) -> Cx {
    Complex::new(re, Real::zero())
}

#[inline]
pub fn from_c64(z: Complex64) -> Cx {
    cx(z.re, z.im)
}

#[inline]
pub fn to_f64(x: Real) -> f64 {
    x.to_f64()
}

#[inline]
pub fn to_c64(z: Cx) -> Complex64 {
    Complex64::new(to_f64(z.re), to_f64(z.im))
}

/// `i·s` for real `s`.
#[inline]
pub fn imag_unit_times(s: Real) -> Cx {
    Complex::new(Real::zero(), s)
}

#[inline]
pub fn abs(z: Cx) -> Real {
    norm_sqr(z).sqrt()
}

#[inline]
pub fn norm_sqr(z: Cx) -> Real {
    z.re * z.re + z.im * z.im
}

/// `|a - b| / (|a| + |b| + floor)` evaluated in double-double, returned as `f64`.
pub fn relative_gap(a: Cx, b: Cx) -> f64 {
    let num = abs(a - b);
    let den = abs(a) + abs(b) + real(RESIDUAL_FLOOR);
    to_f64(num / den)
}

/// Vector version of [`relative_gap`] in the Euclidean norm.
pub fn relative_gap_vec(a: &[Cx], b: &[Cx]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let diff: Vec<Cx> = a.iter().zip(b).map(|(x, y)| *x - *y).collect();
    let num = vec_norm(&diff);
    let den = vec_norm(a) + vec_norm(b) + real(RESIDUAL_FLOOR);
    to_f64(num / den)
}

pub fn vec_norm(v: &[Cx]) -> Real {
    v.iter().fold(Real::zero(), |acc, z| acc + norm_sqr(*z)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn carries_more_than_double_precision() {
        // (1 + 2^-60) - 1 vanishes in f64 but not in double-double.
        let tiny = 2f64.powi(-60);
        let x = real(1.0) + real(tiny);
        assert_eq!(to_f64(x - real(1.0)), tiny);
    }

    #[test]
    fn relative_gap_of_zeros_is_zero() {
        assert_eq!(relative_gap(Cx::zero(), Cx::zero()), 0.0);
        assert_eq!(relative_gap_vec(&[Cx::zero(); 3], &[Cx::zero(); 3]), 0.0);
    }

    #[test]
    fn complex_roundtrip() {
        let z = Complex64::new(0.25, -3.5);
        assert_eq!(to_c64(from_c64(z)), z);
        assert_eq!(to_f64(abs(cx(3.0, 4.0))), 5.0);
    }
}
