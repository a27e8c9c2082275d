//! Double-double real and complex arithmetic (about 32 significant digits).
//!
//! Nested finite differences amplify sample noise by roughly `h^-D` for `D`
//! nested derivatives; carrying the lattice fields in double-double keeps that
//! noise far below the oracle tolerance at the depths the identities reach.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
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
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

const LN2: Dd = Dd { hi: std::f64::consts::LN_2, lo: 2.319_046_813_846_299_6e-17 };

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };
    pub const ONE: Dd = Dd { hi: 1.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn mul_f64(self, b: f64) -> Self {
        let (p, e) = two_prod(self.hi, b);
        let (hi, lo) = quick_two_sum(p, e + self.lo * b);
        Dd { hi, lo }
    }

    pub fn div(self, b: Dd) -> Self {
        let q1 = self.hi / b.hi;
        let r = self - b.mul_f64(q1);
        let q2 = r.hi / b.hi;
        let r = r - b.mul_f64(q2);
        let q3 = r.hi / b.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::from_f64(q3)
    }

    pub fn recip(self) -> Self {
        Dd::ONE.div(self)
    }

    pub fn sqrt(self) -> Self {
        if self.hi <= 0.0 {
            return Dd::ZERO;
        }
        let s = self.hi.sqrt();
        let y = Dd::from_f64(s);
        y + (self - y * y).mul_f64(0.5 / s)
    }

    pub fn powi(self, n: i32) -> Self {
        let mut base = if n < 0 { self.recip() } else { self };
        let mut e = n.unsigned_abs();
        let mut acc = Dd::ONE;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            e >>= 1;
        }
        acc
    }

    pub fn exp(self) -> Self {
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = (self - LN2.mul_f64(k)).mul_f64(1.0 / f64::from(1 << SQUARINGS));
        // Taylor series; |r| < 4e-4 so 10 terms are far past double-double precision.
        let mut term = Dd::ONE;
        let mut sum = Dd::ONE;
        for n in 1..=10 {
            term = (term * r).div(Dd::from_f64(f64::from(n)));
            sum = sum + term;
        }
        for _ in 0..SQUARINGS {
            sum = sum * sum;
        }
        let scale = 2f64.powi(k as i32);
        Dd { hi: sum.hi * scale, lo: sum.lo * scale }
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
        let (hi, lo) = quick_two_sum(p, e + (self.hi * b.lo + self.lo * b.hi));
        Dd { hi, lo }
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub const ZERO: Cdd = Cdd { re: Dd::ZERO, im: Dd::ZERO };

    #[inline]
    pub fn from_c64(z: Complex64) -> Self {
        Cdd { re: Dd::from_f64(z.re), im: Dd::from_f64(z.im) }
    }

    #[inline]
    pub fn to_c64(self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    #[inline]
    pub fn scale(self, s: Dd) -> Self {
        Cdd { re: self.re * s, im: self.im * s }
    }

    #[inline]
    pub fn scale_f64(self, s: f64) -> Self {
        Cdd { re: self.re.mul_f64(s), im: self.im.mul_f64(s) }
    }

    /// Product with an f64 complex constant.
    #[inline]
    pub fn mul_c64(self, z: Complex64) -> Self {
        Cdd {
            re: self.re.mul_f64(z.re) - self.im.mul_f64(z.im),
            im: self.re.mul_f64(z.im) + self.im.mul_f64(z.re),
        }
    }

    /// Multiplication by `-i`.
    #[inline]
    pub fn mul_neg_i(self) -> Self {
        Cdd { re: self.im, im: -self.re }
    }
}

impl Add for Cdd {
    type Output = Cdd;
    #[inline]
    fn add(self, b: Cdd) -> Cdd {
        Cdd { re: self.re + b.re, im: self.im + b.im }
    }
}

impl AddAssign for Cdd {
    #[inline]
    fn add_assign(&mut self, b: Cdd) {
        *self = *self + b;
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    #[inline]
    fn sub(self, b: Cdd) -> Cdd {
        Cdd { re: self.re - b.re, im: self.im - b.im }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    #[inline]
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    #[inline]
    fn mul(self, b: Cdd) -> Cdd {
        Cdd { re: self.re * b.re - self.im * b.im, im: self.re * b.im + self.im * b.re }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Dd, b: Dd, tol: f64) -> bool {
        (a - b).to_f64().abs() <= tol * b.to_f64().abs().max(1e-300)
    }

    #[test]
    fn exact_cancellation_beyond_f64() {
        let third = Dd::ONE.div(Dd::from_f64(3.0));
        let back = third.mul_f64(3.0) - Dd::ONE;
        assert!(back.to_f64().abs() < 1e-31);
        let tiny = Dd::from_f64(1.0) + Dd::from_f64(1e-20);
        assert_eq!((tiny - Dd::ONE).to_f64(), 1e-20);
    }

    #[test]
    fn sqrt_and_powers() {
        let two = Dd::from_f64(2.0);
        let s = two.sqrt();
        assert!(close(s * s, two, 1e-31));
        assert!(close(two.powi(-3), Dd::from_f64(0.125), 1e-31));
        assert!(close(Dd::from_f64(1.5).powi(4), Dd::from_f64(5.0625), 1e-31));
    }

    #[test]
    fn exp_is_accurate_and_multiplicative() {
        for x in [-3.7, -1.0, -0.25, 0.0, 0.5, 2.2] {
            let e = Dd::from_f64(x).exp();
            assert!((e.to_f64() - x.exp()).abs() <= 4e-16 * x.exp(), "{x}");
            let h = Dd::from_f64(x / 2.0).exp();
            assert!(close(h * h, e, 1e-28), "{x}");
        }
        let e1 = Dd::ONE.exp();
        // e to 32 digits: 2.7182818284590452353602874713527
        let want = Dd { hi: std::f64::consts::E, lo: 1.445_646_891_729_250_2e-16 };
        assert!(close(e1, want, 1e-28));
    }

    #[test]
    fn complex_ops() {
        let z = Cdd::from_c64(Complex64::new(1.0, 2.0));
        let w = Cdd::from_c64(Complex64::new(-0.5, 3.0));
        assert_eq!((z * w).to_c64(), Complex64::new(1.0, 2.0) * Complex64::new(-0.5, 3.0));
        assert_eq!(z.mul_neg_i().to_c64(), Complex64::new(2.0, -1.0));
    }
}
