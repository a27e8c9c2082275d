//! Exact scalar arithmetic.
//!
//! [`GaussianRational`] is a complex number with rational parts; [`ScalarCoeff`]
//! is a Laurent polynomial in the commuting symbols `a` (Coulomb coupling) and
//! `m` (mass) with Gaussian-rational coefficients. Nothing here ever touches a
//! float.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, Zero};

use crate::error::ParseError;

fn radd(x: &Rational64, y: &Rational64) -> Rational64 {
    x.checked_add(y).expect("rational overflow in addition")
}

fn rsub(x: &Rational64, y: &Rational64) -> Rational64 {
    x.checked_sub(y).expect("rational overflow in subtraction")
}

fn rmul(x: &Rational64, y: &Rational64) -> Rational64 {
    x.checked_mul(y).expect("rational overflow in multiplication")
}

/// `re + i·im` with exact rational parts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussianRational {
    pub re: Rational64,
    pub im: Rational64,
}

impl GaussianRational {
    pub const fn new(re: Rational64, im: Rational64) -> Self {
        Self { re, im }
    }

    pub fn int(n: i64) -> Self {
        Self::new(Rational64::from_integer(n), Rational64::zero())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::new(Rational64::new(num, den), Rational64::zero())
    }

    pub fn i() -> Self {
        Self::new(Rational64::zero(), Rational64::one())
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re, -self.im)
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let norm = radd(&rmul(&self.re, &self.re), &rmul(&self.im, &self.im));
        Some(Self::new(self.re / norm, -self.im / norm))
    }

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        match k.rem_euclid(4) {
            0 => Self::one(),
            1 => Self::i(),
            2 => Self::int(-1),
            _ => -Self::i(),
        }
    }

    pub fn to_f64_pair(&self) -> (f64, f64) {
        let f = |q: &Rational64| *q.numer() as f64 / *q.denom() as f64;
        (f(&self.re), f(&self.im))
    }
}

impl Add for GaussianRational {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(radd(&self.re, &o.re), radd(&self.im, &o.im))
    }
}

impl Sub for GaussianRational {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(rsub(&self.re, &o.re), rsub(&self.im, &o.im))
    }
}

impl Mul for GaussianRational {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let re = rsub(&rmul(&self.re, &o.re), &rmul(&self.im, &o.im));
        let im = radd(&rmul(&self.re, &o.im), &rmul(&self.im, &o.re));
        Self::new(re, im)
    }
}

impl Neg for GaussianRational {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

fn fmt_rational(q: &Rational64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "{}/{}", q.numer(), q.denom())
    }
}

/// Writes `|q|` wrapped in parentheses when it is a proper fraction.
fn fmt_abs_factor(q: &Rational64, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let q = q.abs();
    if q.is_integer() {
        write!(f, "{}", q.numer())
    } else {
        write!(f, "({}/{})", q.numer(), q.denom())
    }
}

impl fmt::Display for GaussianRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.re.is_zero(), self.im.is_zero()) {
            (_, true) => fmt_rational(&self.re, f),
            (true, false) => {
                if self.im.is_negative() {
                    write!(f, "-")?;
                }
                if !self.im.abs().is_one() {
                    fmt_abs_factor(&self.im, f)?;
                    write!(f, "*")?;
                }
                write!(f, "i")
            }
            (false, false) => {
                write!(f, "(")?;
                fmt_rational(&self.re, f)?;
                write!(f, "{}", if self.im.is_negative() { " - " } else { " + " })?;
                if !self.im.abs().is_one() {
                    fmt_abs_factor(&self.im, f)?;
                    write!(f, "*")?;
                }
                write!(f, "i)")
            }
        }
    }
}

/// Exponent pair `(power of a, power of m)`.
pub type Exponents = (i32, i32);

/// Laurent polynomial in `a`, `m` over the Gaussian rationals, stored sparsely.
/// Zero coefficients are never stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScalarCoeff {
    terms: BTreeMap<Exponents, GaussianRational>,
}

impl ScalarCoeff {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(GaussianRational::one())
    }

    pub fn i() -> Self {
        Self::constant(GaussianRational::i())
    }

    pub fn int(n: i64) -> Self {
        Self::constant(GaussianRational::int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Self::constant(GaussianRational::ratio(num, den))
    }

    pub fn constant(c: GaussianRational) -> Self {
        Self::monomial(c, 0, 0)
    }

    /// `c · a^pa · m^pm`
    pub fn monomial(c: GaussianRational, pa: i32, pm: i32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((pa, pm), c);
        }
        Self { terms }
    }

    pub fn a() -> Self {
        Self::monomial(GaussianRational::one(), 1, 0)
    }

    pub fn m() -> Self {
        Self::monomial(GaussianRational::one(), 0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1 && self.terms.get(&(0, 0)).is_some_and(|c| c.is_one())
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The single term, if this is a monomial.
    pub fn as_monomial(&self) -> Option<(GaussianRational, i32, i32)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (&(pa, pm), &c) = self.terms.iter().next()?;
        Some((c, pa, pm))
    }

    /// Inverse of a monomial; `None` for zero or multi-term values.
    pub fn inv_monomial(&self) -> Option<Self> {
        let (c, pa, pm) = self.as_monomial()?;
        Some(Self::monomial(c.inv()?, -pa, -pm))
    }

    pub fn scale(&self, c: GaussianRational) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self { terms: self.terms.iter().map(|(k, v)| (*k, *v * c)).collect() }
    }

    pub fn pow(&self, n: u32) -> Self {
        (0..n).fold(Self::one(), |acc, _| &acc * self)
    }

    /// Integer power, allowing negative exponents on monomials.
    pub fn powi(&self, n: i32) -> Option<Self> {
        if n >= 0 {
            Some(self.pow(n as u32))
        } else {
            Some(self.inv_monomial()?.pow(n.unsigned_abs()))
        }
    }

    pub fn add_term(&mut self, e: Exponents, c: GaussianRational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let s = *o.get() + c;
                if s.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = s;
                }
            }
        }
    }

    /// Substitutes numbers for `a` and `m` and returns a complex value.
    pub fn eval(&self, a: f64, m: f64) -> num_complex::Complex64 {
        self.terms
            .iter()
            .map(|(&(pa, pm), c)| {
                let (re, im) = c.to_f64_pair();
                num_complex::Complex64::new(re, im) * a.powi(pa) * m.powi(pm)
            })
            .sum()
    }

    /// Highest power of `a` present, or `None` for zero.
    pub fn max_a_degree(&self) -> Option<i32> {
        self.terms.keys().map(|k| k.0).max()
    }
}

impl AddAssign<&ScalarCoeff> for ScalarCoeff {
    fn add_assign(&mut self, o: &ScalarCoeff) {
        for (e, c) in &o.terms {
            self.add_term(*e, *c);
        }
    }
}

impl Add for &ScalarCoeff {
    type Output = ScalarCoeff;
    fn add(self, o: &ScalarCoeff) -> ScalarCoeff {
        let mut out = self.clone();
        out += o;
        out
    }
}

impl Add for ScalarCoeff {
    type Output = ScalarCoeff;
    fn add(mut self, o: ScalarCoeff) -> ScalarCoeff {
        self += &o;
        self
    }
}

impl Neg for &ScalarCoeff {
    type Output = ScalarCoeff;
    fn neg(self) -> ScalarCoeff {
        ScalarCoeff { terms: self.terms.iter().map(|(k, v)| (*k, -*v)).collect() }
    }
}

impl Neg for ScalarCoeff {
    type Output = ScalarCoeff;
    fn neg(self) -> ScalarCoeff {
        -&self
    }
}

impl Sub for &ScalarCoeff {
    type Output = ScalarCoeff;
    fn sub(self, o: &ScalarCoeff) -> ScalarCoeff {
        self + &(-o)
    }
}

impl Sub for ScalarCoeff {
    type Output = ScalarCoeff;
    fn sub(self, o: ScalarCoeff) -> ScalarCoeff {
        &self - &o
    }
}

impl Mul for &ScalarCoeff {
    type Output = ScalarCoeff;
    fn mul(self, o: &ScalarCoeff) -> ScalarCoeff {
        let mut out = ScalarCoeff::zero();
        for (&(a1, m1), c1) in &self.terms {
            for (&(a2, m2), c2) in &o.terms {
                out.add_term((a1 + a2, m1 + m2), *c1 * *c2);
            }
        }
        out
    }
}

impl Mul for ScalarCoeff {
    type Output = ScalarCoeff;
    fn mul(self, o: ScalarCoeff) -> ScalarCoeff {
        &self * &o
    }
}

impl From<GaussianRational> for ScalarCoeff {
    fn from(c: GaussianRational) -> Self {
        Self::constant(c)
    }
}

fn fmt_symbol(f: &mut fmt::Formatter<'_>, name: &str, p: i32) -> fmt::Result {
    match p {
        0 => Ok(()),
        1 => write!(f, "*{name}"),
        _ => write!(f, "*{name}^{p}"),
    }
}

impl ScalarCoeff {
    /// Writes one term with its sign handled by the caller: `mag` is the
    /// coefficient with the leading sign already stripped.
    fn fmt_term(f: &mut fmt::Formatter<'_>, c: &GaussianRational, pa: i32, pm: i32) -> fmt::Result {
        let bare = pa == 0 && pm == 0;
        if c.is_one() && !bare {
            // "a^2" rather than "1*a^2"
            let mut s = String::new();
            if pa != 0 {
                s.push('a');
                if pa != 1 {
                    s.push_str(&format!("^{pa}"));
                }
            }
            if pm != 0 {
                if !s.is_empty() {
                    s.push('*');
                }
                s.push('m');
                if pm != 1 {
                    s.push_str(&format!("^{pm}"));
                }
            }
            return write!(f, "{s}");
        }
        if c.im.is_zero() && !c.re.is_integer() && !bare {
            write!(f, "({}/{})", c.re.numer(), c.re.denom())?;
        } else {
            write!(f, "{c}")?;
        }
        fmt_symbol(f, "a", pa)?;
        fmt_symbol(f, "m", pm)
    }

    /// True when the leading printed character of this term would be '-'.
    fn term_is_negative(c: &GaussianRational) -> bool {
        if c.re.is_zero() {
            c.im.is_negative()
        } else {
            c.re.is_negative() && c.im.is_zero()
        }
    }
}

impl fmt::Display for ScalarCoeff {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (&(pa, pm), c)) in self.terms.iter().enumerate() {
            let neg = Self::term_is_negative(c);
            let c = if neg { -*c } else { *c };
            match (n, neg) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            Self::fmt_term(f, &c, pa, pm)?;
        }
        Ok(())
    }
}

impl FromStr for ScalarCoeff {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut p = CoeffParser { src: s.as_bytes(), pos: 0 };
        let v = p.expr()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return Err(p.err("unexpected trailing input"));
        }
        Ok(v)
    }
}

/// Recursive-descent parser for the coefficient grammar: sums and products of
/// integers, `i`, `a`, `m`, with `/` (monomial divisors only) and integer `^`.
struct CoeffParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl CoeffParser<'_> {
    fn err(&self, msg: &str) -> ParseError {
        ParseError::at(self.src, self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<ScalarCoeff, ParseError> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                -self.term()?
            }
            _ => self.term()?,
        };
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            acc = if c == b'+' { acc + t } else { acc - t };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<ScalarCoeff, ParseError> {
        let mut acc = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            acc = if c == b'*' {
                &acc * &rhs
            } else {
                let inv = rhs.inv_monomial().ok_or_else(|| self.err("divisor must be a nonzero monomial"))?;
                &acc * &inv
            };
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<ScalarCoeff, ParseError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.int()?;
            let n = i32::try_from(n).map_err(|_| self.err("exponent out of range"))?;
            return base.powi(n).ok_or_else(|| self.err("negative power of a non-monomial"));
        }
        Ok(base)
    }

    fn int(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let start = self.pos;
        if self.src.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| ParseError::at(self.src, start, "expected integer"))
    }

    fn atom(&mut self) -> Result<ScalarCoeff, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(ScalarCoeff::i())
            }
            Some(b'a') => {
                self.pos += 1;
                Ok(ScalarCoeff::a())
            }
            Some(b'm') => {
                self.pos += 1;
                Ok(ScalarCoeff::m())
            }
            Some(c) if c.is_ascii_digit() => Ok(ScalarCoeff::int(self.int()?)),
            _ => Err(self.err("expected number, i, a, m or '('")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ma_inv() -> ScalarCoeff {
        ScalarCoeff::monomial(GaussianRational::one(), -1, -1)
    }

    #[test]
    fn additive_inverse_of_one_over_ma() {
        assert!((ma_inv() + -ma_inv()).is_zero());
    }

    #[test]
    fn disjoint_exponents_stay_separate() {
        let s = &ScalarCoeff::a().pow(2) + &ScalarCoeff::m().pow(2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.to_string(), "m^2 + a^2");
    }

    #[test]
    fn like_terms_collect() {
        let ia = &ScalarCoeff::i() * &ScalarCoeff::a();
        let s = &ia + &ia;
        assert_eq!(s, ScalarCoeff::monomial(GaussianRational::new(0.into(), 2.into()), 1, 0));
    }

    #[test]
    fn products() {
        let ma = &ScalarCoeff::m() * &ScalarCoeff::a();
        assert!((&ma_inv() * &ma).is_one());
        assert_eq!(&ScalarCoeff::i() * &ScalarCoeff::i(), ScalarCoeff::int(-1));
        let a_over_m = ScalarCoeff::monomial(GaussianRational::one(), 1, -1);
        assert_eq!(&a_over_m * &a_over_m, ScalarCoeff::monomial(GaussianRational::one(), 2, -2));
    }

    #[test]
    fn zero_tests() {
        assert!(ScalarCoeff::zero().is_zero());
        assert!((ScalarCoeff::a() - ScalarCoeff::a()).is_zero());
        assert!(!(ScalarCoeff::a() - ScalarCoeff::m()).is_zero());
    }

    #[test]
    fn rendering() {
        let c = ScalarCoeff::monomial(GaussianRational::new(0.into(), Rational64::new(2, 3)), -1, 2);
        assert_eq!(c.to_string(), "(2/3)*i*a^-1*m^2");
        assert_eq!(c.to_string().parse::<ScalarCoeff>().unwrap(), c);
        let mixed = ScalarCoeff::constant(GaussianRational::new(Rational64::new(1, 2), Rational64::new(-3, 4)));
        assert_eq!(mixed.to_string(), "(1/2 - (3/4)*i)");
        assert_eq!(mixed.to_string().parse::<ScalarCoeff>().unwrap(), mixed);
    }

    #[test]
    fn parse_errors() {
        assert!("a +".parse::<ScalarCoeff>().is_err());
        assert!("1/(a+m)".parse::<ScalarCoeff>().is_err());
        assert!("x".parse::<ScalarCoeff>().is_err());
    }

    fn arb_gauss() -> impl Strategy<Value = GaussianRational> {
        (-6i64..6, 1i64..5, -6i64..6, 1i64..5)
            .prop_map(|(a, b, c, d)| GaussianRational::new(Rational64::new(a, b), Rational64::new(c, d)))
    }

    fn arb_coeff() -> impl Strategy<Value = ScalarCoeff> {
        prop::collection::vec((arb_gauss(), -3i32..3, -3i32..3), 0..4).prop_map(|ts| {
            let mut s = ScalarCoeff::zero();
            for (c, pa, pm) in ts {
                s.add_term((pa, pm), c);
            }
            s
        })
    }

    proptest! {
        #[test]
        fn ring_axioms(x in arb_coeff(), y in arb_coeff(), z in arb_coeff()) {
            prop_assert_eq!(&(&x + &y) + &z, &x + &(&y + &z));
            prop_assert_eq!(&x * &(&y + &z), &(&x * &y) + &(&x * &z));
            prop_assert_eq!(&x * &y, &y * &x);
            prop_assert_eq!(&(&x * &y) * &z, &x * &(&y * &z));
            prop_assert!(x.terms().all(|(_, c)| !c.is_zero()));
        }

        #[test]
        fn print_parse_round_trip(x in arb_coeff()) {
            let back: ScalarCoeff = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
