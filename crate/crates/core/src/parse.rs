//! Recursive-descent parser for the operator grammar.
//!
//! ```text
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := atom ['^' int]
//! atom   := int | 'i' | 'a' | 'm' | '(' expr ')'
//!         | '[' expr ',' expr ']' | '{' expr ',' expr '}'
//!         | vector '.' vector
//!         | 'r' ['^' int] | rhat_i | p_i | l_i | alpha_i | Sigma_i | sigma_i
//!         | 'beta' | 'gamma5' | 'id' | catalog-name
//! vector := 'rhat' | 'p' | 'l' | 'alpha' | 'Sigma' | 'sigma' | catalog-vector
//! ```
//!
//! Subexpressions that contain no operator are folded into a single scalar,
//! so printing a parsed expression and parsing it again reproduces the same tree.

use crate::clifford::Generator;
use crate::coeff::ScalarCoeff;
use crate::error::ParseError;
use crate::expr::{Expr, VectorExpr};

/// Tells the parser which catalog names exist.
pub trait NameResolver {
    fn is_operator(&self, name: &str) -> bool;
    fn is_vector(&self, base: &str) -> bool;
}

/// Accepts every identifier as an operator name; no catalog vectors.
pub struct AnyName;

impl NameResolver for AnyName {
    fn is_operator(&self, _: &str) -> bool {
        true
    }
    fn is_vector(&self, _: &str) -> bool {
        false
    }
}

pub fn parse_with(src: &str, names: &dyn NameResolver) -> Result<Expr, ParseError> {
    let mut p = Parser { src: src.as_bytes(), pos: 0, names };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    names: &'a dyn NameResolver,
}

fn as_scalar(e: &Expr) -> Option<&ScalarCoeff> {
    match e {
        Expr::Scalar(c) => Some(c),
        _ => None,
    }
}

impl Parser<'_> {
    fn err(&self, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.src, self.pos, msg)
    }

    fn err_at(&self, pos: usize, msg: impl Into<String>) -> ParseError {
        ParseError::at(self.src, pos, msg)
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

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = Vec::new();
        let leading_neg = self.peek() == Some(b'-');
        if leading_neg {
            self.pos += 1;
            items.push(fold_neg(self.term()?));
        } else {
            items.push(self.term()?);
        }
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let t = self.term()?;
            items.push(if c == b'-' { fold_neg(t) } else { t });
        }
        if items.len() == 1 {
            return Ok(items.pop().unwrap());
        }
        if items.iter().all(|t| as_scalar(t).is_some()) {
            let sum = items.iter().filter_map(as_scalar).fold(ScalarCoeff::zero(), |acc, c| &acc + c);
            return Ok(Expr::Scalar(sum));
        }
        Ok(Expr::Add(items))
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.factor()?];
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let start = self.pos;
            let rhs = self.factor()?;
            let rhs = if c == b'/' {
                let inv = as_scalar(&rhs)
                    .and_then(ScalarCoeff::inv_monomial)
                    .ok_or_else(|| self.err_at(start, "divisor must be a nonzero scalar monomial"))?;
                Expr::Scalar(inv)
            } else {
                rhs
            };
            match (factors.last_mut(), &rhs) {
                (Some(Expr::Scalar(prev)), Expr::Scalar(c)) => *prev = &*prev * c,
                _ => factors.push(rhs),
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Mul(factors) })
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        let start = self.pos;
        let n = self.int()?;
        if let Expr::Scalar(c) = &base {
            let n = i32::try_from(n).map_err(|_| self.err_at(start, "exponent out of range"))?;
            return c
                .powi(n)
                .map(Expr::Scalar)
                .ok_or_else(|| self.err_at(start, "negative power of a non-monomial scalar"));
        }
        let n = u32::try_from(n).map_err(|_| self.err_at(start, "operator powers must be nonnegative"))?;
        Ok(Expr::Pow(Box::new(base), n))
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
            .ok_or_else(|| self.err_at(start, "expected integer"))
    }

    fn ident(&mut self) -> Option<&str> {
        self.skip_ws();
        let start = self.pos;
        match self.src.get(self.pos) {
            Some(c) if c.is_ascii_alphabetic() => {}
            _ => return None,
        }
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).ok()
    }

    fn vector(&mut self) -> Result<VectorExpr, ParseError> {
        let start = self.pos;
        let id = self.ident().map(str::to_string).ok_or_else(|| self.err("expected vector name"))?;
        if let Some(v) = VectorExpr::from_name(&id) {
            return Ok(v);
        }
        if self.names.is_vector(&id) {
            return Ok(VectorExpr::Named(id));
        }
        Err(self.err_at(start, format!("unknown vector `{id}`")))
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(open @ (b'[' | b'{')) => {
                self.pos += 1;
                let x = self.expr()?;
                self.expect(b',')?;
                let y = self.expr()?;
                if open == b'[' {
                    self.expect(b']')?;
                    Ok(Expr::commutator(x, y))
                } else {
                    self.expect(b'}')?;
                    Ok(Expr::anticommutator(x, y))
                }
            }
            Some(c) if c.is_ascii_digit() => Ok(Expr::int(self.int()?)),
            Some(c) if c.is_ascii_alphabetic() => self.named_atom(),
            Some(c) => Err(self.err(format!("unexpected character '{}'", c as char))),
        }
    }

    fn named_atom(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let id = self.ident().unwrap_or_default().to_string();
        match id.as_str() {
            "i" => return Ok(Expr::Scalar(ScalarCoeff::i())),
            "a" => return Ok(Expr::Scalar(ScalarCoeff::a())),
            "m" => return Ok(Expr::Scalar(ScalarCoeff::m())),
            "beta" => return Ok(Expr::gen(Generator::Beta)),
            "gamma5" => return Ok(Expr::gen(Generator::Gamma5)),
            "id" => return Ok(Expr::gen(Generator::Id)),
            "r" => {
                if self.peek() == Some(b'^') {
                    self.pos += 1;
                    let at = self.pos;
                    let n = self.int()?;
                    let n = i32::try_from(n).map_err(|_| self.err_at(at, "exponent out of range"))?;
                    return Ok(Expr::r(n));
                }
                return Ok(Expr::r(1));
            }
            _ => {}
        }
        if let Some(v) = VectorExpr::from_name(&id) {
            return self.dot_rest(v);
        }
        if let Some((base, idx)) = id.rsplit_once('_') {
            if let Ok(i) = idx.parse::<u8>() {
                let make: Option<fn(u8) -> Expr> = match base {
                    "rhat" => Some(Expr::rhat),
                    "p" => Some(Expr::p),
                    "l" => Some(Expr::l),
                    "alpha" => Some(|i| Expr::gen(Generator::Alpha(i))),
                    "Sigma" => Some(|i| Expr::gen(Generator::SigmaBig(i))),
                    "sigma" => Some(|i| Expr::gen(Generator::PauliSigma(i))),
                    _ => None,
                };
                if let Some(make) = make {
                    if !(1..=3).contains(&i) {
                        return Err(self.err_at(start, format!("index {i} out of range 1..3")));
                    }
                    return Ok(make(i));
                }
            }
        }
        if self.names.is_vector(&id) {
            return self.dot_rest(VectorExpr::Named(id));
        }
        if self.names.is_operator(&id) {
            return Ok(Expr::Name(id));
        }
        Err(self.err_at(start, format!("unknown symbol `{id}`")))
    }

    fn dot_rest(&mut self, u: VectorExpr) -> Result<Expr, ParseError> {
        if self.peek() != Some(b'.') {
            return Err(self.err(format!("vector `{}` must be contracted with '.'", u.name())));
        }
        self.pos += 1;
        let v = self.vector()?;
        Ok(Expr::Dot(u, v))
    }
}

fn fold_neg(e: Expr) -> Expr {
    match e {
        Expr::Scalar(c) => Expr::Scalar(-c),
        e => Expr::Neg(Box::new(e)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Expr {
        parse_with(s, &AnyName).unwrap()
    }

    #[test]
    fn scalars_fold() {
        assert_eq!(parse("2*i/3"), Expr::Scalar("(2/3)*i".parse().unwrap()));
        assert_eq!(parse("a - a"), Expr::zero());
        assert_eq!(parse("-(2)"), Expr::int(-2));
    }

    #[test]
    fn generators_and_dots() {
        assert_eq!(parse("r^-2"), Expr::r(-2));
        assert_eq!(parse("Sigma . rhat"), Expr::Dot(VectorExpr::Sigma, VectorExpr::Rhat));
        assert_eq!(parse("[l_1, p_2]"), Expr::commutator(Expr::l(1), Expr::p(2)));
    }

    #[test]
    fn errors_carry_position() {
        let e = parse_with("p_4", &AnyName).unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
        let e = parse_with("1 +\n  * p_1", &AnyName).unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert!(parse_with("Sigma", &AnyName).is_err());
        assert!(parse_with("p_1 / p_2", &AnyName).is_err());
        assert!(parse_with("(p_1", &AnyName).is_err());
    }

    #[test]
    fn print_parse_fixpoint() {
        for s in [
            "-(2/3)*i*a^-1*m^2*r^-1*rhat_1^2*p_3*Sigma_1",
            "x - y*z + (-2)*w",
            "[A2, H] + {K, Sigma . p}",
            "-(x + y) - (u*v)^2",
            "(r^-1)^3 + r",
        ] {
            let e = parse(s);
            assert_eq!(parse(&e.to_string()), e, "{s} -> {e}");
        }
    }
}
