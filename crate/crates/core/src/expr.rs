//! Unreduced operator expressions.
//!
//! [`Expr`] is the syntax tree produced by the parser and by the catalog
//! builders. The symbolic engine lowers it to a canonical
//! [`OperatorExpr`](crate::opalg::OperatorExpr); the numerical oracle
//! evaluates it directly, factor by factor, so the two never share a
//! normalization path.

use std::fmt;

use crate::clifford::Generator;
use crate::coeff::{GaussianRational, ScalarCoeff};

/// A single generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Atom {
    /// `r^n`
    RPow(i32),
    Rhat(u8),
    P(u8),
    L(u8),
    Matrix(Generator),
}

/// A vector-valued operand of the `.` contraction sugar.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum VectorExpr {
    Rhat,
    P,
    L,
    Alpha,
    Sigma,
    PauliSigma,
    /// Catalog vector whose components are named `<base>_1`, `<base>_2`, `<base>_3`.
    Named(String),
}

impl VectorExpr {
    pub fn component(&self, i: u8) -> Expr {
        match self {
            VectorExpr::Rhat => Expr::Atom(Atom::Rhat(i)),
            VectorExpr::P => Expr::Atom(Atom::P(i)),
            VectorExpr::L => Expr::Atom(Atom::L(i)),
            VectorExpr::Alpha => Expr::Atom(Atom::Matrix(Generator::Alpha(i))),
            VectorExpr::Sigma => Expr::Atom(Atom::Matrix(Generator::SigmaBig(i))),
            VectorExpr::PauliSigma => Expr::Atom(Atom::Matrix(Generator::PauliSigma(i))),
            VectorExpr::Named(base) => Expr::Name(format!("{base}_{i}")),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            VectorExpr::Rhat => "rhat",
            VectorExpr::P => "p",
            VectorExpr::L => "l",
            VectorExpr::Alpha => "alpha",
            VectorExpr::Sigma => "Sigma",
            VectorExpr::PauliSigma => "sigma",
            VectorExpr::Named(base) => base,
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "rhat" => VectorExpr::Rhat,
            "p" => VectorExpr::P,
            "l" => VectorExpr::L,
            "alpha" => VectorExpr::Alpha,
            "Sigma" => VectorExpr::Sigma,
            "sigma" => VectorExpr::PauliSigma,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Scalar(ScalarCoeff),
    Atom(Atom),
    /// Reference to a catalog operator.
    Name(String),
    Add(Vec<Expr>),
    Neg(Box<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Commutator(Box<Expr>, Box<Expr>),
    Anticommutator(Box<Expr>, Box<Expr>),
    /// `sum_i U_i V_i`
    Dot(VectorExpr, VectorExpr),
}

impl Expr {
    pub fn scalar(c: ScalarCoeff) -> Self {
        Expr::Scalar(c)
    }

    pub fn one() -> Self {
        Expr::Scalar(ScalarCoeff::one())
    }

    pub fn zero() -> Self {
        Expr::Scalar(ScalarCoeff::zero())
    }

    pub fn int(n: i64) -> Self {
        Expr::Scalar(ScalarCoeff::int(n))
    }

    /// `c · a^pa · m^pm` as a scalar expression.
    pub fn coeff(c: GaussianRational, pa: i32, pm: i32) -> Self {
        Expr::Scalar(ScalarCoeff::monomial(c, pa, pm))
    }

    pub fn name(n: &str) -> Self {
        Expr::Name(n.to_string())
    }

    pub fn r(n: i32) -> Self {
        Expr::Atom(Atom::RPow(n))
    }

    pub fn rhat(i: u8) -> Self {
        Expr::Atom(Atom::Rhat(i))
    }

    pub fn p(i: u8) -> Self {
        Expr::Atom(Atom::P(i))
    }

    pub fn l(i: u8) -> Self {
        Expr::Atom(Atom::L(i))
    }

    pub fn gen(g: Generator) -> Self {
        Expr::Atom(Atom::Matrix(g))
    }

    pub fn beta() -> Self {
        Self::gen(Generator::Beta)
    }

    pub fn gamma5() -> Self {
        Self::gen(Generator::Gamma5)
    }

    pub fn dot(u: VectorExpr, v: VectorExpr) -> Self {
        Expr::Dot(u, v)
    }

    pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Self {
        let terms: Vec<Expr> = terms.into_iter().collect();
        match terms.len() {
            0 => Self::zero(),
            1 => terms.into_iter().next().unwrap(),
            _ => Expr::Add(terms),
        }
    }

    pub fn product(factors: impl IntoIterator<Item = Expr>) -> Self {
        let factors: Vec<Expr> = factors.into_iter().collect();
        match factors.len() {
            0 => Self::one(),
            1 => factors.into_iter().next().unwrap(),
            _ => Expr::Mul(factors),
        }
    }

    pub fn neg(self) -> Self {
        Expr::Neg(Box::new(self))
    }

    pub fn times(self, other: Expr) -> Self {
        Expr::product([self, other])
    }

    pub fn plus(self, other: Expr) -> Self {
        Expr::sum([self, other])
    }

    pub fn minus(self, other: Expr) -> Self {
        Expr::sum([self, other.neg()])
    }

    pub fn scaled(self, c: ScalarCoeff) -> Self {
        Expr::product([Expr::Scalar(c), self])
    }

    pub fn pow(self, n: u32) -> Self {
        Expr::Pow(Box::new(self), n)
    }

    pub fn commutator(x: Expr, y: Expr) -> Self {
        Expr::Commutator(Box::new(x), Box::new(y))
    }

    pub fn anticommutator(x: Expr, y: Expr) -> Self {
        Expr::Anticommutator(Box::new(x), Box::new(y))
    }

    /// `sum_i S_i V_i` for a matrix vector `S` and operator components `v(i)`.
    pub fn contract(s: VectorExpr, v: impl Fn(u8) -> Expr) -> Self {
        Expr::sum((1..=3).map(|i| s.component(i).times(v(i))))
    }

    /// Replaces every catalog reference using `resolve`, recursively.
    pub fn expand_names<F>(&self, resolve: &F) -> Option<Expr>
    where
        F: Fn(&str) -> Option<Expr>,
    {
        let rec = |e: &Expr| e.expand_names(resolve);
        Some(match self {
            Expr::Name(n) => resolve(n)?.expand_names(resolve)?,
            Expr::Dot(u, v) => Expr::sum((1..=3).map(|i| u.component(i).times(v.component(i))))
                .expand_names(resolve)?,
            Expr::Scalar(_) | Expr::Atom(_) => self.clone(),
            Expr::Add(ts) => Expr::Add(ts.iter().map(rec).collect::<Option<_>>()?),
            Expr::Mul(fs) => Expr::Mul(fs.iter().map(rec).collect::<Option<_>>()?),
            Expr::Neg(x) => Expr::Neg(Box::new(rec(x)?)),
            Expr::Pow(x, n) => Expr::Pow(Box::new(rec(x)?), *n),
            Expr::Commutator(x, y) => Expr::Commutator(Box::new(rec(x)?), Box::new(rec(y)?)),
            Expr::Anticommutator(x, y) => Expr::Anticommutator(Box::new(rec(x)?), Box::new(rec(y)?)),
        })
    }

    /// Rewrites atoms bottom-up. The expression must already be name-free.
    pub fn map_atoms(&self, f: &impl Fn(&Atom) -> Expr) -> Expr {
        match self {
            Expr::Atom(a) => f(a),
            Expr::Scalar(_) | Expr::Name(_) | Expr::Dot(..) => self.clone(),
            Expr::Add(ts) => Expr::Add(ts.iter().map(|t| t.map_atoms(f)).collect()),
            Expr::Mul(fs) => Expr::Mul(fs.iter().map(|t| t.map_atoms(f)).collect()),
            Expr::Neg(x) => Expr::Neg(Box::new(x.map_atoms(f))),
            Expr::Pow(x, n) => Expr::Pow(Box::new(x.map_atoms(f)), *n),
            Expr::Commutator(x, y) => Expr::Commutator(Box::new(x.map_atoms(f)), Box::new(y.map_atoms(f))),
            Expr::Anticommutator(x, y) => {
                Expr::Anticommutator(Box::new(x.map_atoms(f)), Box::new(y.map_atoms(f)))
            }
        }
    }

    /// Substitutes numbers for `a`, `m` inside scalars: returns a copy whose
    /// scalars are rescaled so that `a -> factor·a` (used for coupling mutations).
    pub fn map_scalars(&self, f: &impl Fn(&ScalarCoeff) -> ScalarCoeff) -> Expr {
        match self {
            Expr::Scalar(c) => Expr::Scalar(f(c)),
            Expr::Atom(_) | Expr::Name(_) | Expr::Dot(..) => self.clone(),
            Expr::Add(ts) => Expr::Add(ts.iter().map(|t| t.map_scalars(f)).collect()),
            Expr::Mul(fs) => Expr::Mul(fs.iter().map(|t| t.map_scalars(f)).collect()),
            Expr::Neg(x) => Expr::Neg(Box::new(x.map_scalars(f))),
            Expr::Pow(x, n) => Expr::Pow(Box::new(x.map_scalars(f)), *n),
            Expr::Commutator(x, y) => Expr::Commutator(Box::new(x.map_scalars(f)), Box::new(y.map_scalars(f))),
            Expr::Anticommutator(x, y) => {
                Expr::Anticommutator(Box::new(x.map_scalars(f)), Box::new(y.map_scalars(f)))
            }
        }
    }

    /// Splits a top-level sum into its signed summands, expanding commutator
    /// brackets one level. Used to scale numerical residuals.
    pub fn top_level_terms(&self) -> Vec<Expr> {
        match self {
            Expr::Add(ts) => ts.iter().flat_map(|t| t.top_level_terms()).collect(),
            Expr::Neg(x) => x.top_level_terms().into_iter().map(Expr::neg).collect(),
            Expr::Commutator(x, y) => vec![x.as_ref().clone().times(y.as_ref().clone()), y.as_ref().clone().times(x.as_ref().clone()).neg()],
            Expr::Anticommutator(x, y) => {
                vec![x.as_ref().clone().times(y.as_ref().clone()), y.as_ref().clone().times(x.as_ref().clone())]
            }
            _ => vec![self.clone()],
        }
    }

    fn is_sum_like(&self) -> bool {
        matches!(self, Expr::Add(_) | Expr::Neg(_))
    }

    fn scalar_needs_parens(c: &ScalarCoeff) -> bool {
        let s = c.to_string();
        c.len() > 1 || s.starts_with('-')
    }

    fn fmt_factor(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Scalar(c) if Self::scalar_needs_parens(c) => write!(f, "({c})"),
            Expr::Add(_) | Expr::Neg(_) | Expr::Mul(_) | Expr::Dot(..) | Expr::Pow(..) => write!(f, "({self})"),
            _ => write!(f, "{self}"),
        }
    }
}

fn fmt_atom(a: &Atom, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match a {
        Atom::RPow(1) => write!(f, "r"),
        Atom::RPow(n) => write!(f, "r^{n}"),
        Atom::Rhat(i) => write!(f, "rhat_{i}"),
        Atom::P(i) => write!(f, "p_{i}"),
        Atom::L(i) => write!(f, "l_{i}"),
        Atom::Matrix(g) => match g {
            Generator::Id => write!(f, "id"),
            Generator::Beta => write!(f, "beta"),
            Generator::Gamma5 => write!(f, "gamma5"),
            Generator::Alpha(i) => write!(f, "alpha_{i}"),
            Generator::SigmaBig(i) => write!(f, "Sigma_{i}"),
            Generator::PauliSigma(i) => write!(f, "sigma_{i}"),
        },
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Scalar(c) => write!(f, "{c}"),
            Expr::Atom(a) => fmt_atom(a, f),
            Expr::Name(n) => write!(f, "{n}"),
            Expr::Add(ts) => {
                for (k, t) in ts.iter().enumerate() {
                    match (k, t) {
                        (0, Expr::Neg(x)) => {
                            write!(f, "-")?;
                            x.fmt_factor(f)?;
                        }
                        (0, t) if t.is_sum_like() => write!(f, "({t})")?,
                        (0, t) => write!(f, "{t}")?,
                        (_, Expr::Neg(x)) => {
                            write!(f, " - ")?;
                            x.fmt_factor(f)?;
                        }
                        (_, t) if matches!(t, Expr::Add(_)) => write!(f, " + ({t})")?,
                        (_, Expr::Scalar(c)) if Expr::scalar_needs_parens(c) => write!(f, " + ({c})")?,
                        (_, t) => write!(f, " + {t}")?,
                    }
                }
                Ok(())
            }
            Expr::Neg(x) => {
                write!(f, "-")?;
                x.fmt_factor(f)
            }
            Expr::Mul(fs) => {
                for (k, x) in fs.iter().enumerate() {
                    if k > 0 {
                        write!(f, "*")?;
                    }
                    x.fmt_factor(f)?;
                }
                Ok(())
            }
            Expr::Pow(x, n) => {
                match x.as_ref() {
                    Expr::Atom(Atom::RPow(_)) => write!(f, "({x})")?,
                    _ => x.fmt_factor(f)?,
                }
                write!(f, "^{n}")
            }
            Expr::Commutator(x, y) => write!(f, "[{x}, {y}]"),
            Expr::Anticommutator(x, y) => write!(f, "{{{x}, {y}}}"),
            Expr::Dot(u, v) => write!(f, "{} . {}", u.name(), v.name()),
        }
    }
}
