//! Noncommutative operator algebra with an exact canonical form.
//!
//! An operator is a finite sum of monomials
//!
//! ```text
//! coeff · r^n · rhat_1^a1 rhat_2^a2 rhat_3^a3 · p_1^b1 p_2^b2 p_3^b3 · U
//! ```
//!
//! with `coeff` a [`ScalarCoeff`], `U` a [`MatrixUnit`] and `a3 <= 1`. All
//! position dependence sits to the left of all momenta, so every monomial is a
//! differential operator `f(x) (-i d)^b` and the representation is unique:
//! an operator is zero iff its canonical form is empty.
//!
//! Normalization uses
//!
//! * `[p_i, r^n] = -i n r^(n-1) rhat_i` and `[p_i, rhat_j] = -i r^-1 (delta_ij - rhat_i rhat_j)`,
//!   applied through the multi-index Leibniz rule when moving momenta right;
//! * `rhat_3^2 = 1 - rhat_1^2 - rhat_2^2` (unit sphere), which also realizes
//!   `sum_i rhat_i rhat_i = 1`;
//! * `l_i = r eps_ijk rhat_j p_k`, applied when lowering. The angular momentum
//!   relations `[l_i, l_j] = i eps_ijk l_k`, `[l_i, V_j] = i eps_ijk V_k` and the
//!   transversality contractions `l.rhat = rhat.l = l.p = p.l = 0` are all
//!   consequences and are checked as such in the tests;
//! * exact Clifford products for the matrix factor.
//!
//! Canonical term order is lexicographic in `(n, rhat exponents, p exponents, U)`.

pub mod catalog;
pub mod verify;

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::rc::Rc;


use crate::clifford::MatrixUnit;
use crate::coeff::{GaussianRational, ScalarCoeff};
use crate::error::AlgebraError;
use crate::expr::{Atom, Expr};

/// Position/momentum/matrix part of a canonical monomial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Key {
    pub r_power: i32,
    pub rhat: [u8; 3],
    pub p: [u8; 3],
    pub matrix: MatrixUnit,
}

impl Key {
    pub const IDENTITY: Key = Key { r_power: 0, rhat: [0; 3], p: [0; 3], matrix: MatrixUnit::Id };

    pub fn momentum_degree(&self) -> u32 {
        self.p.iter().map(|&b| b as u32).sum()
    }
}

/// A canonical monomial: a borrowed view into an [`OperatorExpr`].
#[derive(Clone, Copy, Debug)]
pub struct Monomial<'a> {
    pub key: &'a Key,
    pub coeff: &'a ScalarCoeff,
}

/// A canonical operator. Every constructor and operation keeps it reduced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct OperatorExpr {
    terms: BTreeMap<Key, ScalarCoeff>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scalar(c: ScalarCoeff) -> Self {
        Self::monomial(Key::IDENTITY, c)
    }

    pub fn one() -> Self {
        Self::scalar(ScalarCoeff::one())
    }

    /// A single term. `key.rhat[2]` larger than one is reduced on the sphere.
    pub fn monomial(key: Key, c: ScalarCoeff) -> Self {
        let mut out = Self::zero();
        let mut acc = Accumulator::default();
        acc.add_sphere_reduced(key, &c, 1);
        out.terms = acc.finish();
        out
    }

    pub fn r_power(n: i32) -> Self {
        Self::monomial(Key { r_power: n, ..Key::IDENTITY }, ScalarCoeff::one())
    }

    pub fn rhat(i: u8) -> Self {
        let mut k = Key::IDENTITY;
        k.rhat[i as usize - 1] = 1;
        Self::monomial(k, ScalarCoeff::one())
    }

    pub fn p(i: u8) -> Self {
        let mut k = Key::IDENTITY;
        k.p[i as usize - 1] = 1;
        Self::monomial(k, ScalarCoeff::one())
    }

    /// `l_i = r eps_ijk rhat_j p_k`
    pub fn l(i: u8) -> Self {
        let (j, k) = match i {
            1 => (2, 3),
            2 => (3, 1),
            _ => (1, 2),
        };
        let term = |a: u8, b: u8| {
            let mut key = Key { r_power: 1, ..Key::IDENTITY };
            key.rhat[a as usize - 1] = 1;
            key.p[b as usize - 1] = 1;
            key
        };
        let mut out = Self::monomial(term(j, k), ScalarCoeff::one());
        out.add_term(term(k, j), &ScalarCoeff::int(-1));
        out
    }

    pub fn matrix(u: MatrixUnit) -> Self {
        Self::monomial(Key { matrix: u, ..Key::IDENTITY }, ScalarCoeff::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn monomials(&self) -> impl Iterator<Item = Monomial<'_>> {
        self.terms.iter().map(|(key, coeff)| Monomial { key, coeff })
    }

    pub fn coeff(&self, key: &Key) -> Option<&ScalarCoeff> {
        self.terms.get(key)
    }

    fn add_term(&mut self, key: Key, c: &ScalarCoeff) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(key) {
            Entry::Vacant(v) => {
                v.insert(c.clone());
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if o.get().is_zero() {
                    o.remove();
                }
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.add_term(*k, c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        self.scale(&ScalarCoeff::int(-1))
    }

    pub fn scale(&self, c: &ScalarCoeff) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let mut out = Self::zero();
        for (k, v) in &self.terms {
            out.add_term(*k, &(v * c));
        }
        out
    }

    /// Keeps only the terms whose matrix factor satisfies `keep`.
    pub fn filter_matrix(&self, keep: impl Fn(MatrixUnit) -> bool) -> Self {
        Self { terms: self.terms.iter().filter(|(k, _)| keep(k.matrix)).map(|(k, c)| (*k, c.clone())).collect() }
    }

    /// Part commuting with beta.
    pub fn block_diagonal(&self) -> Self {
        self.filter_matrix(MatrixUnit::is_block_diagonal)
    }

    /// Part anticommuting with beta.
    pub fn block_antidiagonal(&self) -> Self {
        self.filter_matrix(|u| !u.is_block_diagonal())
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeffs(&self, f: impl Fn(&ScalarCoeff) -> ScalarCoeff) -> Self {
        let mut out = Self::zero();
        for (k, c) in &self.terms {
            out.add_term(*k, &f(c));
        }
        out
    }

    /// Largest power of `a` in any coefficient.
    pub fn max_a_degree(&self) -> Option<i32> {
        self.terms.values().filter_map(ScalarCoeff::max_a_degree).max()
    }

    /// Matrix dimension used by the terms, if any term fixes it.
    pub fn dim(&self) -> Option<usize> {
        self.terms.keys().find_map(|k| k.matrix.dim())
    }

    /// Re-expresses this canonical form as an [`Expr`] (a sum of products of atoms).
    pub fn to_expr(&self) -> Expr {
        if self.terms.is_empty() {
            return Expr::zero();
        }
        Expr::sum(self.terms.iter().map(|(k, c)| {
            let mut factors = vec![Expr::Scalar(c.clone())];
            if k.r_power != 0 {
                factors.push(Expr::r(k.r_power));
            }
            for (i, &e) in k.rhat.iter().enumerate() {
                push_pow(&mut factors, Expr::rhat(i as u8 + 1), e);
            }
            for (i, &e) in k.p.iter().enumerate() {
                push_pow(&mut factors, Expr::p(i as u8 + 1), e);
            }
            if let Some(f) = unit_expr(k.matrix) {
                factors.push(f);
            }
            Expr::product(factors)
        }))
    }
}

fn push_pow(factors: &mut Vec<Expr>, e: Expr, n: u8) {
    match n {
        0 => {}
        1 => factors.push(e),
        _ => factors.push(e.pow(n as u32)),
    }
}

fn unit_expr(u: MatrixUnit) -> Option<Expr> {
    use crate::clifford::Generator::*;
    let g = |g| Expr::gen(g);
    Some(match u {
        MatrixUnit::Id => return None,
        MatrixUnit::Pauli(i) => g(PauliSigma(i)),
        MatrixUnit::Dirac(k) => match k {
            0 => g(Beta),
            1 => g(Gamma5),
            2 => Expr::product([g(Beta), g(Gamma5)]),
            3..=5 => g(Alpha(k - 2)),
            6..=8 => g(SigmaBig(k - 5)),
            9..=11 => Expr::product([g(Beta), g(Alpha(k - 8))]),
            _ => Expr::product([g(Beta), g(SigmaBig(k - 11))]),
        },
    })
}

/// Stable printer: terms in canonical order, `coeff*r^n*rhat..*p..*matrix`.
impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (n, (k, c)) in self.terms.iter().enumerate() {
            let mut factors: Vec<String> = Vec::new();
            if k.r_power != 0 {
                factors.push(if k.r_power == 1 { "r".into() } else { format!("r^{}", k.r_power) });
            }
            for (i, &e) in k.rhat.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("rhat_{}", i + 1)),
                    _ => factors.push(format!("rhat_{}^{e}", i + 1)),
                }
            }
            for (i, &e) in k.p.iter().enumerate() {
                match e {
                    0 => {}
                    1 => factors.push(format!("p_{}", i + 1)),
                    _ => factors.push(format!("p_{}^{e}", i + 1)),
                }
            }
            if k.matrix != MatrixUnit::Id {
                factors.push(k.matrix.name().to_string());
            }
            let body = factors.join("*");
            let (sign, c) = leading_sign(c);
            let coeff = if c.len() > 1 {
                format!("({c})")
            } else {
                let s = c.to_string();
                // a proper fraction prints as "1/2"; keep it one factor
                if s.contains('/') && !s.starts_with('(') { format!("({s})") } else { s }
            };
            let text = match (c.is_one(), body.is_empty()) {
                (true, true) => "1".to_string(),
                (true, false) => body,
                (false, true) => coeff,
                (false, false) => format!("{coeff}*{body}"),
            };
            match (n, sign) {
                (0, true) => write!(f, "-{text}")?,
                (0, false) => write!(f, "{text}")?,
                (_, true) => write!(f, " - {text}")?,
                (_, false) => write!(f, " + {text}")?,
            }
        }
        Ok(())
    }
}

/// Splits off a leading minus sign from single-term coefficients.
fn leading_sign(c: &ScalarCoeff) -> (bool, ScalarCoeff) {
    if c.len() == 1 && c.to_string().starts_with('-') {
        (true, -c)
    } else {
        (false, c.clone())
    }
}

// ---------------------------------------------------------------------------
// Multiplication

type FuncTerm = (i32, [u8; 3]);

thread_local! {
    static DERIV_CACHE: RefCell<HashMap<(FuncTerm, [u8; 3]), Rc<Vec<(FuncTerm, i64)>>>> =
        RefCell::new(HashMap::new());
}

/// `d_j (r^n rhat^alpha) = r^(n-1) [ (n - |alpha|) rhat^(alpha+e_j) + alpha_j rhat^(alpha-e_j) ]`
fn derivative_once(terms: &[(FuncTerm, i64)], j: usize) -> Vec<(FuncTerm, i64)> {
    let mut acc: HashMap<FuncTerm, i64> = HashMap::new();
    for &((n, alpha), c) in terms {
        let total: i32 = alpha.iter().map(|&a| a as i32).sum();
        let up = (n - total) as i64;
        if up != 0 {
            let mut al = alpha;
            al[j] += 1;
            *acc.entry((n - 1, al)).or_default() += c * up;
        }
        if alpha[j] > 0 {
            let mut al = alpha;
            al[j] -= 1;
            *acc.entry((n - 1, al)).or_default() += c * alpha[j] as i64;
        }
    }
    let mut out: Vec<_> = acc.into_iter().filter(|(_, c)| *c != 0).collect();
    out.sort();
    out
}

/// `d^nu (r^n rhat^alpha)` as a list of function terms with integer coefficients.
fn derivative(f: FuncTerm, nu: [u8; 3]) -> Rc<Vec<(FuncTerm, i64)>> {
    if nu == [0; 3] {
        return Rc::new(vec![(f, 1)]);
    }
    if let Some(hit) = DERIV_CACHE.with(|c| c.borrow().get(&(f, nu)).cloned()) {
        return hit;
    }
    let j = nu.iter().position(|&x| x > 0).unwrap();
    let mut lower = nu;
    lower[j] -= 1;
    let out = Rc::new(derivative_once(&derivative(f, lower), j));
    DERIV_CACHE.with(|c| c.borrow_mut().insert((f, nu), out.clone()));
    out
}

fn binomial(n: u8, k: u8) -> i64 {
    (0..k as i64).fold(1, |acc, i| acc * (n as i64 - i) / (i + 1))
}

#[derive(Default)]
struct Accumulator {
    terms: HashMap<Key, ScalarCoeff>,
}

impl Accumulator {
    fn add(&mut self, key: Key, c: ScalarCoeff) {
        match self.terms.get_mut(&key) {
            Some(v) => *v += &c,
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    /// Adds `k·c·key`, rewriting `rhat_3^2 -> 1 - rhat_1^2 - rhat_2^2`.
    fn add_sphere_reduced(&mut self, key: Key, c: &ScalarCoeff, k: i64) {
        if key.rhat[2] < 2 {
            self.add(key, c.scale(GaussianRational::int(k)));
            return;
        }
        let mut base = key;
        base.rhat[2] -= 2;
        self.add_sphere_reduced(base, c, k);
        for i in 0..2 {
            let mut t = base;
            t.rhat[i] += 2;
            self.add_sphere_reduced(t, c, -k);
        }
    }

    fn finish(self) -> BTreeMap<Key, ScalarCoeff> {
        self.terms.into_iter().filter(|(_, c)| !c.is_zero()).collect()
    }
}

fn sub_multi_indices(beta: [u8; 3]) -> impl Iterator<Item = [u8; 3]> {
    (0..=beta[0]).flat_map(move |a| (0..=beta[1]).flat_map(move |b| (0..=beta[2]).map(move |c| [a, b, c])))
}

/// Ring product reduced to canonical form.
pub fn multiply(x: &OperatorExpr, y: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
    let mut acc = Accumulator::default();
    for (k1, c1) in &x.terms {
        for (k2, c2) in &y.terms {
            let (phase, unit) = k1.matrix.mul(k2.matrix)?;
            let c12 = (c1 * c2).scale(phase);
            let f2 = (k2.r_power, k2.rhat);
            // p^b f = sum_nu C(b, nu) (-i)^|nu| (d^nu f) p^(b - nu)
            for nu in sub_multi_indices(k1.p) {
                let order: i64 = nu.iter().map(|&v| v as i64).sum();
                let binom: i64 = (0..3).map(|i| binomial(k1.p[i], nu[i])).product();
                let factor = c12.scale(GaussianRational::i_pow(-order) * GaussianRational::int(binom));
                for &((n, alpha), k) in derivative(f2, nu).iter() {
                    let key = Key {
                        r_power: k1.r_power + n,
                        rhat: [k1.rhat[0] + alpha[0], k1.rhat[1] + alpha[1], k1.rhat[2] + alpha[2]],
                        p: [k1.p[0] - nu[0] + k2.p[0], k1.p[1] - nu[1] + k2.p[1], k1.p[2] - nu[2] + k2.p[2]],
                        matrix: unit,
                    };
                    acc.add_sphere_reduced(key, &factor, k);
                }
            }
        }
    }
    Ok(OperatorExpr { terms: acc.finish() })
}

/// `xy - yx`
pub fn commutator(x: &OperatorExpr, y: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
    Ok(multiply(x, y)?.sub(&multiply(y, x)?))
}

/// `xy + yx`
pub fn anticommutator(x: &OperatorExpr, y: &OperatorExpr) -> Result<OperatorExpr, AlgebraError> {
    Ok(multiply(x, y)?.add(&multiply(y, x)?))
}

pub fn power(x: &OperatorExpr, n: u32) -> Result<OperatorExpr, AlgebraError> {
    let mut out = OperatorExpr::one();
    for _ in 0..n {
        out = multiply(&out, x)?;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lowering

fn lower_atom(a: &Atom) -> OperatorExpr {
    match *a {
        Atom::RPow(n) => OperatorExpr::r_power(n),
        Atom::Rhat(i) => OperatorExpr::rhat(i),
        Atom::P(i) => OperatorExpr::p(i),
        Atom::L(i) => OperatorExpr::l(i),
        Atom::Matrix(g) => OperatorExpr::matrix(MatrixUnit::from_generator(g)),
    }
}

/// Normalizes an expression to canonical form, resolving catalog names.
pub fn reduce(e: &Expr) -> Result<OperatorExpr, AlgebraError> {
    reduce_with(e, &catalog::definition)
}

/// Like [`reduce`], with names resolved by `resolve`.
pub fn reduce_with(e: &Expr, resolve: &dyn Fn(&str) -> Option<Expr>) -> Result<OperatorExpr, AlgebraError> {
    Reducer { resolve, names: HashMap::new() }.run(e)
}

struct Reducer<'a> {
    resolve: &'a dyn Fn(&str) -> Option<Expr>,
    names: HashMap<String, OperatorExpr>,
}

impl Reducer<'_> {
    fn run(&mut self, e: &Expr) -> Result<OperatorExpr, AlgebraError> {
        Ok(match e {
            Expr::Scalar(c) => OperatorExpr::scalar(c.clone()),
            Expr::Atom(a) => lower_atom(a),
            Expr::Name(n) => {
                if let Some(hit) = self.names.get(n) {
                    return Ok(hit.clone());
                }
                let def = (self.resolve)(n).ok_or_else(|| AlgebraError::UnknownOperator(n.clone()))?;
                let v = self.run(&def)?;
                self.names.insert(n.clone(), v.clone());
                v
            }
            Expr::Add(ts) => {
                let mut out = OperatorExpr::zero();
                for t in ts {
                    out = out.add(&self.run(t)?);
                }
                out
            }
            Expr::Neg(x) => self.run(x)?.neg(),
            Expr::Mul(fs) => {
                let mut out = OperatorExpr::one();
                for f in fs {
                    out = multiply(&out, &self.run(f)?)?;
                }
                out
            }
            Expr::Pow(x, n) => power(&self.run(x)?, *n)?,
            Expr::Commutator(x, y) => commutator(&self.run(x)?, &self.run(y)?)?,
            Expr::Anticommutator(x, y) => anticommutator(&self.run(x)?, &self.run(y)?)?,
            Expr::Dot(u, v) => {
                let mut out = OperatorExpr::zero();
                for i in 1..=3 {
                    out = out.add(&multiply(&self.run(&u.component(i))?, &self.run(&v.component(i))?)?);
                }
                out
            }
        })
    }
}

#[cfg(test)]
mod tests;
