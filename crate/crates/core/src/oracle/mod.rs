//! Numerical oracle: applies operator expressions to explicit spinor test
//! functions with central finite differences.
//!
//! Nothing here touches the canonical-form machinery. An expression is walked
//! as a tree and every node acts on a sampled field: `p_i = -i d_i`,
//! `l_i = eps_ijk x_j p_k`, `rhat_i = x_i/|x|`, `r^n = |x|^n`, and the Dirac and
//! Pauli matrices (rebuilt here from the Pauli blocks) act on the component
//! index.
//!
//! Fields live on a cubic lattice box around each test point. A derivative of
//! order `2q` consumes `q` lattice layers, so the base box has half-width
//! `q · D` for an expression of derivative depth `D`, and every node is only
//! evaluated on the box its enclosing derivatives still need.
//!
//! Test function family `poly-exp-v1`: component `c` is a quadratic polynomial
//! with complex coefficients times `exp(-kappa_c r)`, see [`test_function`].
//! The Pauli factor uses the first two components.

use std::cell::RefCell;
use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub mod dd;

use crate::clifford::Generator;
use crate::error::OracleError;
use crate::exec::{self, ExecMode};
use crate::expr::{Atom, Expr};

pub use dd::{Cdd, Dd};

pub const TEST_FUNCTION_ID: &str = "poly-exp-v1";
/// Stencils must stay strictly outside this radius.
pub const CORE_RADIUS: f64 = 0.1;
pub const SHELL: (f64, f64) = (0.5, 2.0);
/// Relative residual at or below which an identity counts as numerically zero.
pub const ZERO_TOLERANCE: f64 = 1e-6;
/// Relative residual at or above which an identity counts as numerically nonzero.
pub const NONZERO_THRESHOLD: f64 = 1e-2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub points: Vec<[f64; 3]>,
    pub fd_step: f64,
    pub fd_order: usize,
    pub seed: u64,
    pub test_function_id: String,
    /// Numerical value substituted for `a`.
    pub coupling: f64,
    /// Numerical value substituted for `m`.
    pub mass: f64,
}

impl Default for TestConfig {
    fn default() -> Self {
        Self::sampled(128, 20_240_917)
    }
}

impl TestConfig {
    /// `count` points drawn uniformly in direction and radius from the shell.
    pub fn sampled(count: usize, seed: u64) -> Self {
        Self {
            points: sample_points(count, seed),
            fd_step: 1e-2,
            fd_order: 8,
            seed,
            test_function_id: TEST_FUNCTION_ID.to_string(),
            coupling: 0.7,
            mass: 1.3,
        }
    }

    pub fn with_step(&self, fd_step: f64) -> Self {
        Self { fd_step, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), OracleError> {
        let bad = |m: String| Err(OracleError::InvalidConfig(m));
        if self.points.is_empty() {
            return bad("no test points".into());
        }
        if !(self.fd_step > 0.0 && self.fd_step.is_finite()) {
            return bad(format!("fd_step must be positive, got {}", self.fd_step));
        }
        if self.fd_order < 4 || !self.fd_order.is_multiple_of(2) || self.fd_order > 16 {
            return bad(format!("fd_order must be even and in 4..=16, got {}", self.fd_order));
        }
        if self.test_function_id != TEST_FUNCTION_ID {
            return bad(format!("unknown test function `{}`", self.test_function_id));
        }
        for p in &self.points {
            let r = norm3(p);
            if !(SHELL.0..=SHELL.1).contains(&r) {
                return bad(format!("point {p:?} has norm {r}, outside [{}, {}]", SHELL.0, SHELL.1));
            }
        }
        Ok(())
    }
}

pub fn sample_points(count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let v: [f64; 3] = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let n = norm3(&v);
        if !(1e-3..=1.0).contains(&n) {
            continue;
        }
        let r = rng.gen_range(SHELL.0..=SHELL.1);
        out.push([v[0] * r / n, v[1] * r / n, v[2] * r / n]);
    }
    out
}

fn norm3(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Values of an operator applied to the test function at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinorSample {
    pub values: Vec<Complex64>,
}

impl SpinorSample {
    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

const KAPPA: [f64; 4] = [1.0, 0.8, 1.2, 0.9];

/// `(re, im, [ex, ey, ez])`: coefficient of `x^ex y^ey z^ez`.
type PolyTerm = (f64, f64, [u8; 3]);

const POLYS: [&[PolyTerm]; 4] = [
    &[(1.0, 0.0, [0, 0, 0]), (0.3, 0.0, [1, 0, 0]), (0.0, -0.2, [0, 1, 0]), (0.1, 0.0, [0, 0, 1]), (0.25, 0.0, [1, 0, 1])],
    &[(0.0, 0.5, [0, 0, 0]), (0.4, 0.0, [0, 1, 0]), (-0.3, 0.0, [0, 0, 1]), (0.0, 0.2, [1, 1, 0])],
    &[(-0.7, 0.0, [0, 0, 0]), (0.2, 0.0, [1, 0, 0]), (0.0, 0.6, [0, 0, 1]), (0.15, 0.0, [0, 2, 0])],
    &[(0.3, -0.4, [0, 0, 0]), (0.5, 0.0, [1, 0, 0]), (-0.1, 0.0, [0, 1, 0]), (0.0, 0.35, [0, 0, 2])],
];

fn test_function_dd(x: &[Dd; 3], r: Dd) -> [Cdd; 4] {
    let mut out = [Cdd::ZERO; 4];
    for (c, poly) in POLYS.iter().enumerate() {
        let mut p = Cdd::ZERO;
        for &(re, im, ex) in poly.iter() {
            let mono = x[0].powi(ex[0] as i32) * x[1].powi(ex[1] as i32) * x[2].powi(ex[2] as i32);
            p += Cdd { re: mono.mul_f64(re), im: mono.mul_f64(im) };
        }
        out[c] = p.scale((-r.mul_f64(KAPPA[c])).exp());
    }
    out
}

/// The `poly-exp-v1` family: component `c` is `P_c(x) exp(-kappa_c |x|)` with
/// `kappa = (1, 0.8, 1.2, 0.9)` and
///
/// ```text
/// P_0 = 1 + 0.3x - 0.2i y + 0.1z + 0.25xz
/// P_1 = 0.5i + 0.4y - 0.3z + 0.2i xy
/// P_2 = -0.7 + 0.2x + 0.6i z + 0.15y^2
/// P_3 = 0.3 - 0.4i + 0.5x - 0.1y + 0.35i z^2
/// ```
pub fn test_function(x: &[f64; 3]) -> [Complex64; 4] {
    let xd = x.map(Dd::from_f64);
    let r = (xd[0] * xd[0] + xd[1] * xd[1] + xd[2] * xd[2]).sqrt();
    test_function_dd(&xd, r).map(Cdd::to_c64)
}

/// Central first-derivative weights `w_1..w_q` for accuracy order `2q`.
pub fn central_weights(order: usize) -> Vec<f64> {
    let q = order / 2;
    let fact = |n: usize| (1..=n).fold(1.0f64, |a, k| a * k as f64);
    (1..=q)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * fact(q) * fact(q) / (j as f64 * fact(q - j) * fact(q + j))
        })
        .collect()
}

type Mat = Vec<Complex64>;

fn dirac_matrix(g: Generator, dim: usize) -> Result<Mat, OracleError> {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    let pauli = |k: u8| -> [[Complex64; 2]; 2] {
        match k {
            1 => [[z, one], [one, z]],
            2 => [[z, -i], [i, z]],
            _ => [[one, z], [z, -one]],
        }
    };
    let unit = [[one, z], [z, one]];
    let blocks = |tl: [[Complex64; 2]; 2], tr: [[Complex64; 2]; 2], bl: [[Complex64; 2]; 2], br: [[Complex64; 2]; 2]| {
        let mut m = vec![z; 16];
        for r in 0..2 {
            for c in 0..2 {
                m[r * 4 + c] = tl[r][c];
                m[r * 4 + c + 2] = tr[r][c];
                m[(r + 2) * 4 + c] = bl[r][c];
                m[(r + 2) * 4 + c + 2] = br[r][c];
            }
        }
        m
    };
    let zero2 = [[z, z], [z, z]];
    let neg = |b: [[Complex64; 2]; 2]| b.map(|row| row.map(|v| -v));
    let mismatch = || OracleError::InvalidConfig(format!("generator {g:?} does not act on {dim}-component spinors"));
    Ok(match g {
        Generator::Id => {
            let mut m = vec![z; dim * dim];
            for k in 0..dim {
                m[k * dim + k] = one;
            }
            m
        }
        Generator::PauliSigma(k) => {
            if dim != 2 {
                return Err(mismatch());
            }
            pauli(k).iter().flatten().copied().collect()
        }
        _ if dim != 4 => return Err(mismatch()),
        Generator::Beta => blocks(unit, zero2, zero2, neg(unit)),
        Generator::Gamma5 => blocks(zero2, unit, unit, zero2),
        Generator::Alpha(k) => blocks(zero2, pauli(k), pauli(k), zero2),
        Generator::SigmaBig(k) => blocks(pauli(k), zero2, zero2, pauli(k)),
    })
}

fn levi(i: u8, j: u8, k: u8) -> f64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1.0,
        (1, 3, 2) | (3, 2, 1) | (2, 1, 3) => -1.0,
        _ => 0.0,
    }
}

/// Lattice offsets reachable by `depth` nested derivatives of half-width `q`.
///
/// A point belongs to level `d` when `sum_axis ceil(|offset_axis| / q) <= d`.
/// Offsets are sorted by level, so the points of level `d` form a prefix of
/// length `counts[d]` and a field needed only at level `d` is stored as that
/// prefix.
struct Lattice {
    q: usize,
    offsets: Vec<[i32; 3]>,
    counts: Vec<usize>,
    /// `nbr[(idx * 3 + axis) * 2q + 2(s-1) + {0: +s, 1: -s}]` for points below the top level.
    nbr: Vec<u32>,
}

impl Lattice {
    fn new(q: usize, depth: usize) -> Self {
        let span = (q * depth) as i32;
        let level = |o: &[i32; 3]| o.iter().map(|v| (v.unsigned_abs() as usize).div_ceil(q)).sum::<usize>();
        let mut offsets = Vec::new();
        for i in -span..=span {
            for j in -span..=span {
                for k in -span..=span {
                    let o = [i, j, k];
                    if level(&o) <= depth {
                        offsets.push(o);
                    }
                }
            }
        }
        offsets.sort_by_key(|o| (level(o), *o));
        let counts = (0..=depth).map(|d| offsets.iter().filter(|o| level(o) <= d).count()).collect::<Vec<_>>();
        let index: HashMap<[i32; 3], u32> = offsets.iter().enumerate().map(|(n, o)| (*o, n as u32)).collect();
        let inner = if depth == 0 { 0 } else { counts[depth - 1] };
        let mut nbr = Vec::with_capacity(inner * 3 * 2 * q);
        for o in &offsets[..inner] {
            for axis in 0..3 {
                for s in 1..=q as i32 {
                    let mut plus = *o;
                    plus[axis] += s;
                    let mut minus = *o;
                    minus[axis] -= s;
                    nbr.push(index[&plus]);
                    nbr.push(index[&minus]);
                }
            }
        }
        Self { q, offsets, counts, nbr }
    }

    fn depth(&self) -> usize {
        self.counts.len() - 1
    }

    /// Largest distance from the center, in lattice steps.
    fn reach(&self) -> f64 {
        self.offsets.iter().map(|o| o.iter().map(|&v| f64::from(v * v)).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }
}

/// Field known on the first `counts[level]` lattice points.
#[derive(Clone)]
struct Field {
    level: usize,
    comps: usize,
    data: Vec<Cdd>,
}

/// Lattice coordinates around one test point.
struct Coords {
    x: [Vec<Dd>; 3],
    r: Vec<Dd>,
    r_inv: Vec<Dd>,
}

/// Resolves catalog names to their definitions.
pub type Resolver<'a> = &'a (dyn Fn(&str) -> Option<Expr> + Sync);

struct Eval<'a> {
    lat: &'a Lattice,
    weights: &'a [f64],
    inv_h: Dd,
    coords: Coords,
    a: f64,
    m: f64,
    dim: usize,
    resolve: Resolver<'a>,
    depths: RefCell<HashMap<String, usize>>,
}

fn depth_of(e: &Expr, resolve: Resolver<'_>, memo: &RefCell<HashMap<String, usize>>) -> Result<usize, OracleError> {
    let rec = |e: &Expr| depth_of(e, resolve, memo);
    Ok(match e {
        Expr::Scalar(_) => 0,
        Expr::Atom(Atom::P(_) | Atom::L(_)) => 1,
        Expr::Atom(_) => 0,
        Expr::Name(n) => {
            if let Some(&d) = memo.borrow().get(n) {
                return Ok(d);
            }
            let d = rec(&lookup(resolve, n)?)?;
            memo.borrow_mut().insert(n.clone(), d);
            d
        }
        Expr::Add(ts) => ts.iter().map(rec).try_fold(0, |a, d| d.map(|d| a.max(d)))?,
        Expr::Neg(x) => rec(x)?,
        Expr::Mul(fs) => fs.iter().map(rec).sum::<Result<usize, _>>()?,
        Expr::Pow(x, n) => rec(x)? * *n as usize,
        Expr::Commutator(x, y) | Expr::Anticommutator(x, y) => rec(x)? + rec(y)?,
        Expr::Dot(u, v) => {
            let mut d = 0;
            for i in 1..=3 {
                d = d.max(rec(&u.component(i))? + rec(&v.component(i))?);
            }
            d
        }
    })
}

fn lookup(resolve: Resolver<'_>, name: &str) -> Result<Expr, OracleError> {
    resolve(name).ok_or_else(|| OracleError::InvalidConfig(format!("unknown catalog operator `{name}`")))
}

impl<'a> Eval<'a> {
    fn new(lat: &'a Lattice, weights: &'a [f64], cfg: &TestConfig, dim: usize, resolve: Resolver<'a>, center: [f64; 3]) -> Self {
        let h = Dd::from_f64(cfg.fd_step);
        let mut x: [Vec<Dd>; 3] = Default::default();
        let mut r = Vec::with_capacity(lat.offsets.len());
        let mut r_inv = Vec::with_capacity(lat.offsets.len());
        for o in &lat.offsets {
            let p: [Dd; 3] = std::array::from_fn(|a| Dd::from_f64(center[a]) + h.mul_f64(f64::from(o[a])));
            let rr = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            for a in 0..3 {
                x[a].push(p[a]);
            }
            r.push(rr);
            r_inv.push(rr.recip());
        }
        Self {
            lat,
            weights,
            inv_h: h.recip(),
            coords: Coords { x, r, r_inv },
            a: cfg.coupling,
            m: cfg.mass,
            dim,
            resolve,
            depths: RefCell::new(HashMap::new()),
        }
    }

    fn len(&self, level: usize) -> usize {
        self.lat.counts[level]
    }

    fn zeros(&self, level: usize, comps: usize) -> Field {
        Field { level, comps, data: vec![Cdd::ZERO; self.len(level) * comps] }
    }

    fn depth(&self, e: &Expr) -> Result<usize, OracleError> {
        depth_of(e, self.resolve, &self.depths)
    }

    fn restrict(&self, f: &Field, level: usize) -> Field {
        debug_assert!(f.level >= level);
        Field { level, comps: f.comps, data: f.data[..self.len(level) * f.comps].to_vec() }
    }

    fn multiply_by(&self, f: &Field, level: usize, g: impl Fn(usize) -> Dd) -> Field {
        let mut out = self.restrict(f, level);
        let n = out.comps;
        for (idx, chunk) in out.data.chunks_mut(n).enumerate() {
            let v = g(idx);
            for z in chunk {
                *z = z.scale(v);
            }
        }
        out
    }

    /// `-i d/dx_axis`, known one level below the input.
    fn momentum(&self, f: &Field, axis: usize, level: usize) -> Field {
        debug_assert!(f.level > level);
        let q = self.lat.q;
        let n = f.comps;
        let mut out = self.zeros(level, n);
        for idx in 0..self.len(level) {
            let base = (idx * 3 + axis) * 2 * q;
            for c in 0..n {
                let mut acc = Cdd::ZERO;
                for (s, &w) in self.weights.iter().enumerate() {
                    let plus = self.lat.nbr[base + 2 * s] as usize;
                    let minus = self.lat.nbr[base + 2 * s + 1] as usize;
                    acc += (f.data[plus * n + c] - f.data[minus * n + c]).scale_f64(w);
                }
                out.data[idx * n + c] = acc.scale(self.inv_h).mul_neg_i();
            }
        }
        out
    }

    fn add_into(acc: &mut Field, f: &Field) {
        for (a, b) in acc.data.iter_mut().zip(&f.data) {
            *a += *b;
        }
    }

    fn product(&self, fs: &[Expr], input: &Field, level: usize) -> Result<Field, OracleError> {
        let depths = fs.iter().map(|f| self.depth(f)).collect::<Result<Vec<_>, _>>()?;
        let mut cur: Option<Field> = None;
        let mut outer: usize = depths.iter().sum();
        for (f, d) in fs.iter().zip(&depths).rev() {
            outer -= d;
            cur = Some(self.apply(f, cur.as_ref().unwrap_or(input), level + outer)?);
        }
        Ok(match cur {
            Some(c) => c,
            None => self.restrict(input, level),
        })
    }

    fn apply(&self, e: &Expr, input: &Field, level: usize) -> Result<Field, OracleError> {
        Ok(match e {
            Expr::Scalar(c) => {
                let v = c.eval(self.a, self.m);
                let mut out = self.restrict(input, level);
                for z in &mut out.data {
                    *z = z.mul_c64(v);
                }
                out
            }
            Expr::Atom(Atom::RPow(n)) => {
                let (base, e) = if *n < 0 { (&self.coords.r_inv, -*n) } else { (&self.coords.r, *n) };
                self.multiply_by(input, level, |idx| base[idx].powi(e))
            }
            Expr::Atom(Atom::Rhat(i)) => {
                let x = &self.coords.x[*i as usize - 1];
                self.multiply_by(input, level, |idx| x[idx] * self.coords.r_inv[idx])
            }
            Expr::Atom(Atom::P(i)) => self.momentum(input, *i as usize - 1, level),
            Expr::Atom(Atom::L(i)) => {
                let mut out = self.zeros(level, input.comps);
                for j in 1..=3u8 {
                    for k in 1..=3u8 {
                        let sign = levi(*i, j, k);
                        if sign == 0.0 {
                            continue;
                        }
                        let pk = self.momentum(input, k as usize - 1, level);
                        let x = &self.coords.x[j as usize - 1];
                        let term = self.multiply_by(&pk, level, |idx| x[idx].mul_f64(sign));
                        Self::add_into(&mut out, &term);
                    }
                }
                out
            }
            Expr::Atom(Atom::Matrix(g)) => {
                let m = dirac_matrix(*g, input.comps)?;
                let src = self.restrict(input, level);
                let n = src.comps;
                let mut out = self.zeros(level, n);
                for (o, s) in out.data.chunks_mut(n).zip(src.data.chunks(n)) {
                    for r in 0..n {
                        let mut acc = Cdd::ZERO;
                        for c in 0..n {
                            let z = m[r * n + c];
                            if z != Complex64::default() {
                                acc += s[c].mul_c64(z);
                            }
                        }
                        o[r] = acc;
                    }
                }
                out
            }
            Expr::Name(n) => self.apply(&lookup(self.resolve, n)?, input, level)?,
            Expr::Add(ts) => {
                let mut out = self.zeros(level, input.comps);
                for t in ts {
                    Self::add_into(&mut out, &self.apply(t, input, level)?);
                }
                out
            }
            Expr::Neg(x) => {
                let mut out = self.apply(x, input, level)?;
                for z in &mut out.data {
                    *z = -*z;
                }
                out
            }
            Expr::Mul(fs) => self.product(fs, input, level)?,
            Expr::Pow(x, n) => self.product(&vec![x.as_ref().clone(); *n as usize], input, level)?,
            Expr::Commutator(x, y) | Expr::Anticommutator(x, y) => {
                let xy = self.product(&[x.as_ref().clone(), y.as_ref().clone()], input, level)?;
                let mut yx = self.product(&[y.as_ref().clone(), x.as_ref().clone()], input, level)?;
                let anti = matches!(e, Expr::Anticommutator(..));
                for (a, b) in yx.data.iter_mut().zip(&xy.data) {
                    *a = if anti { *b + *a } else { *b - *a };
                }
                yx
            }
            Expr::Dot(u, v) => {
                let mut out = self.zeros(level, input.comps);
                for i in 1..=3 {
                    let t = self.product(&[u.component(i), v.component(i)], input, level)?;
                    Self::add_into(&mut out, &t);
                }
                out
            }
        })
    }

    fn base(&self) -> Field {
        let level = self.lat.depth();
        let mut f = self.zeros(level, self.dim);
        for idx in 0..self.len(level) {
            let x = [self.coords.x[0][idx], self.coords.x[1][idx], self.coords.x[2][idx]];
            let v = test_function_dd(&x, self.coords.r[idx]);
            f.data[idx * self.dim..(idx + 1) * self.dim].copy_from_slice(&v[..self.dim]);
        }
        f
    }
}

fn uses_pauli(e: &Expr, resolve: Resolver<'_>, seen: &mut Vec<String>) -> bool {
    match e {
        Expr::Atom(Atom::Matrix(Generator::PauliSigma(_))) => true,
        Expr::Dot(u, v) => (1..=3).any(|i| uses_pauli(&u.component(i), resolve, seen) || uses_pauli(&v.component(i), resolve, seen)),
        Expr::Name(n) => {
            if seen.contains(n) {
                return false;
            }
            seen.push(n.clone());
            resolve(n).is_some_and(|d| uses_pauli(&d, resolve, seen))
        }
        Expr::Add(ts) | Expr::Mul(ts) => ts.iter().any(|t| uses_pauli(t, resolve, seen)),
        Expr::Neg(x) | Expr::Pow(x, _) => uses_pauli(x, resolve, seen),
        Expr::Commutator(x, y) | Expr::Anticommutator(x, y) => uses_pauli(x, resolve, seen) || uses_pauli(y, resolve, seen),
        _ => false,
    }
}

/// Number of spinor components the expression acts on: 2 with any Pauli matrix, else 4.
pub fn spinor_dim(e: &Expr, resolve: Resolver<'_>) -> usize {
    if uses_pauli(e, resolve, &mut Vec::new()) {
        2
    } else {
        4
    }
}

/// Splits an expression into summands, distributing products over at most
/// one sum-like factor per level. The split only sets the residual scale.
pub fn summands(e: &Expr) -> Vec<Expr> {
    const LIMIT: usize = 64;
    match e {
        Expr::Add(ts) => ts.iter().flat_map(summands).collect(),
        Expr::Neg(x) => summands(x).into_iter().map(Expr::neg).collect(),
        Expr::Commutator(x, y) => vec![x.as_ref().clone().times(y.as_ref().clone()), y.as_ref().clone().times(x.as_ref().clone()).neg()],
        Expr::Anticommutator(x, y) => vec![x.as_ref().clone().times(y.as_ref().clone()), y.as_ref().clone().times(x.as_ref().clone())],
        Expr::Mul(fs) => {
            for (idx, f) in fs.iter().enumerate() {
                let parts = summands(f);
                if parts.len() > 1 && parts.len() <= LIMIT {
                    return parts
                        .into_iter()
                        .map(|p| {
                            let mut v = fs.clone();
                            v[idx] = p;
                            Expr::Mul(v)
                        })
                        .collect();
                }
            }
            vec![e.clone()]
        }
        _ => vec![e.clone()],
    }
}

fn check_stencil(cfg: &TestConfig, lat: &Lattice) -> Result<(), OracleError> {
    let reach = lat.reach() * cfg.fd_step;
    for p in &cfg.points {
        let inner = norm3(p) - reach;
        if inner <= CORE_RADIUS {
            return Err(OracleError::StencilTooClose { radius: inner, limit: CORE_RADIUS });
        }
    }
    Ok(())
}

/// Center values of `psi` followed by each term applied to `psi`, per point.
fn evaluate_terms(terms: &[Expr], cfg: &TestConfig, resolve: Resolver<'_>, mode: ExecMode) -> Result<Vec<Vec<Vec<Cdd>>>, OracleError> {
    cfg.validate()?;
    let memo = RefCell::new(HashMap::new());
    let depth = terms.iter().map(|t| depth_of(t, resolve, &memo)).try_fold(0, |a, d| d.map(|d| a.max(d)))?;
    let lat = Lattice::new(cfg.fd_order / 2, depth);
    check_stencil(cfg, &lat)?;
    let dim = terms.iter().map(|t| spinor_dim(t, resolve)).min().unwrap_or(4);
    let weights = central_weights(cfg.fd_order);
    let per_point = exec::map(mode, &cfg.points, |&center| -> Result<Vec<Vec<Cdd>>, OracleError> {
        let ev = Eval::new(&lat, &weights, cfg, dim, resolve, center);
        let base = ev.base();
        let mut vals = vec![base.data[..dim].to_vec()];
        for t in terms {
            vals.push(ev.apply(t, &base, 0)?.data);
        }
        Ok(vals)
    });
    per_point.into_iter().collect()
}

/// Applies `x` to the test function at every configured point.
pub fn apply_operator(x: &Expr, resolve: Resolver<'_>, cfg: &TestConfig, mode: ExecMode) -> Result<Vec<SpinorSample>, OracleError> {
    let vals = evaluate_terms(std::slice::from_ref(x), cfg, resolve, mode)?;
    Ok(vals.into_iter().map(|v| SpinorSample { values: v[1].iter().map(|z| z.to_c64()).collect() }).collect())
}

/// Pointwise residual of a sum of terms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    /// Largest pointwise `|sum| / max(|term|, |psi|)`.
    pub max_relative: f64,
    /// Largest pointwise `|sum|`.
    pub max_absolute: f64,
    /// Root of the summed squares of `|sum|` over all points, in point order.
    pub norm: f64,
    pub points: usize,
}

impl Residual {
    pub fn is_zero(&self) -> bool {
        self.max_relative <= ZERO_TOLERANCE
    }

    pub fn is_nonzero(&self) -> bool {
        self.max_relative >= NONZERO_THRESHOLD
    }
}

fn residual_of(terms: &[Expr], cfg: &TestConfig, resolve: Resolver<'_>, mode: ExecMode) -> Result<Residual, OracleError> {
    let vals = evaluate_terms(terms, cfg, resolve, mode)?;
    let norm = |z: &[Cdd]| z.iter().map(|c| c.to_c64().norm_sqr()).sum::<f64>().sqrt();
    let mut r = Residual { max_relative: 0.0, max_absolute: 0.0, norm: 0.0, points: vals.len() };
    let mut sq = 0.0;
    for v in &vals {
        let mut sum = vec![Cdd::ZERO; v[0].len()];
        let mut scale = norm(&v[0]);
        for t in &v[1..] {
            scale = scale.max(norm(t));
            for (s, c) in sum.iter_mut().zip(t) {
                *s += *c;
            }
        }
        let absolute = norm(&sum);
        let relative = if scale > 0.0 { absolute / scale } else { 0.0 };
        r.max_relative = r.max_relative.max(relative);
        r.max_absolute = r.max_absolute.max(absolute);
        sq += absolute * absolute;
    }
    r.norm = sq.sqrt();
    Ok(r)
}

/// Residual of an identity `e = 0`, scaled by its largest summand at each point.
pub fn identity_residual(e: &Expr, resolve: Resolver<'_>, cfg: &TestConfig, mode: ExecMode) -> Result<Residual, OracleError> {
    residual_of(&summands(e), cfg, resolve, mode)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub residual: Residual,
    pub tolerance: f64,
    pub pass: bool,
}

/// Compares the actions of `x` and `y` pointwise.
pub fn cross_check(x: &Expr, y: &Expr, resolve: Resolver<'_>, cfg: &TestConfig, tolerance: f64, mode: ExecMode) -> Result<CrossCheck, OracleError> {
    let residual = residual_of(&[x.clone(), y.clone().neg()], cfg, resolve, mode)?;
    Ok(CrossCheck { residual, tolerance, pass: residual.max_relative <= tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opalg::catalog::definition;
    use crate::parse::parse_with;

    fn resolve(n: &str) -> Option<Expr> {
        definition(n)
    }

    fn cfg() -> TestConfig {
        TestConfig::sampled(12, 7)
    }

    fn parse(s: &str) -> Expr {
        parse_with(s, &crate::opalg::catalog::Catalog).unwrap()
    }

    #[test]
    fn weights_match_known_stencils() {
        let w = central_weights(8);
        let want = [4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(central_weights(4), vec![2.0 / 3.0, -1.0 / 12.0]);
    }

    #[test]
    fn points_stay_in_shell_and_are_reproducible() {
        let a = sample_points(200, 3);
        assert_eq!(a, sample_points(200, 3));
        assert!(a.iter().all(|p| (0.5..=2.0).contains(&norm3(p))));
        assert_ne!(a, sample_points(200, 4));
    }

    #[test]
    fn identity_and_projector() {
        let c = cfg();
        let id = apply_operator(&Expr::one(), &resolve, &c, ExecMode::Sequential).unwrap();
        let proj = apply_operator(&parse("rhat . rhat"), &resolve, &c, ExecMode::Sequential).unwrap();
        for ((s, q), p) in id.iter().zip(&proj).zip(&c.points) {
            let psi = test_function(p);
            for k in 0..4 {
                assert_eq!(s.values[k], psi[k]);
                assert!((q.values[k] - psi[k]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn momentum_matches_analytic_derivative() {
        // p_3 acting on psi_0 = (...) exp(-r): compare with a closed form.
        let c = cfg();
        let got = apply_operator(&Expr::p(3), &resolve, &c, ExecMode::Sequential).unwrap();
        for (s, p) in got.iter().zip(&c.points) {
            let [x, y, z] = *p;
            let r = norm3(p);
            let poly = Complex64::new(1.0 + 0.3 * x + 0.1 * z + 0.25 * x * z, -0.2 * y);
            let dpoly = Complex64::new(0.1 + 0.25 * x, 0.0);
            let d = (dpoly - poly * (z / r)) * (-r).exp();
            let want = d * Complex64::new(0.0, -1.0);
            assert!((s.values[0] - want).norm() < 1e-9, "{} vs {}", s.values[0], want);
        }
    }

    #[test]
    fn known_zero_and_nonzero_identities() {
        let c = cfg();
        for z in ["[l_1, l_2] - i*l_3", "[p_1, r^-1] - i*r^-2*rhat_1", "[A2, H]", "{K, Sigma . p}"] {
            let r = identity_residual(&parse(z), &resolve, &c, ExecMode::Parallel).unwrap();
            assert!(r.is_zero(), "{z}: {r:?}");
        }
        for nz in ["[l_1, l_2]", "[A1, H]", "{K, Sigma . l}"] {
            let r = identity_residual(&parse(nz), &resolve, &c, ExecMode::Parallel).unwrap();
            assert!(r.is_nonzero(), "{nz}: {r:?}");
        }
    }

    #[test]
    fn pauli_expressions_use_two_components() {
        assert_eq!(spinor_dim(&parse("{K_p, sigma . rhat}"), &resolve), 2);
        assert_eq!(spinor_dim(&parse("K"), &resolve), 4);
        let r = identity_residual(&parse("{K_p, sigma . p}"), &resolve, &cfg(), ExecMode::Sequential).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn rejects_close_stencils_and_bad_configs() {
        let mut c = cfg();
        c.fd_step = 0.2;
        assert!(matches!(
            identity_residual(&parse("[A2, H]"), &resolve, &c, ExecMode::Sequential),
            Err(OracleError::StencilTooClose { .. })
        ));
        let mut c = cfg();
        c.fd_order = 5;
        assert!(c.validate().is_err());
        let mut c = cfg();
        c.points.push([0.1, 0.0, 0.0]);
        assert!(c.validate().is_err());
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let e = parse("[A1, H]");
        let a = identity_residual(&e, &resolve, &cfg(), ExecMode::Parallel).unwrap();
        let b = identity_residual(&e, &resolve, &cfg(), ExecMode::Sequential).unwrap();
        assert_eq!(a, b);
    }
}
