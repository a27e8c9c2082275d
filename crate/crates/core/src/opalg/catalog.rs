//! Named operators of the Dirac-Coulomb construction.
//!
//! Every entry is an unreduced [`Expr`] so that the symbolic engine and the
//! numerical oracle both start from the same definition.

use crate::coeff::{GaussianRational, ScalarCoeff};
use crate::expr::{Expr, VectorExpr};
use crate::parse::NameResolver;

pub const OPERATOR_NAMES: &[&str] = &[
    "H",
    "K",
    "J_1",
    "J_2",
    "J_3",
    "Sigma_dot_rhat",
    "K_Sigma_dot_p",
    "A_LRL_1",
    "A_LRL_2",
    "A_LRL_3",
    "Sigma_dot_A",
    "A1",
    "A2",
    "A2_rewritten",
    "JL_form",
    "K_p",
    "H_p",
    "Q1",
    "AK",
];

pub const VECTOR_NAMES: &[&str] = &["J", "A_LRL"];

/// Resolves catalog names for the parser.
pub struct Catalog;

impl NameResolver for Catalog {
    fn is_operator(&self, name: &str) -> bool {
        OPERATOR_NAMES.contains(&name)
    }

    fn is_vector(&self, base: &str) -> bool {
        VECTOR_NAMES.contains(&base)
    }
}

pub(crate) fn q(num: i64, den: i64) -> GaussianRational {
    GaussianRational::ratio(num, den)
}

pub(crate) fn qi(num: i64, den: i64) -> GaussianRational {
    GaussianRational::ratio(num, den) * GaussianRational::i()
}

/// `c · a^pa · m^pm`
pub fn sc(c: GaussianRational, pa: i32, pm: i32) -> ScalarCoeff {
    ScalarCoeff::monomial(c, pa, pm)
}

/// Levi-Civita symbol on indices 1..=3.
pub fn epsilon(i: u8, j: u8, k: u8) -> i64 {
    match (i, j, k) {
        (1, 2, 3) | (2, 3, 1) | (3, 1, 2) => 1,
        (1, 3, 2) | (3, 2, 1) | (2, 1, 3) => -1,
        _ => 0,
    }
}

/// Component `k` of the operator cross product `u x v` (order kept).
pub fn cross(u: impl Fn(u8) -> Expr, v: impl Fn(u8) -> Expr, k: u8) -> Expr {
    let mut terms = Vec::new();
    for i in 1..=3 {
        for j in 1..=3 {
            match epsilon(k, i, j) {
                1 => terms.push(u(i).times(v(j))),
                -1 => terms.push(u(i).times(v(j)).neg()),
                _ => {}
            }
        }
    }
    Expr::sum(terms)
}

/// Component `k` of `p x l - l x p`.
pub fn antisym_p_l(k: u8) -> Expr {
    cross(Expr::p, Expr::l, k).minus(cross(Expr::l, Expr::p, k))
}

/// `alpha.p + mass·beta - coulomb·r^-1`
pub fn hamiltonian(mass: ScalarCoeff, coulomb: ScalarCoeff) -> Expr {
    Expr::sum([
        Expr::dot(VectorExpr::Alpha, VectorExpr::P),
        Expr::beta().scaled(mass),
        Expr::r(-1).scaled(-coulomb),
    ])
}

/// `beta (Sigma.l + 1)`
pub fn k_operator() -> Expr {
    Expr::beta().times(Expr::dot(VectorExpr::Sigma, VectorExpr::L).plus(Expr::one()))
}

/// Coefficients of the ansatz `c_rhat Sigma.rhat + c_kp K(Sigma.p) + c_kg K gamma5 r^s`.
#[derive(Clone, Debug, PartialEq)]
pub struct A2Coefficients {
    pub sigma_rhat: ScalarCoeff,
    pub k_sigma_p: ScalarCoeff,
    pub k_gamma5_r: ScalarCoeff,
    pub r_power: i32,
}

impl A2Coefficients {
    /// The conserved operator with `x1 = 1`: `x2 = -1/(ma)` and the radial term `1/(m r)`.
    pub fn conserved() -> Self {
        Self {
            sigma_rhat: ScalarCoeff::one(),
            k_sigma_p: sc(qi(-1, 1), -1, -1),
            k_gamma5_r: sc(qi(1, 1), 0, -1),
            r_power: -1,
        }
    }

    pub fn build(&self) -> Expr {
        Expr::sum([
            Expr::dot(VectorExpr::Sigma, VectorExpr::Rhat).scaled(self.sigma_rhat.clone()),
            Expr::product([Expr::Scalar(self.k_sigma_p.clone()), Expr::name("K"), Expr::dot(VectorExpr::Sigma, VectorExpr::P)]),
            Expr::product([Expr::Scalar(self.k_gamma5_r.clone()), Expr::name("K"), Expr::gamma5(), Expr::r(self.r_power)]),
        ])
    }
}

/// LRL vector component `rhat_k - (1/(2ma)) (p x l - l x p)_k`.
pub fn lrl_component(k: u8) -> Expr {
    lrl_component_with(k, q(1, 2))
}

/// `rhat_k - (c/(ma)) (p x l - l x p)_k`
pub fn lrl_component_with(k: u8, c: GaussianRational) -> Expr {
    Expr::rhat(k).minus(antisym_p_l(k).scaled(sc(c, -1, -1)))
}

/// `Sigma.(rhat - (c/(ma)) beta (p x l - l x p)) + (i/m) r^-1 K gamma5`
pub fn a2_rewritten(c: GaussianRational) -> Expr {
    Expr::sum([
        Expr::contract(VectorExpr::Sigma, |k| {
            Expr::rhat(k).minus(Expr::beta().times(antisym_p_l(k)).scaled(sc(c, -1, -1)))
        }),
        Expr::product([Expr::Scalar(sc(qi(1, 1), 0, -1)), Expr::r(-1), Expr::name("K"), Expr::gamma5()]),
    ])
}

pub fn definition(name: &str) -> Option<Expr> {
    use VectorExpr::*;
    let ma_inv = |c| sc(c, -1, -1);
    Some(match name {
        "H" => hamiltonian(ScalarCoeff::m(), ScalarCoeff::a()),
        "K" => k_operator(),
        "J_1" | "J_2" | "J_3" => {
            let i = name.as_bytes()[2] - b'0';
            Expr::l(i).plus(Expr::gen(crate::clifford::Generator::SigmaBig(i)).scaled(ScalarCoeff::ratio(1, 2)))
        }
        "Sigma_dot_rhat" => Expr::dot(Sigma, Rhat),
        "K_Sigma_dot_p" => Expr::name("K").times(Expr::dot(Sigma, P)),
        "A_LRL_1" | "A_LRL_2" | "A_LRL_3" => lrl_component(name.as_bytes()[6] - b'0'),
        "Sigma_dot_A" => Expr::dot(Sigma, Named("A_LRL".into())),
        // trial operator with x1 = x2 = 1
        "A1" => Expr::dot(Sigma, Rhat).plus(Expr::name("K_Sigma_dot_p").scaled(ScalarCoeff::i())),
        "A2" => A2Coefficients::conserved().build(),
        "A2_rewritten" => a2_rewritten(q(1, 2)),
        "JL_form" => Expr::gamma5().times(Expr::dot(Alpha, Rhat)).minus(Expr::product([
            Expr::Scalar(ma_inv(qi(1, 1))),
            Expr::name("K"),
            Expr::gamma5(),
            Expr::name("H").minus(Expr::beta().scaled(ScalarCoeff::m())),
        ])),
        // -(2 s.l + 1) with spin s = sigma/2
        "K_p" => Expr::dot(PauliSigma, L).plus(Expr::one()).neg(),
        "H_p" => Expr::sum([
            Expr::sum((1..=3).map(|i| Expr::p(i).pow(2))).scaled(sc(q(1, 2), 0, -1)),
            Expr::r(-1).scaled(-ScalarCoeff::a()),
        ]),
        "Q1" => Expr::name("A2"),
        "AK" => Expr::name("A2").times(Expr::name("K")),
        _ => return None,
    })
}
