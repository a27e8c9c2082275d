use proptest::prelude::*;

use super::catalog::{self, Catalog};
use super::*;
use crate::parse::parse_with;

fn red(src: &str) -> OperatorExpr {
    let e = parse_with(src, &Catalog).unwrap_or_else(|e| panic!("{src}: {e}"));
    reduce(&e).unwrap_or_else(|e| panic!("{src}: {e}"))
}

fn assert_zero(src: &str) {
    let r = red(src);
    assert!(r.is_zero(), "{src} reduced to {r}");
}

#[test]
fn multiply_examples() {
    assert_eq!(red("(Sigma . rhat)*(Sigma . rhat)"), OperatorExpr::one());
    assert_zero("(Sigma . l + 1)*(Sigma . rhat) + Sigma . rhat + i*(Sigma_1*(rhat_2*l_3 - rhat_3*l_2) + Sigma_2*(rhat_3*l_1 - rhat_1*l_3) + Sigma_3*(rhat_1*l_2 - rhat_2*l_1))");
    assert_eq!(red("p_1*r^-1 - r^-1*p_1"), red("i*r^-2*rhat_1"));
}

#[test]
fn commutator_examples() {
    assert_zero("{Sigma . l + 1, Sigma . rhat}");
    assert_zero("[K, K]");
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            let mut want = OperatorExpr::zero();
            for k in 1..=3u8 {
                let e = catalog::epsilon(i, j, k);
                if e != 0 {
                    want = want.add(&OperatorExpr::rhat(k).scale(&ScalarCoeff::constant(GaussianRational::i() * GaussianRational::int(e))));
                }
            }
            assert_eq!(red(&format!("[l_{i}, rhat_{j}]")), want, "[l_{i}, rhat_{j}]");
        }
    }
}

#[test]
fn reduce_examples() {
    assert_eq!(red("rhat_1*rhat_1 + rhat_2*rhat_2 + rhat_3*rhat_3"), OperatorExpr::one());
    assert_zero("l_1*l_2 - l_2*l_1 - i*l_3");
    assert_zero("p_1*rhat_2 - rhat_2*p_1 + i*r^-1*(0 - rhat_1*rhat_2)");
}

#[test]
fn catalog_examples() {
    assert_eq!(red("H"), red("alpha . p + beta*m - a*r^-1"));
    assert_eq!(red("A2"), red("Sigma . rhat - i/(m*a)*K*(Sigma . p) + i/m*K*gamma5*r^-1"));
    assert_eq!(red("K_p"), red("-(sigma . l + 1)"));
    for name in catalog::OPERATOR_NAMES {
        assert!(catalog::definition(name).is_some(), "{name}");
    }
    assert!(catalog::definition("Q2").is_none());
}

#[test]
fn rewriting_rules() {
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            assert_zero(&format!("[rhat_{i}, rhat_{j}]"));
            assert_zero(&format!("[p_{i}, p_{j}]"));
            let d = if i == j { "1" } else { "0" };
            assert_zero(&format!("[p_{i}, rhat_{j}] + i*r^-1*({d} - rhat_{i}*rhat_{j})"));
            let eps = |v: &str| {
                (1..=3u8)
                    .filter(|&k| catalog::epsilon(i, j, k) != 0)
                    .map(|k| format!(" - ({})*i*{v}_{k}", catalog::epsilon(i, j, k)))
                    .collect::<String>()
            };
            assert_zero(&format!("[l_{i}, l_{j}]{}", eps("l")));
            assert_zero(&format!("[l_{i}, rhat_{j}]{}", eps("rhat")));
            assert_zero(&format!("[l_{i}, p_{j}]{}", eps("p")));
        }
        for n in [-3, -1, 1, 2] {
            assert_zero(&format!("[l_{i}, r^{n}]"));
            assert_zero(&format!("[p_{i}, r^{n}] + i*({n})*r^{}*rhat_{i}", n - 1));
        }
    }
    assert_zero("l . rhat");
    assert_zero("rhat . l");
    assert_zero("l . p");
    assert_zero("p . l");
}

#[test]
fn clifford_factor_is_exact() {
    assert_zero("beta*beta - 1");
    assert_zero("{alpha_1, alpha_2}");
    assert_zero("Sigma_1*Sigma_2 - i*Sigma_3");
    assert_zero("gamma5*alpha_1 - Sigma_1");
}

#[test]
fn mixed_dimensions_are_rejected() {
    let e = parse_with("sigma_1*beta", &Catalog).unwrap();
    assert!(matches!(reduce(&e), Err(AlgebraError::DimensionMismatch(..))));
}

#[test]
fn printer_output_parses_back() {
    for src in ["A2", "[A1, H]", "K_p*H_p", "AK", "l . A_LRL + beta*gamma5*r^3", "Q1"] {
        let r = red(src);
        let text = r.to_string();
        assert_eq!(red(&text), r, "{src} printed as {text}");
        assert_eq!(reduce(&r.to_expr()).unwrap(), r, "{src}");
    }
    assert_eq!(red("0").to_string(), "0");
}

#[test]
fn printing_is_deterministic() {
    let a = red("[A2, H + beta*r^-2]").to_string();
    let b = red("[A2, H + beta*r^-2]").to_string();
    assert_eq!(a, b);
}

#[test]
fn reduce_with_catalog_matches_reduce() {
    for name in ["A2", "K", "A_LRL_2", "JL_form"] {
        let e = Expr::name(name);
        assert_eq!(reduce_with(&e, &catalog::definition).unwrap(), reduce(&e).unwrap());
    }
    let none = |_: &str| None;
    assert!(matches!(reduce_with(&Expr::name("A2"), &none), Err(AlgebraError::UnknownOperator(_))));
}

/// Cheap catalog operators and generators for randomized algebra checks.
const POOL: &[&str] = &[
    "H", "K", "J_1", "J_3", "Sigma_dot_rhat", "K_Sigma_dot_p", "A_LRL_1", "A2", "rhat_2", "p_3", "l_1", "r^-1", "beta",
    "gamma5", "alpha_2", "2*a - i*m",
];

fn pooled() -> impl Strategy<Value = &'static str> {
    prop::sample::select(POOL)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn reduce_is_idempotent(x in pooled(), y in pooled()) {
        let r = red(&format!("({x})*({y})"));
        prop_assert_eq!(reduce(&r.to_expr()).unwrap(), r);
    }

    #[test]
    fn reduce_is_linear(x in pooled(), y in pooled(), c in -3i64..=3) {
        let lhs = red(&format!("({x}) + ({c})*({y})"));
        let rx = red(x);
        let ry = red(y);
        prop_assert_eq!(&lhs, &rx.add(&ry.scale(&ScalarCoeff::int(c))));
        let again = reduce(&Expr::sum([rx.to_expr(), ry.to_expr().scaled(ScalarCoeff::int(c))])).unwrap();
        prop_assert_eq!(lhs, again);
    }

    #[test]
    fn multiply_is_associative(x in pooled(), y in pooled(), z in pooled()) {
        let (rx, ry, rz) = (red(x), red(y), red(z));
        let left = multiply(&multiply(&rx, &ry).unwrap(), &rz).unwrap();
        let right = multiply(&rx, &multiply(&ry, &rz).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn commutator_is_antisymmetric(x in pooled(), y in pooled()) {
        let xy = commutator(&red(x), &red(y)).unwrap();
        let yx = commutator(&red(y), &red(x)).unwrap();
        prop_assert!(xy.add(&yx).is_zero());
    }

    #[test]
    fn jacobi_identity(x in pooled(), y in pooled(), z in pooled()) {
        let (rx, ry, rz) = (red(x), red(y), red(z));
        let c = |a: &OperatorExpr, b: &OperatorExpr| commutator(a, b).unwrap();
        let sum = c(&rx, &c(&ry, &rz)).add(&c(&ry, &c(&rz, &rx))).add(&c(&rz, &c(&rx, &ry)));
        prop_assert!(sum.is_zero());
    }
}
