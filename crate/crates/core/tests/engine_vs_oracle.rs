use jlalg::exec::ExecMode;
use jlalg::expr::Expr;
use jlalg::opalg::catalog::{self, Catalog, OPERATOR_NAMES};
use jlalg::opalg::reduce;
use jlalg::oracle::{self, cross_check, TestConfig, ZERO_TOLERANCE};
use jlalg::parse::parse_with;
use proptest::prelude::*;

fn cfg() -> TestConfig {
    TestConfig::sampled(12, 3)
}

fn parse(src: &str) -> Expr {
    parse_with(src, &Catalog).unwrap()
}

fn agrees(x: &Expr, y: &Expr) -> oracle::CrossCheck {
    cross_check(x, y, &catalog::definition, &cfg(), ZERO_TOLERANCE, ExecMode::Sequential).unwrap()
}

#[test]
fn catalog_operators_match_their_canonical_forms() {
    for name in OPERATOR_NAMES {
        let x = Expr::name(name);
        let r = reduce(&x).unwrap().to_expr();
        let c = agrees(&x, &r);
        assert!(c.pass, "{name}: {:?}", c.residual);
    }
}

#[test]
fn sigma_l_times_sigma_rhat_matches_its_expansion() {
    let x = parse("(Sigma . l)*(Sigma . rhat)");
    let y = parse(
        "-2*(Sigma . rhat) - i*(Sigma_1*(rhat_2*l_3 - rhat_3*l_2) + Sigma_2*(rhat_3*l_1 - rhat_1*l_3) + Sigma_3*(rhat_1*l_2 - rhat_2*l_1))",
    );
    assert!(agrees(&x, &y).pass);
    assert!(!agrees(&x, &parse("Sigma . rhat")).pass);
}

#[test]
fn a2_matches_the_alpha_form() {
    assert!(agrees(&Expr::name("A2"), &Expr::name("JL_form")).pass);
}

const GENERATORS: &[&str] = &[
    "rhat_1", "rhat_3", "p_1", "p_2", "l_3", "r^-1", "r^2", "beta", "gamma5", "alpha_1", "Sigma_2", "K", "H", "Sigma_dot_rhat",
];

proptest! {
    #![proptest_config(ProptestConfig { cases: 20, ..ProptestConfig::default() })]

    #[test]
    fn random_products_survive_normalization(factors in prop::collection::vec(prop::sample::select(GENERATORS), 1..=4)) {
        let x = parse(&factors.join("*"));
        let r = reduce(&x).unwrap().to_expr();
        let c = agrees(&x, &r);
        prop_assert!(c.pass, "{:?}: {:?}", factors, c.residual);
    }
}
