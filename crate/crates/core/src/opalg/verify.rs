//! The identity suite: every step of the hidden-symmetry construction as a
//! list of checkable identities.
//!
//! Each identity is an [`Expr`] that must reduce to zero (or, for controls and
//! misprint witnesses, must not). The exact engine gives the verdict and the
//! finite-difference oracle independently confirms it, so both walk the same
//! unreduced expression. Mutations swap the definitions of `A2` or `H` for the
//! whole suite and must make some check fail.

use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::catalog::{self, hamiltonian, q, qi, sc, A2Coefficients, Catalog};
use super::{reduce_with, Key, OperatorExpr};
use crate::clifford::Generator;
use crate::coeff::{GaussianRational, ScalarCoeff};
use crate::error::{AlgebraError, OracleError};
use crate::exec::{self, ExecMode};
use crate::expr::{Atom, Expr};
use crate::oracle::{self, Residual, TestConfig};
use crate::parse::parse_with;

/// Single-coefficient edits of `A2` or `H`, plus one structural edit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mutation {
    /// `(i/m) K gamma5 r^-1 -> (2i/m) K gamma5 r^-1` in `A2`.
    A2RadialCoefficient,
    /// `-(i/(ma)) K(Sigma.p) -> -(2i/(ma)) K(Sigma.p)` in `A2`.
    A2MomentumCoefficient,
    /// `-(i/(ma)) K(Sigma.p) -> +(i/(ma)) K(Sigma.p)` in `A2`.
    A2MomentumSign,
    /// `Sigma.rhat -> 2 Sigma.rhat` in `A2`.
    A2SigmaRhatCoefficient,
    /// `-a/r -> -2a/r` in `H`.
    HCoulombCoupling,
    /// `beta m -> 2 beta m` in `H`.
    HMass,
    /// Adds the K-even term `beta` to `A2`.
    A2EvenAdmixture,
}

impl Mutation {
    pub const ALL: [Mutation; 7] = [
        Mutation::A2RadialCoefficient,
        Mutation::A2MomentumCoefficient,
        Mutation::A2MomentumSign,
        Mutation::A2SigmaRhatCoefficient,
        Mutation::HCoulombCoupling,
        Mutation::HMass,
        Mutation::A2EvenAdmixture,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::A2RadialCoefficient => "a2-radial-coefficient",
            Mutation::A2MomentumCoefficient => "a2-momentum-coefficient",
            Mutation::A2MomentumSign => "a2-momentum-sign",
            Mutation::A2SigmaRhatCoefficient => "a2-sigma-rhat-coefficient",
            Mutation::HCoulombCoupling => "h-coulomb-coupling",
            Mutation::HMass => "h-mass",
            Mutation::A2EvenAdmixture => "a2-even-admixture",
        }
    }

    /// Whether the edit changes exactly one coefficient.
    pub fn is_single_coefficient(self) -> bool {
        self != Mutation::A2EvenAdmixture
    }

    fn definition(self, name: &str) -> Option<Expr> {
        let mut c = A2Coefficients::conserved();
        match (self, name) {
            (Mutation::A2RadialCoefficient, "A2") => c.k_gamma5_r = sc(qi(2, 1), 0, -1),
            (Mutation::A2MomentumCoefficient, "A2") => c.k_sigma_p = sc(qi(-2, 1), -1, -1),
            (Mutation::A2MomentumSign, "A2") => c.k_sigma_p = sc(qi(1, 1), -1, -1),
            (Mutation::A2SigmaRhatCoefficient, "A2") => c.sigma_rhat = ScalarCoeff::int(2),
            (Mutation::A2EvenAdmixture, "A2") => return Some(c.build().plus(Expr::beta())),
            (Mutation::HCoulombCoupling, "H") => return Some(hamiltonian(ScalarCoeff::m(), ScalarCoeff::a().scale(q(2, 1)))),
            (Mutation::HMass, "H") => return Some(hamiltonian(ScalarCoeff::m().scale(q(2, 1)), ScalarCoeff::a())),
            _ => return catalog::definition(name),
        }
        Some(c.build())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
            let names: Vec<_> = Mutation::ALL.iter().map(|m| m.name()).collect();
            format!("unknown mutation `{s}` (expected one of {})", names.join(", "))
        })
    }
}

/// Catalog lookup with an optional mutation applied.
pub fn resolver(mutation: Option<Mutation>) -> impl Fn(&str) -> Option<Expr> + Sync + Copy {
    move |name: &str| match mutation {
        Some(m) => m.definition(name),
        None => catalog::definition(name),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Expectation {
    Zero,
    Nonzero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Symbolic {
    Zero,
    Nonzero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OracleVerdict {
    OraclePass,
    OracleFail,
}

/// Which identities get a numerical cross-check.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleScope {
    #[default]
    All,
    /// Only identities whose exact verdict contradicts the expectation.
    Failing,
    Off,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Identity {
    pub label: String,
    pub expr: Expr,
    pub expect: Expectation,
}

impl Identity {
    fn zero(label: impl Into<String>, src: &str) -> Self {
        Self { label: label.into(), expr: parse(src), expect: Expectation::Zero }
    }

    fn nonzero(label: impl Into<String>, src: &str) -> Self {
        Self { label: label.into(), expr: parse(src), expect: Expectation::Nonzero }
    }

    fn from_expr(label: impl Into<String>, expr: Expr, expect: Expectation) -> Self {
        Self { label: label.into(), expr, expect }
    }
}

fn parse(src: &str) -> Expr {
    parse_with(src, &Catalog).unwrap_or_else(|e| panic!("suite expression `{src}` failed to parse: {e}"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    pub points: usize,
    pub fd_step: f64,
    pub max_relative: f64,
    /// Same residual with the step halved, when requested.
    pub max_relative_half_step: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub label: String,
    pub expression: String,
    pub expect: Expectation,
    pub symbolic: Symbolic,
    pub terms: usize,
    /// Canonical form of a nonzero result.
    pub residual: Option<String>,
    pub oracle: Option<OracleReport>,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub anchor: String,
    pub pass: bool,
    pub identities: Vec<IdentityReport>,
    pub notes: Vec<String>,
    pub wall_time_ms: Option<f64>,
}

impl CheckReport {
    /// Labels of identities whose exact verdict contradicts their expectation.
    pub fn failed_identities(&self) -> impl Iterator<Item = &IdentityReport> {
        self.identities.iter().filter(|i| !i.pass)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub mutation: Option<Mutation>,
    pub pass: bool,
    pub checks: Vec<CheckReport>,
}

impl SuiteReport {
    pub fn first_failure(&self) -> Option<&CheckReport> {
        self.checks.iter().find(|c| !c.pass)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteOptions {
    pub mutation: Option<Mutation>,
    pub oracle: OracleScope,
    pub oracle_config: TestConfig,
    /// Repeat every oracle evaluation with half the step and require the same verdict.
    pub half_step: bool,
    /// Largest oracle relative residual accepted as zero.
    pub zero_tolerance: f64,
    pub exec: ExecMode,
    pub timings: bool,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            mutation: None,
            oracle: OracleScope::All,
            oracle_config: TestConfig::default(),
            half_step: true,
            zero_tolerance: oracle::ZERO_TOLERANCE,
            exec: ExecMode::default(),
            timings: false,
        }
    }
}

impl SuiteOptions {
    pub fn symbolic_only() -> Self {
        Self { oracle: OracleScope::Off, half_step: false, ..Self::default() }
    }
}

/// What a check contributes beyond its identity list.
struct Built {
    identities: Vec<Identity>,
    notes: Vec<String>,
    /// Extra exact conditions (scan outcomes, linearity) that must hold.
    ok: bool,
}

impl From<Vec<Identity>> for Built {
    fn from(identities: Vec<Identity>) -> Self {
        Built { identities, notes: Vec::new(), ok: true }
    }
}

type Builder = fn(&Ctx) -> Result<Built, AlgebraError>;

struct CheckDef {
    name: &'static str,
    anchor: &'static str,
    build: Builder,
}

/// Sorted by name; reports come out in this order.
const CHECKS: &[CheckDef] = &[
    CheckDef { name: "A1_commutator", anchor: "first trial operator: commutator with H splits into block parts", build: a1_commutator },
    CheckDef { name: "A2_conserved", anchor: "conserved operator commutes with H and anticommutes with K", build: a2_conserved },
    CheckDef { name: "A_squared", anchor: "square of the conserved operator in terms of K and H", build: a_squared },
    CheckDef { name: "JL_equivalence", anchor: "alpha-matrix form of the conserved operator", build: jl_equivalence },
    CheckDef { name: "K_properties", anchor: "K commutes with beta and H, anticommutes with gamma5", build: k_properties },
    CheckDef { name: "f_determination", anchor: "radial function of the gamma5 term fixed by block-wise vanishing", build: f_determination },
    CheckDef { name: "lamb_breaking", anchor: "beta-diagonal radial perturbations break conservation", build: lamb_breaking },
    CheckDef { name: "nonrel_limit", anchor: "beta -> 1, gamma5 -> 0 gives the spin projection of the LRL vector", build: nonrel_limit },
    CheckDef { name: "odd_relation", anchor: "relation between Sigma.A, Sigma.rhat and beta K (Sigma.p)", build: odd_relation },
    CheckDef { name: "pauli_theorem", anchor: "Pauli analogue of K anticommutes with sigma.V", build: pauli_theorem },
    CheckDef { name: "superalgebra", anchor: "supercharge identities built from A2 and K", build: superalgebra },
    CheckDef { name: "theorem_A_LRL", anchor: "K anticommutes with Sigma.V, V = LRL vector", build: theorem_lrl },
    CheckDef { name: "theorem_p", anchor: "K anticommutes with Sigma.V, V = p", build: theorem_p },
    CheckDef { name: "theorem_rhat", anchor: "K anticommutes with Sigma.V, V = rhat", build: theorem_rhat },
    CheckDef { name: "useful_relation", anchor: "K (Sigma.V) as an antisymmetrized cross product with l", build: useful_relation },
];

pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

struct Ctx {
    mutation: Option<Mutation>,
}

impl Ctx {
    fn resolve(&self, name: &str) -> Option<Expr> {
        resolver(self.mutation)(name)
    }

    fn reduce(&self, e: &Expr) -> Result<OperatorExpr, AlgebraError> {
        reduce_with(e, &resolver(self.mutation))
    }

    /// Fully expands catalog names, replacing `H` by `h`.
    fn expand_with_h(&self, e: &Expr, h: &Expr) -> Expr {
        e.expand_names(&|n: &str| if n == "H" { Some(h.clone()) } else { self.resolve(n) })
            .expect("suite expressions only use catalog names")
    }
}

// ---------------------------------------------------------------------------
// Checks

fn k_properties(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(vec![
        Identity::zero("beta commutes with K", "[beta, K]"),
        Identity::zero("gamma5 anticommutes with K", "{gamma5, K}"),
        Identity::zero("K commutes with H", "[K, H]"),
        Identity::zero("J_3 commutes with H", "[J_3, H]"),
        Identity::zero("beta and gamma5 anticommute", "{beta, gamma5}"),
        Identity::zero("gamma5 is an involution", "gamma5^2 - 1"),
    ]
    .into())
}

/// Components of `V` in the grammar: `rhat_j`, `p_j`, `A_LRL_j`.
fn comp(v: &str, j: u8) -> String {
    format!("{v}_{j}")
}

fn cross_terms<'s>(u: &'s str, v: &'s str) -> impl Fn(u8) -> String + 's {
    // (u x v)_k as a grammar string
    move |k: u8| {
        let (i, j) = match k {
            1 => (2, 3),
            2 => (3, 1),
            _ => (1, 2),
        };
        format!("({}*{} - {}*{})", comp(u, i), comp(v, j), comp(u, j), comp(v, i))
    }
}

fn sigma_dot(f: impl Fn(u8) -> String) -> String {
    (1..=3).map(|k| format!("Sigma_{k}*{}", f(k))).collect::<Vec<_>>().join(" + ")
}

fn theorem(v: &str) -> Vec<Identity> {
    let mut out = Vec::new();
    for i in 1..=3u8 {
        for j in 1..=3u8 {
            let k = 6 - i - j;
            let src = match catalog::epsilon(i, j, k) {
                1 => format!("[l_{i}, {}] - i*{}", comp(v, j), comp(v, k)),
                -1 => format!("[l_{i}, {}] + i*{}", comp(v, j), comp(v, k)),
                _ => format!("[l_{i}, {}]", comp(v, j)),
            };
            out.push(Identity::zero(format!("vector under l: [l_{i}, V_{j}]"), &src));
        }
    }
    out.push(Identity::zero("l.V = 0", &format!("l . {v}")));
    out.push(Identity::zero("V.l = 0", &format!("{v} . l")));
    out.push(Identity::zero("J commutes with Sigma.V", &format!("[J_3, Sigma . {v}]")));
    out.push(Identity::zero(
        "(Sigma.l + 1)(Sigma.V) = -Sigma.V - i Sigma.(V x l)",
        &format!("(Sigma . l + 1)*(Sigma . {v}) + Sigma . {v} + i*({})", sigma_dot(cross_terms(v, "l"))),
    ));
    out.push(Identity::zero("{Sigma.l + 1, Sigma.V} = 0", &format!("{{Sigma . l + 1, Sigma . {v}}}")));
    out.push(Identity::zero("{K, Sigma.V} = 0", &format!("{{K, Sigma . {v}}}")));
    out
}

fn theorem_rhat(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(theorem("rhat").into())
}

fn theorem_p(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(theorem("p").into())
}

fn theorem_lrl(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(theorem("A_LRL").into())
}

fn useful_relation(_: &Ctx) -> Result<Built, AlgebraError> {
    let rel = |v: &str| {
        let anti = |k: u8| format!("({} - {})", cross_terms(v, "l")(k), cross_terms("l", v)(k));
        format!("K*(Sigma . {v}) + i*beta*(1/2)*({})", sigma_dot(anti))
    };
    Ok(vec![
        Identity::zero("V = rhat", &rel("rhat")),
        Identity::zero("V = p", &rel("p")),
        Identity::zero("V = 0", "K*(0)"),
    ]
    .into())
}

fn odd_relation(_: &Ctx) -> Result<Built, AlgebraError> {
    let printed_lrl = Expr::commutator(catalog::lrl_component_with(1, qi(1, 2)), Expr::name("H_p"));
    Ok(vec![
        Identity::zero("Sigma.A = Sigma.rhat - (i/(ma)) beta K (Sigma.p)", "Sigma_dot_A - Sigma . rhat + i/(m*a)*beta*K*(Sigma . p)"),
        Identity::zero("LRL vector is conserved by H_p", "[A_LRL_1, H_p]"),
        Identity::nonzero("misprint witness: opposite sign of the beta K term", "Sigma_dot_A - Sigma . rhat - i/(m*a)*beta*K*(Sigma . p)"),
        Identity::from_expr("misprint witness: LRL vector with an extra i is not conserved", printed_lrl, Expectation::Nonzero),
        Identity::nonzero("control: beta K term dropped", "Sigma_dot_A - Sigma . rhat"),
        Identity::nonzero("control: a -> 2a on one side", "Sigma_dot_A - Sigma . rhat + i/(2*m*a)*beta*K*(Sigma . p)"),
    ]
    .into())
}

/// `(X + s beta X beta) / 2`: the block-diagonal part for `s = 1`, block-antidiagonal for `s = -1`.
fn block_part(x: &str, diagonal: bool) -> String {
    let sign = if diagonal { "+" } else { "-" };
    format!("(1/2)*({x} {sign} beta*{x}*beta)")
}

fn a1_commutator(_: &Ctx) -> Result<Built, AlgebraError> {
    let diag = block_part("[A1, H]", true);
    let anti = block_part("[A1, H]", false);
    Ok(vec![
        Identity::zero("x1 term: [Sigma.rhat, H] = (2i/r) beta K gamma5", "[Sigma . rhat, H] - 2*i*r^-1*beta*K*gamma5"),
        Identity::zero("x2 term: i[K(Sigma.p), H] = (a/r^2) K (Sigma.rhat)", "i*[K_Sigma_dot_p, H] - a*r^-2*K*(Sigma . rhat)"),
        Identity::zero(
            "[A1, H] = (2i/r) beta K gamma5 + (a/r^2) K (Sigma.rhat) at x1 = x2 = 1",
            "[A1, H] - (2*i*r^-1*beta*K*gamma5 + a*r^-2*K*(Sigma . rhat))",
        ),
        Identity::zero("block-antidiagonal part is the x1 term", &format!("{anti} - 2*i*r^-1*beta*K*gamma5")),
        Identity::zero("block-diagonal part is the x2 term", &format!("{diag} - a*r^-2*K*(Sigma . rhat)")),
        Identity::nonzero("block-diagonal part is nonzero", &diag),
        Identity::nonzero("block-antidiagonal part is nonzero", &anti),
        Identity::nonzero(
            "misprint witness: minus sign on the x2 term",
            "[A1, H] - (2*i*r^-1*beta*K*gamma5 - a*r^-2*K*(Sigma . rhat))",
        ),
    ]
    .into())
}

fn a2_conserved(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(vec![Identity::zero("[A2, H] = 0", "[A2, H]"), Identity::zero("{A2, K} = 0", "{A2, K}")].into())
}

/// Outcome of solving `[Sigma.rhat + u2 K(Sigma.p) + u3 K gamma5 r^s, H] = 0` for `u2`, `u3`.
#[derive(Clone, Debug, PartialEq)]
pub enum ScanOutcome {
    Solved { k_sigma_p: ScalarCoeff, k_gamma5_r: ScalarCoeff },
    /// A canonical monomial whose coefficient cannot vanish for any choice.
    Obstructed { key: String },
    Underdetermined,
}

/// Solves the linear system key by key: a key with a single unknown and a
/// monomial coefficient fixes that unknown; a key without unknowns must vanish.
fn solve_ansatz(t0: &OperatorExpr, ts: &[OperatorExpr]) -> ScanOutcome {
    let mut keys: Vec<Key> = t0.monomials().map(|m| *m.key).collect();
    for t in ts {
        keys.extend(t.monomials().map(|m| *m.key));
    }
    keys.sort();
    keys.dedup();
    let mut known: Vec<Option<ScalarCoeff>> = vec![None; ts.len()];
    loop {
        let mut progress = false;
        for key in &keys {
            let mut constant = t0.coeff(key).cloned().unwrap_or_else(ScalarCoeff::zero);
            let mut open = Vec::new();
            for (j, t) in ts.iter().enumerate() {
                if let Some(c) = t.coeff(key) {
                    match &known[j] {
                        Some(u) => constant = &constant + &(u * c),
                        None => open.push((j, c.clone())),
                    }
                }
            }
            match open.as_slice() {
                [] if !constant.is_zero() => return ScanOutcome::Obstructed { key: format!("{}", OperatorExpr::monomial(*key, ScalarCoeff::one())) },
                [(j, c)] => {
                    if let Some(inv) = c.inv_monomial() {
                        known[*j] = Some(-(&constant * &inv));
                        progress = true;
                    }
                }
                _ => {}
            }
        }
        if !progress {
            break;
        }
    }
    match (&known[0], &known[1]) {
        (Some(u2), Some(u3)) => ScanOutcome::Solved { k_sigma_p: u2.clone(), k_gamma5_r: u3.clone() },
        _ => ScanOutcome::Underdetermined,
    }
}

pub const F_SCAN_POWERS: std::ops::RangeInclusive<i32> = -3..=1;

/// Runs the radial-power scan; exact, no oracle.
pub fn f_scan(mutation: Option<Mutation>) -> Result<Vec<(i32, ScanOutcome)>, AlgebraError> {
    let ctx = Ctx { mutation };
    let t0 = ctx.reduce(&parse("[Sigma . rhat, H]"))?;
    let t2 = ctx.reduce(&parse("[K_Sigma_dot_p, H]"))?;
    F_SCAN_POWERS
        .map(|s| {
            let t3 = ctx.reduce(&Expr::commutator(Expr::product([Expr::name("K"), Expr::gamma5(), Expr::r(s)]), Expr::name("H")))?;
            Ok((s, solve_ansatz(&t0, &[t2.clone(), t3])))
        })
        .collect()
}

fn f_determination(ctx: &Ctx) -> Result<Built, AlgebraError> {
    let expected = A2Coefficients::conserved();
    let mut notes = Vec::new();
    let mut ok = true;
    let mut identities = Vec::new();
    for (s, outcome) in f_scan(ctx.mutation)? {
        match &outcome {
            ScanOutcome::Solved { k_sigma_p, k_gamma5_r } => {
                // u2 = i x2 and u3 = i x3 c
                let minus_i = ScalarCoeff::constant(-GaussianRational::i());
                let x2 = &minus_i * k_sigma_p;
                let x3c = &minus_i * k_gamma5_r;
                notes.push(format!("s = {s}: solved with x2 = {x2}, x3*c = {x3c}"));
                ok &= s == expected.r_power && *k_sigma_p == expected.k_sigma_p && *k_gamma5_r == expected.k_gamma5_r;
                let a = A2Coefficients { sigma_rhat: ScalarCoeff::one(), k_sigma_p: k_sigma_p.clone(), k_gamma5_r: k_gamma5_r.clone(), r_power: s };
                let comm = Expr::commutator(a.build(), Expr::name("H"));
                let half = Expr::Scalar(ScalarCoeff::ratio(1, 2));
                let twisted = Expr::product([Expr::beta(), comm.clone(), Expr::beta()]);
                identities.push(Identity::from_expr(
                    format!("s = {s}: block-diagonal group vanishes"),
                    half.clone().times(comm.clone().plus(twisted.clone())),
                    Expectation::Zero,
                ));
                identities.push(Identity::from_expr(
                    format!("s = {s}: block-antidiagonal group vanishes"),
                    half.times(comm.minus(twisted)),
                    Expectation::Zero,
                ));
            }
            ScanOutcome::Obstructed { key } => {
                notes.push(format!("s = {s}: no coefficients, the monomial {key} survives"));
                ok &= s != expected.r_power;
                let a = A2Coefficients { r_power: s, ..expected.clone() };
                identities.push(Identity::from_expr(
                    format!("s = {s}: [A, H] with the s = -1 coefficients"),
                    Expr::commutator(a.build(), Expr::name("H")),
                    Expectation::Nonzero,
                ));
            }
            ScanOutcome::Underdetermined => {
                notes.push(format!("s = {s}: underdetermined"));
                ok = false;
            }
        }
    }
    identities.push(Identity::nonzero("integration constant c0 = 1 breaks conservation", "[A2 + i/m*K*gamma5, H]"));
    Ok(Built { identities, notes, ok })
}

fn jl_equivalence(_: &Ctx) -> Result<Built, AlgebraError> {
    let mut v = vec![Identity::zero("A2 = gamma5 (alpha.rhat) - (i/(ma)) K gamma5 (H - beta m)", "A2 - JL_form")];
    for i in 1..=3 {
        v.push(Identity::zero(format!("Sigma_{i} = gamma5 alpha_{i}"), &format!("Sigma_{i} - gamma5*alpha_{i}")));
    }
    v.push(Identity::nonzero(
        "misprint witness: gamma5 multiplying both terms",
        "A2 - gamma5*(alpha . rhat - i/(m*a)*K*gamma5*(H - beta*m))",
    ));
    v.push(Identity::nonzero("control: H replaced by beta m", "A2 - gamma5*(alpha . rhat)"));
    Ok(v.into())
}

fn nonrel(e: &Expr) -> Expr {
    e.map_atoms(&|a| match a {
        Atom::Matrix(Generator::Beta) => Expr::one(),
        Atom::Matrix(Generator::Gamma5) => Expr::zero(),
        _ => Expr::Atom(*a),
    })
}

fn nonrel_limit(ctx: &Ctx) -> Result<Built, AlgebraError> {
    let expand = |e: &Expr| e.expand_names(&|n: &str| ctx.resolve(n)).expect("catalog names");
    let rewritten = expand(&Expr::name("A2_rewritten"));
    let limit = nonrel(&rewritten).minus(Expr::name("Sigma_dot_A"));
    let third = nonrel(&expand(&parse("i/m*r^-1*K*gamma5")));
    let printed = Expr::name("A2").minus(catalog::a2_rewritten(qi(1, 2)));
    Ok(vec![
        Identity::zero("A2 equals its LRL-like rewriting", "A2 - A2_rewritten"),
        Identity::from_expr("beta -> 1, gamma5 -> 0 gives Sigma.A", limit, Expectation::Zero),
        Identity::from_expr("the gamma5 term vanishes in the limit", third, Expectation::Zero),
        Identity::zero("l.A = 0", "l . A_LRL"),
        Identity::from_expr("misprint witness: rewriting with i/(2ma)", printed, Expectation::Nonzero),
    ]
    .into())
}

fn superalgebra(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(vec![
        Identity::zero("A (AK) + (AK) A = 0", "A2*AK + AK*A2"),
        Identity::zero("(AK)(AK) + A^2 K^2 = 0", "AK*AK + A2^2*K^2"),
    ]
    .into())
}

fn a_squared(ctx: &Ctx) -> Result<Built, AlgebraError> {
    let rel = "a^2*m^2*A2^2 - a^2*m^2 - K^2*H^2 + m^2*K^2";
    let free = ctx.expand_with_h(&parse(rel), &hamiltonian(ScalarCoeff::m(), ScalarCoeff::zero()));
    Ok(vec![
        Identity::zero("a^2 m^2 A^2 = a^2 m^2 + K^2 (H^2 - m^2)", rel),
        Identity::zero("K^2 = l^2 + Sigma.l + 1", "K^2 - (l . l + Sigma . l + 1)"),
        Identity::from_expr("control: Coulomb term removed from H", free, Expectation::Nonzero),
    ]
    .into())
}

pub const LAMB_POWERS: [i32; 4] = [-3, -2, 0, 1];

/// `[A2, H + lambda beta r^s]`
pub fn lamb_expr(s: i32, lambda: ScalarCoeff) -> Expr {
    Expr::commutator(
        Expr::name("A2"),
        Expr::name("H").plus(Expr::product([Expr::Scalar(lambda), Expr::beta(), Expr::r(s)])),
    )
}

/// Coefficients `c0, c1, c2` of the exact residual `c0 + c1 lambda + c2 lambda^2`,
/// interpolated from `lambda = 0, 1, 2`.
pub fn lamb_polynomial(s: i32, mutation: Option<Mutation>) -> Result<[OperatorExpr; 3], AlgebraError> {
    let ctx = Ctx { mutation };
    let r = |l: i64| ctx.reduce(&lamb_expr(s, ScalarCoeff::int(l)));
    let (r0, r1, r2) = (r(0)?, r(1)?, r(2)?);
    let c1 = r1.sub(&r0);
    let c2 = r2.sub(&r1).sub(&c1).scale(&ScalarCoeff::ratio(1, 2));
    let c1 = c1.sub(&c2);
    Ok([r0, c1, c2])
}

fn lamb_breaking(ctx: &Ctx) -> Result<Built, AlgebraError> {
    let mut identities = vec![Identity::from_expr("lambda = 0", lamb_expr(-2, ScalarCoeff::zero()), Expectation::Zero)];
    let mut notes = Vec::new();
    let mut ok = true;
    for s in LAMB_POWERS {
        identities.push(Identity::from_expr(format!("s = {s}, lambda = 1"), lamb_expr(s, ScalarCoeff::one()), Expectation::Nonzero));
        let [c0, c1, c2] = lamb_polynomial(s, ctx.mutation)?;
        let linear = c0.is_zero() && c2.is_zero() && !c1.is_zero();
        ok &= linear;
        notes.push(format!(
            "s = {s}: residual is {} in lambda ({} terms in the linear coefficient)",
            if linear { "exactly linear" } else { "not exactly linear" },
            c1.len()
        ));
    }
    // A pure 1/r shift is a coupling change a -> 2a; A2 must follow it.
    let doubled = |c: &ScalarCoeff| {
        c.terms().fold(ScalarCoeff::zero(), |acc, (&(pa, pm), v)| {
            let f = GaussianRational::ratio(2i64.pow(pa.unsigned_abs()), 1);
            let f = if pa < 0 { f.inv().expect("nonzero") } else { f };
            &acc + &ScalarCoeff::monomial(*v * f, pa, pm)
        })
    };
    let a2_shifted = ctx.resolve("A2").expect("A2").expand_names(&|n: &str| ctx.resolve(n)).expect("names").map_scalars(&doubled);
    identities.push(Identity::from_expr(
        "s = -1 scalar shift absorbed by a -> 2a in A2",
        Expr::commutator(a2_shifted, parse("H - a*r^-1")),
        Expectation::Zero,
    ));
    Ok(Built { identities, notes, ok })
}

fn pauli_theorem(_: &Ctx) -> Result<Built, AlgebraError> {
    Ok(vec![
        Identity::zero("{K_p, sigma.rhat} = 0", "{K_p, sigma . rhat}"),
        Identity::zero("{K_p, sigma.p} = 0", "{K_p, sigma . p}"),
        Identity::zero("{K_p, sigma.A} = 0", "{K_p, sigma . A_LRL}"),
        Identity::zero("K_p commutes with H_p", "[K_p, H_p]"),
        Identity::zero("sigma_1 sigma_2 = i sigma_3", "sigma_1*sigma_2 - i*sigma_3"),
    ]
    .into())
}

// ---------------------------------------------------------------------------
// Running

fn oracle_report(e: &Expr, symbolic: Symbolic, opts: &SuiteOptions) -> Result<OracleReport, OracleError> {
    let resolve = resolver(opts.mutation);
    let cfg = &opts.oracle_config;
    let run = |c: &TestConfig| -> Result<Option<Residual>, OracleError> {
        let r = oracle::identity_residual(e, &resolve, c, opts.exec)?;
        Ok(r.max_relative.is_finite().then_some(r))
    };
    let full = run(cfg)?;
    let half = if opts.half_step { Some(run(&cfg.with_step(cfg.fd_step / 2.0))?) } else { None };
    let agrees = |r: &Option<Residual>| match (r, symbolic) {
        (Some(r), Symbolic::Zero) => r.max_relative <= opts.zero_tolerance,
        (Some(r), Symbolic::Nonzero) => r.is_nonzero(),
        (None, _) => false,
    };
    let pass = agrees(&full) && half.as_ref().is_none_or(agrees);
    Ok(OracleReport {
        verdict: if pass { OracleVerdict::OraclePass } else { OracleVerdict::OracleFail },
        points: cfg.points.len(),
        fd_step: cfg.fd_step,
        max_relative: full.map_or(f64::NAN, |r| r.max_relative),
        max_relative_half_step: half.map(|h| h.map_or(f64::NAN, |r| r.max_relative)),
    })
}

fn run_identity(ctx: &Ctx, id: &Identity, opts: &SuiteOptions) -> Result<IdentityReport, OracleError> {
    let reduced = ctx.reduce(&id.expr)?;
    let symbolic = if reduced.is_zero() { Symbolic::Zero } else { Symbolic::Nonzero };
    let exact_ok = matches!((id.expect, symbolic), (Expectation::Zero, Symbolic::Zero) | (Expectation::Nonzero, Symbolic::Nonzero));
    let oracle = match opts.oracle {
        OracleScope::All => Some(oracle_report(&id.expr, symbolic, opts)?),
        OracleScope::Failing if !exact_ok => Some(oracle_report(&id.expr, symbolic, opts)?),
        _ => None,
    };
    let oracle_ok = oracle.as_ref().is_none_or(|o| o.verdict == OracleVerdict::OraclePass);
    Ok(IdentityReport {
        label: id.label.clone(),
        expression: id.expr.to_string(),
        expect: id.expect,
        symbolic,
        terms: reduced.len(),
        residual: (!reduced.is_zero()).then(|| reduced.to_string()),
        oracle,
        pass: exact_ok && oracle_ok,
    })
}

fn run_def(def: &CheckDef, opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    let start = Instant::now();
    let ctx = Ctx { mutation: opts.mutation };
    let built = (def.build)(&ctx)?;
    let identities = built.identities.iter().map(|id| run_identity(&ctx, id, opts)).collect::<Result<Vec<_>, _>>()?;
    let pass = built.ok && identities.iter().all(|i| i.pass);
    Ok(CheckReport {
        name: def.name.to_string(),
        anchor: def.anchor.to_string(),
        pass,
        identities,
        notes: built.notes,
        wall_time_ms: opts.timings.then(|| start.elapsed().as_secs_f64() * 1e3),
    })
}

/// Runs one named check.
pub fn run_check(name: &str, opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    let def = CHECKS.iter().find(|c| c.name == name).ok_or_else(|| AlgebraError::UnknownOperator(name.to_string()))?;
    run_def(def, opts)
}

/// Runs the named checks (all when `names` is empty), in name order.
pub fn run_suite(names: &[&str], opts: &SuiteOptions) -> Result<SuiteReport, OracleError> {
    for n in names {
        if !CHECKS.iter().any(|c| c.name == *n) {
            return Err(AlgebraError::UnknownOperator((*n).to_string()).into());
        }
    }
    let selected: Vec<&CheckDef> = CHECKS.iter().filter(|c| names.is_empty() || names.contains(&c.name)).collect();
    let checks = exec::map(opts.exec, &selected, |def| run_def(def, opts)).into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SuiteReport { mutation: opts.mutation, pass: checks.iter().all(|c| c.pass), checks })
}

/// Which vector the theorem is applied to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TheoremVector {
    Rhat,
    P,
    Lrl,
}

pub fn verify_theorem(v: TheoremVector, opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check(
        match v {
            TheoremVector::Rhat => "theorem_rhat",
            TheoremVector::P => "theorem_p",
            TheoremVector::Lrl => "theorem_A_LRL",
        },
        opts,
    )
}

pub fn verify_useful_relation(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("useful_relation", opts)
}

pub fn verify_odd_relation(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("odd_relation", opts)
}

pub fn verify_a1_commutator(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("A1_commutator", opts)
}

pub fn verify_a2_conserved(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("A2_conserved", opts)
}

pub fn verify_f_determination(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("f_determination", opts)
}

pub fn verify_jl_equivalence(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("JL_equivalence", opts)
}

pub fn verify_nonrel_limit(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("nonrel_limit", opts)
}

pub fn verify_superalgebra(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("superalgebra", opts)
}

pub fn verify_a_squared(opts: &SuiteOptions) -> Result<CheckReport, OracleError> {
    run_check("A_squared", opts)
}

/// Report for `[A2, H + lambda beta r^s]` at one perturbation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambReport {
    pub power: i32,
    pub lambda: String,
    pub symbolic: Symbolic,
    pub residual: Option<String>,
    /// Degree of the exact residual in lambda (`None` when it vanishes identically).
    pub degree: Option<u32>,
    pub pass: bool,
}

pub fn verify_lamb_breaking(s: i32, lambda: ScalarCoeff, mutation: Option<Mutation>) -> Result<LambReport, AlgebraError> {
    let ctx = Ctx { mutation };
    let reduced = ctx.reduce(&lamb_expr(s, lambda.clone()))?;
    let [c0, c1, c2] = lamb_polynomial(s, mutation)?;
    let degree = if !c2.is_zero() {
        Some(2)
    } else if !c1.is_zero() {
        Some(1)
    } else if !c0.is_zero() {
        Some(0)
    } else {
        None
    };
    let symbolic = if reduced.is_zero() { Symbolic::Zero } else { Symbolic::Nonzero };
    let pass = if lambda.is_zero() { symbolic == Symbolic::Zero } else { symbolic == Symbolic::Nonzero && degree == Some(1) };
    Ok(LambReport {
        power: s,
        lambda: lambda.to_string(),
        symbolic,
        residual: (!reduced.is_zero()).then(|| reduced.to_string()),
        degree,
        pass,
    })
}

/// One strength in the symmetry-breaking demonstration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambPoint {
    pub lambda: String,
    pub symbolic: Symbolic,
    /// Root-sum-square of the oracle residual over the sample points.
    pub oracle_norm: Option<f64>,
    /// `oracle_norm / oracle_norm(first nonzero lambda)`, with the exact ratio it should match.
    pub ratio: Option<f64>,
    pub expected_ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LambDemo {
    pub power: i32,
    /// Canonical form of the coefficient of lambda.
    pub linear_coefficient: String,
    pub degree: Option<u32>,
    pub points: Vec<LambPoint>,
    pub ratio_tolerance: f64,
    pub pass: bool,
}

/// `[A2, H + lambda beta r^s]` for several strengths: exact residual, its
/// degree in lambda and, when `oracle` is given, the oracle norm ratios.
pub fn lamb_demo(
    s: i32,
    lambdas: &[ScalarCoeff],
    oracle_cfg: Option<&TestConfig>,
    ratio_tolerance: f64,
    mode: ExecMode,
) -> Result<LambDemo, OracleError> {
    let [_, c1, _] = lamb_polynomial(s, None)?;
    let base = verify_lamb_breaking(s, ScalarCoeff::one(), None)?;
    let resolve = resolver(None);
    let mut points = Vec::new();
    let mut reference: Option<(f64, num_complex::Complex64)> = None;
    let mut pass = base.degree == Some(1);
    for lambda in lambdas {
        let r = verify_lamb_breaking(s, lambda.clone(), None)?;
        pass &= r.pass;
        let oracle_norm = match oracle_cfg {
            Some(cfg) => Some(
                oracle::identity_residual(&lamb_expr(s, lambda.clone()), &resolve, cfg, mode)?.norm,
            ),
            None => None,
        };
        let value = oracle_cfg.map_or(lambda.eval(1.0, 1.0), |c| lambda.eval(c.coupling, c.mass));
        let (ratio, expected_ratio) = match (oracle_norm, reference) {
            (Some(n), Some((n0, v0))) => (Some(n / n0), Some((value / v0).norm())),
            (Some(n), None) if !lambda.is_zero() => {
                reference = Some((n, value));
                (Some(1.0), Some(1.0))
            }
            _ => (None, None),
        };
        if let (Some(r), Some(e)) = (ratio, expected_ratio) {
            pass &= (r - e).abs() <= ratio_tolerance;
        }
        points.push(LambPoint { lambda: lambda.to_string(), symbolic: r.symbolic, oracle_norm, ratio, expected_ratio });
    }
    Ok(LambDemo { power: s, linear_coefficient: c1.to_string(), degree: base.degree, points, ratio_tolerance, pass })
}
