//! One line per acceptance criterion; exits nonzero if any fails.

use std::io::Write;
use std::process::Command;
use std::time::Instant;

use jlalg::coeff::ScalarCoeff;
use jlalg::exec::ExecMode;
use jlalg::opalg::verify::{self, Expectation, Mutation, OracleScope, OracleVerdict, SuiteOptions, Symbolic};
use jlalg::oracle::{self, TestConfig};
use jlalg::radial::{self, GridConfig, RadialProblem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SYMBOLIC_BUDGET_S: f64 = 10.0;
const MIN_MUTATIONS: usize = 5;
const MIN_POINTS: usize = 100;
const SPECTRUM_REL_TOL: f64 = 1e-5;
const DEGENERACY_FACTOR: f64 = 2.0;
const GROUND_ALPHA_TOL: f64 = 1e-6;
const RANDOM_COUPLINGS: usize = 20;
const LAMB_RATIO_TOL: f64 = 1e-3;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: u32, title: &str, run: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = run();
    println!(
        "[{}] {n}. {title}: {} ({:.1} s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64()
    );
    std::io::stdout().flush().ok();
    o.pass
}

fn symbolic_suite() -> Outcome {
    let t = Instant::now();
    let r = verify::run_suite(&[], &SuiteOptions::symbolic_only()).expect("suite runs");
    let secs = t.elapsed().as_secs_f64();
    let ids: Vec<_> = r.checks.iter().flat_map(|c| &c.identities).collect();
    let zero = ids.iter().filter(|i| i.expect == Expectation::Zero).count();
    let failed: Vec<String> = r
        .checks
        .iter()
        .flat_map(|c| c.failed_identities().map(move |i| format!("{}: {}", c.name, i.label)))
        .chain(r.checks.iter().filter(|c| !c.pass).map(|c| c.name.clone()))
        .collect();
    let complete = verify::check_names().len() == r.checks.len();
    Outcome {
        pass: r.pass && complete && failed.is_empty() && secs < SYMBOLIC_BUDGET_S,
        detail: format!(
            "{} checks, {zero} identities reduce to exactly zero, {} witnesses stay nonzero, {secs:.2} s (budget {SYMBOLIC_BUDGET_S} s){}",
            r.checks.len(),
            ids.len() - zero,
            if failed.is_empty() { String::new() } else { format!(", failing: {failed:?}") }
        ),
    }
}

fn mutation_sensitivity() -> Outcome {
    let mut caught = Vec::new();
    let mut vacuous = Vec::new();
    for m in Mutation::ALL.into_iter().filter(|m| m.is_single_coefficient()) {
        let r = verify::run_suite(&[], &SuiteOptions { mutation: Some(m), ..SuiteOptions::symbolic_only() }).expect("suite runs");
        let flipped = r
            .checks
            .iter()
            .flat_map(|c| &c.identities)
            .filter(|i| i.expect == Expectation::Zero && i.symbolic == Symbolic::Nonzero)
            .count();
        if flipped > 0 {
            caught.push(format!("{} ({flipped})", m.name()));
        } else {
            vacuous.push(m.name());
        }
    }
    Outcome {
        pass: vacuous.is_empty() && caught.len() >= MIN_MUTATIONS,
        detail: format!(
            "{} single-coefficient mutations each turn identities NONZERO: {}{}",
            caught.len(),
            caught.join(", "),
            if vacuous.is_empty() { String::new() } else { format!("; vacuous: {vacuous:?}") }
        ),
    }
}

fn oracle_agreement() -> Outcome {
    let cfg = TestConfig::default();
    let mut zero_worst = 0.0f64;
    let mut nonzero_least = f64::INFINITY;
    let mut bad = Vec::new();
    let mut count_zero = 0;
    let mut count_mutated = 0;
    let mut note = |label: String, sym: Symbolic, o: &verify::OracleReport| {
        let both = [Some(o.max_relative), o.max_relative_half_step];
        for r in both.into_iter().flatten() {
            match sym {
                Symbolic::Zero => zero_worst = zero_worst.max(r),
                Symbolic::Nonzero => nonzero_least = nonzero_least.min(r),
            }
        }
        if o.verdict != OracleVerdict::OraclePass || o.max_relative_half_step.is_none() {
            bad.push(label);
        }
    };
    let base = verify::run_suite(&[], &SuiteOptions { oracle_config: cfg.clone(), ..SuiteOptions::default() }).expect("suite runs");
    for c in &base.checks {
        for i in &c.identities {
            if i.symbolic == Symbolic::Zero {
                count_zero += 1;
            }
            note(format!("{}: {}", c.name, i.label), i.symbolic, i.oracle.as_ref().expect("oracle ran"));
        }
    }
    for m in Mutation::ALL {
        let opts = SuiteOptions { mutation: Some(m), oracle: OracleScope::Failing, oracle_config: cfg.clone(), ..SuiteOptions::default() };
        let r = verify::run_suite(&[], &opts).expect("suite runs");
        for c in &r.checks {
            for i in c.identities.iter().filter(|i| i.oracle.is_some()) {
                count_mutated += 1;
                note(format!("{} / {}: {}", m.name(), c.name, i.label), i.symbolic, i.oracle.as_ref().unwrap());
            }
        }
    }
    let enough = cfg.points.len() >= MIN_POINTS;
    Outcome {
        pass: bad.is_empty() && enough && zero_worst <= oracle::ZERO_TOLERANCE && nonzero_least >= oracle::NONZERO_THRESHOLD,
        detail: format!(
            "{} points, steps {} and {}: {count_zero} zero identities max residual {zero_worst:.1e} (<= {:e}), \
             nonzero and {count_mutated} mutated identities min residual {nonzero_least:.2e} (>= {:e}){}",
            cfg.points.len(),
            cfg.fd_step,
            cfg.fd_step / 2.0,
            oracle::ZERO_TOLERANCE,
            oracle::NONZERO_THRESHOLD,
            if bad.is_empty() { String::new() } else { format!(", disagreeing: {bad:?}") }
        ),
    }
}

fn spectrum() -> Outcome {
    let res = radial::spectrum(&[0.01, 0.0729735, 0.3], &[1, 2], 3, &GridConfig::default(), ExecMode::default()).expect("spectrum solves");
    let levels: Vec<_> = res.iter().flat_map(|s| &s.levels).collect();
    let worst = levels.iter().map(|l| l.relative_error()).fold(0.0, f64::max);
    let mut split = 0.0f64;
    let mut bad = Vec::new();
    for l in levels.iter().filter(|l| l.k < 0) {
        if let Some(p) = levels.iter().find(|p| p.a == l.a && p.k == -l.k && p.n_r == l.n_r) {
            let diff = (p.energy - l.energy).abs();
            split = split.max(diff);
            if diff > DEGENERACY_FACTOR * l.error_estimate.max(p.error_estimate) {
                bad.push(format!("a = {}, |k| = {}, n_r = {}: {diff:.1e}", l.a, -l.k, l.n_r));
            }
        }
    }
    let pairs = levels.iter().filter(|l| l.k < 0 && l.partner.is_some()).count();
    let bound = levels.iter().all(|l| l.energy > 0.0 && l.energy < 1.0);
    let clean = res.iter().all(|s| s.mid_gap == 0) && levels.iter().all(|l| l.tail < radial::TAIL_THRESHOLD);
    Outcome {
        pass: worst <= SPECTRUM_REL_TOL && bad.is_empty() && bound && clean && levels.len() == 36,
        detail: format!(
            "{} levels in 12 sectors, max relative error {worst:.1e} (<= {SPECTRUM_REL_TOL:e}), \
             {pairs} +-k pairs split by at most {split:.1e} within {DEGENERACY_FACTOR}x error estimates{}",
            levels.len(),
            if bad.is_empty() { String::new() } else { format!(", split: {bad:?}") }
        ),
    }
}

fn algebraic_ground_state() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_ulps = 0.0f64;
    for _ in 0..RANDOM_COUPLINGS {
        let k_abs: i32 = rng.gen_range(1..=4);
        let k = if rng.gen_bool(0.5) { k_abs } else { -k_abs };
        let a = rng.gen_range(0.0..0.999) * f64::from(k_abs);
        let g = radial::ground_state_from_a2(a, k).unwrap();
        let s = radial::sommerfeld_energy(a, 0, k).unwrap();
        worst_ulps = worst_ulps.max((g - s).abs() / (f64::EPSILON * s));
    }
    let mut alphas = Vec::new();
    for a in [0.01, 0.0729735, 0.3] {
        let rep = radial::check_a2_relation_numeric(&RadialProblem::new(a, -1), 3, GROUND_ALPHA_TOL, ExecMode::default()).expect("solves");
        alphas.push((a, rep.ground, rep.pass));
    }
    let worst_alpha = alphas.iter().map(|x| x.1.abs()).fold(0.0, f64::max);
    Outcome {
        pass: worst_ulps <= 1.0 && alphas.iter().all(|x| x.2) && worst_alpha <= GROUND_ALPHA_TOL,
        detail: format!(
            "closed forms agree within {worst_ulps:.1} ulp on {RANDOM_COUPLINGS} random (a, k); \
             solver |k| = 1 ground state alpha_A2 at most {worst_alpha:.1e} (<= {GROUND_ALPHA_TOL:e}) for a in {{0.01, 0.0729735, 0.3}}"
        ),
    }
}

fn symmetry_breaking() -> Outcome {
    let cfg = TestConfig::default();
    let lambdas = [ScalarCoeff::one(), ScalarCoeff::int(2)];
    let demo = verify::lamb_demo(-2, &lambdas, Some(&cfg), LAMB_RATIO_TOL, ExecMode::default()).expect("demo runs");
    let zero = verify::verify_lamb_breaking(-2, ScalarCoeff::zero(), None).expect("reduces");
    let ratio = demo.points[1].ratio.unwrap_or(f64::NAN);
    Outcome {
        pass: demo.pass && demo.degree == Some(1) && zero.pass && (ratio - 2.0).abs() <= LAMB_RATIO_TOL,
        detail: format!(
            "[A2, H + lambda beta r^-2] NONZERO, degree {} in lambda, ZERO at lambda = 0; oracle norm ratio {ratio:.9} for lambda -> 2 lambda (2 +- {LAMB_RATIO_TOL:e})",
            demo.degree.map_or("-".into(), |d| d.to_string())
        ),
    }
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("det.toml");
    std::fs::write(&path, "version = 1\n[oracle]\npoints = 16\nseed = 42\n").unwrap();
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_jlalg"))
            .args(["--json", "--config", path.to_str().unwrap(), "verify"])
            .output()
            .expect("binary runs")
    };
    let (a, b) = (run(), run());
    let same = a.stdout == b.stdout && !a.stdout.is_empty();
    Outcome {
        pass: same && a.status.success() && b.status.success(),
        detail: format!(
            "two `verify --json` runs (16 oracle points, seed 42) {} ({} bytes, exit {:?})",
            if same { "are byte-identical" } else { "differ" },
            a.stdout.len(),
            a.status.code()
        ),
    }
}

fn main() {
    let results = [
        report(1, "symbolic identity suite", symbolic_suite),
        report(2, "mutation sensitivity", mutation_sensitivity),
        report(3, "oracle agreement", oracle_agreement),
        report(4, "spectrum vs closed form", spectrum),
        report(5, "algebraic ground state", algebraic_ground_state),
        report(6, "symmetry breaking", symmetry_breaking),
        report(7, "determinism", determinism),
    ];
    let passed = results.iter().filter(|p| **p).count();
    println!("acceptance: {passed}/{} criteria pass", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
