//! `jlalg`: exact verification of the Dirac-Coulomb hidden symmetry.
//!
//! Exit codes: 0 all checks pass, 1 a verification failed, 2 usage, parse or
//! precondition error, 3 numerical convergence failure.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use jlalg::coeff::ScalarCoeff;
use jlalg::error::{OracleError, RadialError};
use jlalg::exec::ExecMode;
use jlalg::opalg::catalog::{self, Catalog};
use jlalg::opalg::verify::{self, Mutation, OracleScope, OracleVerdict, SuiteOptions, SuiteReport, Symbolic};
use jlalg::opalg::{reduce, OperatorExpr};
use jlalg::oracle::{self, Residual};
use jlalg::parse::parse_with;
use jlalg::radial::{self, RadialProblem, SpectrumResult};
use serde::Serialize;

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "jlalg", version, about = "Operator algebra and spectrum checks for the Dirac-Coulomb hidden symmetry")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Emit a JSON report on stdout.
    #[arg(long, global = true)]
    json: bool,
    /// TOML configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Oracle sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Oracle zero tolerance (verify, oracle), relative match tolerance (spectrum) or ratio tolerance (lamb).
    #[arg(long, global = true)]
    tolerance: Option<f64>,
    /// Run independent work in parallel or sequentially.
    #[arg(long, global = true, value_parser = parse_exec)]
    exec: Option<ExecMode>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the identity suite (all checks, or the named ones).
    Verify {
        checks: Vec<String>,
        /// Skip the finite-difference cross-checks.
        #[arg(long)]
        no_oracle: bool,
        /// Include wall-clock times (makes output run-dependent).
        #[arg(long)]
        timings: bool,
        #[arg(long, hide = true)]
        mutation: Option<String>,
    },
    /// Print the canonical form of an expression.
    Reduce { expr: String },
    /// Bound levels of the radial problem against the closed form.
    Spectrum {
        #[arg(long, allow_negative_numbers = true)]
        a: f64,
        /// Sectors, e.g. `-1,1,-2,2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-1, 1])]
        k: Vec<i32>,
        #[arg(long, default_value_t = 3)]
        count: usize,
    },
    /// Show that beta r^s perturbations break conservation of A2.
    Lamb {
        #[arg(long, allow_hyphen_values = true, default_value_t = -2)]
        s: i32,
        /// Strengths, exact scalars such as `1`, `1/2`, `2*a`.
        #[arg(long, value_delimiter = ',', default_values_t = ["1".to_string(), "2".to_string()])]
        lambda: Vec<String>,
        #[arg(long)]
        no_oracle: bool,
    },
    /// Evaluate an expression numerically; compare with another if given.
    Oracle {
        expr: String,
        #[arg(long)]
        against: Option<String>,
    },
}

fn parse_exec(s: &str) -> Result<ExecMode, String> {
    match s {
        "parallel" => Ok(ExecMode::Parallel),
        "sequential" => Ok(ExecMode::Sequential),
        _ => Err(format!("expected `parallel` or `sequential`, got `{s}`")),
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<jlalg::error::AlgebraError> for Failure {
    fn from(e: jlalg::error::AlgebraError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<OracleError> for Failure {
    fn from(e: OracleError) -> Self {
        Failure::usage(e.to_string())
    }
}

impl From<RadialError> for Failure {
    fn from(e: RadialError) -> Self {
        let code = match e {
            RadialError::NotConverged { .. } | RadialError::TooFewStates { .. } => 3,
            _ => 2,
        };
        Failure { code, message: e.to_string() }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let g = &cli.global;
    let mut cfg = match &g.config {
        Some(p) => Config::load(p).map_err(Failure::usage)?,
        None => Config::default(),
    };
    if let Some(seed) = g.seed {
        cfg.oracle.seed = seed;
    }
    if let Some(mode) = g.exec {
        cfg.exec = mode;
    }
    if let Some(t) = g.tolerance {
        if !(t > 0.0) {
            return Err(Failure::usage("--tolerance must be positive"));
        }
        match cli.command {
            Command::Verify { .. } | Command::Oracle { .. } => cfg.oracle.zero_tolerance = t,
            Command::Spectrum { .. } => cfg.radial.match_tolerance = t,
            Command::Lamb { .. } => cfg.lamb.ratio_tolerance = t,
            Command::Reduce { .. } => {}
        }
    }
    match &cli.command {
        Command::Verify { checks, no_oracle, timings, mutation } => cmd_verify(&cfg, g.json, checks, *no_oracle, *timings, mutation.as_deref()),
        Command::Reduce { expr } => cmd_reduce(g.json, expr),
        Command::Spectrum { a, k, count } => cmd_spectrum(&cfg, g.json, *a, k, *count),
        Command::Lamb { s, lambda, no_oracle } => cmd_lamb(&cfg, g.json, *s, lambda, *no_oracle),
        Command::Oracle { expr, against } => cmd_oracle(&cfg, g.json, expr, against.as_deref()),
    }
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("reports serialize"));
}

fn parse_expr(src: &str) -> Result<jlalg::expr::Expr, Failure> {
    parse_with(src, &Catalog).map_err(|e| Failure::usage(format!("{e}")))
}

fn cmd_verify(cfg: &Config, json: bool, checks: &[String], no_oracle: bool, timings: bool, mutation: Option<&str>) -> Result<bool, Failure> {
    let mutation = mutation.map(|m| m.parse::<Mutation>()).transpose().map_err(Failure::usage)?;
    let oracle_config = cfg.oracle.test_config();
    if !no_oracle && cfg.oracle.scope != OracleScope::Off {
        oracle_config.validate()?;
    }
    let opts = SuiteOptions {
        mutation,
        oracle: if no_oracle { OracleScope::Off } else { cfg.oracle.scope },
        oracle_config,
        half_step: cfg.oracle.half_step,
        zero_tolerance: cfg.oracle.zero_tolerance,
        exec: cfg.exec,
        timings,
    };
    let names: Vec<&str> = checks.iter().map(String::as_str).collect();
    let report = verify::run_suite(&names, &opts).map_err(|e| match e {
        OracleError::Algebra(jlalg::error::AlgebraError::UnknownOperator(n)) => {
            Failure::usage(format!("unknown check `{n}` (available: {})", verify::check_names().join(", ")))
        }
        e => e.into(),
    })?;
    if json {
        print_json(&report);
    } else {
        print_suite(&report);
    }
    if let Some(c) = report.first_failure() {
        eprintln!("first failing check: {}", c.name);
    }
    Ok(report.pass)
}

fn print_suite(report: &SuiteReport) {
    if let Some(m) = report.mutation {
        println!("mutation: {}", m.name());
    }
    for c in &report.checks {
        let time = c.wall_time_ms.map(|t| format!("  [{t:.0} ms]")).unwrap_or_default();
        println!("{} {}  ({}){time}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.anchor);
        for i in &c.identities {
            let oracle = match &i.oracle {
                Some(o) => {
                    let half = o.max_relative_half_step.map(|h| format!(" / {h:.1e}")).unwrap_or_default();
                    let v = match o.verdict {
                        OracleVerdict::OraclePass => "ORACLE_PASS",
                        OracleVerdict::OracleFail => "ORACLE_FAIL",
                    };
                    format!("  {v} {:.1e}{half}", o.max_relative)
                }
                None => String::new(),
            };
            let verdict = match i.symbolic {
                Symbolic::Zero => "ZERO",
                Symbolic::Nonzero => "NONZERO",
            };
            println!("  {} {verdict:<7}{oracle}  {}", if i.pass { "ok  " } else { "FAIL" }, i.label);
            if !i.pass {
                if let Some(r) = &i.residual {
                    println!("       residual: {r}");
                }
            }
        }
        for n in &c.notes {
            println!("  note: {n}");
        }
    }
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    println!("{} checks, {} failed", report.checks.len(), failed);
}

#[derive(Serialize)]
struct ReduceReport {
    expression: String,
    canonical: String,
    terms: usize,
    zero: bool,
}

fn cmd_reduce(json: bool, src: &str) -> Result<bool, Failure> {
    let e = parse_expr(src)?;
    let r: OperatorExpr = reduce(&e)?;
    if json {
        print_json(&ReduceReport { expression: e.to_string(), canonical: r.to_string(), terms: r.len(), zero: r.is_zero() });
    } else {
        println!("{r}");
    }
    Ok(true)
}

#[derive(Serialize)]
struct SpectrumReport {
    a: f64,
    match_tolerance: f64,
    a2_tolerance: f64,
    sectors: Vec<SpectrumResult>,
    failures: Vec<String>,
    pass: bool,
}

fn cmd_spectrum(cfg: &Config, json: bool, a: f64, ks: &[i32], count: usize) -> Result<bool, Failure> {
    if ks.is_empty() {
        return Err(Failure::usage("at least one sector is required"));
    }
    let grid = cfg.radial.grid();
    let probs: Vec<RadialProblem> = ks.iter().map(|&k| RadialProblem::new(a, k).with_grid(grid.clone())).collect();
    for p in &probs {
        p.validate()?;
    }
    let mut sectors = jlalg::exec::map(cfg.exec, &probs, |p| radial::solve_sector(p, count))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let energies: Vec<(i32, u32, f64)> = sectors.iter().flat_map(|s| s.levels.iter().map(|l| (l.k, l.n_r, l.energy))).collect();
    for s in &mut sectors {
        for l in &mut s.levels {
            l.partner = energies.iter().find(|(k, n, _)| *k == -l.k && *n == l.n_r).map(|t| t.2);
        }
    }
    let (mt, at) = (cfg.radial.match_tolerance, cfg.radial.a2_tolerance);
    let mut failures = Vec::new();
    let all: Vec<_> = sectors.iter().flat_map(|s| &s.levels).collect();
    for s in &sectors {
        if s.mid_gap > 0 {
            failures.push(format!("k = {}: {} spurious mid-gap eigenvalues", s.k, s.mid_gap));
        }
    }
    for l in &all {
        let tag = format!("k = {}, n_r = {}", l.k, l.n_r);
        if l.relative_error() > mt {
            failures.push(format!("{tag}: relative error {:.2e} exceeds {mt:e}", l.relative_error()));
        }
        if l.tail > radial::TAIL_THRESHOLD {
            failures.push(format!("{tag}: eigenvector tail {:.2e} does not decay", l.tail));
        }
        if l.alpha_a2 < -at || (l.n_r == 0 && l.alpha_a2.abs() > at) {
            failures.push(format!("{tag}: alpha_A2 = {:.2e} outside tolerance {at:e}", l.alpha_a2));
        }
        if let Some(p) = l.partner {
            let partner_err = all.iter().find(|q| q.k == -l.k && q.n_r == l.n_r).map_or(0.0, |q| q.error_estimate);
            let bound = 2.0 * l.error_estimate.max(partner_err);
            if (p - l.energy).abs() > bound && l.k < 0 {
                failures.push(format!("{tag}: partner differs by {:.2e}, more than {bound:.2e}", (p - l.energy).abs()));
            }
        }
    }
    let pass = failures.is_empty();
    if json {
        print_json(&SpectrumReport { a, match_tolerance: mt, a2_tolerance: at, sectors, failures, pass });
    } else {
        print!("{}", radial::format_table(&sectors));
        for f in &failures {
            println!("FAIL {f}");
        }
        println!("{}", if pass { "PASS" } else { "FAIL" });
    }
    Ok(pass)
}

fn cmd_lamb(cfg: &Config, json: bool, s: i32, lambdas: &[String], no_oracle: bool) -> Result<bool, Failure> {
    if !verify::F_SCAN_POWERS.contains(&s) {
        return Err(Failure::usage(format!("power s = {s} outside [-3, 1]")));
    }
    let lambdas = lambdas
        .iter()
        .map(|l| l.parse::<ScalarCoeff>().map_err(|e| Failure::usage(format!("bad lambda `{l}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let tc = cfg.oracle.test_config();
    if !no_oracle {
        tc.validate()?;
    }
    let demo = verify::lamb_demo(s, &lambdas, (!no_oracle).then_some(&tc), cfg.lamb.ratio_tolerance, cfg.exec)?;
    if json {
        print_json(&demo);
    } else {
        println!("[A2, H + lambda*beta*r^{s}] = lambda * ({})", demo.linear_coefficient);
        println!("degree in lambda: {}", demo.degree.map_or("-".into(), |d| d.to_string()));
        for p in &demo.points {
            let norm = p.oracle_norm.map(|n| format!("  oracle norm {n:.6e}")).unwrap_or_default();
            let ratio = match (p.ratio, p.expected_ratio) {
                (Some(r), Some(e)) => format!("  ratio {r:.6} (expected {e:.6})"),
                _ => String::new(),
            };
            println!("lambda = {}: {:?}{norm}{ratio}", p.lambda, p.symbolic);
        }
        println!("{}", if demo.pass { "PASS" } else { "FAIL" });
    }
    Ok(demo.pass)
}

#[derive(Serialize)]
struct OracleReport {
    expression: String,
    against: Option<String>,
    symbolic_zero: bool,
    residual: Residual,
    tolerance: f64,
    pass: bool,
}

fn cmd_oracle(cfg: &Config, json: bool, src: &str, against: Option<&str>) -> Result<bool, Failure> {
    let x = parse_expr(src)?;
    let diff = match against {
        Some(a) => x.clone().minus(parse_expr(a)?),
        None => x.clone(),
    };
    let symbolic_zero = reduce(&diff)?.is_zero();
    let tc = cfg.oracle.test_config();
    let tol = cfg.oracle.zero_tolerance;
    let resolve = catalog::definition;
    let residual = match against {
        Some(a) => oracle::cross_check(&x, &parse_expr(a)?, &resolve, &tc, tol, cfg.exec)?.residual,
        None => oracle::identity_residual(&x, &resolve, &tc, cfg.exec)?,
    };
    let numeric_zero = residual.max_relative <= tol;
    let pass = if against.is_some() {
        numeric_zero && symbolic_zero
    } else if symbolic_zero {
        numeric_zero
    } else {
        residual.is_nonzero()
    };
    if json {
        print_json(&OracleReport {
            expression: x.to_string(),
            against: against.map(str::to_string),
            symbolic_zero,
            residual,
            tolerance: tol,
            pass,
        });
    } else {
        println!("symbolic: {}", if symbolic_zero { "ZERO" } else { "NONZERO" });
        println!(
            "oracle: max relative {:.3e}, max absolute {:.3e}, norm {:.3e} over {} points",
            residual.max_relative, residual.max_absolute, residual.norm, residual.points
        );
        println!("{}", if pass { "ORACLE_PASS" } else { "ORACLE_FAIL" });
    }
    Ok(pass)
}
