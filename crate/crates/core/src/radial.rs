//! Bound states of the radial Dirac-Coulomb problem.
//!
//! Units `m = 1`. Sector `k` is the usual relativistic quantum number
//! (`k = -1` for `1s1/2`, `k = +1` for `2p1/2`), so that with `V = -a/r`
//!
//! ```text
//! E G = (1 - a/r) G + (-d/dr + k/r) F
//! E F = ( d/dr + k/r) G - (1 + a/r) F
//! ```
//!
//! Discretization: `r = e^x` with uniform `x`, `G` on nodes and `F` on the
//! midpoints between them. With the `dr = r dx` weights the operator becomes a
//! symmetric tridiagonal matrix in the interleaved order `G0 F0 G1 F1 ...`,
//! and the staggering keeps fermion doublers out of the gap. Eigenvalues come
//! from Sturm-sequence bisection. Each level is computed on `N`, `2N` and
//! `4N` nodes and Richardson-extrapolated assuming `O(h^2)` convergence; the
//! error estimate is the spread between the two extrapolants.
//!
//! Radial quantum numbers follow the sector: `n_r = 0, 1, ...` for `k < 0`
//! and `n_r = 1, 2, ...` for `k > 0`, so `(n_r, k)` and `(n_r, -k)` with
//! `n_r >= 1` are degenerate partners.

use serde::{Deserialize, Serialize};

use crate::error::RadialError;
use crate::exec::{self, ExecMode};
use crate::oracle::dd::Dd;

/// Eigenvector amplitude allowed at either grid end, relative to its maximum.
pub const TAIL_THRESHOLD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    /// Nodes on the coarsest grid.
    pub nodes: usize,
    pub r_min: f64,
    /// Outer radius in units of the Bohr radius `1/a`.
    pub r_max_bohr: f64,
    /// Relative error estimate that counts as converged.
    pub tolerance: f64,
    /// Extra doublings of `nodes` tried before giving up.
    pub max_refinements: u32,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { nodes: 4000, r_min: 1e-6, r_max_bohr: 200.0, tolerance: 1e-8, max_refinements: 2 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RadialProblem {
    pub a: f64,
    pub k: i32,
    pub grid: GridConfig,
}

impl RadialProblem {
    pub fn new(a: f64, k: i32) -> Self {
        Self { a, k, grid: GridConfig::default() }
    }

    pub fn with_grid(mut self, grid: GridConfig) -> Self {
        self.grid = grid;
        self
    }

    pub fn validate(&self) -> Result<(), RadialError> {
        if self.k == 0 {
            return Err(RadialError::ZeroSector);
        }
        if !self.a.is_finite() || self.a < 0.0 {
            return Err(RadialError::Invalid(format!("coupling must be finite and nonnegative, got {}", self.a)));
        }
        if self.a >= self.k.unsigned_abs() as f64 {
            return Err(RadialError::Supercritical { a: self.a, k: self.k });
        }
        if self.a == 0.0 {
            return Err(RadialError::NoBoundState { a: self.a, k: self.k });
        }
        let g = &self.grid;
        if g.nodes < 16 {
            return Err(RadialError::Invalid(format!("need at least 16 nodes, got {}", g.nodes)));
        }
        if !(g.r_min > 0.0 && g.r_max_bohr > 0.0 && self.r_max() > g.r_min * 10.0) {
            return Err(RadialError::Invalid(format!("bad radial span [{}, {}]", g.r_min, self.r_max())));
        }
        if !(g.tolerance > 0.0) {
            return Err(RadialError::Invalid("tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn r_max(&self) -> f64 {
        self.grid.r_max_bohr / self.a
    }

    /// Smallest radial quantum number present in this sector.
    pub fn first_radial_index(&self) -> u32 {
        u32::from(self.k > 0)
    }
}

/// `E/m = [1 + a^2 / (n_r + sqrt(k^2 - a^2))^2]^(-1/2)`, evaluated in double-double.
pub fn sommerfeld_energy(a: f64, n_r: u32, k: i32) -> Result<f64, RadialError> {
    check_coupling(a, k)?;
    let a = Dd::from_f64(a);
    let kk = Dd::from_f64(f64::from(k) * f64::from(k));
    let d = Dd::from_f64(f64::from(n_r)) + (kk - a * a).sqrt();
    let ratio = (a * a).div(d * d);
    Ok((Dd::ONE + ratio).sqrt().recip().to_f64())
}

/// Energy at which the eigenvalue of `A^2 = 1 + (K/a)^2 (H^2/m^2 - 1)` vanishes:
/// `E/m = sqrt(1 - a^2/k^2)`.
pub fn ground_state_from_a2(a: f64, k: i32) -> Result<f64, RadialError> {
    check_coupling(a, k)?;
    let ak = Dd::from_f64(a).div(Dd::from_f64(f64::from(k)));
    Ok((Dd::ONE - ak * ak).sqrt().to_f64())
}

/// Eigenvalue of `A^2` for a level of energy `e` (units of `m`) in sector `k`.
pub fn alpha_a2(a: f64, k: i32, e: f64) -> f64 {
    let ka = f64::from(k) / a;
    1.0 + ka * ka * (e * e - 1.0)
}

fn check_coupling(a: f64, k: i32) -> Result<(), RadialError> {
    if k == 0 {
        return Err(RadialError::ZeroSector);
    }
    if !a.is_finite() || a < 0.0 {
        return Err(RadialError::Invalid(format!("coupling must be finite and nonnegative, got {a}")));
    }
    if a >= k.unsigned_abs() as f64 {
        return Err(RadialError::Supercritical { a, k });
    }
    Ok(())
}

/// The discretized Hamiltonian as a symmetric tridiagonal matrix.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiagonal {
    pub fn dirac_coulomb(a: f64, k: i32, r_min: f64, r_max: f64, nodes: usize) -> Self {
        let x0 = r_min.ln();
        let h = (r_max.ln() - x0) / (nodes - 1) as f64;
        let kh = f64::from(k) * h / 2.0;
        let mut diag = Vec::with_capacity(2 * nodes - 1);
        let mut off = Vec::with_capacity(2 * nodes - 2);
        for i in 0..nodes {
            let r = (x0 + i as f64 * h).exp();
            diag.push(1.0 - a / r);
            if i + 1 < nodes {
                let rm = (x0 + (i as f64 + 0.5) * h).exp();
                let rn = (x0 + (i + 1) as f64 * h).exp();
                off.push((kh - 1.0) / (h * (r * rm).sqrt()));
                diag.push(-1.0 - a / rm);
                off.push((kh + 1.0) / (h * (rm * rn).sqrt()));
            }
        }
        Self { diag, off }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Number of eigenvalues strictly below `x`.
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..self.diag.len() {
            let e2 = if i == 0 { 0.0 } else { self.off[i - 1] * self.off[i - 1] };
            q = self.diag[i] - x - if i == 0 { 0.0 } else { e2 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (self.diag[i].abs() + x.abs() + 1.0);
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalue with the given ascending index, bracketed in `[lo, hi]`.
    pub fn eigenvalue(&self, index: usize, mut lo: f64, mut hi: f64) -> f64 {
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }

    /// Eigenvector for an isolated eigenvalue by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.len();
        let shift = lambda + 1e-12 * lambda.abs().max(1.0);
        let mut v = vec![1.0; n];
        for _ in 0..3 {
            v = self.solve_shifted(shift, &v);
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
        }
        v
    }

    /// Solves `(T - s) y = b` by the Thomas algorithm.
    fn solve_shifted(&self, s: f64, b: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut c = vec![0.0; n];
        let mut y = vec![0.0; n];
        let mut piv = self.diag[0] - s;
        c[0] = if n > 1 { self.off[0] / piv } else { 0.0 };
        y[0] = b[0] / piv;
        for i in 1..n {
            piv = self.diag[i] - s - self.off[i - 1] * c[i - 1];
            if piv == 0.0 {
                piv = f64::EPSILON;
            }
            if i + 1 < n {
                c[i] = self.off[i] / piv;
            }
            y[i] = (b[i] - self.off[i - 1] * y[i - 1]) / piv;
        }
        for i in (0..n - 1).rev() {
            y[i] -= c[i] * y[i + 1];
        }
        y
    }
}

/// Largest amplitude among the outermost `edge` entries at either end, relative to the maximum.
pub fn tail_amplitude(v: &[f64], edge: usize) -> f64 {
    let peak = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let edge = edge.min(v.len() / 2);
    let ends = v[..edge].iter().chain(&v[v.len() - edge..]).fold(0.0f64, |m, x| m.max(x.abs()));
    ends / peak
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub a: f64,
    pub k: i32,
    pub n_r: u32,
    /// `E/m`, Richardson-extrapolated.
    pub energy: f64,
    pub error_estimate: f64,
    pub sommerfeld: f64,
    /// `energy - sommerfeld`
    pub delta: f64,
    pub alpha_a2: f64,
    /// Energy of the `(n_r, -k)` level, when it exists and was computed.
    pub partner: Option<f64>,
    /// Eigenvector amplitude at the grid ends on the finest grid.
    pub tail: f64,
}

impl Level {
    pub fn relative_error(&self) -> f64 {
        (self.delta / self.sommerfeld).abs()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub a: f64,
    pub k: i32,
    /// Nodes on the coarsest grid that met the tolerance.
    pub nodes: usize,
    pub levels: Vec<Level>,
    /// Eigenvalues found in `(-1, 0]` on any grid; nonzero means spectral pollution.
    pub mid_gap: usize,
}

/// Bound energies on one grid, plus mid-gap count and tails.
fn raw_levels(prob: &RadialProblem, nodes: usize, count: usize) -> Result<(Vec<f64>, usize, Vec<f64>), RadialError> {
    let t = Tridiagonal::dirac_coulomb(prob.a, prob.k, prob.grid.r_min, prob.r_max(), nodes);
    let below_gap = t.count_below(-1.0);
    let below_zero = t.count_below(0.0);
    let below_one = t.count_below(1.0);
    let found = below_one - below_zero;
    if found == 0 {
        return Err(RadialError::NoBoundState { a: prob.a, k: prob.k });
    }
    if found < count {
        return Err(RadialError::TooFewStates { k: prob.k, found, wanted: count });
    }
    let energies: Vec<f64> = (0..count).map(|i| t.eigenvalue(below_zero + i, 0.0, 1.0)).collect();
    let tails = energies.iter().map(|&e| tail_amplitude(&t.eigenvector(e), 8)).collect();
    Ok((energies, below_zero - below_gap, tails))
}

/// Lowest `count` bound levels of one sector.
pub fn solve_sector(prob: &RadialProblem, count: usize) -> Result<SpectrumResult, RadialError> {
    prob.validate()?;
    if count == 0 {
        return Err(RadialError::Invalid("count must be at least 1".into()));
    }
    let mut nodes = prob.grid.nodes;
    let mut worst = f64::INFINITY;
    for _ in 0..=prob.grid.max_refinements {
        let (e1, g1, _) = raw_levels(prob, nodes, count)?;
        let (e2, g2, _) = raw_levels(prob, 2 * nodes - 1, count)?;
        let (e4, g4, tails) = raw_levels(prob, 4 * nodes - 3, count)?;
        let mut levels = Vec::with_capacity(count);
        worst = 0.0f64;
        for i in 0..count {
            let r12 = (4.0 * e2[i] - e1[i]) / 3.0;
            let r24 = (4.0 * e4[i] - e2[i]) / 3.0;
            let err = (r24 - r12).abs() + 4.0 * f64::EPSILON * r24.abs();
            worst = worst.max(err / r24.abs());
            let n_r = prob.first_radial_index() + i as u32;
            let sommerfeld = sommerfeld_energy(prob.a, n_r, prob.k)?;
            levels.push(Level {
                a: prob.a,
                k: prob.k,
                n_r,
                energy: r24,
                error_estimate: err,
                sommerfeld,
                delta: r24 - sommerfeld,
                alpha_a2: alpha_a2(prob.a, prob.k, r24),
                partner: None,
                tail: tails[i],
            });
        }
        if worst <= prob.grid.tolerance {
            return Ok(SpectrumResult { a: prob.a, k: prob.k, nodes, levels, mid_gap: g1.max(g2).max(g4) });
        }
        nodes = 2 * nodes - 1;
    }
    Err(RadialError::NotConverged { estimate: worst, tolerance: prob.grid.tolerance })
}

/// Solves the sectors `-|k|` and `+|k|` and links degenerate partners.
pub fn solve_pair(a: f64, k_abs: u32, count: usize, grid: &GridConfig, mode: ExecMode) -> Result<[SpectrumResult; 2], RadialError> {
    let k = i32::try_from(k_abs).map_err(|_| RadialError::Invalid(format!("|k| = {k_abs} too large")))?;
    if k == 0 {
        return Err(RadialError::ZeroSector);
    }
    let probs = [RadialProblem::new(a, -k).with_grid(grid.clone()), RadialProblem::new(a, k).with_grid(grid.clone())];
    let mut out = exec::map(mode, &probs, |p| solve_sector(p, count)).into_iter();
    let (mut neg, mut pos) = (out.next().unwrap()?, out.next().unwrap()?);
    link_partners(&mut neg, &mut pos);
    Ok([neg, pos])
}

fn link_partners(neg: &mut SpectrumResult, pos: &mut SpectrumResult) {
    for l in &mut neg.levels {
        if let Some(p) = pos.levels.iter().find(|p| p.n_r == l.n_r) {
            l.partner = Some(p.energy);
        }
    }
    for l in &mut pos.levels {
        if let Some(p) = neg.levels.iter().find(|p| p.n_r == l.n_r) {
            l.partner = Some(p.energy);
        }
    }
}

/// Solves every `(a, +-|k|)` combination, in input order with `-|k|` first.
pub fn spectrum(couplings: &[f64], k_abs: &[u32], count: usize, grid: &GridConfig, mode: ExecMode) -> Result<Vec<SpectrumResult>, RadialError> {
    let mut probs = Vec::new();
    for &a in couplings {
        for &k in k_abs {
            let k = i32::try_from(k).map_err(|_| RadialError::Invalid(format!("|k| = {k} too large")))?;
            if k == 0 {
                return Err(RadialError::ZeroSector);
            }
            probs.push(RadialProblem::new(a, -k).with_grid(grid.clone()));
            probs.push(RadialProblem::new(a, k).with_grid(grid.clone()));
        }
    }
    let mut solved = exec::map(mode, &probs, |p| solve_sector(p, count)).into_iter().collect::<Result<Vec<_>, _>>()?;
    for pair in solved.chunks_mut(2) {
        let (neg, pos) = pair.split_at_mut(1);
        link_partners(&mut neg[0], &mut pos[0]);
    }
    Ok(solved)
}

/// Outcome of the `A^2` eigenvalue checks for one `|k|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct A2RelationReport {
    pub a: f64,
    pub k_abs: u32,
    pub tolerance: f64,
    /// `(k, n_r, alpha_a2)` for every computed level.
    pub levels: Vec<(i32, u32, f64)>,
    /// `alpha_a2` of the `n_r = 0` level, which should vanish.
    pub ground: f64,
    pub nonnegative: bool,
    pub ground_vanishes: bool,
    pub partners_agree: bool,
    pub pass: bool,
}

/// Evaluates `alpha_A2 = 1 + (k/a)^2 (E^2 - 1)` on both sectors `+-|k|` of `prob`.
pub fn check_a2_relation_numeric(prob: &RadialProblem, count: usize, tolerance: f64, mode: ExecMode) -> Result<A2RelationReport, RadialError> {
    prob.validate()?;
    let [neg, pos] = solve_pair(prob.a, prob.k.unsigned_abs(), count, &prob.grid, mode)?;
    let all: Vec<&Level> = neg.levels.iter().chain(&pos.levels).collect();
    let ground = neg.levels[0].alpha_a2;
    let nonnegative = all.iter().all(|l| l.alpha_a2 >= -tolerance);
    let ground_vanishes = ground.abs() <= tolerance;
    let partners_agree = neg.levels.iter().all(|l| {
        pos.levels
            .iter()
            .find(|p| p.n_r == l.n_r)
            .is_none_or(|p| (p.alpha_a2 - l.alpha_a2).abs() <= 2.0 * tolerance)
    });
    Ok(A2RelationReport {
        a: prob.a,
        k_abs: prob.k.unsigned_abs(),
        tolerance,
        levels: all.iter().map(|l| (l.k, l.n_r, l.alpha_a2)).collect(),
        ground,
        nonnegative,
        ground_vanishes,
        partners_agree,
        pass: nonnegative && ground_vanishes && partners_agree,
    })
}

/// Aligned-column text table of levels.
pub fn format_table(results: &[SpectrumResult]) -> String {
    let mut s = format!(
        "{:>10} {:>4} {:>4} {:>22} {:>10} {:>22} {:>10} {:>10}\n",
        "a", "k", "n_r", "E/m", "error", "sommerfeld", "delta", "alpha_A2"
    );
    for l in results.iter().flat_map(|r| &r.levels) {
        s.push_str(&format!(
            "{:>10} {:>4} {:>4} {:>22.17} {:>10.2e} {:>22.17} {:>10.2e} {:>10.2e}\n",
            l.a, l.k, l.n_r, l.energy, l.error_estimate, l.sommerfeld, l.delta, l.alpha_a2
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sommerfeld_examples() {
        assert_eq!(sommerfeld_energy(0.0, 3, -2).unwrap(), 1.0);
        assert!((sommerfeld_energy(0.08, 0, -1).unwrap() - 0.9936f64.sqrt()).abs() < 1e-16);
        for n in 0..4 {
            assert_eq!(sommerfeld_energy(0.3, n, 2).unwrap(), sommerfeld_energy(0.3, n, -2).unwrap());
        }
        assert!(matches!(sommerfeld_energy(1.0, 0, 1), Err(RadialError::Supercritical { .. })));
        assert!(matches!(sommerfeld_energy(0.1, 0, 0), Err(RadialError::ZeroSector)));
    }

    #[test]
    fn ground_state_examples() {
        assert_eq!(ground_state_from_a2(0.0, 3).unwrap(), 1.0);
        assert!((ground_state_from_a2(0.5, -1).unwrap() - 0.75f64.sqrt()).abs() < 1e-16);
        assert!(ground_state_from_a2(2.0, -2).is_err());
    }

    #[test]
    fn matrix_is_staggered_tridiagonal() {
        let t = Tridiagonal::dirac_coulomb(0.1, -1, 1e-3, 100.0, 50);
        assert_eq!(t.len(), 99);
        assert_eq!(t.off.len(), 98);
        assert_eq!(t.count_below(f64::INFINITY), 99);
        assert_eq!(t.count_below(f64::NEG_INFINITY), 0);
    }

    #[test]
    fn ground_state_matches_closed_form() {
        let r = solve_sector(&RadialProblem::new(0.0729735, -1), 1).unwrap();
        let l = &r.levels[0];
        assert_eq!(l.n_r, 0);
        assert!(l.relative_error() <= 1e-6, "{l:?}");
        assert!(l.tail < TAIL_THRESHOLD);
        assert_eq!(r.mid_gap, 0);
    }

    #[test]
    fn weak_coupling_is_balmer_like() {
        let a = 1e-4;
        let r = solve_sector(&RadialProblem::new(a, -1), 1).unwrap();
        let binding = 1.0 - r.levels[0].energy;
        assert!((binding / (a * a / 2.0) - 1.0).abs() < 0.01, "{binding}");
    }

    #[test]
    fn positive_sector_starts_at_one_and_pairs() {
        let [neg, pos] = solve_pair(0.3, 1, 2, &GridConfig::default(), ExecMode::Sequential).unwrap();
        assert_eq!(pos.levels[0].n_r, 1);
        let a = &neg.levels[1];
        let b = &pos.levels[0];
        assert_eq!(a.partner, Some(b.energy));
        assert!((a.energy - b.energy).abs() <= 2.0 * a.error_estimate.max(b.error_estimate), "{a:?} {b:?}");
    }

    #[test]
    fn invalid_problems_are_rejected() {
        assert!(matches!(RadialProblem::new(0.1, 0).validate(), Err(RadialError::ZeroSector)));
        assert!(matches!(RadialProblem::new(1.5, 1).validate(), Err(RadialError::Supercritical { .. })));
        assert!(matches!(RadialProblem::new(0.0, 1).validate(), Err(RadialError::NoBoundState { .. })));
        let tight = GridConfig { tolerance: 1e-30, max_refinements: 0, nodes: 200, ..GridConfig::default() };
        assert!(matches!(solve_sector(&RadialProblem::new(0.1, -1).with_grid(tight), 1), Err(RadialError::NotConverged { .. })));
    }
}
