//! The acceptance suite: fourteen numbered criteria, each a pass/fail verdict
//! with a short deterministic detail line and a few headline metrics.
//!
//! Criterion seeds derive from the suite seed, so `--seed 42` fixes every
//! random draw. Timing limits are enforced here but elapsed times only reach
//! the manifest, never the primary outputs.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;
use std::time::{Duration, Instant};

use gmplab::boxes::{chsh_value, isotropic_box, lambda_bound, signalling_witness};
use gmplab::gentle::{gmp_sweep, lemma_sweep, EtaFunction, Povm};
use gmplab::info::{
    cg_measurement_decomposition_check, cq_operator, fano_lower_bound, jn_lower_bound,
    kolmogorov_cq_decomposition_check, lemma35_sweep, pinsker_like_gap, tau_bound_solver,
};
use gmplab::sample::{random_density, random_povm_effects, substream};
use gmplab::sqt::{
    epsilon_of_tau, qubit_state_body_membership, rho_kl, state_membership, x_basis, z_basis,
    BlochVector, SqtParams, THETA,
};
use gmplab::vandam::{
    decoupling_check, jn_exact, p_success_closed, p_success_recursion, simulate, ProtocolConfig,
    Targets,
};
use gmplab::Execution;
use rand::Rng;
use serde::Serialize;

use crate::emit::{csv_string, fmt_real, json_string};
use crate::error::CliResult;

/// Every criterion the suite must cover, in order.
pub const CRITERIA: [(u8, &str); 14] = [
    (1, "gentle measurement lemma"),
    (2, "gmp disturbance bound"),
    (3, "rho_kl diagonals and spectrum"),
    (4, "sqt qubit body membership"),
    (5, "chsh of isotropic boxes"),
    (6, "lambda bound"),
    (7, "van dam exact"),
    (8, "van dam monte carlo"),
    (9, "chain inequality violation"),
    (10, "decoupling"),
    (11, "tau bound"),
    (12, "cq decompositions"),
    (13, "averaging lemma and pinsker-like gap"),
    (14, "reproducibility"),
];

const TIME_LIMITS: [(u8, Duration); 2] = [(1, Duration::from_secs(10)), (8, Duration::from_secs(30))];

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<&'static str, f64>,
}

#[derive(Clone, Debug)]
pub struct SuiteRun {
    pub seed: u64,
    pub results: Vec<CriterionResult>,
    /// Wall clock per criterion, same order as `results`.
    pub elapsed: Vec<Duration>,
}

impl SuiteRun {
    pub fn all_passed(&self) -> bool {
        self.results.iter().all(|r| r.passed)
    }

    pub fn json(&self) -> CliResult<String> {
        #[derive(Serialize)]
        struct Doc<'a> {
            seed: u64,
            all_passed: bool,
            criteria: &'a [CriterionResult],
        }
        json_string(&Doc {
            seed: self.seed,
            all_passed: self.all_passed(),
            criteria: &self.results,
        })
    }

    /// Header `id,name,passed,detail`.
    pub fn csv(&self) -> CliResult<String> {
        let rows: Vec<Vec<String>> = self
            .results
            .iter()
            .map(|r| vec![r.id.to_string(), r.name.to_string(), r.passed.to_string(), r.detail.clone()])
            .collect();
        csv_string(&["id", "name", "passed", "detail"], &rows)
    }

    /// One `[PASS]`/`[FAIL]` line per criterion.
    pub fn summary_lines(&self) -> Vec<String> {
        self.results
            .iter()
            .map(|r| {
                format!(
                    "[{}] {:>2} {}: {}",
                    if r.passed { "PASS" } else { "FAIL" },
                    r.id,
                    r.name,
                    r.detail
                )
            })
            .collect()
    }
}

pub fn criterion_seed(seed: u64, id: u8) -> u64 {
    seed.wrapping_add((id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct Outcome {
    passed: bool,
    detail: String,
    metrics: BTreeMap<&'static str, f64>,
}

impl Outcome {
    fn new(passed: bool, detail: String) -> Self {
        Outcome {
            passed,
            detail,
            metrics: BTreeMap::new(),
        }
    }

    fn metric(mut self, key: &'static str, value: f64) -> Self {
        self.metrics.insert(key, value);
        self
    }

    fn failed(why: impl std::fmt::Display) -> Self {
        Outcome::new(false, format!("error: {why}"))
    }
}

fn tau_grid(points: usize) -> Vec<f64> {
    (0..points).map(|k| k as f64 / (points - 1) as f64).collect()
}

fn c1_gentle_lemma(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    let mut cases = 0;
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for dim in 2..=6usize {
        for t in lemma_sweep(dim, 1000, seed.wrapping_add(dim as u64), exec)? {
            cases += 1;
            if t.lhs > t.rhs + 1e-9 {
                violations += 1;
            }
            min_margin = min_margin.min(t.margin);
        }
    }
    Ok(Outcome::new(
        cases == 5000 && violations == 0,
        format!("{cases} cases, {violations} violations, min margin {}", fmt_real(min_margin)),
    )
    .metric("cases", cases as f64)
    .metric("min_margin", min_margin))
}

fn c2_gmp(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    let trials = gmp_sweep(500, seed, exec)?;
    let purified = trials.iter().filter(|t| t.purified).count();
    let failing = trials.iter().filter(|t| !t.holds()).count();
    let worst = trials
        .iter()
        .flat_map(|t| &t.reports)
        .map(|r| r.distance - r.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Outcome::new(
        trials.len() == 500 && purified == 100 && failing == 0 && worst <= 1e-9,
        format!(
            "{} trials ({purified} purified), {failing} failing, max distance - bound {}",
            trials.len(),
            fmt_real(worst)
        ),
    )
    .metric("max_excess", worst))
}

fn c3_rho_kl() -> gmplab::Result<Outcome> {
    let mut diag_dev: f64 = 0.0;
    let mut spec_dev: f64 = 0.0;
    let (zb, xb) = (z_basis(), x_basis());
    for tau in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let params = SqtParams::new(tau)?;
        let target = 1.0 - epsilon_of_tau(tau);
        for k in 0..2u8 {
            for l in 0..2u8 {
                let rho = rho_kl(k, l, &params)?.into_op();
                diag_dev = diag_dev
                    .max((zb[k as usize].expectation(&rho) - target).abs())
                    .max((xb[l as usize].expectation(&rho) - target).abs());
                spec_dev = spec_dev.max((rho.min_eigenvalue()? + tau * THETA).abs());
            }
        }
    }
    Ok(Outcome::new(
        diag_dev <= 1e-12 && spec_dev <= 1e-12,
        format!(
            "max diagonal deviation {}, max spectral deviation {}",
            fmt_real(diag_dev),
            fmt_real(spec_dev)
        ),
    )
    .metric("diagonal_deviation", diag_dev)
    .metric("spectral_deviation", spec_dev))
}

fn c4_body(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    const POINTS: usize = 10_000;
    let mut disagreements = 0;
    let mut members = 0;
    for (t, tau) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let params = SqtParams::new(tau)?;
        let verdicts = exec.try_map(POINTS, |k| {
            let mut rng = substream(seed, ((t as u64) << 32) | k as u64);
            let mut c = || rng.random_range(-1.5..=1.5);
            let b = BlochVector::new(c(), c(), c());
            let direct = state_membership(&b.to_operator(), &params)?.member;
            Ok::<_, gmplab::Error>((qubit_state_body_membership(&b, &params), direct))
        })?;
        disagreements += verdicts.iter().filter(|(a, b)| a != b).count();
        members += verdicts.iter().filter(|(a, _)| *a).count();
    }
    Ok(Outcome::new(
        disagreements == 0,
        format!("{} points, {members} members, {disagreements} disagreements", 3 * POINTS),
    )
    .metric("disagreements", disagreements as f64))
}

fn c5_chsh() -> gmplab::Result<Outcome> {
    let mut dev: f64 = 0.0;
    let mut signalling = 0;
    for k in 0..=100 {
        let lambda = k as f64 / 100.0;
        let b = isotropic_box(lambda)?;
        dev = dev.max((chsh_value(&b) - 4.0 * lambda).abs());
        if !signalling_witness(b.table())?.is_ns {
            signalling += 1;
        }
    }
    let tsirelson = chsh_value(&isotropic_box(FRAC_1_SQRT_2)?);
    let ts_dev = (tsirelson - 2.828427124746).abs();
    Ok(Outcome::new(
        dev <= 1e-12 && ts_dev <= 1e-11 && signalling == 0,
        format!(
            "max |S - 4 lambda| {}, S(1/sqrt 2) = {}, {signalling} signalling",
            fmt_real(dev),
            fmt_real(tsirelson)
        ),
    )
    .metric("max_deviation", dev)
    .metric("s_at_inv_sqrt2", tsirelson))
}

fn c6_lambda() -> gmplab::Result<Outcome> {
    let l = lambda_bound(&EtaFunction::quantum())?;
    Ok(Outcome::new(
        (0.89897..=0.89899).contains(&l) && l > FRAC_1_SQRT_2,
        format!("lambda bound {}", fmt_real(l)),
    )
    .metric("lambda_bound", l))
}

fn c7_exact() -> gmplab::Result<Outcome> {
    let mut dev: f64 = 0.0;
    for n in 1..=24 {
        for tau in tau_grid(11) {
            dev = dev.max((p_success_closed(n, tau) - p_success_recursion(n, tau)).abs());
        }
    }
    let p = p_success_closed(1, 0.5);
    Ok(Outcome::new(
        dev <= 1e-12 && (p - 0.926776695297).abs() <= 1e-11,
        format!("max |closed - recursion| {}, P(1, 0.5) = {}", fmt_real(dev), fmt_real(p)),
    )
    .metric("max_deviation", dev)
    .metric("p_1_half", p))
}

/// Successes are pooled over all `2^n` targets: every target has the same
/// success probability and its own random stream.
fn c8_monte_carlo(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    const TRIALS: u64 = 100_000;
    let mut worst_z: f64 = 0.0;
    let mut outside = 0;
    let mut tau_one_exact = true;
    let mut run = 0;
    for n in 1..=6u32 {
        for tau in [0.0, 0.5, 1.0] {
            let cfg = ProtocolConfig::new(n, tau, TRIALS, seed.wrapping_add(run))?;
            run += 1;
            let r = simulate(&cfg, &Targets::All, exec)?;
            let total = TRIALS * r.targets.len() as u64;
            let successes: u64 = r.targets.iter().map(|t| t.successes).sum();
            let freq = successes as f64 / total as f64;
            let sigma = (r.p_exact * (1.0 - r.p_exact) / total as f64).sqrt();
            let dev = (freq - r.p_exact).abs();
            let z = if dev == 0.0 { 0.0 } else { dev / sigma };
            if z > 4.0 {
                outside += 1;
            }
            worst_z = worst_z.max(z);
            if tau == 1.0 && successes != total {
                tau_one_exact = false;
            }
        }
    }
    Ok(Outcome::new(
        outside == 0 && tau_one_exact,
        format!(
            "18 configurations, {outside} outside 4 sigma, max |z| {}, tau = 1 exact: {tau_one_exact}",
            fmt_real(worst_z)
        ),
    )
    .metric("max_z", worst_z))
}

fn c9_chain() -> gmplab::Result<Outcome> {
    let j1 = jn_exact(1, 0.5);
    let j20 = jn_exact(20, 0.0);
    let quantum_below = (1..=20).all(|n| jn_exact(n, 0.0) < 1.0);
    let mut min_gap = f64::INFINITY;
    for n in 1..=24 {
        for tau in tau_grid(11) {
            min_gap = min_gap.min(jn_exact(n, tau) - jn_lower_bound(tau, n));
        }
    }
    Ok(Outcome::new(
        (j1 - 1.2444).abs() <= 5e-4
            && j1 > 1.0
            && quantum_below
            && (j20 - 0.7213).abs() <= 5e-4
            && min_gap >= 0.0,
        format!(
            "J(1, 0.5) = {}, J(20, 0) = {}, quantum below 1 for n <= 20: {quantum_below}, min exact - bound {}",
            fmt_real(j1),
            fmt_real(j20),
            fmt_real(min_gap)
        ),
    )
    .metric("jn_1_half", j1)
    .metric("jn_20_0", j20)
    .metric("min_gap_to_lower_bound", min_gap))
}

fn c10_decoupling(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    let grid = tau_grid(11);
    let reports = exec.try_map(grid.len(), |k| decoupling_check(grid[k], seed.wrapping_add(k as u64)))?;
    let held = reports.iter().filter(|r| r.holds).count();
    let worst = |f: fn(&gmplab::vandam::DecouplingReport) -> f64| reports.iter().map(f).fold(0.0, f64::max);
    let mixing = worst(|r| r.mixing_deviation);
    let cov = worst(|r| r.covariance_deviation);
    let protocol = worst(|r| r.protocol_deviation);
    Ok(Outcome::new(
        held == grid.len(),
        format!(
            "{held}/{} tau values hold; mixing {}, covariance {}, protocol {}",
            grid.len(),
            fmt_real(mixing),
            fmt_real(cov),
            fmt_real(protocol)
        ),
    )
    .metric("mixing_deviation", mixing)
    .metric("covariance_deviation", cov)
    .metric("protocol_deviation", protocol))
}

fn c11_tau() -> gmplab::Result<Outcome> {
    let eta = EtaFunction::quantum();
    let b = tau_bound_solver(&eta);
    let residual = (fano_lower_bound(b.tau_star, &eta) - 1.0).abs();
    let g = &b.grid_crosscheck;
    let in_grid = g.tau_lo <= b.tau_star && b.tau_star <= g.tau_hi;
    Ok(Outcome::new(
        b.tau_star > 0.0 && b.tau_star < 1.0 && residual <= 1e-8 && g.agrees && in_grid,
        format!(
            "tau* = {}, |fano - 1| = {}, grid bracket [{}, {}]",
            fmt_real(b.tau_star),
            fmt_real(residual),
            fmt_real(g.tau_lo),
            fmt_real(g.tau_hi)
        ),
    )
    .metric("tau_star", b.tau_star)
    .metric("residual", residual))
}

fn c12_cq(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    const INSTANCES: usize = 100;
    let kolmogorov = exec.try_map(INSTANCES, |k| {
        let mut rng = substream(seed, k as u64);
        let n = 2 + k % 3;
        let d = 2 + (k / 3) % 3;
        let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let phis: Vec<_> = (0..n).map(|_| random_density(d, &mut rng)).collect();
        let psis: Vec<_> = (0..n).map(|_| random_density(d, &mut rng)).collect();
        let r = kolmogorov_cq_decomposition_check(&p, &phis, &psis)?;
        Ok::<_, gmplab::Error>((r.distance - r.weighted_sum).abs())
    })?;
    let cg = exec.try_map(INSTANCES, |k| {
        let mut rng = substream(seed, (1 << 32) | k as u64);
        let n = 2 + k % 2;
        let d = 2 + (k / 2) % 2;
        let outcomes = 2 + k % 3;
        let mut p: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = p.iter().sum();
        p.iter_mut().for_each(|x| *x /= s);
        let phis: Vec<_> = (0..n).map(|_| random_density(d, &mut rng)).collect();
        let cq = cq_operator(&p, &phis)?;
        let povm = Povm::from_effects(random_povm_effects(n * d, outcomes, &mut rng))?;
        let r = cg_measurement_decomposition_check(&cq, &povm)?;
        Ok::<_, gmplab::Error>((r.max_deviation, r.blocks_complete))
    })?;
    let k_worst = kolmogorov.iter().copied().fold(0.0, f64::max);
    let cg_worst = cg.iter().map(|c| c.0).fold(0.0, f64::max);
    let blocks = cg.iter().all(|c| c.1);
    Ok(Outcome::new(
        k_worst <= 1e-10 && cg_worst <= 1e-10 && blocks,
        format!(
            "{INSTANCES} + {INSTANCES} instances, trace-distance deviation {}, measurement deviation {}",
            fmt_real(k_worst),
            fmt_real(cg_worst)
        ),
    )
    .metric("kolmogorov_deviation", k_worst)
    .metric("cg_deviation", cg_worst))
}

fn c13_lemma35(seed: u64, exec: Execution) -> gmplab::Result<Outcome> {
    const N: usize = 10_000;
    let trials = lemma35_sweep(N, seed, exec)?;
    let violations = trials.iter().filter(|t| t.lhs > t.rhs + 1e-12).count();
    let min_gap = (0..N)
        .map(|k| pinsker_like_gap(-1.0 + 2.0 * k as f64 / (N - 1) as f64))
        .fold(f64::INFINITY, f64::min);
    let pinsker_violations = (0..N)
        .filter(|&k| pinsker_like_gap(-1.0 + 2.0 * k as f64 / (N - 1) as f64) < -1e-12)
        .count();
    Ok(Outcome::new(
        trials.len() == N && violations == 0 && pinsker_violations == 0,
        format!(
            "{N} averaging instances with {violations} violations, {N} grid points with {pinsker_violations} violations (min gap {})",
            fmt_real(min_gap)
        ),
    )
    .metric("min_pinsker_gap", min_gap))
}

/// Runs criterion `id` (1 to 13). Criterion 14 needs the whole suite, see [`run_suite`].
pub fn run_criterion(id: u8, seed: u64, exec: Execution) -> (CriterionResult, Duration) {
    let s = criterion_seed(seed, id);
    let start = Instant::now();
    let outcome = match id {
        1 => c1_gentle_lemma(s, exec),
        2 => c2_gmp(s, exec),
        3 => c3_rho_kl(),
        4 => c4_body(s, exec),
        5 => c5_chsh(),
        6 => c6_lambda(),
        7 => c7_exact(),
        8 => c8_monte_carlo(s, exec),
        9 => c9_chain(),
        10 => c10_decoupling(s, exec),
        11 => c11_tau(),
        12 => c12_cq(s, exec),
        13 => c13_lemma35(s, exec),
        _ => Ok(Outcome::failed(format!("no criterion {id}"))),
    }
    .unwrap_or_else(Outcome::failed);
    let elapsed = start.elapsed();
    let mut passed = outcome.passed;
    let mut detail = outcome.detail;
    if let Some((_, limit)) = TIME_LIMITS.iter().find(|(i, _)| *i == id) {
        if elapsed > *limit {
            passed = false;
            detail.push_str(&format!("; exceeded the {} s runtime limit", limit.as_secs()));
        }
    }
    let name = CRITERIA.iter().find(|(i, _)| *i == id).map_or("unknown", |c| c.1);
    (
        CriterionResult {
            id,
            name,
            passed,
            detail,
            metrics: outcome.metrics,
        },
        elapsed,
    )
}

fn run_numbered(seed: u64, exec: Execution) -> (Vec<CriterionResult>, Vec<Duration>) {
    CRITERIA
        .iter()
        .filter(|(id, _)| *id != 14)
        .map(|(id, _)| run_criterion(*id, seed, exec))
        .unzip()
}

fn primary_bytes(seed: u64, results: &[CriterionResult]) -> CliResult<(String, String)> {
    let partial = SuiteRun {
        seed,
        results: results.to_vec(),
        elapsed: Vec::new(),
    };
    Ok((partial.json()?, partial.csv()?))
}

/// Checks that `results` holds each listed criterion exactly once, in order.
pub fn audit(results: &[CriterionResult]) -> Result<(), String> {
    let ids: Vec<u8> = results.iter().map(|r| r.id).collect();
    let want: Vec<u8> = CRITERIA.iter().map(|c| c.0).collect();
    if ids == want {
        Ok(())
    } else {
        Err(format!("suite covered {ids:?}, expected {want:?}"))
    }
}

/// Runs criteria 1 to 13, then reruns them in-process and compares the
/// serialised primary outputs byte for byte (criterion 14).
pub fn run_suite(seed: u64, exec: Execution) -> CliResult<SuiteRun> {
    let (mut results, mut elapsed) = run_numbered(seed, exec);
    let start = Instant::now();
    let (rerun, _) = run_numbered(seed, exec);
    let first = primary_bytes(seed, &results)?;
    let second = primary_bytes(seed, &rerun)?;
    let identical = first == second;
    results.push(CriterionResult {
        id: 14,
        name: CRITERIA[13].1,
        passed: identical,
        detail: format!(
            "rerun of criteria 1-13 with seed {seed} is {}",
            if identical { "byte-identical" } else { "different" }
        ),
        metrics: BTreeMap::new(),
    });
    elapsed.push(start.elapsed());
    if let Err(why) = audit(&results) {
        results.last_mut().expect("criterion 14").passed = false;
        results.last_mut().expect("criterion 14").detail.push_str(&format!("; audit: {why}"));
    }
    Ok(SuiteRun { seed, results, elapsed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_ids_are_one_to_fourteen() {
        let ids: Vec<u8> = CRITERIA.iter().map(|c| c.0).collect();
        assert_eq!(ids, (1..=14).collect::<Vec<u8>>());
    }

    #[test]
    fn audit_rejects_gaps_and_duplicates() {
        let r = |id| CriterionResult {
            id,
            name: "x",
            passed: true,
            detail: String::new(),
            metrics: BTreeMap::new(),
        };
        let full: Vec<_> = (1..=14).map(r).collect();
        assert!(audit(&full).is_ok());
        let mut dup = full.clone();
        dup[3] = r(3);
        assert!(audit(&dup).is_err());
        assert!(audit(&full[..13]).is_err());
    }

    #[test]
    fn criterion_seeds_differ() {
        let seeds: std::collections::BTreeSet<u64> = (1..=14).map(|i| criterion_seed(42, i)).collect();
        assert_eq!(seeds.len(), 14);
    }

    #[test]
    fn cheap_criteria_pass() {
        for id in [3, 5, 6, 7, 9, 11] {
            let (r, _) = run_criterion(id, 42, Execution::Sequential);
            assert!(r.passed, "{}: {}", r.id, r.detail);
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        assert!(!run_criterion(99, 0, Execution::Sequential).0.passed);
    }
}
