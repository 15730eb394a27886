//! Classical entropies and the information bounds built on them: the Fano
//! chain that caps the stretch parameter, the `J_n` lower bound, the averaging
//! lemma `sum_k p_k f(eps_k) <= f(sqrt(eps)) + f(c) sqrt(eps)`, accessible
//! information of qubit ensembles, and the classical-quantum decomposition
//! identities.
//!
//! Entropies are in bits. The `2 ln 2` denominators use the natural log.

use std::f64::consts::LN_2;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::gentle::{eta_quantum, CqEnsemble, EtaFunction, Povm};
use crate::linalg::{trace_distance, ComplexMatrix, HermitianOperator};
use crate::sample::substream;
use crate::sqt::{epsilon_of_tau, BlochVector};

pub const DIST_TOL: f64 = 1e-12;

/// `-x log2 x - (1-x) log2 (1-x)` with `0 log 0 = 0`.
pub fn binary_entropy(x: f64) -> f64 {
    let term = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    term(x) + term(1.0 - x)
}

/// Shannon entropy in bits; zero entries contribute nothing.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| -x * x.log2())
        .sum()
}

/// `1 - h((1 + y)/2)`, evaluated without cancellation near `y = 0`.
pub fn one_minus_h_half(y: f64) -> f64 {
    let y = y.abs();
    if y >= 1.0 {
        return 1.0;
    }
    ((1.0 + y) * y.ln_1p() + (1.0 - y) * (-y).ln_1p()) / (2.0 * LN_2)
}

/// A joint distribution over `rows x cols` labels, row-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JointDistribution {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(rows: usize, cols: usize, p: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || p.len() != rows * cols {
            return Err(Error::invalid(
                "joint distribution",
                format!("{} entries for a {rows}x{cols} table", p.len()),
            ));
        }
        if p.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::invalid("joint distribution", "negative or NaN entry"));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > DIST_TOL {
            return Err(Error::invalid(
                "joint distribution",
                format!("entries sum to {total}"),
            ));
        }
        Ok(JointDistribution { rows, cols, p })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("joint distribution", "ragged table"));
        }
        Self::new(rows.len(), cols, rows.concat())
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.p[a * self.cols + b]
    }

    pub fn marginal_a(&self) -> Vec<f64> {
        (0..self.rows)
            .map(|a| (0..self.cols).map(|b| self.get(a, b)).sum())
            .collect()
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|b| (0..self.rows).map(|a| self.get(a, b)).sum())
            .collect()
    }

    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.p)
    }
}

/// `H(A) + H(B) - H(AB)`.
pub fn mutual_information(j: &JointDistribution) -> f64 {
    shannon_entropy(&j.marginal_a()) + shannon_entropy(&j.marginal_b()) - j.entropy()
}

/// `2 - h(2 eta) - 4 eta` with `eta = eta(eps(tau))`.
///
/// Fano's inequality only binds while the error probability `2 eta` is at most
/// 1/2; beyond that the bound is vacuous and `-inf` is returned.
pub fn fano_lower_bound(tau: f64, eta: &EtaFunction) -> f64 {
    let e = eta.eval(epsilon_of_tau(tau));
    let err = 2.0 * e;
    if !(err <= 0.5) {
        return f64::NEG_INFINITY;
    }
    2.0 - binary_entropy(err) - 2.0 * err
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridCrosscheck {
    pub points: usize,
    /// Last grid point with `fano <= 1`.
    pub tau_lo: f64,
    /// First grid point with `fano > 1`.
    pub tau_hi: f64,
    pub agrees: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TauBound {
    pub tau_star: f64,
    pub fano_at_tau_star: f64,
    /// Final bisection bracket; `fano <= 1` at the left end, `> 1` at the right.
    pub bracket: [f64; 2],
    pub grid_crosscheck: GridCrosscheck,
    /// `(1 - 2 ln 2)/4`, the argument of `eta^{-1}` in the closed-form bound.
    pub closed_form_argument: f64,
    /// `1 - (4 + 2 sqrt 2) eta^{-1}(argument)` when the argument is in range.
    pub closed_form_value: Option<f64>,
    pub trivial: bool,
}

const GRID_POINTS: usize = 10_000;

/// The largest `tau` compatible with `I_C <= 1`: the crossing of
/// `fano_lower_bound(tau) = 1`, bisected to a bracket of width `1e-10`.
pub fn tau_bound_solver(eta: &EtaFunction) -> TauBound {
    let f = |t: f64| fano_lower_bound(t, eta);
    let closed_form_argument = (1.0 - 2.0 * LN_2) / 4.0;
    let closed_form_value = eta
        .inverse(closed_form_argument)
        .ok()
        .map(|x| 1.0 - (4.0 + 2.0 * 2f64.sqrt()) * x);

    let grid_crosscheck = {
        let k = (0..=GRID_POINTS)
            .find(|&k| f(k as f64 / GRID_POINTS as f64) > 1.0)
            .unwrap_or(GRID_POINTS);
        GridCrosscheck {
            points: GRID_POINTS,
            tau_lo: k.saturating_sub(1) as f64 / GRID_POINTS as f64,
            tau_hi: k as f64 / GRID_POINTS as f64,
            agrees: false,
        }
    };

    let top = 1.0 - 1e-10;
    if f(top) <= 1.0 {
        return TauBound {
            tau_star: 1.0,
            fano_at_tau_star: f(1.0),
            bracket: [top, 1.0],
            grid_crosscheck,
            closed_form_argument,
            closed_form_value,
            trivial: true,
        };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    if f(lo) > 1.0 {
        hi = lo;
    }
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let tau_star = 0.5 * (lo + hi);
    let agrees = grid_crosscheck.tau_lo <= tau_star && tau_star <= grid_crosscheck.tau_hi;
    TauBound {
        tau_star,
        fano_at_tau_star: f(tau_star),
        bracket: [lo, hi],
        grid_crosscheck: GridCrosscheck {
            agrees,
            ..grid_crosscheck
        },
        closed_form_argument,
        closed_form_value,
        trivial: false,
    }
}

/// `(1 + (sqrt 2 - 1) tau)^(2n) / (2 ln 2)`.
pub fn jn_lower_bound(tau: f64, n: u32) -> f64 {
    (1.0 + (2f64.sqrt() - 1.0) * tau).powi(2 * n as i32) / (2.0 * LN_2)
}

/// `1 - h((1+y)/2) - y^2 / (2 ln 2)`, which is nonnegative.
pub fn pinsker_like_gap(y: f64) -> f64 {
    one_minus_h_half(y) - y * y / (2.0 * LN_2)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Lemma35Report {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `sum_k p_k f(eps_k) <= f(sqrt(eps)) + f(c) sqrt(eps)` for a
/// nondecreasing `f` on `[0, c]`, `eps_k` in `[0, c]`, `sum_k p_k eps_k <= eps`
/// and `eps` in `(0, c^2]`.
pub fn lemma35_check(
    f: &dyn Fn(f64) -> f64,
    dist: &[f64],
    eps_list: &[f64],
    eps: f64,
    c: f64,
) -> Result<Lemma35Report> {
    let bad = |why: String| Err(Error::invalid("averaging lemma", why));
    if !(c > 0.0 && c.is_finite()) {
        return bad(format!("c = {c} must be positive"));
    }
    if dist.is_empty() || dist.len() != eps_list.len() {
        return bad(format!("{} weights for {} values", dist.len(), eps_list.len()));
    }
    if dist.iter().any(|&p| !(p >= 0.0)) || (dist.iter().sum::<f64>() - 1.0).abs() > DIST_TOL {
        return bad("weights are not a probability distribution".into());
    }
    if eps_list.iter().any(|e| !(0.0..=c).contains(e)) {
        return bad(format!("some eps_k outside [0, {c}]"));
    }
    if !(eps > 0.0 && eps <= c * c) {
        return bad(format!("eps = {eps} outside (0, c^2]"));
    }
    let mean: f64 = dist.iter().zip(eps_list).map(|(p, e)| p * e).sum();
    if mean > eps * (1.0 + 1e-12) {
        return bad(format!("average {mean} exceeds eps = {eps}"));
    }
    let fc = f(c);
    if !fc.is_finite() {
        return bad("f(c) is not finite".into());
    }
    let mut prev = f(0.0);
    for k in 1..=1000 {
        let v = f(c * k as f64 / 1000.0);
        if v < prev - 1e-15 {
            return bad("f is not nondecreasing on [0, c]".into());
        }
        prev = v;
    }
    let lhs: f64 = dist.iter().zip(eps_list).map(|(p, &e)| p * f(e)).sum();
    let rhs = f(eps.sqrt()) + fc * eps.sqrt();
    Ok(Lemma35Report {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12,
    })
}

/// Test functions for [`lemma35_sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Lemma35Family {
    Linear,
    EtaQuantum,
    Sqrt,
    Square,
}

impl Lemma35Family {
    pub const ALL: [Lemma35Family; 4] = [Self::Linear, Self::EtaQuantum, Self::Sqrt, Self::Square];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Self::Linear => x,
            Self::EtaQuantum => eta_quantum(x),
            Self::Sqrt => x.sqrt(),
            Self::Square => x * x,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Lemma35Trial {
    pub family: Lemma35Family,
    pub c: f64,
    pub eps: f64,
    pub support: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Random instances cycling through [`Lemma35Family::ALL`]. Each draws `c`, a
/// distribution on 2 to 6 points and `eps_k` in `[0, c]`, then sets `eps`
/// between the average and `c^2`.
pub fn lemma35_sweep(trials: usize, seed: u64, exec: Execution) -> Result<Vec<Lemma35Trial>> {
    exec.try_map(trials, |k| {
        let mut rng = substream(seed, k as u64);
        let family = Lemma35Family::ALL[k % 4];
        let c: f64 = if k % 3 == 0 { 1.0 } else { rng.random_range(0.1..3.0) };
        let support = rng.random_range(2..=6);
        let mut dist: Vec<f64> = (0..support).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = dist.iter().sum();
        dist.iter_mut().for_each(|p| *p /= total);
        let mut eps_list: Vec<f64> = (0..support).map(|_| c * rng.random::<f64>()).collect();
        let mean: f64 = dist.iter().zip(&eps_list).map(|(p, e)| p * e).sum();
        if mean > c * c {
            let s = c * c / mean * rng.random_range(0.05..1.0);
            eps_list.iter_mut().for_each(|e| *e *= s);
        }
        let mean: f64 = dist.iter().zip(&eps_list).map(|(p, e)| p * e).sum();
        let eps = (mean + (c * c - mean) * rng.random::<f64>() * 0.5).max(1e-9).min(c * c);
        let f = move |x: f64| family.eval(x);
        let r = lemma35_check(&f, &dist, &eps_list, eps, c)?;
        Ok(Lemma35Trial {
            family,
            c,
            eps,
            support,
            lhs: r.lhs,
            rhs: r.rhs,
            holds: r.holds,
        })
    })
}

/// `n` points spread evenly over the unit sphere.
pub fn fibonacci_sphere(n: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|k| {
            let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * k as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AccessibleInfo {
    pub value: f64,
    /// Bloch direction of the best measurement found.
    pub direction: [f64; 3],
    pub label_entropy: f64,
}

/// Largest label-outcome mutual information over binary projective
/// measurements along `resolution` Fibonacci-sphere directions plus the z and x
/// axes. A lower bound on the accessible information.
pub fn accessible_info_lower_bound(ensemble: &CqEnsemble, resolution: usize) -> Result<AccessibleInfo> {
    if ensemble.dim() != 2 {
        return Err(Error::UnsupportedShape(format!(
            "accessible information needs qubit states, got dimension {}",
            ensemble.dim()
        )));
    }
    if resolution < 16 {
        return Err(Error::invalid("resolution", format!("{resolution} < 16")));
    }
    // Group items by label: the register value is the label, not the position.
    let mut labels: Vec<&str> = Vec::new();
    let mut grouped: Vec<(f64, HermitianOperator)> = Vec::new();
    for (p, label, phi) in ensemble.items() {
        if phi.min_eigenvalue()? < -1e-10 {
            return Err(Error::OperatorBound(format!("state {label:?} is not PSD")));
        }
        let weighted = phi.scale(*p);
        match labels.iter().position(|l| l == label) {
            Some(i) => {
                grouped[i].0 += p;
                grouped[i].1 = grouped[i].1.add(&weighted)?;
            }
            None => {
                labels.push(label);
                grouped.push((*p, weighted));
            }
        }
    }
    let label_entropy = shannon_entropy(&grouped.iter().map(|g| g.0).collect::<Vec<_>>());

    let mut dirs = fibonacci_sphere(resolution);
    dirs.push([0.0, 0.0, 1.0]);
    dirs.push([1.0, 0.0, 0.0]);
    let mut best = AccessibleInfo {
        value: 0.0,
        direction: [0.0, 0.0, 1.0],
        label_entropy,
    };
    for d in dirs {
        let plus = BlochVector::new(d[0], d[1], d[2]).to_operator();
        let mut table = Vec::with_capacity(2 * grouped.len());
        for (_, w) in &grouped {
            let a = plus.expectation(w).max(0.0);
            let b = (w.trace() - plus.expectation(w)).max(0.0);
            table.push(a);
            table.push(b);
        }
        let total: f64 = table.iter().sum();
        table.iter_mut().for_each(|x| *x /= total);
        let mi = mutual_information(&JointDistribution::new(grouped.len(), 2, table)?).max(0.0);
        if mi > best.value {
            best.value = mi;
            best.direction = d;
        }
    }
    Ok(best)
}

/// `sum_x p_x |x><x| (x) phi_x` on `[n, d]`.
pub fn cq_operator(p: &[f64], states: &[HermitianOperator]) -> Result<HermitianOperator> {
    if p.len() != states.len() || states.is_empty() {
        return Err(Error::invalid("cq state", "weights and states differ in length"));
    }
    let n = p.len();
    let d = states[0].dim();
    let mut m = ComplexMatrix::zeros(n * d);
    for (x, (px, phi)) in p.iter().zip(states).enumerate() {
        if phi.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: phi.dim(),
            });
        }
        for r in 0..d {
            for c in 0..d {
                m[(x * d + r, x * d + c)] = phi.matrix()[(r, c)] * *px;
            }
        }
    }
    HermitianOperator::new(m, vec![n, d])
}

/// The `(x, x')` block of an operator on `[n, d]`.
fn block(m: &ComplexMatrix, d: usize, x: usize, y: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(d, |r, c| m[(x * d + r, y * d + c)])
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KolmogorovReport {
    pub distance: f64,
    pub weighted_sum: f64,
    pub holds: bool,
}

/// `d(sum p_x |x><x| (x) phi_x, sum p_x |x><x| (x) psi_x) = sum_x p_x d(phi_x, psi_x)`.
pub fn kolmogorov_cq_decomposition_check(
    p: &[f64],
    phis: &[HermitianOperator],
    psis: &[HermitianOperator],
) -> Result<KolmogorovReport> {
    if phis.len() != psis.len() {
        return Err(Error::invalid("cq states", "phi and psi lists differ in length"));
    }
    if p.iter().any(|&x| !(x >= 0.0)) || (p.iter().sum::<f64>() - 1.0).abs() > DIST_TOL {
        return Err(Error::invalid("cq states", "weights are not a distribution"));
    }
    for s in phis.iter().chain(psis) {
        if (s.trace() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("cq states", format!("trace {}", s.trace())));
        }
    }
    let rho = cq_operator(p, phis)?;
    let sigma = cq_operator(p, psis)?;
    let distance = trace_distance(&rho, &sigma)?;
    let mut weighted_sum = 0.0;
    for ((px, a), b) in p.iter().zip(phis).zip(psis) {
        weighted_sum += px * trace_distance(a, b)?;
    }
    Ok(KolmogorovReport {
        distance,
        weighted_sum,
        holds: (distance - weighted_sum).abs() <= 1e-10,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CgMeasurementReport {
    /// `p(s | rho, nu)` per joint outcome.
    pub direct: Vec<f64>,
    /// `sum_x p(x) p(s | phi_x, nu_x)`.
    pub decomposed: Vec<f64>,
    pub max_deviation: f64,
    /// Each `{N_s^(x)}_s` is itself a POVM within 1e-10.
    pub blocks_complete: bool,
    pub holds: bool,
}

/// For a state classical on its first factor and a joint POVM `{N_s}` on
/// `[n, d]`, checks that the statistics decompose through the per-register
/// effects `N_s^(x) = (<x| (x) I) N_s (|x> (x) I)`.
pub fn cg_measurement_decomposition_check(
    cq: &HermitianOperator,
    povm: &Povm,
) -> Result<CgMeasurementReport> {
    let dims = cq.subsystem_dims();
    if dims.len() != 2 {
        return Err(Error::InvalidSubsystemDims {
            dims: dims.to_vec(),
            dim: cq.dim(),
        });
    }
    if povm.dim() != cq.dim() {
        return Err(Error::DimensionMismatch {
            expected: cq.dim(),
            found: povm.dim(),
        });
    }
    let (n, d) = (dims[0], dims[1]);
    let m = cq.matrix();
    for x in 0..n {
        for y in 0..n {
            if x != y && block(m, d, x, y).max_abs() > 1e-12 {
                return Err(Error::invalid(
                    "cq state",
                    format!("register is not classical: block ({x},{y}) is nonzero"),
                ));
            }
        }
    }
    let mut p = Vec::with_capacity(n);
    let mut phis = Vec::with_capacity(n);
    for x in 0..n {
        let b = HermitianOperator::hermitize(block(m, d, x, x), vec![d]);
        let px = b.trace();
        p.push(px);
        phis.push(if px > 0.0 { b.scale(1.0 / px) } else { b });
    }

    let mut direct = Vec::with_capacity(povm.len());
    let mut decomposed = Vec::with_capacity(povm.len());
    let mut sums = vec![HermitianOperator::zeros(d); n];
    for (_, effect) in povm.effects() {
        direct.push(effect.expectation(cq));
        let mut acc = 0.0;
        for x in 0..n {
            let nx = HermitianOperator::hermitize(block(effect.matrix(), d, x, x), vec![d]);
            acc += p[x] * nx.expectation(&phis[x]);
            sums[x] = sums[x].add(&nx)?;
        }
        decomposed.push(acc);
    }
    let id = HermitianOperator::identity(d);
    let blocks_complete = sums.iter().all(|s| s.max_abs_diff(&id) <= 1e-10);
    let max_deviation = direct
        .iter()
        .zip(&decomposed)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(CgMeasurementReport {
        direct,
        decomposed,
        max_deviation,
        blocks_complete,
        holds: max_deviation <= 1e-12,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::sample;
    use crate::sqt::{rho_kl, SqtParams};
    use proptest::{prop_assert, prop_assume, proptest};

    fn proj(v: &[f64]) -> HermitianOperator {
        HermitianOperator::projector(&v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>())
    }

    /// Textbook entropy, no stabilisation, as an oracle for `one_minus_h_half`.
    fn naive_h(x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            0.0
        } else {
            -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
        }
    }

    #[test]
    fn binary_entropy_examples() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert!((binary_entropy(0.853553) - 0.600876).abs() < 1e-5);
    }

    #[test]
    fn one_minus_h_half_matches_naive_form() {
        for k in 0..=1000 {
            let y = k as f64 / 1000.0;
            let naive = 1.0 - naive_h((1.0 + y) / 2.0);
            assert!((one_minus_h_half(y) - naive).abs() < 1e-12, "y = {y}");
        }
        // Near zero the stable form keeps relative accuracy: 1 - h ~ y^2 / (2 ln 2).
        let y = 1e-6;
        assert!((one_minus_h_half(y) / (y * y / (2.0 * LN_2)) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn mutual_information_examples() {
        let prod = JointDistribution::from_rows(&[vec![0.12, 0.18], vec![0.28, 0.42]]).unwrap();
        assert!(mutual_information(&prod).abs() < 1e-12);
        let corr = JointDistribution::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert!((mutual_information(&corr) - 1.0).abs() < 1e-15);
        let bsc = JointDistribution::from_rows(&[vec![0.45, 0.05], vec![0.05, 0.45]]).unwrap();
        assert!((mutual_information(&bsc) - (1.0 - binary_entropy(0.1))).abs() < 1e-12);
        assert!((mutual_information(&bsc) - 0.531).abs() < 1e-3);
    }

    #[test]
    fn joint_distribution_validation() {
        assert!(JointDistribution::new(2, 2, vec![0.5, 0.5, 0.1, -0.1]).is_err());
        assert!(JointDistribution::new(2, 2, vec![0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(JointDistribution::new(2, 2, vec![1.0]).is_err());
    }

    proptest! {
        #[test]
        fn mutual_information_bounds(raw in proptest::collection::vec(0.0f64..1.0, 12), shape in 0usize..3) {
            let (rows, cols) = [(2, 6), (3, 4), (4, 3)][shape];
            let total: f64 = raw.iter().sum::<f64>() + 1e-9;
            let mut p: Vec<f64> = raw.iter().map(|x| x / total).collect();
            let s: f64 = p.iter().sum();
            p[0] += 1.0 - s;
            prop_assume!(p[0] >= 0.0);
            let j = JointDistribution::new(rows, cols, p).unwrap();
            let mi = mutual_information(&j);
            prop_assert!(mi >= -1e-12);
            let cap = shannon_entropy(&j.marginal_a()).min(shannon_entropy(&j.marginal_b()));
            prop_assert!(mi <= cap + 1e-12);
        }

        #[test]
        fn pinsker_gap_is_nonnegative(y in 0.0f64..=1.0) {
            prop_assert!(pinsker_like_gap(y) >= -1e-12);
        }
    }

    #[test]
    fn fano_examples() {
        let q = EtaFunction::quantum();
        assert_eq!(fano_lower_bound(1.0, &q), 2.0);
        assert_eq!(fano_lower_bound(0.0, &q), f64::NEG_INFINITY);
        // eps(0.9) = 0.0146447, eta = 0.128339, 2 eta = 0.256678.
        let e = eta_quantum(epsilon_of_tau(0.9));
        assert!((e - 0.12834).abs() < 1e-5);
        let want = 2.0 - naive_h(2.0 * e) - 4.0 * e;
        assert!((fano_lower_bound(0.9, &q) - want).abs() < 1e-14);
        assert!((fano_lower_bound(0.9, &q) - 0.664).abs() < 1e-3);
    }

    #[test]
    fn fano_is_monotone_in_tau() {
        let q = EtaFunction::quantum();
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=1000 {
            let v = fano_lower_bound(k as f64 / 1000.0, &q);
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn tau_solver_quantum() {
        let r = tau_bound_solver(&EtaFunction::quantum());
        assert!(!r.trivial);
        assert!(r.tau_star > 0.0 && r.tau_star < 1.0);
        assert!((r.fano_at_tau_star - 1.0).abs() < 1e-8);
        assert!(r.bracket[1] - r.bracket[0] <= 1e-10);
        let q = EtaFunction::quantum();
        assert!(fano_lower_bound(r.bracket[0], &q) <= 1.0);
        assert!(fano_lower_bound(r.bracket[1], &q) > 1.0);
        assert!(r.grid_crosscheck.agrees);
        assert!(r.grid_crosscheck.tau_hi - r.grid_crosscheck.tau_lo <= 1.0001e-4);
        // Independent root of 2 - h(2e) - 4e = 1 in e, then mapped back to tau.
        let g = |e: f64| 2.0 - naive_h(2.0 * e) - 4.0 * e - 1.0;
        let (mut lo, mut hi) = (0.0, 0.25);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if g(m) > 0.0 { lo = m } else { hi = m }
        }
        // eta(eps) = lo  <=>  sqrt(eps) = -1 + sqrt(1 + 2 lo).
        let s = -1.0 + (1.0 + 2.0 * lo).sqrt();
        let eps = s * s;
        let tau = 1.0 - 4.0 * eps / (2.0 - 2f64.sqrt());
        assert!((r.tau_star - tau).abs() < 1e-8, "{} vs {tau}", r.tau_star);
        assert!(r.closed_form_argument < 0.0 && r.closed_form_value.is_none());
    }

    #[test]
    fn tau_solver_is_monotone_in_eta() {
        let steep = EtaFunction::custom("steep", |e: f64| 10.0 * e.sqrt()).unwrap();
        let rs = tau_bound_solver(&steep);
        let rq = tau_bound_solver(&EtaFunction::quantum());
        assert!(!rs.trivial && rs.grid_crosscheck.agrees);
        // A larger disturbance needs a smaller preparation error before the
        // Fano bound bites, so the crossing moves towards tau = 1.
        assert!(rs.tau_star > rq.tau_star);
        assert!(EtaFunction::custom("zero", |_| 0.0).is_err());
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn jn_lower_bound_examples() {
        assert!((jn_lower_bound(0.0, 7) - 1.0 / (2.0 * LN_2)).abs() < 1e-15);
        assert!((jn_lower_bound(0.0, 1) - 0.721348).abs() < 1e-6);
        assert!((jn_lower_bound(1.0, 1) - 1.442695).abs() < 1e-6);
        assert!((jn_lower_bound(0.5, 1) - 1.0510).abs() < 1e-4);
    }

    #[test]
    fn pinsker_examples() {
        assert_eq!(pinsker_like_gap(0.0), 0.0);
        assert!((pinsker_like_gap(1.0) - (1.0 - 1.0 / (2.0 * LN_2))).abs() < 1e-15);
        assert!((pinsker_like_gap(1.0) - 0.2787).abs() < 1e-4);
        for k in 0..10_000 {
            assert!(pinsker_like_gap(k as f64 / 9999.0) >= -1e-12);
        }
    }

    #[test]
    fn lemma35_examples() {
        let f = |x: f64| x;
        for eps in [0.01, 0.2, 0.9] {
            let r = lemma35_check(&f, &[0.25, 0.75], &[eps, eps], eps, 1.0).unwrap();
            assert!((r.lhs - eps).abs() < 1e-15 && r.holds);
        }
        let eta = |x: f64| eta_quantum(x);
        assert!(lemma35_check(&eta, &[0.5, 0.5], &[0.0, 0.2], 0.1, 1.0).unwrap().holds);
    }

    #[test]
    fn lemma35_preconditions() {
        let f = |x: f64| x;
        assert!(lemma35_check(&f, &[0.5, 0.5], &[0.2, 1.2], 0.7, 1.0).is_err());
        assert!(lemma35_check(&f, &[0.5, 0.5], &[0.2, 0.4], 0.1, 1.0).is_err());
        assert!(lemma35_check(&f, &[0.5, 0.5], &[0.2, 0.4], 0.0, 1.0).is_err());
        assert!(lemma35_check(&f, &[0.5, 0.5], &[0.2, 0.4], 0.5, 0.6).is_err());
        assert!(lemma35_check(&f, &[0.6, 0.6], &[0.2, 0.4], 0.5, 1.0).is_err());
        let dec = |x: f64| -x;
        assert!(lemma35_check(&dec, &[0.5, 0.5], &[0.2, 0.4], 0.5, 1.0).is_err());
    }

    #[test]
    fn lemma35_linear_two_point_sweep() {
        let f = |x: f64| x;
        let mut rng = substream(35, 0);
        for _ in 0..10_000 {
            let p: f64 = rng.random();
            let e = [rng.random::<f64>(), rng.random::<f64>()];
            let mean = p * e[0] + (1.0 - p) * e[1];
            let eps = (mean + (1.0 - mean) * rng.random::<f64>()).max(1e-12);
            assert!(lemma35_check(&f, &[p, 1.0 - p], &e, eps, 1.0).unwrap().holds);
        }
    }

    #[test]
    fn lemma35_sweep_holds_for_all_families() {
        let a = lemma35_sweep(2000, 5, Execution::Parallel).unwrap();
        assert!(a.iter().all(|t| t.holds));
        assert_eq!(a, lemma35_sweep(2000, 5, Execution::Sequential).unwrap());
    }

    #[test]
    fn accessible_info_examples() {
        let mixed = CqEnsemble::uniform(
            (0..4).map(|k| (k.to_string(), HermitianOperator::maximally_mixed(2))).collect(),
        )
        .unwrap();
        let r = accessible_info_lower_bound(&mixed, 64).unwrap();
        assert_eq!(r.value, 0.0);

        let orth = CqEnsemble::uniform(vec![
            ("0".into(), proj(&[1.0, 0.0])),
            ("1".into(), proj(&[0.0, 1.0])),
        ])
        .unwrap();
        let r = accessible_info_lower_bound(&orth, 16).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);

        let p = SqtParams::quantum();
        let items = (0..4u8)
            .map(|k| (format!("{}{}", k / 2, k % 2), rho_kl(k / 2, k % 2, &p).unwrap().into_op()))
            .collect();
        let r = accessible_info_lower_bound(&CqEnsemble::uniform(items).unwrap(), 400).unwrap();
        assert!(r.value > 0.0 && r.value <= 1.0);
        assert!(r.value <= r.label_entropy + 1e-9);
        assert!(accessible_info_lower_bound(&orth, 8).is_err());
    }

    #[test]
    fn accessible_info_never_exceeds_label_entropy() {
        let mut rng = substream(77, 0);
        for k in 0..50 {
            let n = 2 + k % 4;
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
            let t: f64 = raw.iter().sum();
            let mut items: Vec<_> = raw
                .iter()
                .enumerate()
                .map(|(i, w)| (w / t, i.to_string(), sample::random_density(2, &mut rng)))
                .collect();
            let s: f64 = items.iter().map(|i| i.0).sum();
            items[0].0 += 1.0 - s;
            let r = accessible_info_lower_bound(&CqEnsemble::new(items).unwrap(), 32).unwrap();
            assert!(r.value >= 0.0 && r.value <= r.label_entropy + 1e-9);
        }
    }

    #[test]
    fn kolmogorov_examples() {
        let mut rng = substream(8, 0);
        let a = sample::random_density(2, &mut rng);
        let b = sample::random_density(2, &mut rng);
        let r = kolmogorov_cq_decomposition_check(&[1.0], std::slice::from_ref(&a), std::slice::from_ref(&b)).unwrap();
        assert!((r.distance - trace_distance(&a, &b).unwrap()).abs() < 1e-12 && r.holds);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let r = kolmogorov_cq_decomposition_check(
            &[0.5, 0.5],
            &[proj(&[1.0, 0.0]), proj(&[h, h])],
            &[proj(&[0.0, 1.0]), proj(&[h, h])],
        )
        .unwrap();
        assert!((r.distance - 0.5).abs() < 1e-12 && r.holds);

        for k in 0..100 {
            let n = 1 + k % 4;
            let d = 2 + k % 2;
            let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            let t: f64 = raw.iter().sum();
            let mut p: Vec<f64> = raw.iter().map(|x| x / t).collect();
            let s: f64 = p.iter().sum();
            p[0] += 1.0 - s;
            let phis: Vec<_> = (0..n).map(|_| sample::random_density(d, &mut rng)).collect();
            let psis: Vec<_> = (0..n).map(|_| sample::random_density(d, &mut rng)).collect();
            assert!(kolmogorov_cq_decomposition_check(&p, &phis, &psis).unwrap().holds);
        }
    }

    #[test]
    fn cg_measurement_examples() {
        let p = SqtParams::quantum();
        let phis: Vec<_> = (0..2u8).map(|k| rho_kl(k, 1 - k, &p).unwrap().into_op()).collect();
        let cq = cq_operator(&[0.3, 0.7], &phis).unwrap();

        // Product measurement: every block equals nu's effect.
        let reg = Povm::z_basis();
        let joint = reg.product(&Povm::x_basis());
        let r = cg_measurement_decomposition_check(&cq, &joint).unwrap();
        assert!(r.holds && r.blocks_complete);

        // x-controlled basis: z on register 0, x on register 1.
        let mut effects = Vec::new();
        for s in 0..2 {
            let e0 = tensor_reg(0, &Povm::z_basis().effects()[s].1);
            let e1 = tensor_reg(1, &Povm::x_basis().effects()[s].1);
            effects.push(e0.add(&e1).unwrap());
        }
        let joint = Povm::from_effects(effects).unwrap();
        let r = cg_measurement_decomposition_check(&cq, &joint).unwrap();
        assert!(r.holds && r.blocks_complete);
        // Register 0 holds rho_01 (z outcome 0 likely), register 1 holds rho_10
        // (x outcome 0 likely).
        let want = 1.0 - epsilon_of_tau(0.0);
        assert!((r.direct[0] - want).abs() < 1e-12);

        let mut rng = substream(12, 0);
        for k in 0..100 {
            let joint = Povm::from_effects(sample::random_povm_effects(4, 2 + k % 3, &mut rng)).unwrap();
            let a = sample::random_density(2, &mut rng);
            let b = sample::random_density(2, &mut rng);
            let w: f64 = rng.random();
            let cq = cq_operator(&[w, 1.0 - w], &[a, b]).unwrap();
            let r = cg_measurement_decomposition_check(&cq, &joint).unwrap();
            assert!(r.holds && r.blocks_complete);
        }

        let coherent = HermitianOperator::projector(&[C64::new(0.5, 0.0); 4])
            .with_subsystem_dims(vec![2, 2])
            .unwrap();
        assert!(cg_measurement_decomposition_check(&coherent, &Povm::trivial(4)).is_err());
    }

    fn tensor_reg(x: usize, e: &HermitianOperator) -> HermitianOperator {
        let mut diag = [0.0; 2];
        diag[x] = 1.0;
        crate::linalg::tensor(&HermitianOperator::from_real_diag(&diag), e)
    }
}
