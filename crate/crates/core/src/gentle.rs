//! Gentle measurement: the channel `rho -> sum_x sqrt(M_x) rho sqrt(M_x) (x) |x><x|`,
//! the lemma `||rho - sqrt(X) rho sqrt(X)||_1 <= 2 sqrt(1 - Tr[rho X])`, the
//! disturbance bound `eta(eps) = sqrt(eps) + eps/2` and the simultaneous
//! measurement `xi_(x,y) = sqrt(M_x) N_y sqrt(M_x)` built from two POVMs.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{
    partial_trace, psd_sqrt, tensor, trace_norm, ComplexMatrix, HermitianOperator,
};
use crate::sample::{self, substream};
use crate::sqt::{self, SqtParams};

pub const POVM_TOL: f64 = 1e-10;
pub const BOUND_SLACK: f64 = 1e-9;

/// `sqrt(eps) + eps/2`.
pub fn eta_quantum(eps: f64) -> f64 {
    eps.sqrt() + eps / 2.0
}

#[derive(Clone)]
enum EtaKind {
    Quantum,
    Table(Vec<(f64, f64)>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A disturbance function: nonnegative, strictly increasing, vanishing at zero.
#[derive(Clone)]
pub struct EtaFunction {
    name: String,
    kind: EtaKind,
}

impl fmt::Debug for EtaFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EtaFunction").field("name", &self.name).finish()
    }
}

impl EtaFunction {
    pub fn quantum() -> Self {
        EtaFunction {
            name: "quantum".into(),
            kind: EtaKind::Quantum,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self> {
        let eta = EtaFunction {
            name: name.into(),
            kind: EtaKind::Custom(Arc::new(f)),
        };
        eta.validate()?;
        Ok(eta)
    }

    /// Piecewise-linear interpolation of `(eps, eta)` rows. Rows must be strictly
    /// increasing in both columns and cover `[0, 1]`.
    pub fn from_table(name: impl Into<String>, rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::invalid("eta table", "needs at least two rows"));
        }
        if rows.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
            return Err(Error::invalid("eta table", "rows must be strictly increasing"));
        }
        if rows[0].0 > 0.0 || rows[rows.len() - 1].0 < 1.0 {
            return Err(Error::invalid("eta table", "eps column must cover [0, 1]"));
        }
        let eta = EtaFunction {
            name: name.into(),
            kind: EtaKind::Table(rows),
        };
        eta.validate()?;
        Ok(eta)
    }

    /// Parses the two-column `eps,eta` CSV format (an optional header line is skipped).
    pub fn from_csv(name: impl Into<String>, text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (a, b) = match (cols.next(), cols.next(), cols.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::invalid(
                        "eta table",
                        format!("line {}: expected two columns", lineno + 1),
                    ))
                }
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(e), Ok(v)) => rows.push((e, v)),
                _ if lineno == 0 => continue,
                _ => {
                    return Err(Error::invalid(
                        "eta table",
                        format!("line {}: not numeric", lineno + 1),
                    ))
                }
            }
        }
        Self::from_table(name, rows)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn eval(&self, eps: f64) -> f64 {
        match &self.kind {
            EtaKind::Quantum => eta_quantum(eps),
            EtaKind::Custom(f) => f(eps),
            EtaKind::Table(rows) => {
                let i = rows.partition_point(|&(e, _)| e <= eps).clamp(1, rows.len() - 1);
                let (e0, v0) = rows[i - 1];
                let (e1, v1) = rows[i];
                v0 + (v1 - v0) * (eps - e0) / (e1 - e0)
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let at_zero = self.eval(1e-12);
        if !(at_zero < 1e-5) {
            return Err(Error::invalid(
                "eta function",
                format!("eta(1e-12) = {at_zero:e} does not vanish"),
            ));
        }
        if self.eval(0.0) < 0.0 {
            return Err(Error::invalid("eta function", "negative at zero"));
        }
        let mut prev = self.eval(0.0);
        for k in 1..=1000 {
            let v = self.eval(k as f64 * 1e-3);
            if !(v > prev) {
                return Err(Error::invalid(
                    "eta function",
                    format!("not strictly increasing near eps = {}", k as f64 * 1e-3),
                ));
            }
            prev = v;
        }
        Ok(())
    }

    /// See [`eta_inverse`].
    pub fn inverse(&self, y: f64) -> Result<f64> {
        eta_inverse(self, y)
    }
}

/// Bisection inverse on `[0, 1]`. `y` must lie in `[f(0), f(1)]`; the result
/// satisfies `|f(x) - y| <= 1e-12` or the bracket has shrunk to adjacent floats.
pub fn eta_inverse(f: &EtaFunction, y: f64) -> Result<f64> {
    let (lo_v, hi_v) = (f.eval(0.0), f.eval(1.0));
    if !(lo_v..=hi_v).contains(&y) {
        return Err(Error::Domain {
            value: y,
            lo: lo_v,
            hi: hi_v,
        });
    }
    if y == lo_v {
        return Ok(0.0);
    }
    if y == hi_v {
        return Ok(1.0);
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f.eval(mid);
        if (v - y).abs() <= 1e-12 && hi - lo < 1e-15 {
            return Ok(mid);
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Pick the bracket end closer in value.
    let x = if (f.eval(lo) - y).abs() <= (f.eval(hi) - y).abs() {
        lo
    } else {
        hi
    };
    Ok(x)
}

/// A finite measurement: labelled effects summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    effects: Vec<(String, HermitianOperator)>,
}

impl Povm {
    /// Quantum POVM: each effect PSD and the effects sum to `I` (both within 1e-10).
    pub fn new(effects: Vec<(String, HermitianOperator)>) -> Result<Self> {
        let povm = Self::unchecked_sum(effects)?;
        for (label, e) in &povm.effects {
            let min = e.min_eigenvalue()?;
            if min < -POVM_TOL {
                return Err(Error::invalid(
                    "POVM",
                    format!("effect {label:?} has eigenvalue {min:e}"),
                ));
            }
        }
        Ok(povm)
    }

    /// POVM of the stretched qubit: every effect passes
    /// [`sqt::qubit_effect_membership`] at `params`.
    pub fn new_stretched(
        effects: Vec<(String, HermitianOperator)>,
        params: &SqtParams,
    ) -> Result<Self> {
        let povm = Self::unchecked_sum(effects)?;
        povm.verify_stretched(params)?;
        Ok(povm)
    }

    pub fn verify_stretched(&self, params: &SqtParams) -> Result<()> {
        for (label, e) in &self.effects {
            if !sqt::qubit_effect_membership(e, params)? {
                return Err(Error::invalid(
                    "POVM",
                    format!("effect {label:?} is outside the effect cone at tau = {}", params.tau()),
                ));
            }
        }
        Ok(())
    }

    fn unchecked_sum(effects: Vec<(String, HermitianOperator)>) -> Result<Self> {
        let Some(dim) = effects.first().map(|(_, e)| e.dim()) else {
            return Err(Error::invalid("POVM", "no effects"));
        };
        let mut sum = HermitianOperator::zeros(dim);
        for (i, (label, e)) in effects.iter().enumerate() {
            if effects[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::invalid("POVM", format!("duplicate label {label:?}")));
            }
            sum = sum.add(e)?;
        }
        let defect = sum.max_abs_diff(&HermitianOperator::identity(dim));
        if defect > POVM_TOL {
            return Err(Error::invalid(
                "POVM",
                format!("effects sum to identity only within {defect:e}"),
            ));
        }
        Ok(Povm { effects })
    }

    pub fn from_effects(effects: Vec<HermitianOperator>) -> Result<Self> {
        Self::new(
            effects
                .into_iter()
                .enumerate()
                .map(|(i, e)| (i.to_string(), e))
                .collect(),
        )
    }

    /// Computational-basis measurement on a qubit, labels "0" and "1".
    pub fn z_basis() -> Self {
        let [a, b] = sqt::z_basis();
        Povm {
            effects: vec![("0".into(), a), ("1".into(), b)],
        }
    }

    /// `{|+><+|, |-><-|}`, labels "0" and "1".
    pub fn x_basis() -> Self {
        let [a, b] = sqt::x_basis();
        Povm {
            effects: vec![("0".into(), a), ("1".into(), b)],
        }
    }

    /// The one-outcome measurement `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Povm {
            effects: vec![("*".into(), HermitianOperator::identity(dim))],
        }
    }

    /// Product measurement `mu (x) nu` with labels `"x" + "y"` concatenated.
    pub fn product(&self, other: &Povm) -> Self {
        let mut effects = Vec::new();
        for (lx, ex) in &self.effects {
            for (ly, ey) in &other.effects {
                effects.push((format!("{lx}{ly}"), tensor(ex, ey)));
            }
        }
        Povm { effects }
    }

    pub fn dim(&self) -> usize {
        self.effects[0].1.dim()
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn effects(&self) -> &[(String, HermitianOperator)] {
        &self.effects
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.effects.iter().map(|(l, _)| l.as_str())
    }

    pub fn effect(&self, label: &str) -> Option<&HermitianOperator> {
        self.effects.iter().find(|(l, _)| l == label).map(|(_, e)| e)
    }

    /// Outcome distribution `Tr[M_x rho]` in effect order.
    pub fn probabilities(&self, rho: &HermitianOperator) -> Vec<f64> {
        self.effects.iter().map(|(_, e)| e.expectation(rho)).collect()
    }

    pub fn probability(&self, label: &str, rho: &HermitianOperator) -> Option<f64> {
        self.effect(label).map(|e| e.expectation(rho))
    }
}

/// Classical-quantum ensemble `sum_x p(x) |x><x| (x) phi_x`.
#[derive(Clone, Debug, PartialEq)]
pub struct CqEnsemble {
    items: Vec<(f64, String, HermitianOperator)>,
}

impl CqEnsemble {
    pub fn new(items: Vec<(f64, String, HermitianOperator)>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("ensemble", "no items"));
        }
        let dim = items[0].2.dim();
        let total: f64 = items.iter().map(|(p, _, _)| p).sum();
        if (total - 1.0).abs() > 1e-12 || items.iter().any(|(p, _, _)| *p < 0.0) {
            return Err(Error::invalid(
                "ensemble",
                format!("probabilities must be nonnegative and sum to 1 (sum {total})"),
            ));
        }
        for (_, label, state) in &items {
            if state.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: state.dim(),
                });
            }
            if (state.trace() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(
                    "ensemble",
                    format!("state {label:?} has trace {}", state.trace()),
                ));
            }
        }
        Ok(CqEnsemble { items })
    }

    /// Equal weights over labelled states.
    pub fn uniform(states: Vec<(String, HermitianOperator)>) -> Result<Self> {
        let p = 1.0 / states.len().max(1) as f64;
        Self::new(states.into_iter().map(|(l, s)| (p, l, s)).collect())
    }

    pub fn items(&self) -> &[(f64, String, HermitianOperator)] {
        &self.items
    }

    pub fn dim(&self) -> usize {
        self.items[0].2.dim()
    }
}

/// One output branch of the gentle channel: the unnormalised post-measurement
/// operator `sqrt(M_x) rho sqrt(M_x)` and its weight `Tr[M_x rho]`.
#[derive(Clone, Debug)]
pub struct Branch {
    pub label: String,
    pub state: HermitianOperator,
    pub weight: f64,
}

/// The measurement channel built from square roots of the effects.
#[derive(Clone, Debug)]
pub struct GentleChannel {
    labels: Vec<String>,
    roots: Vec<HermitianOperator>,
}

/// Builds the gentle channel of a quantum POVM.
pub fn gentle_channel(povm: &Povm) -> Result<GentleChannel> {
    let mut labels = Vec::with_capacity(povm.len());
    let mut roots = Vec::with_capacity(povm.len());
    for (label, e) in povm.effects() {
        labels.push(label.clone());
        roots.push(psd_sqrt(e)?);
    }
    Ok(GentleChannel { labels, roots })
}

impl GentleChannel {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn roots(&self) -> &[HermitianOperator] {
        &self.roots
    }

    pub fn apply(&self, rho: &HermitianOperator) -> Result<Vec<Branch>> {
        self.labels
            .iter()
            .zip(&self.roots)
            .map(|(label, root)| {
                let state = rho.sandwich_by(root)?;
                let weight = state.trace();
                Ok(Branch {
                    label: label.clone(),
                    state,
                    weight,
                })
            })
            .collect()
    }

    /// Applies the channel to the first subsystem of `rho_ar` (system `A`
    /// followed by a reference `R`), i.e. `(sqrt(M_x) (x) I) rho (sqrt(M_x) (x) I)`.
    pub fn apply_with_reference(&self, rho_ar: &HermitianOperator) -> Result<Vec<Branch>> {
        let dims = rho_ar.subsystem_dims();
        let d_a = self.roots[0].dim();
        if dims.len() != 2 || dims[0] != d_a {
            return Err(Error::InvalidSubsystemDims {
                dims: dims.to_vec(),
                dim: rho_ar.dim(),
            });
        }
        let id_r = HermitianOperator::identity(dims[1]);
        self.labels
            .iter()
            .zip(&self.roots)
            .map(|(label, root)| {
                let k = tensor(root, &id_r);
                let state = rho_ar.sandwich_by(&k)?;
                let weight = state.trace();
                Ok(Branch {
                    label: label.clone(),
                    state,
                    weight,
                })
            })
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

fn check_state(rho: &HermitianOperator) -> Result<()> {
    if (rho.trace() - 1.0).abs() > POVM_TOL {
        return Err(Error::OperatorBound(format!("Tr[rho] = {} != 1", rho.trace())));
    }
    let min = rho.min_eigenvalue()?;
    if min < -POVM_TOL {
        return Err(Error::OperatorBound(format!("rho has eigenvalue {min:e}")));
    }
    Ok(())
}

/// Verifies `||rho - sqrt(X) rho sqrt(X)||_1 <= 2 sqrt(1 - Tr[rho X])` for a
/// state `rho` and an effect `0 <= X <= I`.
pub fn gentle_lemma_check(rho: &HermitianOperator, x_op: &HermitianOperator) -> Result<LemmaReport> {
    if rho.dim() != x_op.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: x_op.dim(),
        });
    }
    check_state(rho)?;
    let spec = x_op.eigh()?;
    if spec.min() < -POVM_TOL || spec.max() > 1.0 + POVM_TOL {
        return Err(Error::OperatorBound(format!(
            "X spectrum [{:e}, {}] not within [0, 1]",
            spec.min(),
            spec.max()
        )));
    }
    let root = psd_sqrt(x_op)?;
    let lhs = trace_norm(&rho.sub(&rho.sandwich_by(&root)?)?)?;
    let rhs = 2.0 * (1.0 - rho.expectation(x_op)).max(0.0).sqrt();
    Ok(LemmaReport {
        lhs,
        rhs,
        holds: lhs <= rhs + BOUND_SLACK,
    })
}

/// One randomised lemma instance: `eps = 1 - Tr[rho X]`, `margin = rhs - lhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LemmaTrial {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// Runs `trials` random `(rho, X)` pairs in dimension `dim`. Trial `k` draws
/// from `substream(seed, k)`; every third trial uses a pure state and a
/// projector, which is where the lemma is tightest.
pub fn lemma_sweep(dim: usize, trials: usize, seed: u64, exec: Execution) -> Result<Vec<LemmaTrial>> {
    exec.try_map(trials, |k| {
        let mut rng = substream(seed, k as u64);
        let (rho, x) = if k % 3 == 0 {
            let psi = sample::random_ket(dim, &mut rng);
            let rank = rng.random_range(1..dim.max(2));
            let u = sample::random_unitary(dim, &mut rng);
            let proj: Vec<f64> = (0..dim).map(|i| if i < rank { 1.0 } else { 0.0 }).collect();
            let x = ComplexMatrix::diag(&proj);
            let x = HermitianOperator::hermitize(&(&u * &x) * &u.adjoint(), vec![dim]);
            (HermitianOperator::projector(&psi), x)
        } else {
            (
                sample::random_density(dim, &mut rng),
                sample::random_effect(dim, &mut rng),
            )
        };
        let r = gentle_lemma_check(&rho, &x)?;
        Ok(LemmaTrial {
            eps: 1.0 - rho.expectation(&x),
            lhs: r.lhs,
            rhs: r.rhs,
            margin: r.rhs - r.lhs,
        })
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DisturbanceReport {
    pub label: String,
    pub eps: f64,
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// For each ensemble item `(p, x, phi_x)`, measures how far the gentle channel
/// of `povm` moves `phi_x` away from `phi_x (x) |x><x|`.
///
/// The classical register makes `E(phi) - phi (x) |x><x|` block diagonal, so
/// its trace norm is `||sqrt(M_x) phi sqrt(M_x) - phi||_1 + sum_{x' != x} Tr[M_x' phi]`.
/// With `reference`, item `x` is replaced by a state on `A (x) R` whose
/// `A`-marginal must equal `phi_x`, and the channel acts on `A` only.
pub fn gmp_disturbance(
    povm: &Povm,
    ensemble: &CqEnsemble,
    reference: Option<&[HermitianOperator]>,
) -> Result<Vec<DisturbanceReport>> {
    if povm.dim() != ensemble.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: ensemble.dim(),
        });
    }
    if let Some(refs) = reference {
        if refs.len() != ensemble.items().len() {
            return Err(Error::invalid(
                "reference states",
                format!("{} given for {} ensemble items", refs.len(), ensemble.items().len()),
            ));
        }
    }
    let channel = gentle_channel(povm)?;
    let mut out = Vec::with_capacity(ensemble.items().len());
    for (idx, (_, label, phi)) in ensemble.items().iter().enumerate() {
        let Some(target) = channel.labels().iter().position(|l| l == label) else {
            return Err(Error::invalid(
                "ensemble",
                format!("label {label:?} is not an outcome of the POVM"),
            ));
        };
        let branches = match reference {
            None => channel.apply(phi)?,
            Some(refs) => {
                let joint = &refs[idx];
                let marginal = partial_trace(joint, &[0])?;
                let dev = marginal.max_abs_diff(phi);
                if dev > POVM_TOL {
                    return Err(Error::invalid(
                        "reference states",
                        format!("item {label:?}: reduced state differs by {dev:e}"),
                    ));
                }
                channel.apply_with_reference(joint)?
            }
        };
        let original = match reference {
            None => phi,
            Some(refs) => &refs[idx],
        };
        let mut norm = trace_norm(&branches[target].state.sub(original)?)?;
        norm += branches
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != target)
            .map(|(_, b)| b.weight)
            .sum::<f64>();
        let eps = 1.0 - povm.effects()[target].1.expectation(phi);
        let distance = 0.5 * norm;
        let bound = eta_quantum(eps.max(0.0));
        out.push(DisturbanceReport {
            label: label.clone(),
            eps,
            distance,
            bound,
            holds: distance <= bound + BOUND_SLACK,
        });
    }
    Ok(out)
}

/// One randomised disturbance instance of [`gmp_sweep`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GmpTrial {
    pub trial: usize,
    pub dim: usize,
    pub outcomes: usize,
    pub purified: bool,
    pub reports: Vec<DisturbanceReport>,
}

impl GmpTrial {
    pub fn holds(&self) -> bool {
        self.reports.iter().all(|r| r.holds)
    }
}

/// `trials` random POVM/ensemble pairs with `dim` in 2..=4 and 2..=4 outcomes.
/// Every fifth trial attaches a random purification as the reference system.
/// Ensemble states interpolate between the normalised effect of their label and
/// a random state, so `eps` covers the whole range.
pub fn gmp_sweep(trials: usize, seed: u64, exec: Execution) -> Result<Vec<GmpTrial>> {
    exec.try_map(trials, |k| {
        let mut rng = substream(seed, k as u64);
        let dim = 2 + k % 3;
        let outcomes = 2 + (k / 3) % 3;
        let purified = k % 5 == 0;
        let povm = Povm::from_effects(sample::random_povm_effects(dim, outcomes, &mut rng))?;
        let mut items = Vec::with_capacity(outcomes);
        for (label, e) in povm.effects() {
            let w: f64 = rng.random();
            let aligned = e.scale(1.0 / e.trace());
            let noise = sample::random_density(dim, &mut rng);
            let phi = aligned.scale(1.0 - w).add(&noise.scale(w))?;
            let phi = phi.scale(1.0 / phi.trace());
            items.push((1.0 / outcomes as f64, label.clone(), phi));
        }
        let ensemble = CqEnsemble::new(items)?;
        let refs: Option<Vec<HermitianOperator>> = purified.then(|| {
            ensemble
                .items()
                .iter()
                .map(|(_, _, phi)| sample::random_purification(phi, &mut rng))
                .collect()
        });
        let reports = gmp_disturbance(&povm, &ensemble, refs.as_deref())?;
        Ok(GmpTrial {
            trial: k,
            dim,
            outcomes,
            purified,
            reports,
        })
    })
}

/// The simultaneous measurement `xi_(x,y) = sqrt(M_x) N_y sqrt(M_x)`, i.e. the
/// gentle channel of `mu` followed by `nu` on the post-measurement state.
/// Labels are `"x,y"`.
pub fn simultaneous_povm(mu: &Povm, nu: &Povm) -> Result<Povm> {
    Ok(Povm {
        effects: simultaneous_effects(mu, nu)?
            .into_iter()
            .map(|((x, y), e)| (format!("{},{}", mu.effects[x].0, nu.effects[y].0), e))
            .collect(),
    })
}

fn simultaneous_effects(
    mu: &Povm,
    nu: &Povm,
) -> Result<Vec<((usize, usize), HermitianOperator)>> {
    if mu.dim() != nu.dim() {
        return Err(Error::DimensionMismatch {
            expected: mu.dim(),
            found: nu.dim(),
        });
    }
    let channel = gentle_channel(mu)?;
    let mut out = Vec::with_capacity(mu.len() * nu.len());
    for (x, root) in channel.roots().iter().enumerate() {
        for (y, (_, n)) in nu.effects().iter().enumerate() {
            out.push(((x, y), n.sandwich_by(root)?));
        }
    }
    Ok(out)
}

/// A block of the outcome partition: labels of `mu` paired with labels of `nu`.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionBlock {
    pub mu_labels: Vec<String>,
    pub nu_labels: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairReport {
    pub block: usize,
    pub x: String,
    pub y: String,
    pub prob: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UncertaintyReport {
    /// Smallest `eps` with `p(x|phi_xy, mu) >= 1 - eps` and `p(y|phi_xy, nu) >= 1 - eps`
    /// for every in-block pair.
    pub epsilon: f64,
    /// `1 - 2 eta(eps)`.
    pub bound: f64,
    pub pairs: Vec<PairReport>,
    pub holds: bool,
}

fn check_partition(labels: Vec<&str>, blocks: Vec<&[String]>, which: &str) -> Result<()> {
    let mut seen = BTreeMap::new();
    for (b, block) in blocks.iter().enumerate() {
        for l in block.iter() {
            if !labels.contains(&l.as_str()) {
                return Err(Error::invalid("partition", format!("unknown {which} label {l:?}")));
            }
            if seen.insert(l.as_str(), b).is_some() {
                return Err(Error::invalid("partition", format!("{which} label {l:?} repeated")));
            }
        }
    }
    if seen.len() != labels.len() {
        return Err(Error::invalid(
            "partition",
            format!("{which} blocks do not cover every outcome"),
        ));
    }
    Ok(())
}

/// Checks `p((x,y) | phi_xy, xi) >= 1 - 2 eta(eps)` for every block `omega` and
/// every `(x, y)` in `R_omega(mu) x R_omega(nu)`, where `xi` is
/// [`simultaneous_povm`]`(mu, nu)` and `eps` is the preparation uncertainty of
/// the supplied states (computed, then reported).
pub fn partitioned_uncertainty_check(
    mu: &Povm,
    nu: &Povm,
    partition: &[PartitionBlock],
    states: &BTreeMap<(String, String), HermitianOperator>,
    eta: &EtaFunction,
) -> Result<UncertaintyReport> {
    if partition.is_empty() {
        return Err(Error::invalid("partition", "no blocks"));
    }
    check_partition(
        mu.labels().collect(),
        partition.iter().map(|b| b.mu_labels.as_slice()).collect(),
        "mu",
    )?;
    check_partition(
        nu.labels().collect(),
        partition.iter().map(|b| b.nu_labels.as_slice()).collect(),
        "nu",
    )?;

    let xi = simultaneous_effects(mu, nu)?;
    let index = |povm: &Povm, l: &str| povm.labels().position(|m| m == l).expect("checked");

    let mut epsilon = 0.0f64;
    let mut pending = Vec::new();
    for (b, block) in partition.iter().enumerate() {
        for x in &block.mu_labels {
            for y in &block.nu_labels {
                let key = (x.clone(), y.clone());
                let phi = states.get(&key).ok_or_else(|| {
                    Error::invalid("uncertainty states", format!("missing state for ({x}, {y})"))
                })?;
                check_state(phi)?;
                let px = mu.probability(x, phi).expect("label exists");
                let py = nu.probability(y, phi).expect("label exists");
                epsilon = epsilon.max(1.0 - px).max(1.0 - py);
                let (xi_idx, yi_idx) = (index(mu, x), index(nu, y));
                let effect = &xi[xi_idx * nu.len() + yi_idx].1;
                pending.push((b, x.clone(), y.clone(), effect.expectation(phi)));
            }
        }
    }
    let epsilon = epsilon.clamp(0.0, 1.0);
    let bound = 1.0 - 2.0 * eta.eval(epsilon);
    let pairs: Vec<PairReport> = pending
        .into_iter()
        .map(|(block, x, y, prob)| PairReport {
            block,
            x,
            y,
            prob,
            holds: prob >= bound - BOUND_SLACK,
        })
        .collect();
    let holds = pairs.iter().all(|p| p.holds);
    Ok(UncertaintyReport {
        epsilon,
        bound,
        pairs,
        holds,
    })
}
