//! Nested van Dam protocol on stretched qubits.
//!
//! `N = 2^n` random data bits sit in layer `n`; layers `alpha < n` hold random
//! key bits, with layer 0 the single message bit `M`. Qubit `(alpha, gamma)`
//! carries the pair `(x[alpha+1][2 gamma], x[alpha+1][2 gamma + 1])` encrypted by
//! `x[alpha][gamma]`, i.e. the state `rho_(a xor e, b xor e)`.
//!
//! To recover data bit `i = sum_j b_j 2^(n-j-1)` the decoder walks the chain
//! `gamma_(alpha+1) = 2 gamma_alpha + b_alpha`, measuring qubit
//! `(alpha, gamma_alpha)` in the z basis if `b_alpha = 0` and the x basis
//! otherwise, and flips its running guess (initially `M`) by each outcome.

use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::info::{jn_lower_bound, one_minus_h_half};
use crate::linalg::{ComplexMatrix, HermitianOperator};
use crate::sample::{substream, RNG_NAME};
use crate::sqt::{self, epsilon_of_tau, rho_kl, SqtParams};

pub const MAX_LAYERS: u32 = 24;
const CHUNK: usize = 8192;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProtocolConfig {
    pub n: u32,
    pub tau: f64,
    pub trials: u64,
    pub seed: u64,
}

impl ProtocolConfig {
    pub fn new(n: u32, tau: f64, trials: u64, seed: u64) -> Result<Self> {
        check_n(n)?;
        SqtParams::new(tau)?;
        if trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        Ok(ProtocolConfig { n, tau, trials, seed })
    }

    pub fn data_bits(&self) -> usize {
        1 << self.n
    }
}

fn check_n(n: u32) -> Result<()> {
    if !(1..=MAX_LAYERS).contains(&n) {
        return Err(Error::InvalidParameter(format!(
            "layer count n = {n} must be in 1..={MAX_LAYERS}"
        )));
    }
    Ok(())
}

/// `(1 + (sqrt 2 - 1) tau) / sqrt 2`.
pub fn tau_prime(tau: f64) -> f64 {
    (1.0 + (2f64.sqrt() - 1.0) * tau) / 2f64.sqrt()
}

/// `(1 + tau'^n) / 2`.
pub fn p_success_closed(n: u32, tau: f64) -> f64 {
    0.5 * (1.0 + tau_prime(tau).powi(n as i32))
}

/// Bias recursion `kappa_(alpha+1) = tau' kappa_alpha`, `kappa_0 = 1`, then
/// `(1 + kappa_n) / 2`.
pub fn p_success_recursion(n: u32, tau: f64) -> f64 {
    let flip_ok = 0.5 * (1.0 + tau_prime(tau));
    let mut kappa = 1.0f64;
    for _ in 0..n {
        let right = 0.5 * (1.0 + kappa);
        let wrong = 1.0 - right;
        kappa = flip_ok * right + (1.0 - flip_ok) * wrong - flip_ok * wrong - (1.0 - flip_ok) * right;
    }
    0.5 * (1.0 + kappa)
}

/// Success probability of every data bit; closed form and recursion must agree
/// within 1e-12.
pub fn exact_success_probability(n: u32, tau: f64) -> Result<f64> {
    check_n(n)?;
    SqtParams::new(tau)?;
    let closed = p_success_closed(n, tau);
    let rec = p_success_recursion(n, tau);
    if (closed - rec).abs() > 1e-12 {
        return Err(Error::Numeric(format!(
            "closed form {closed} and recursion {rec} disagree at n = {n}, tau = {tau}"
        )));
    }
    Ok(closed)
}

/// `J_n = sum_i [1 - h(P_i)] = 2^n (1 - h((1 + tau'^n)/2))`.
pub fn jn_exact(n: u32, tau: f64) -> f64 {
    (1u64 << n) as f64 * one_minus_h_half(tau_prime(tau).powi(n as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Threshold {
    pub tau: f64,
    pub n_star: u32,
    pub jn_at_n_star: f64,
}

/// Smallest `n <= 24` with `J_n > 1`.
pub fn violation_threshold(tau: f64) -> Result<Threshold> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::Domain {
            value: tau,
            lo: 0.0,
            hi: 1.0,
        });
    }
    for n in 1..=MAX_LAYERS {
        let j = jn_exact(n, tau);
        if j > 1.0 {
            return Ok(Threshold {
                tau,
                n_star: n,
                jn_at_n_star: j,
            });
        }
    }
    Err(Error::ThresholdOverflow {
        cap: MAX_LAYERS,
        jn_at_cap: jn_exact(MAX_LAYERS, tau),
    })
}

/// Bits `b_0 .. b_(n-1)` of `i`, most significant first.
pub fn index_bits(n: u32, i: usize) -> Vec<u8> {
    (0..n).map(|j| ((i >> (n - j - 1)) & 1) as u8).collect()
}

/// The decoding chain for data bit `i`: `(alpha, gamma_alpha, b_alpha)` for
/// each layer. The qubit is measured in the z basis when `b_alpha = 0`.
pub fn decode_chain(n: u32, i: usize) -> Vec<(u32, usize, u8)> {
    let mut gamma = 0usize;
    let mut out = Vec::with_capacity(n as usize);
    for (alpha, b) in index_bits(n, i).into_iter().enumerate() {
        out.push((alpha as u32, gamma, b));
        gamma = 2 * gamma + b as usize;
    }
    out
}

/// Every layer of bits: `layers[alpha]` has length `2^alpha`, `layers[0] = [M]`
/// and `layers[n]` is the data.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredEncoding {
    layers: Vec<Vec<u8>>,
}

impl LayeredEncoding {
    pub fn new(layers: Vec<Vec<u8>>) -> Result<Self> {
        if layers.len() < 2 {
            return Err(Error::invalid("encoding", "needs at least one qubit layer"));
        }
        for (alpha, l) in layers.iter().enumerate() {
            if l.len() != 1 << alpha {
                return Err(Error::invalid(
                    "encoding",
                    format!("layer {alpha} has {} bits, expected {}", l.len(), 1usize << alpha),
                ));
            }
            if l.iter().any(|&b| b > 1) {
                return Err(Error::invalid("encoding", "entries must be bits"));
            }
        }
        Ok(LayeredEncoding { layers })
    }

    /// Uniform key bits around the given data array.
    pub fn random_keys(data: Vec<u8>, rng: &mut impl Rng) -> Result<Self> {
        let n = data.len().trailing_zeros() as usize;
        let mut layers: Vec<Vec<u8>> = (0..n)
            .map(|alpha| (0..1usize << alpha).map(|_| rng.random_range(0..2u8)).collect())
            .collect();
        layers.push(data);
        Self::new(layers)
    }

    pub fn n(&self) -> u32 {
        (self.layers.len() - 1) as u32
    }

    pub fn message(&self) -> u8 {
        self.layers[0][0]
    }

    pub fn data(&self) -> &[u8] {
        &self.layers[self.layers.len() - 1]
    }

    pub fn layer(&self, alpha: usize) -> &[u8] {
        &self.layers[alpha]
    }

    /// `(k, l)` such that qubit `(alpha, gamma)` holds `rho_kl`.
    pub fn qubit_label(&self, alpha: usize, gamma: usize) -> (u8, u8) {
        let key = self.layers[alpha][gamma];
        let next = &self.layers[alpha + 1];
        (next[2 * gamma] ^ key, next[2 * gamma + 1] ^ key)
    }

    pub fn qubit_state(&self, alpha: usize, gamma: usize, params: &SqtParams) -> Result<HermitianOperator> {
        let (k, l) = self.qubit_label(alpha, gamma);
        Ok(rho_kl(k, l, params)?.into_op())
    }

    /// The decoder's final guess given the chain outcomes `Y_1 .. Y_n`.
    pub fn decode(&self, outcomes: &[u8]) -> u8 {
        outcomes.iter().fold(self.message(), |g, y| g ^ y)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Targets {
    All,
    List(Vec<usize>),
}

impl Targets {
    fn resolve(&self, n: u32) -> Result<Vec<usize>> {
        let big = 1usize << n;
        match self {
            Targets::All => Ok((0..big).collect()),
            Targets::List(v) => {
                if v.is_empty() {
                    return Err(Error::InvalidParameter("no target indices".into()));
                }
                if let Some(&bad) = v.iter().find(|&&i| i >= big) {
                    return Err(Error::InvalidParameter(format!(
                        "target {bad} outside [0, {big})"
                    )));
                }
                Ok(v.clone())
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TargetResult {
    pub index: usize,
    pub successes: u64,
    pub frequency: f64,
    /// Binomial standard error at the exact probability.
    pub sigma: f64,
}

impl TargetResult {
    /// `|frequency - p| / sigma`; zero when both the deviation and sigma vanish.
    pub fn z_score(&self, p: f64) -> f64 {
        let dev = (self.frequency - p).abs();
        if dev == 0.0 {
            0.0
        } else {
            dev / self.sigma
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub config: ProtocolConfig,
    pub rng: &'static str,
    pub targets: Vec<TargetResult>,
    pub p_exact: f64,
    pub jn_exact: f64,
    pub jn_lower_bound: f64,
    /// Excluded from serialisation so that reports are reproducible byte for byte.
    #[serde(skip)]
    pub wall_clock: Duration,
}

/// `table[basis][k][l]` = probability of outcome 0 when measuring `rho_kl`
/// in the z (basis 0) or x (basis 1) basis, from `Tr[Pi rho_kl]`.
fn outcome_table(params: &SqtParams) -> Result<[[[f64; 2]; 2]; 2]> {
    let bases = [sqt::z_basis(), sqt::x_basis()];
    for effect in bases.iter().flatten() {
        if !sqt::qubit_effect_membership(effect, params)? {
            return Err(Error::Numeric(format!(
                "decoding effect outside the effect cone at tau = {}",
                params.tau()
            )));
        }
    }
    let mut t = [[[0.0; 2]; 2]; 2];
    for (b, basis) in bases.iter().enumerate() {
        for k in 0..2u8 {
            for l in 0..2u8 {
                let rho = rho_kl(k, l, params)?.into_op();
                let p0 = basis[0].expectation(&rho);
                if !(0.0..=1.0).contains(&p0) {
                    return Err(Error::Numeric(format!("outcome probability {p0}")));
                }
                t[b][k as usize][l as usize] = p0;
            }
        }
    }
    Ok(t)
}

/// One trial along the decoding chain of `bits` (the index bits of the
/// target). Only the qubits on the chain are sampled.
#[inline]
fn trial(bits: &[u8], table: &[[[f64; 2]; 2]; 2], rng: &mut impl Rng) -> bool {
    let mut key: u8 = rng.random_range(0..2u8);
    let mut guess = key;
    for &b in bits {
        let r: u64 = rng.random();
        let pair = [(r & 1) as u8, ((r >> 1) & 1) as u8];
        let u = (r >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        let (k, l) = (pair[0] ^ key, pair[1] ^ key);
        let p0 = table[b as usize][k as usize][l as usize];
        let y = if u < p0 { 0 } else { 1 };
        guess ^= y;
        key = pair[b as usize];
    }
    guess == key
}

/// Monte Carlo run of the decoder. Trials for target `t` are split into chunks
/// of 8192; chunk `c` draws from `substream(seed, (t << 32) | c)`, so counts do
/// not depend on the execution mode.
pub fn simulate(config: &ProtocolConfig, targets: &Targets, exec: Execution) -> Result<RunReport> {
    let start = Instant::now();
    let config = ProtocolConfig::new(config.n, config.tau, config.trials, config.seed)?;
    let params = SqtParams::new(config.tau)?;
    let tp = tau_prime(config.tau);
    if ((1.0 + tp) / 2.0 - (1.0 - epsilon_of_tau(config.tau))).abs() > 1e-12 {
        return Err(Error::Numeric("per-layer flip rate does not match tau'".into()));
    }
    let table = outcome_table(&params)?;
    let indices = targets.resolve(config.n)?;
    let chunks = (config.trials as usize).div_ceil(CHUNK);
    let counts = exec.map(indices.len() * chunks, |task| {
        let (t, c) = (task / chunks, task % chunks);
        let index = indices[t];
        let bits = index_bits(config.n, index);
        let mut rng = substream(config.seed, ((index as u64) << 32) | c as u64);
        let len = (config.trials as usize - c * CHUNK).min(CHUNK);
        (0..len).filter(|_| trial(&bits, &table, &mut rng)).count() as u64
    });
    let p = exact_success_probability(config.n, config.tau)?;
    let sigma = (p * (1.0 - p) / config.trials as f64).sqrt();
    let results = indices
        .iter()
        .enumerate()
        .map(|(t, &index)| {
            let successes: u64 = counts[t * chunks..(t + 1) * chunks].iter().sum();
            TargetResult {
                index,
                successes,
                frequency: successes as f64 / config.trials as f64,
                sigma,
            }
        })
        .collect();
    Ok(RunReport {
        config,
        rng: RNG_NAME,
        targets: results,
        p_exact: p,
        jn_exact: jn_exact(config.n, config.tau),
        jn_lower_bound: jn_lower_bound(config.tau, config.n),
        wall_clock: start.elapsed(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecouplingReport {
    pub tau: f64,
    /// `max |(rho_kl + sigma_y rho_kl sigma_y)/2 - I/2|`.
    pub mixing_deviation: f64,
    /// `max |sigma_y^t rho_kl sigma_y^t - rho_(k xor t, l xor t)|`.
    pub covariance_deviation: f64,
    /// Per-qubit states averaged over their key bit, 100 random data arrays.
    pub protocol_deviation: f64,
    /// Full register averaged over all key bits, against `(I/2)^(N-1)`, for six
    /// random data arrays with n <= 3.
    pub joint_deviation: f64,
    pub holds: bool,
}

const DECOUPLING_TOL: f64 = 1e-12;
const AVERAGE_TOL: f64 = 1e-15;

/// Checks that the key bits hide the data: each encrypted qubit averages to
/// `I/2`, and so does the whole register.
pub fn decoupling_check(tau: f64, seed: u64) -> Result<DecouplingReport> {
    let params = SqtParams::new(tau)?;
    let sy = HermitianOperator::pauli_y();
    let half = HermitianOperator::maximally_mixed(2);
    let rho = |k: u8, l: u8| -> Result<HermitianOperator> { Ok(rho_kl(k, l, &params)?.into_op()) };

    let mut mixing = 0.0f64;
    let mut covariance = 0.0f64;
    for k in 0..2u8 {
        for l in 0..2u8 {
            let r = rho(k, l)?;
            let flipped = r.sandwich_by(&sy)?;
            mixing = mixing.max(r.add(&flipped)?.scale(0.5).max_abs_diff(&half));
            covariance = covariance.max(r.max_abs_diff(&rho(k, l)?));
            covariance = covariance.max(flipped.max_abs_diff(&rho(k ^ 1, l ^ 1)?));
        }
    }

    let mut protocol = 0.0f64;
    for trial in 0..100u64 {
        let mut rng = substream(seed, trial);
        let n = 1 + (trial % 4) as u32;
        let data: Vec<u8> = (0..1usize << n).map(|_| rng.random_range(0..2u8)).collect();
        let enc = LayeredEncoding::random_keys(data, &mut rng)?;
        for alpha in 0..n as usize {
            for gamma in 0..1usize << alpha {
                let mut avg = HermitianOperator::zeros(2);
                for key in 0..2u8 {
                    let mut layers = enc.layers.clone();
                    layers[alpha][gamma] = key;
                    let e = LayeredEncoding { layers };
                    avg = avg.add(&e.qubit_state(alpha, gamma, &params)?)?;
                }
                protocol = protocol.max(avg.scale(0.5).max_abs_diff(&half));
            }
        }
    }

    let mut joint = 0.0f64;
    for trial in 0..6u64 {
        let mut rng = substream(seed ^ 0x9e37_79b9, trial);
        let n = 1 + (trial % 3) as u32;
        let data: Vec<u8> = (0..1usize << n).map(|_| rng.random_range(0..2u8)).collect();
        joint = joint.max(joint_register_deviation(&data, &params)?);
    }

    Ok(DecouplingReport {
        tau,
        mixing_deviation: mixing,
        covariance_deviation: covariance,
        protocol_deviation: protocol,
        joint_deviation: joint,
        holds: mixing <= DECOUPLING_TOL
            && covariance <= DECOUPLING_TOL
            && protocol <= AVERAGE_TOL
            && joint <= DECOUPLING_TOL,
    })
}

/// Averages the `(N-1)`-qubit register over every key assignment for fixed
/// data and returns the largest entrywise deviation from the maximally mixed
/// state.
fn joint_register_deviation(data: &[u8], params: &SqtParams) -> Result<f64> {
    let n = data.len().trailing_zeros() as usize;
    let key_bits = (1usize << n) - 1;
    let dim = 1usize << key_bits;
    let mut total = ComplexMatrix::zeros(dim);
    for assignment in 0..1usize << key_bits {
        let mut layers = Vec::with_capacity(n + 1);
        let mut pos = 0;
        for alpha in 0..n {
            layers.push((0..1usize << alpha).map(|g| ((assignment >> (pos + g)) & 1) as u8).collect());
            pos += 1 << alpha;
        }
        layers.push(data.to_vec());
        let enc = LayeredEncoding::new(layers)?;
        let mut state = ComplexMatrix::identity(1);
        for alpha in 0..n {
            for gamma in 0..1usize << alpha {
                state = state.kron(enc.qubit_state(alpha, gamma, params)?.matrix());
            }
        }
        total = &total + &state;
    }
    let avg = total.scale(1.0 / (1usize << key_bits) as f64);
    Ok(avg.max_abs_diff(&ComplexMatrix::identity(dim).scale(1.0 / dim as f64)))
}

#[cfg(test)]
#[allow(clippy::needless_range_loop)]
mod tests {
    use super::*;
    use crate::info::binary_entropy;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    const TAUS: [f64; 11] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];

    #[test]
    fn tau_prime_examples() {
        assert!((tau_prime(0.0) - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((tau_prime(1.0) - 1.0).abs() < 1e-15);
        assert!((tau_prime(0.5) - 0.853553).abs() < 1e-6);
    }

    #[test]
    fn success_probability_examples() {
        for n in [1, 5, 24] {
            assert!((exact_success_probability(n, 1.0).unwrap() - 1.0).abs() < 1e-12);
        }
        assert!((exact_success_probability(2, 0.0).unwrap() - 0.75).abs() < 1e-15);
        assert!((exact_success_probability(1, 0.5).unwrap() - 0.926777).abs() < 1e-6);
        assert!(exact_success_probability(0, 0.5).is_err());
        assert!(exact_success_probability(25, 0.5).is_err());
        assert!(exact_success_probability(3, 1.5).is_err());
    }

    #[test]
    fn closed_form_matches_recursion() {
        for n in 1..=MAX_LAYERS {
            for &tau in &TAUS {
                assert!((p_success_closed(n, tau) - p_success_recursion(n, tau)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn flip_rate_identity() {
        for k in 0..=1000 {
            let tau = k as f64 / 1000.0;
            assert!(((1.0 + tau_prime(tau)) / 2.0 - (1.0 - epsilon_of_tau(tau))).abs() < 1e-12);
        }
    }

    #[test]
    fn jn_examples() {
        let naive = |n: u32, tau: f64| {
            (1u64 << n) as f64 * (1.0 - binary_entropy(p_success_closed(n, tau)))
        };
        assert!((jn_exact(1, 0.0) - naive(1, 0.0)).abs() < 1e-12);
        assert!((jn_exact(1, 0.0) - 0.79825).abs() < 1e-5);
        assert!((jn_exact(1, 0.5) - 1.2444).abs() < 1e-4);
        let j20 = jn_exact(20, 0.0);
        assert!(j20 > 0.72 && j20 < 0.7214, "{j20}");
        assert!(j20 > 1.0 / (2.0 * LN_2));
        for n in 1..=20 {
            assert!(jn_exact(n, 0.0) <= 1.0);
        }
    }

    #[test]
    fn jn_dominates_lower_bound() {
        for n in 1..=MAX_LAYERS {
            for &tau in &TAUS {
                assert!(jn_exact(n, tau) >= jn_lower_bound(tau, n) - 1e-12, "n={n} tau={tau}");
            }
        }
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(violation_threshold(0.5).unwrap().n_star, 1);
        let t = violation_threshold(1.0).unwrap();
        assert_eq!(t.n_star, 1);
        assert!((t.jn_at_n_star - 2.0).abs() < 1e-12);

        let t = violation_threshold(0.05).unwrap();
        let scan = (1..=MAX_LAYERS).find(|&n| jn_exact(n, 0.05) > 1.0).unwrap();
        assert_eq!(t.n_star, scan);
        assert!(jn_exact(t.n_star - 1, 0.05) <= 1.0);

        assert!(matches!(violation_threshold(0.0), Err(Error::Domain { .. })));
        assert!(matches!(
            violation_threshold(1e-6),
            Err(Error::ThresholdOverflow { cap: 24, .. })
        ));
    }

    #[test]
    fn decode_chain_reaches_target() {
        for n in 1..=6u32 {
            for i in 0..1usize << n {
                let chain = decode_chain(n, i);
                let (alpha, gamma, b) = *chain.last().unwrap();
                assert_eq!(alpha, n - 1);
                assert_eq!(2 * gamma + b as usize, i);
            }
        }
        assert_eq!(index_bits(3, 5), vec![1, 0, 1]);
    }

    /// Decoding an explicit encoding with noiseless outcomes recovers every bit.
    #[test]
    fn noiseless_decoding_recovers_data() {
        let mut rng = substream(1, 0);
        for n in 1..=5u32 {
            let data: Vec<u8> = (0..1usize << n).map(|_| rng.random_range(0..2u8)).collect();
            let enc = LayeredEncoding::random_keys(data.clone(), &mut rng).unwrap();
            for i in 0..data.len() {
                let outcomes: Vec<u8> = decode_chain(n, i)
                    .iter()
                    .map(|&(alpha, gamma, b)| {
                        let (k, l) = enc.qubit_label(alpha as usize, gamma);
                        if b == 0 { k } else { l }
                    })
                    .collect();
                assert_eq!(enc.decode(&outcomes), data[i]);
            }
        }
    }

    #[test]
    fn encoding_validation() {
        assert!(LayeredEncoding::new(vec![vec![0]]).is_err());
        assert!(LayeredEncoding::new(vec![vec![0], vec![1]]).is_err());
        assert!(LayeredEncoding::new(vec![vec![0], vec![1, 2]]).is_err());
        let e = LayeredEncoding::new(vec![vec![1], vec![0, 1]]).unwrap();
        assert_eq!(e.qubit_label(0, 0), (1, 0));
        assert_eq!(e.n(), 1);
    }

    #[test]
    fn simulate_tau_one_always_succeeds() {
        let cfg = ProtocolConfig::new(4, 1.0, 5000, 3).unwrap();
        let r = simulate(&cfg, &Targets::All, Execution::Parallel).unwrap();
        assert_eq!(r.targets.len(), 16);
        assert!(r.targets.iter().all(|t| t.successes == 5000 && t.frequency == 1.0));
    }

    #[test]
    fn simulate_matches_closed_form() {
        let cfg = ProtocolConfig::new(3, 0.0, 100_000, 2024).unwrap();
        let r = simulate(&cfg, &Targets::List(vec![5]), Execution::Parallel).unwrap();
        let p = (1.0 + 2f64.powf(-1.5)) / 2.0;
        assert!((r.p_exact - p).abs() < 1e-12 && (p - 0.676777).abs() < 1e-6);
        assert!(r.targets[0].z_score(p) <= 3.0, "{:?}", r.targets[0]);

        let cfg = ProtocolConfig::new(2, 0.5, 100_000, 7).unwrap();
        let r = simulate(&cfg, &Targets::All, Execution::Parallel).unwrap();
        assert!((r.p_exact - 0.864277).abs() < 1e-6);
        assert!(r.targets.iter().all(|t| t.z_score(r.p_exact) <= 3.0));
    }

    #[test]
    fn simulate_is_reproducible_across_modes() {
        let cfg = ProtocolConfig::new(5, 0.3, 20_000, 11).unwrap();
        let a = simulate(&cfg, &Targets::All, Execution::Parallel).unwrap();
        let b = simulate(&cfg, &Targets::All, Execution::Sequential).unwrap();
        assert_eq!(a.targets, b.targets);
        assert_eq!(a.rng, RNG_NAME);
        assert_eq!(a.config.seed, 11);
    }

    #[test]
    fn simulate_rejects_bad_targets() {
        let cfg = ProtocolConfig::new(2, 0.5, 10, 0).unwrap();
        assert!(simulate(&cfg, &Targets::List(vec![4]), Execution::Sequential).is_err());
        assert!(simulate(&cfg, &Targets::List(vec![]), Execution::Sequential).is_err());
        assert!(ProtocolConfig::new(2, 0.5, 0, 0).is_err());
    }

    #[test]
    fn outcome_table_is_one_minus_eps_on_the_right_bit() {
        for &tau in &TAUS {
            let t = outcome_table(&SqtParams::new(tau).unwrap()).unwrap();
            let good = 1.0 - epsilon_of_tau(tau);
            for k in 0..2 {
                for l in 0..2 {
                    let z0 = if k == 0 { good } else { 1.0 - good };
                    let x0 = if l == 0 { good } else { 1.0 - good };
                    assert!((t[0][k][l] - z0).abs() < 1e-12);
                    assert!((t[1][k][l] - x0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn decoupling_examples() {
        let p = SqtParams::quantum();
        let avg = rho_kl(0, 0, &p).unwrap().into_op().add(&rho_kl(1, 1, &p).unwrap().into_op()).unwrap();
        assert!(avg.scale(0.5).max_abs_diff(&HermitianOperator::maximally_mixed(2)) < 1e-15);

        let p = SqtParams::new(0.7).unwrap();
        let lhs = rho_kl(0, 1, &p).unwrap().into_op().sandwich_by(&HermitianOperator::pauli_y()).unwrap();
        assert!(lhs.max_abs_diff(rho_kl(1, 0, &p).unwrap().op()) < 1e-12);

        for &tau in &TAUS {
            let r = decoupling_check(tau, 5).unwrap();
            assert!(r.holds, "{r:?}");
        }
    }
}
