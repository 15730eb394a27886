//! Seeded random streams and random operator generators for sweeps.
//!
//! Every randomised task `k` of a sweep seeded with `seed` draws from
//! [`substream`]`(seed, k)`: a ChaCha8 generator keyed by `seed` (expanded with
//! `seed_from_u64`) whose 64-bit stream id is `k`. Streams are independent and
//! the result of a sweep never depends on scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{ComplexMatrix, HermitianOperator, C64};

/// Name echoed in reports that depend on the generator.
pub const RNG_NAME: &str = "ChaCha8 (key = seed_from_u64(seed), stream = task index)";

pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Ginibre matrix with standard complex Gaussian entries.
pub fn ginibre(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, |_, _| gaussian(rng))
}

/// Haar-random pure state vector.
pub fn random_ket(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Random density matrix from the Hilbert-Schmidt ensemble (`G G^dagger / Tr`).
pub fn random_density(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let g = ginibre(dim, rng);
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    HermitianOperator::hermitize(w.scale(1.0 / tr), vec![dim])
}

/// Random Hermitian matrix with unit trace (generally indefinite).
pub fn random_unit_trace_hermitian(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let h = ginibre(dim, rng).hermitian_part();
    let shift = (1.0 - h.trace().re) / dim as f64;
    let m = &h + &ComplexMatrix::identity(dim).scale(shift);
    HermitianOperator::hermitize(m, vec![dim])
}

/// Haar-ish random unitary: eigenvectors of a random Hermitian matrix.
pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let h = HermitianOperator::hermitize(ginibre(dim, rng).hermitian_part(), vec![dim]);
    h.eigh().expect("random Hermitian diagonalises").eigenvectors
}

/// Random effect `0 <= X <= I`: random eigenbasis with eigenvalues uniform in `[0, 1]`.
pub fn random_effect(dim: usize, rng: &mut impl Rng) -> HermitianOperator {
    let u = random_unitary(dim, rng);
    let values: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    let d = ComplexMatrix::diag(&values);
    HermitianOperator::hermitize(&(&u * &d) * &u.adjoint(), vec![dim])
}

/// Random POVM with `outcomes` elements: `S^{-1/2} G_k G_k^dagger S^{-1/2}` with
/// `S = sum_k G_k G_k^dagger`.
pub fn random_povm_effects(dim: usize, outcomes: usize, rng: &mut impl Rng) -> Vec<HermitianOperator> {
    let raw: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(dim, rng);
            &g * &g.adjoint()
        })
        .collect();
    let total = raw
        .iter()
        .fold(ComplexMatrix::zeros(dim), |acc, m| &acc + m);
    let spec = HermitianOperator::hermitize(total, vec![dim])
        .eigh()
        .expect("positive definite sum diagonalises");
    let inv_sqrt = spec.map_eigenvalues(|l| 1.0 / l.sqrt());
    raw.iter()
        .map(|m| HermitianOperator::hermitize(&(&inv_sqrt * m) * &inv_sqrt, vec![dim]))
        .collect()
}

/// Purification of `rho` on `A (x) R` with `dim R = dim A`, scrambled by a random
/// unitary on the reference.
pub fn random_purification(rho: &HermitianOperator, rng: &mut impl Rng) -> HermitianOperator {
    let d = rho.dim();
    let spec = rho.eigh().expect("state diagonalises");
    let u_ref = random_unitary(d, rng);
    let mut psi = vec![C64::new(0.0, 0.0); d * d];
    for k in 0..d {
        let w = spec.eigenvalues[k].max(0.0).sqrt();
        if w == 0.0 {
            continue;
        }
        for a in 0..d {
            for r in 0..d {
                psi[a * d + r] += spec.eigenvectors[(a, k)] * u_ref[(r, k)] * w;
            }
        }
    }
    HermitianOperator::hermitize(ComplexMatrix::outer(&psi), vec![d, d])
}
