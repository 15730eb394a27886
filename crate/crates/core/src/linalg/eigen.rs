//! Cyclic Jacobi eigensolver for dense Hermitian matrices.
//!
//! Each rotation first removes the phase of the pivot `a_pq` with a diagonal
//! unitary, then applies the classical real Jacobi rotation to the resulting
//! real symmetric 2x2 block. Sweeps run over all pairs `p < q` until the
//! off-diagonal Frobenius mass falls below [`OFF_DIAGONAL_TOL`] (scaled by the
//! matrix norm when that exceeds one).

use super::matrix::{ComplexMatrix, C64};

pub const OFF_DIAGONAL_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 100;

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Clone, Debug)]
pub struct Spectrum {
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Unitary; column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl Spectrum {
    /// `U diag(f(lambda)) U^dagger`.
    pub fn map_eigenvalues(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let u = &self.eigenvectors;
        let n = u.dim();
        let fl: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        ComplexMatrix::from_fn(n, |r, c| {
            (0..n)
                .filter(|&k| fl[k] != 0.0)
                .map(|k| u[(r, k)] * u[(c, k)].conj() * fl[k])
                .sum()
        })
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.map_eigenvalues(|l| l)
    }

    pub fn min(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[0]
    }
}

fn off_diagonal_norm(a: &ComplexMatrix) -> f64 {
    let n = a.dim();
    let mut s = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                s += a[(r, c)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Diagonalises `m`, which the caller guarantees is Hermitian.
///
/// Returns `None` only if the sweep budget is exhausted, which does not happen
/// for finite input at the sizes used here.
pub(crate) fn jacobi_eigh(m: &ComplexMatrix) -> Option<Spectrum> {
    let n = m.dim();
    let mut a = m.hermitian_part();
    let mut v = ComplexMatrix::identity(n);
    let tol = OFF_DIAGONAL_TOL * a.frobenius_norm().max(1.0);

    let mut converged = n <= 1;
    for _ in 0..MAX_SWEEPS {
        if off_diagonal_norm(&a) < tol {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged && off_diagonal_norm(&a) >= tol {
        return None;
    }

    let mut order: Vec<usize> = (0..n).collect();
    let diag: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    order.sort_by(|&i, &j| diag[j].total_cmp(&diag[i]));
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, |r, c| v[(r, order[c])]);
    Some(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

/// One Jacobi rotation annihilating `a[p][q]`: `A <- G^dagger A G`, `V <- V G`,
/// with `G = diag(1, e^{-i phi}) R(theta)` on the `(p, q)` plane.
fn rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let phase = apq / mag;

    let theta = 0.5 * (aqq - app) / mag;
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // G columns: g_p = (c, -s e^{-i phi}), g_q = (s, c e^{-i phi}) in (p, q) coordinates.
    let gpp = C64::new(c, 0.0);
    let gqp = -phase.conj() * s;
    let gpq = C64::new(s, 0.0);
    let gqq = phase.conj() * c;

    let n = a.dim();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * gpp + akq * gqp;
        a[(k, q)] = akp * gpq + akq * gqq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = gpp.conj() * apk + gqp.conj() * aqk;
        a[(q, k)] = gpq.conj() * apk + gqq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);

    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * gpp + vkq * gqp;
        v[(k, q)] = vkp * gpq + vkq * gqq;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check(m: &ComplexMatrix) -> Spectrum {
        let s = jacobi_eigh(m).expect("converges");
        assert!(s.reconstruct().max_abs_diff(m) < 1e-10);
        let u = &s.eigenvectors;
        assert!((&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(m.dim())) < 1e-10);
        assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        s
    }

    #[test]
    fn pauli_y_has_complex_eigenvectors() {
        let y = ComplexMatrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        });
        let s = check(&y);
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn dense_complex_matrix_reconstructs() {
        let n = 7;
        let raw = ComplexMatrix::from_fn(n, |r, c| {
            C64::new(((r * 31 + c * 17) % 11) as f64 - 5.0, ((r * 7 + c * 13) % 5) as f64 - 2.0)
        });
        let h = raw.hermitian_part();
        let s = check(&h);
        let tr: f64 = s.eigenvalues.iter().sum();
        assert!((tr - h.trace().re).abs() < 1e-10);
    }

    #[test]
    fn degenerate_spectrum() {
        let s = check(&ComplexMatrix::identity(5).scale(3.0));
        assert!(s.eigenvalues.iter().all(|&l| (l - 3.0).abs() < 1e-14));
    }

    #[test]
    fn one_by_one_and_empty() {
        let s = check(&ComplexMatrix::diag(&[-2.5]));
        assert_eq!(s.eigenvalues, vec![-2.5]);
        assert!(jacobi_eigh(&ComplexMatrix::zeros(0)).unwrap().eigenvalues.is_empty());
    }
}
