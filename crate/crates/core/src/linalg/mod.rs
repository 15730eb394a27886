//! Dense Hermitian operator algebra.
//!
//! [`HermitianOperator`] pairs a [`ComplexMatrix`] with the list of subsystem
//! dimensions that give it tensor structure. Every operation here is a pure
//! function; operators are immutable once built and are `Send + Sync`.

mod eigen;
mod matrix;

use serde::{Deserialize, Serialize};

pub use eigen::{Spectrum, OFF_DIAGONAL_TOL};
pub use matrix::{ComplexMatrix, C64};

use crate::error::{Error, Result};

/// Hermitian symmetry tolerance for validated construction.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Eigenvalues in `[-PSD_CLIP_TOL, 0)` are clipped to zero by [`psd_sqrt`].
pub const PSD_CLIP_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianOperator {
    matrix: ComplexMatrix,
    subsystem_dims: Vec<usize>,
}

impl HermitianOperator {
    /// Validates Hermitian symmetry (1e-12, scaled by the largest entry when
    /// that exceeds one) and that `subsystem_dims` multiplies to the dimension.
    pub fn new(matrix: ComplexMatrix, subsystem_dims: Vec<usize>) -> Result<Self> {
        let dim = matrix.dim();
        if subsystem_dims.contains(&0) || subsystem_dims.iter().product::<usize>() != dim
        {
            return Err(Error::InvalidSubsystemDims {
                dims: subsystem_dims,
                dim,
            });
        }
        let defect = matrix.hermitian_defect();
        if defect > HERMITIAN_TOL * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(HermitianOperator {
            matrix: matrix.hermitian_part(),
            subsystem_dims,
        })
    }

    /// Single-system operator.
    pub fn from_matrix(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.dim();
        Self::new(matrix, vec![dim])
    }

    /// Symmetrises a matrix that is Hermitian up to rounding. For internal
    /// results that are Hermitian by construction.
    pub(crate) fn hermitize(matrix: ComplexMatrix, subsystem_dims: Vec<usize>) -> Self {
        debug_assert_eq!(subsystem_dims.iter().product::<usize>(), matrix.dim());
        HermitianOperator {
            matrix: matrix.hermitian_part(),
            subsystem_dims,
        }
    }

    pub fn from_real_diag(values: &[f64]) -> Self {
        Self::hermitize(ComplexMatrix::diag(values), vec![values.len()])
    }

    /// `|psi><psi|` for a vector (normalised or not).
    pub fn projector(psi: &[C64]) -> Self {
        Self::hermitize(ComplexMatrix::outer(psi), vec![psi.len()])
    }

    pub fn identity(dim: usize) -> Self {
        Self::hermitize(ComplexMatrix::identity(dim), vec![dim])
    }

    pub fn zeros(dim: usize) -> Self {
        Self::hermitize(ComplexMatrix::zeros(dim), vec![dim])
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self::identity(dim).scale(1.0 / dim as f64)
    }

    pub fn pauli_x() -> Self {
        Self::hermitize(ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]), vec![2])
    }

    pub fn pauli_y() -> Self {
        let m = ComplexMatrix::from_fn(2, |r, c| match (r, c) {
            (0, 1) => C64::new(0.0, -1.0),
            (1, 0) => C64::new(0.0, 1.0),
            _ => C64::new(0.0, 0.0),
        });
        Self::hermitize(m, vec![2])
    }

    pub fn pauli_z() -> Self {
        Self::from_real_diag(&[1.0, -1.0])
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn subsystem_dims(&self) -> &[usize] {
        &self.subsystem_dims
    }

    /// Reinterprets the tensor structure without touching entries.
    pub fn with_subsystem_dims(self, dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) || dims.iter().product::<usize>() != self.dim() {
            return Err(Error::InvalidSubsystemDims {
                dims,
                dim: self.dim(),
            });
        }
        Ok(HermitianOperator {
            matrix: self.matrix,
            subsystem_dims: dims,
        })
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// `Tr[self * other]`, real for Hermitian pairs.
    pub fn expectation(&self, other: &HermitianOperator) -> f64 {
        self.matrix.trace_product(&other.matrix).re
    }

    /// `<v| self |v>`.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        self.matrix.sandwich(v, v).re
    }

    pub fn scale(&self, s: f64) -> Self {
        HermitianOperator {
            matrix: self.matrix.scale(s),
            subsystem_dims: self.subsystem_dims.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::hermitize(&self.matrix + &other.matrix, self.subsystem_dims.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(Self::hermitize(&self.matrix - &other.matrix, self.subsystem_dims.clone()))
    }

    /// `K self K^dagger` for an arbitrary square `K`.
    pub fn conjugate_by(&self, k: &ComplexMatrix) -> Result<Self> {
        if k.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: k.dim(),
            });
        }
        let m = &(k * &self.matrix) * &k.adjoint();
        Ok(Self::hermitize(m, self.subsystem_dims.clone()))
    }

    /// `B self B` for a Hermitian `B` (e.g. `sqrt(M) rho sqrt(M)`).
    pub fn sandwich_by(&self, b: &HermitianOperator) -> Result<Self> {
        self.conjugate_by(b.matrix())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.matrix.max_abs_diff(&other.matrix)
    }

    fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn eigh(&self) -> Result<Spectrum> {
        eigh(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.min())
    }
}

/// `a (x) b`; subsystem lists are concatenated.
pub fn tensor(a: &HermitianOperator, b: &HermitianOperator) -> HermitianOperator {
    let mut dims = a.subsystem_dims.clone();
    dims.extend_from_slice(&b.subsystem_dims);
    HermitianOperator {
        matrix: a.matrix.kron(&b.matrix),
        subsystem_dims: dims,
    }
}

/// Traces out every subsystem not listed in `keep`. The kept subsystems
/// retain their original relative order; duplicates in `keep` are ignored.
pub fn partial_trace(m: &HermitianOperator, keep: &[usize]) -> Result<HermitianOperator> {
    let dims = &m.subsystem_dims;
    let count = dims.len();
    if let Some(&bad) = keep.iter().find(|&&k| k >= count) {
        return Err(Error::SubsystemOutOfRange { index: bad, count });
    }
    let mut kept = vec![false; count];
    for &k in keep {
        kept[k] = true;
    }
    let keep_dims: Vec<usize> = (0..count).filter(|&k| kept[k]).map(|k| dims[k]).collect();
    let keep_dim: usize = keep_dims.iter().product();

    // Split every full index into (kept multi-index, traced multi-index).
    let dim = m.dim();
    let mut split = Vec::with_capacity(dim);
    for full in 0..dim {
        let mut rem = full;
        let (mut ki, mut ti) = (0usize, 0usize);
        let (mut kstride, mut tstride) = (1usize, 1usize);
        for k in (0..count).rev() {
            let digit = rem % dims[k];
            rem /= dims[k];
            if kept[k] {
                ki += digit * kstride;
                kstride *= dims[k];
            } else {
                ti += digit * tstride;
                tstride *= dims[k];
            }
        }
        split.push((ki, ti));
    }

    let mut out = ComplexMatrix::zeros(keep_dim);
    let src = m.matrix();
    for r in 0..dim {
        let (kr, tr) = split[r];
        for c in 0..dim {
            let (kc, tc) = split[c];
            if tr == tc {
                out[(kr, kc)] += src[(r, c)];
            }
        }
    }
    let out_dims = if keep_dims.is_empty() { vec![1] } else { keep_dims };
    Ok(HermitianOperator::hermitize(out, out_dims))
}

/// Spectral decomposition with eigenvalues in descending order.
pub fn eigh(m: &HermitianOperator) -> Result<Spectrum> {
    let defect = m.matrix.hermitian_defect();
    if defect > HERMITIAN_TOL * m.matrix.max_abs().max(1.0) {
        return Err(Error::NotHermitian(defect));
    }
    eigen::jacobi_eigh(&m.matrix)
        .ok_or_else(|| Error::Numeric("Jacobi eigensolver did not converge".into()))
}

/// `Tr|M|`, the sum of absolute eigenvalues.
pub fn trace_norm(m: &HermitianOperator) -> Result<f64> {
    Ok(eigh(m)?.eigenvalues.iter().map(|l| l.abs()).sum())
}

/// `||a - b||_1 / 2`.
pub fn trace_distance(a: &HermitianOperator, b: &HermitianOperator) -> Result<f64> {
    Ok(0.5 * trace_norm(&a.sub(b)?)?)
}

/// Principal square root of a PSD operator. Eigenvalues in `[-1e-10, 0)` are
/// clipped; anything more negative is an error.
pub fn psd_sqrt(m: &HermitianOperator) -> Result<HermitianOperator> {
    let spec = eigh(m)?;
    let min = spec.min();
    if min < -PSD_CLIP_TOL {
        return Err(Error::NotPsd(min));
    }
    let root = spec.map_eigenvalues(|l| l.max(0.0).sqrt());
    Ok(HermitianOperator::hermitize(root, m.subsystem_dims.clone()))
}

/// True if every eigenvalue is at least `-tol`.
pub fn is_psd(m: &HermitianOperator, tol: f64) -> Result<bool> {
    Ok(eigh(m)?.min() >= -tol)
}

/// Wire format: `{"dim": n, "subsystem_dims": [...], "entries": [[re, im], ...]}`,
/// entries row-major.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub dim: usize,
    pub subsystem_dims: Vec<usize>,
    pub entries: Vec<[f64; 2]>,
}

impl From<&HermitianOperator> for MatrixJson {
    fn from(op: &HermitianOperator) -> Self {
        MatrixJson {
            dim: op.dim(),
            subsystem_dims: op.subsystem_dims.clone(),
            entries: op.matrix.entries().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl TryFrom<MatrixJson> for HermitianOperator {
    type Error = Error;

    fn try_from(j: MatrixJson) -> Result<Self> {
        if j.entries.len() != j.dim * j.dim {
            return Err(Error::DimensionMismatch {
                expected: j.dim * j.dim,
                found: j.entries.len(),
            });
        }
        let data = j.entries.iter().map(|&[re, im]| C64::new(re, im)).collect();
        let matrix = ComplexMatrix::from_row_major(data).expect("length checked above");
        let dims = if j.subsystem_dims.is_empty() {
            vec![j.dim]
        } else {
            j.subsystem_dims
        };
        HermitianOperator::new(matrix, dims)
    }
}
