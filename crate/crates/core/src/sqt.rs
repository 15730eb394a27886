//! The stretched quantum theory.
//!
//! A state of a single system is a unit-trace Hermitian operator whose diagonal
//! is nonnegative in both the computational and the Fourier basis and whose
//! spectrum is bounded below by `-tau * THETA`. At `tau = 0` this is exactly the
//! quantum state space; at `tau = 1` the qubit body reaches Bloch radius `sqrt 2`
//! inside the slab `|x| <= 1, |z| <= 1`.
//!
//! Effects are the PSD operators whose overlap with every state is nonnegative.
//! For a qubit that minimum is a linear program over a three-dimensional convex
//! body and [`min_state_overlap`] solves it exactly by enumerating the
//! Karush-Kuhn-Tucker faces.

use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{partial_trace, tensor, HermitianOperator, C64};

/// `(sqrt 2 - 1) / 2`.
pub const THETA: f64 = (SQRT_2 - 1.0) / 2.0;

/// Tolerance for [`state_membership`].
pub const STATE_TOL: f64 = 1e-10;
/// Tolerance on the minimal state overlap in [`qubit_effect_membership`].
pub const EFFECT_OVERLAP_TOL: f64 = 1e-8;
const BODY_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SqtParams {
    tau: f64,
}

impl SqtParams {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&tau) {
            return Err(Error::InvalidParameter(format!("tau = {tau} outside [0, 1]")));
        }
        Ok(SqtParams { tau })
    }

    /// Quantum theory.
    pub fn quantum() -> Self {
        SqtParams { tau: 0.0 }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        THETA
    }

    /// Lower bound `-tau * theta` on the spectrum of a state.
    pub fn spectral_floor(&self) -> f64 {
        -self.tau * THETA
    }

    /// Maximal Bloch radius `1 + tau (sqrt 2 - 1)` of the qubit body.
    pub fn bloch_radius(&self) -> f64 {
        1.0 + self.tau * (SQRT_2 - 1.0)
    }
}

/// `q(tau) = (1 - tau)/2 + tau/sqrt 2`.
pub fn q_of_tau(tau: f64) -> f64 {
    (1.0 - tau) / 2.0 + tau / SQRT_2
}

/// `eps(tau) = (2 - sqrt 2)(1 - tau)/4`.
pub fn epsilon_of_tau(tau: f64) -> f64 {
    (2.0 - SQRT_2) * (1.0 - tau) / 4.0
}

/// Discrete Fourier basis `f_j = d^{-1/2} sum_k exp(+2 pi i jk/d) |c_k>`.
pub fn fourier_basis(d: usize) -> Vec<Vec<C64>> {
    let norm = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|j| {
            (0..d)
                .map(|k| C64::from_polar(norm, 2.0 * PI * ((j * k) % d) as f64 / d as f64))
                .collect()
        })
        .collect()
}

/// Slack of each defining constraint of the state set; all nonnegative for members.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Margins {
    /// Smallest computational-basis diagonal entry.
    pub comp_diag: f64,
    /// Smallest Fourier-basis diagonal entry.
    pub fourier_diag: f64,
    /// Smallest eigenvalue plus `tau * theta`.
    pub spectral: f64,
}

impl Margins {
    fn min(self, other: Margins) -> Margins {
        Margins {
            comp_diag: self.comp_diag.min(other.comp_diag),
            fourier_diag: self.fourier_diag.min(other.fourier_diag),
            spectral: self.spectral.min(other.spectral),
        }
    }

    fn all_nonnegative(&self, tol: f64) -> bool {
        self.comp_diag >= -tol && self.fourier_diag >= -tol && self.spectral >= -tol
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub margins: Margins,
}

fn single_system_margins(op: &HermitianOperator, params: &SqtParams) -> Result<Margins> {
    let d = op.dim();
    let m = op.matrix();
    let comp_diag = (0..d).map(|i| m[(i, i)].re).fold(f64::INFINITY, f64::min);
    let fourier_diag = fourier_basis(d)
        .iter()
        .map(|f| op.quadratic_form(f))
        .fold(f64::INFINITY, f64::min);
    let spectral = op.min_eigenvalue()? - params.spectral_floor();
    Ok(Margins {
        comp_diag,
        fourier_diag,
        spectral,
    })
}

/// Tests membership of `op` in the state set at stretch `params.tau()`.
///
/// Supported shapes are a single system of any dimension, and a two-qubit
/// operator that factorises as a product (each factor is then tested and the
/// margins are the worst of the two). Anything else is
/// [`Error::UnsupportedShape`].
pub fn state_membership(op: &HermitianOperator, params: &SqtParams) -> Result<MembershipReport> {
    let trace_ok = (op.trace() - 1.0).abs() <= STATE_TOL;
    let margins = match op.subsystem_dims() {
        [_] => single_system_margins(op, params)?,
        [2, 2] => {
            let a = partial_trace(op, &[0])?;
            let b = partial_trace(op, &[1])?;
            let defect = tensor(&a, &b).max_abs_diff(op);
            if defect > STATE_TOL {
                return Err(Error::UnsupportedShape(format!(
                    "two-qubit operator is not a product (defect {defect:e})"
                )));
            }
            single_system_margins(&a, params)?.min(single_system_margins(&b, params)?)
        }
        dims => {
            return Err(Error::UnsupportedShape(format!(
                "subsystem dimensions {dims:?}; expected one system or two qubits"
            )))
        }
    };
    Ok(MembershipReport {
        member: trace_ok && margins.all_nonnegative(STATE_TOL),
        margins,
    })
}

/// A validated state of the stretched theory.
#[derive(Clone, Debug, PartialEq)]
pub struct SqtState {
    op: HermitianOperator,
    params: SqtParams,
}

impl SqtState {
    pub fn new(op: HermitianOperator, params: SqtParams) -> Result<Self> {
        let report = state_membership(&op, &params)?;
        if !report.member {
            return Err(Error::invalid(
                "state",
                format!("margins {:?}, trace {}", report.margins, op.trace()),
            ));
        }
        Ok(SqtState { op, params })
    }

    pub fn op(&self) -> &HermitianOperator {
        &self.op
    }

    pub fn params(&self) -> SqtParams {
        self.params
    }

    pub fn into_op(self) -> HermitianOperator {
        self.op
    }
}

/// Qubit operator `(I + x sigma_x + y sigma_y + z sigma_z)/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn to_operator(&self) -> HermitianOperator {
        pauli_combination(0.5, [self.x / 2.0, self.y / 2.0, self.z / 2.0])
    }

    /// Bloch vector of a qubit operator (ignores its trace).
    pub fn from_operator(op: &HermitianOperator) -> Result<Self> {
        let [x, y, z] = pauli_coefficients(op)?.1;
        Ok(BlochVector::new(2.0 * x, 2.0 * y, 2.0 * z))
    }
}

/// `a0 I + a . sigma`.
fn pauli_combination(a0: f64, a: [f64; 3]) -> HermitianOperator {
    let m = crate::linalg::ComplexMatrix::from_fn(2, |r, c| match (r, c) {
        (0, 0) => C64::new(a0 + a[2], 0.0),
        (1, 1) => C64::new(a0 - a[2], 0.0),
        (0, 1) => C64::new(a[0], -a[1]),
        _ => C64::new(a[0], a[1]),
    });
    HermitianOperator::hermitize(m, vec![2])
}

/// Coefficients `(a0, a)` with `op = a0 I + a . sigma`.
fn pauli_coefficients(op: &HermitianOperator) -> Result<(f64, [f64; 3])> {
    if op.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: op.dim(),
        });
    }
    let m = op.matrix();
    let a0 = (m[(0, 0)].re + m[(1, 1)].re) / 2.0;
    let az = (m[(0, 0)].re - m[(1, 1)].re) / 2.0;
    Ok((a0, [m[(1, 0)].re, m[(1, 0)].im, az]))
}

/// Closed-form description of the qubit state body:
/// `|z| <= 1`, `|x| <= 1`, `|r| <= 1 + tau (sqrt 2 - 1)`.
pub fn qubit_state_body_membership(b: &BlochVector, params: &SqtParams) -> bool {
    b.z.abs() <= 1.0 + BODY_TOL
        && b.x.abs() <= 1.0 + BODY_TOL
        && b.norm() <= params.bloch_radius() + BODY_TOL
}

/// Exact minimum of `c . r` over the qubit state body, with a minimiser.
///
/// The body is the ball of radius `R` cut by the slabs `|x| <= 1` and
/// `|z| <= 1`. At an optimum each slab is either inactive or pinned at one of
/// its faces; with the pinned coordinates fixed, the remaining coordinates
/// minimise a linear function over a ball. Enumerating the nine face patterns
/// therefore covers every KKT point.
pub fn min_linear_over_body(c: [f64; 3], params: &SqtParams) -> (f64, [f64; 3]) {
    let r2 = params.bloch_radius().powi(2);
    let faces = [None, Some(1.0), Some(-1.0)];
    let mut best = (f64::INFINITY, [0.0; 3]);
    for fx in faces {
        for fz in faces {
            let fixed_sq = fx.map_or(0.0, |v: f64| v * v) + fz.map_or(0.0, |v: f64| v * v);
            if fixed_sq > r2 + BODY_TOL {
                continue;
            }
            let rho = (r2 - fixed_sq).max(0.0).sqrt();
            let free_norm = (fx.map_or(c[0] * c[0], |_| 0.0)
                + c[1] * c[1]
                + fz.map_or(c[2] * c[2], |_| 0.0))
            .sqrt();
            let free = |ci: f64| if free_norm > 0.0 { -rho * ci / free_norm } else { 0.0 };
            let r = [
                fx.unwrap_or_else(|| free(c[0])),
                free(c[1]),
                fz.unwrap_or_else(|| free(c[2])),
            ];
            if r[0].abs() > 1.0 + BODY_TOL || r[2].abs() > 1.0 + BODY_TOL {
                continue;
            }
            let value = c[0] * r[0] + c[1] * r[1] + c[2] * r[2];
            if value < best.0 {
                best = (value, r);
            }
        }
    }
    best
}

/// `min Tr[m rho]` over qubit states `rho` at stretch `params`.
pub fn min_state_overlap(m: &HermitianOperator, params: &SqtParams) -> Result<f64> {
    let (a0, a) = pauli_coefficients(m)?;
    Ok(a0 + min_linear_over_body(a, params).0)
}

/// Effect-cone membership for a qubit operator: PSD (1e-10) and nonnegative
/// overlap (1e-8) with every state of the stretched qubit.
pub fn qubit_effect_membership(m: &HermitianOperator, params: &SqtParams) -> Result<bool> {
    if m.dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.dim(),
        });
    }
    if m.min_eigenvalue()? < -STATE_TOL {
        return Ok(false);
    }
    Ok(min_state_overlap(m, params)? >= -EFFECT_OVERLAP_TOL)
}

/// `rho_kl = (q/sqrt 2)[(-1)^k sigma_z + (-1)^l sigma_x] + I/2`.
pub fn rho_kl(k: u8, l: u8, params: &SqtParams) -> Result<SqtState> {
    if k > 1 || l > 1 {
        return Err(Error::InvalidParameter(format!("(k, l) = ({k}, {l}) must be bits")));
    }
    let s = q_of_tau(params.tau()) / SQRT_2;
    let sign = |b: u8| if b == 0 { 1.0 } else { -1.0 };
    let op = pauli_combination(0.5, [s * sign(l), 0.0, s * sign(k)]);
    SqtState::new(op, *params)
}

/// Projectors `{|0><0|, |1><1|}`.
pub fn z_basis() -> [HermitianOperator; 2] {
    [
        HermitianOperator::from_real_diag(&[1.0, 0.0]),
        HermitianOperator::from_real_diag(&[0.0, 1.0]),
    ]
}

/// Projectors `{|+><+|, |-><-|}`.
pub fn x_basis() -> [HermitianOperator; 2] {
    [
        pauli_combination(0.5, [0.5, 0.0, 0.0]),
        pauli_combination(0.5, [-0.5, 0.0, 0.0]),
    ]
}
