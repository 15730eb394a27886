//! Two-party, two-input, two-output boxes `p(r, s | i, j)`: Alice inputs `i`
//! and outputs `r`, Bob inputs `j` and outputs `s`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gentle::{eta_inverse, EtaFunction};

pub const NS_TOL: f64 = 1e-12;

/// `table[r][s][i][j] = p(r, s | i, j)`.
pub type BoxTable = [[[[f64; 2]; 2]; 2]; 2];

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoSignallingBox {
    table: BoxTable,
}

fn bits() -> impl Iterator<Item = usize> + Clone {
    0..2usize
}

impl NoSignallingBox {
    /// Validates nonnegativity, normalisation and no-signalling, all at [`NS_TOL`].
    pub fn new(table: BoxTable) -> Result<Self> {
        check_normalised(&table)?;
        let w = signalling_witness(&table)?;
        if !w.is_ns {
            return Err(Error::invalid(
                "box",
                format!("signalling by {:e}", w.max_violation),
            ));
        }
        Ok(NoSignallingBox { table })
    }

    pub fn table(&self) -> &BoxTable {
        &self.table
    }

    pub fn p(&self, r: usize, s: usize, i: usize, j: usize) -> f64 {
        self.table[r][s][i][j]
    }

    /// Alice's marginal `p(r | i)`.
    pub fn alice_marginal(&self, r: usize, i: usize) -> f64 {
        // No-signalling makes this independent of j; use j = 0.
        self.table[r][0][i][0] + self.table[r][1][i][0]
    }

    pub fn bob_marginal(&self, s: usize, j: usize) -> f64 {
        self.table[0][s][0][j] + self.table[1][s][0][j]
    }

    /// `E_ij = sum_{r,s} (-1)^(r xor s) p(r, s | i, j)`.
    pub fn correlator(&self, i: usize, j: usize) -> f64 {
        let mut e = 0.0;
        for r in bits() {
            for s in bits() {
                let sign = if r ^ s == 0 { 1.0 } else { -1.0 };
                e += sign * self.table[r][s][i][j];
            }
        }
        e
    }
}

fn check_normalised(table: &BoxTable) -> Result<()> {
    for i in bits() {
        for j in bits() {
            let mut total = 0.0;
            for r in bits() {
                for s in bits() {
                    let p = table[r][s][i][j];
                    if !(p >= -NS_TOL) {
                        return Err(Error::invalid(
                            "box",
                            format!("p({r},{s}|{i},{j}) = {p} is negative"),
                        ));
                    }
                    total += p;
                }
            }
            if (total - 1.0).abs() > NS_TOL {
                return Err(Error::invalid(
                    "box",
                    format!("p(.,.|{i},{j}) sums to {total}"),
                ));
            }
        }
    }
    Ok(())
}

/// `p(r, s | i, j) = 1/2` if `r xor s = i AND j`, else 0.
pub fn pr_box() -> NoSignallingBox {
    let mut table = BoxTable::default();
    for r in bits() {
        for s in bits() {
            for i in bits() {
                for j in bits() {
                    table[r][s][i][j] = if r ^ s == i & j { 0.5 } else { 0.0 };
                }
            }
        }
    }
    NoSignallingBox { table }
}

/// `lambda * PR + (1 - lambda) / 4`.
pub fn isotropic_box(lambda: f64) -> Result<NoSignallingBox> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Domain {
            value: lambda,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let pr = pr_box();
    let mut table = BoxTable::default();
    for r in bits() {
        for s in bits() {
            for i in bits() {
                for j in bits() {
                    table[r][s][i][j] = lambda * pr.table[r][s][i][j] + (1.0 - lambda) / 4.0;
                }
            }
        }
    }
    Ok(NoSignallingBox { table })
}

/// `S = E00 + E01 + E10 - E11`, so that PR gives 4 and the isotropic box `4 lambda`.
pub fn chsh_value(b: &NoSignallingBox) -> f64 {
    b.correlator(0, 0) + b.correlator(0, 1) + b.correlator(1, 0) - b.correlator(1, 1)
}

/// Bob's outcome distribution after Alice inputs `i` and sees `r`:
/// `out[j][s] = p(r, s | i, j) / p(r | i)`.
pub fn conditional_outcome_probs(b: &NoSignallingBox, i: usize, r: usize) -> Result<[[f64; 2]; 2]> {
    if i > 1 || r > 1 {
        return Err(Error::invalid("conditioning", "inputs and outputs are bits"));
    }
    let marginal = b.alice_marginal(r, i);
    if marginal <= 0.0 {
        return Err(Error::Conditioning(marginal));
    }
    let mut out = [[0.0; 2]; 2];
    for j in bits() {
        for s in bits() {
            out[j][s] = b.table[r][s][i][j] / marginal;
        }
    }
    Ok(out)
}

/// `1 - 2 eta^{-1}(1/4)`.
pub fn lambda_bound(eta: &EtaFunction) -> Result<f64> {
    Ok(1.0 - 2.0 * eta_inverse(eta, 0.25)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SignallingReport {
    pub is_ns: bool,
    pub max_violation: f64,
}

/// How much either party's marginal depends on the other party's input.
/// The table must be normalised; it need not be no-signalling.
pub fn signalling_witness(table: &BoxTable) -> Result<SignallingReport> {
    check_normalised(table)?;
    let mut worst = 0.0f64;
    for i in bits() {
        for r in bits() {
            let a = |j: usize| table[r][0][i][j] + table[r][1][i][j];
            worst = worst.max((a(0) - a(1)).abs());
        }
    }
    for j in bits() {
        for s in bits() {
            let b = |i: usize| table[0][s][i][j] + table[1][s][i][j];
            worst = worst.max((b(0) - b(1)).abs());
        }
    }
    Ok(SignallingReport {
        is_ns: worst <= NS_TOL,
        max_violation: worst,
    })
}
