use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::QpdError;
use crate::circuit::{Pauli, PrepLabel};

/// One measure-and-prepare channel: measure `observable`, weight the
/// outcome by `coefficient` and feed in a fresh `prep` state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QpdTerm {
    /// 1-based label as it appears in decomposition tables.
    pub index: usize,
    pub coefficient: f64,
    pub observable: Pauli,
    pub prep: PrepLabel,
}

/// A signed sum of measure-and-prepare channels standing in for the
/// identity channel on one wire.
#[derive(Debug, Clone, PartialEq)]
pub struct WireCutDecomposition {
    terms: Vec<QpdTerm>,
}

/// The standard eight-term identity decomposition: `rho = (Tr[rho] I +
/// <X> X + <Y> Y + <Z> Z) / 2`, with each Pauli split into its projectors.
pub fn canonical_wire_cut() -> WireCutDecomposition {
    use Pauli::*;
    use PrepLabel::*;
    let table = [
        (I, Zero, 0.5),
        (I, One, 0.5),
        (X, Plus, 0.5),
        (X, Minus, -0.5),
        (Y, PlusI, 0.5),
        (Y, MinusI, -0.5),
        (Z, Zero, 0.5),
        (Z, One, -0.5),
    ];
    WireCutDecomposition {
        terms: table
            .iter()
            .enumerate()
            .map(|(i, &(observable, prep, coefficient))| QpdTerm { index: i + 1, coefficient, observable, prep })
            .collect(),
    }
}

impl WireCutDecomposition {
    /// Accepts a table after structural checks. Whether it actually
    /// reproduces the identity channel is checked by [`Self::validate`].
    pub fn from_terms(terms: Vec<QpdTerm>) -> Result<Self, QpdError> {
        if terms.is_empty() {
            return Err(QpdError::InvalidDecomposition("no terms"));
        }
        if terms.iter().any(|t| t.coefficient == 0.0 || !t.coefficient.is_finite()) {
            return Err(QpdError::InvalidDecomposition("coefficients must be finite and nonzero"));
        }
        let mut labels: Vec<usize> = terms.iter().map(|t| t.index).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != terms.len() {
            return Err(QpdError::InvalidDecomposition("duplicate term index"));
        }
        Ok(WireCutDecomposition { terms })
    }

    pub fn terms(&self) -> &[QpdTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Sampling overhead, the sum of absolute coefficients.
    pub fn gamma(&self) -> f64 {
        self.terms.iter().map(|t| t.coefficient.abs()).sum()
    }

    /// Checks the channel identity on the Pauli-basis probe states
    /// |0>, |1>, |+>, |+i> (whose projectors span all 2x2 matrices) and on the
    /// maximally mixed state, to within `tol` elementwise.
    pub fn validate(&self, tol: f64) -> Result<(), QpdError> {
        let probes = [
            DensityMatrix::pure(PrepLabel::Zero.amplitudes()),
            DensityMatrix::pure(PrepLabel::One.amplitudes()),
            DensityMatrix::pure(PrepLabel::Plus.amplitudes()),
            DensityMatrix::pure(PrepLabel::PlusI.amplitudes()),
            DensityMatrix::from_bloch(0.0, 0.0, 0.0)?,
        ];
        for rho in &probes {
            let out = reconstruct_density(self, rho)?;
            if out.max_abs_diff(rho) > tol {
                return Err(QpdError::NotIdentityChannel { error: out.max_abs_diff(rho) });
            }
        }
        Ok(())
    }
}

impl PrepLabel {
    /// State vector `(a0, a1)` of the labelled state.
    pub fn amplitudes(self) -> [Complex64; 2] {
        let r = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let ri = Complex64::new(0.0, FRAC_1_SQRT_2);
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        match self {
            PrepLabel::Zero => [one, zero],
            PrepLabel::One => [zero, one],
            PrepLabel::Plus => [r, r],
            PrepLabel::Minus => [r, -r],
            PrepLabel::PlusI => [r, ri],
            PrepLabel::MinusI => [r, -ri],
        }
    }
}

impl Pauli {
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Single-qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(pub [[Complex64; 2]; 2]);

impl DensityMatrix {
    pub fn pure(psi: [Complex64; 2]) -> Self {
        let mut m = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, e) in row.iter_mut().enumerate() {
                *e = psi[r] * psi[c].conj();
            }
        }
        DensityMatrix(m)
    }

    /// `(I + x X + y Y + z Z) / 2`; requires `x^2 + y^2 + z^2 <= 1`.
    pub fn from_bloch(x: f64, y: f64, z: f64) -> Result<Self, QpdError> {
        if x * x + y * y + z * z > 1.0 + 1e-12 {
            return Err(QpdError::InvalidDensity("Bloch vector longer than one"));
        }
        Ok(DensityMatrix([
            [Complex64::new((1.0 + z) / 2.0, 0.0), Complex64::new(x / 2.0, -y / 2.0)],
            [Complex64::new(x / 2.0, y / 2.0), Complex64::new((1.0 - z) / 2.0, 0.0)],
        ]))
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    /// `Tr[P rho]`, real for Hermitian `rho`.
    pub fn expectation(&self, p: Pauli) -> f64 {
        let m = p.matrix();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..2 {
            for c in 0..2 {
                acc += m[r][c] * self.0[c][r];
            }
        }
        acc.re
    }

    /// Hermitian, unit trace and positive semidefinite, each to 1e-10.
    pub fn check(&self) -> Result<(), QpdError> {
        let m = &self.0;
        let herm = (m[0][1] - m[1][0].conj()).norm() <= 1e-10 && m[0][0].im.abs() <= 1e-10 && m[1][1].im.abs() <= 1e-10;
        if !herm {
            return Err(QpdError::InvalidDensity("not Hermitian"));
        }
        if (self.trace() - Complex64::new(1.0, 0.0)).norm() > 1e-10 {
            return Err(QpdError::InvalidDensity("trace is not one"));
        }
        // for a unit-trace Hermitian 2x2 matrix, PSD iff diagonal and determinant are non-negative
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).re;
        if m[0][0].re < -1e-10 || m[1][1].re < -1e-10 || det < -1e-10 {
            return Err(QpdError::InvalidDensity("not positive semidefinite"));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &DensityMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

/// Applies the decomposed channel: `sum_k c_k Tr[O_k rho] |k><k|`.
pub fn reconstruct_density(decomp: &WireCutDecomposition, rho: &DensityMatrix) -> Result<DensityMatrix, QpdError> {
    rho.check()?;
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for term in decomp.terms() {
        let weight = term.coefficient * rho.expectation(term.observable);
        let proj = DensityMatrix::pure(term.prep.amplitudes());
        for r in 0..2 {
            for c in 0..2 {
                out[r][c] += proj.0[r][c] * weight;
            }
        }
    }
    Ok(DensityMatrix(out))
}
