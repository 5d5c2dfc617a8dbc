use alloc::vec::Vec;

use rand::Rng;

use crate::channel::ChoiOperator;
use crate::error::{Error, Result};
use crate::fidelity::{penalty, protocol_objective_choi};
use crate::math;
use crate::matrix::{ComplexMatrix, C64, ZERO};
use crate::protocol::{Branch, Protocol};

/// Lower-triangular factors `L` of the Choi operators `C_ω = L L†`,
/// `I_ω = L L†` of an `m`-branch protocol.
///
/// Any factor gives a positive semidefinite Choi operator, so only the
/// trace conditions remain to be enforced.
#[derive(Clone, Debug, PartialEq)]
pub struct CholeskyParams {
    dim: usize,
    corrections: Vec<ComplexMatrix>,
    instruments: Vec<ComplexMatrix>,
}

impl CholeskyParams {
    pub fn new(dim: usize, corrections: Vec<ComplexMatrix>, instruments: Vec<ComplexMatrix>) -> Result<Self> {
        let n = dim * dim;
        if corrections.is_empty() || corrections.len() != instruments.len() {
            return Err(Error::InvalidArgument(
                "need the same positive number of correction and instrument factors".into(),
            ));
        }
        for l in corrections.iter().chain(&instruments) {
            if l.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: l.rows(),
                });
            }
            if (0..n).any(|i| (i + 1..n).any(|j| l[(i, j)] != ZERO)) {
                return Err(Error::InvalidArgument("factor is not lower triangular".into()));
            }
        }
        Ok(Self {
            dim,
            corrections,
            instruments,
        })
    }

    /// Factors of the Choi operators of an existing protocol.
    pub fn from_protocol(p: &Protocol) -> Result<Self> {
        let mut corrections = Vec::with_capacity(p.len());
        let mut instruments = Vec::with_capacity(p.len());
        for b in p.branches() {
            corrections.push(cholesky_psd(b.correction.matrix())?);
            instruments.push(cholesky_psd(b.instrument.matrix())?);
        }
        Self::new(p.dim(), corrections, instruments)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> usize {
        self.corrections.len()
    }

    pub fn correction_factors(&self) -> &[ComplexMatrix] {
        &self.corrections
    }

    pub fn instrument_factors(&self) -> &[ComplexMatrix] {
        &self.instruments
    }

    pub(crate) fn into_parts(self) -> (usize, Vec<ComplexMatrix>, Vec<ComplexMatrix>) {
        (self.dim, self.corrections, self.instruments)
    }

    /// Every factor entry multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            corrections: self.corrections.iter().map(|l| l.scale_real(s)).collect(),
            instruments: self.instruments.iter().map(|l| l.scale_real(s)).collect(),
        }
    }

    /// The protocol `{(L_I L_I†, L_C L_C†)}`, without any normalization.
    pub fn to_protocol(&self) -> Protocol {
        let gram = |l: &ComplexMatrix| {
            ChoiOperator::from_matrix_unchecked(self.dim, l.matmul(&l.adjoint()).hermitian_part())
        };
        let branches = self
            .corrections
            .iter()
            .zip(&self.instruments)
            .map(|(c, i)| Branch {
                instrument: gram(i),
                correction: gram(c),
            })
            .collect();
        Protocol::new(self.dim, branches).expect("dimensions are consistent")
    }
}

/// Draws every strictly-lower entry with real and imaginary parts uniform on
/// `[−√d, √d]`, and real diagonal entries uniform on the same interval.
pub fn random_init<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> CholeskyParams {
    let n = d * d;
    let bound = math::sqrt(d as f64);
    let mut factor = || {
        let mut l = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let re = rng.random_range(-bound..=bound);
                let im = if i == j { 0.0 } else { rng.random_range(-bound..=bound) };
                l[(i, j)] = C64::new(re, im);
            }
        }
        l
    };
    let corrections = (0..m).map(|_| factor()).collect();
    let instruments = (0..m).map(|_| factor()).collect();
    CholeskyParams {
        dim: d,
        corrections,
        instruments,
    }
}

/// Lower-triangular `L` with `L L† = m` for a positive semidefinite `m`.
/// Pivots that vanish (rank deficiency) leave a zero column.
pub fn cholesky_psd(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = m.rows();
    let scale = m.max_abs().max(1.0);
    let tiny = 1e-12 * scale;
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut diag = m[(j, j)].re;
        for k in 0..j {
            diag -= l[(j, k)].norm_sqr();
        }
        if diag < -1e-7 * scale {
            return Err(Error::NotCompletelyPositive(diag));
        }
        if diag <= tiny {
            continue;
        }
        let pivot = math::sqrt(diag);
        l[(j, j)] = C64::new(pivot, 0.0);
        for i in j + 1..n {
            let mut acc = m[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = acc / pivot;
        }
    }
    Ok(l)
}

/// `f − λP` for the protocol encoded by `params` under `noise`.
pub fn objective(params: &CholeskyParams, noise: &ChoiOperator, lambda: f64) -> Result<f64> {
    let p = params.to_protocol();
    Ok(protocol_objective_choi(&p, noise)? - lambda * penalty(&p))
}
