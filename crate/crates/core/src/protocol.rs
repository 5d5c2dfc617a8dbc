//! Ex-ante/ex-post control protocols: a CP instrument `{I_ω}` applied before
//! the noise and a correction `C_ω` applied after it, chosen by the outcome.

use alloc::format;
use alloc::vec::Vec;

use rand::Rng;

use crate::channel::{compose, sandwich_channel, ChoiOperator, DEFAULT_CP_TOL};
use crate::error::{Error, Result};
use crate::fidelity::AverageOperation;
use crate::linalg;
use crate::matrix::{ComplexMatrix, PureState};

#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub instrument: ChoiOperator,
    pub correction: ChoiOperator,
}

/// Ordered branches of a protocol.
///
/// Construction only checks dimensions, so that unconstrained candidates
/// can be scored during optimization; [`Protocol::validate`] checks the
/// physical constraints.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    dim: usize,
    branches: Vec<Branch>,
}

impl Protocol {
    pub fn new(dim: usize, branches: Vec<Branch>) -> Result<Self> {
        if branches.is_empty() {
            return Err(Error::InvalidProtocol("a protocol needs at least one branch".into()));
        }
        for b in &branches {
            for c in [&b.instrument, &b.correction] {
                if c.dim() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        found: c.dim(),
                    });
                }
            }
        }
        Ok(Self { dim, branches })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn len(&self) -> usize {
        self.branches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.branches.is_empty()
    }

    /// Choi operator of `Σ_ω I_ω`.
    pub fn instrument_sum(&self) -> ChoiOperator {
        let mut total = self.branches[0].instrument.clone();
        for b in &self.branches[1..] {
            total = total.add(&b.instrument).expect("dimensions checked");
        }
        total
    }

    /// Every instrument CP, the instrument sums to a TP map, every
    /// correction TPCP.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for (w, b) in self.branches.iter().enumerate() {
            let v = b.instrument.is_cp(tol);
            if !v.completely_positive {
                return Err(Error::InvalidProtocol(format!(
                    "instrument {w} is not CP (eigenvalue {:e})",
                    v.min_eigenvalue
                )));
            }
            let v = b.correction.is_cp(tol);
            if !v.completely_positive {
                return Err(Error::InvalidProtocol(format!(
                    "correction {w} is not CP (eigenvalue {:e})",
                    v.min_eigenvalue
                )));
            }
            if !b.correction.is_tp(tol) {
                return Err(Error::InvalidProtocol(format!(
                    "correction {w} is not trace preserving (defect {:e})",
                    b.correction.trace_defect()
                )));
            }
        }
        let total = self.instrument_sum();
        if !total.is_tp(tol) {
            return Err(Error::InvalidProtocol(format!(
                "instrument does not sum to a trace-preserving map (defect {:e})",
                total.trace_defect()
            )));
        }
        Ok(())
    }

    /// Outcome probabilities `tr I_ω(ρ)`.
    pub fn branch_probabilities(&self, rho: &ComplexMatrix) -> Result<Vec<f64>> {
        self.branches
            .iter()
            .map(|b| Ok(b.instrument.apply(rho)?.trace().re))
            .collect()
    }
}

/// Branch count used when none is given: two for qubits, `d` otherwise.
pub fn default_branch_count(d: usize) -> usize {
    if d == 2 {
        2
    } else {
        d
    }
}

/// Positive operators summing to the identity.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    const SUM_TOL: f64 = 1e-10;

    pub fn new(dim: usize, elements: Vec<ComplexMatrix>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::InvalidPovm("no elements".into()));
        }
        let mut total = ComplexMatrix::zeros(dim, dim);
        for (k, m) in elements.iter().enumerate() {
            if m.shape() != (dim, dim) {
                return Err(Error::InvalidPovm(format!("element {k} has shape {:?}", m.shape())));
            }
            if !m.is_hermitian(Self::SUM_TOL) {
                return Err(Error::InvalidPovm(format!("element {k} is not Hermitian")));
            }
            let min = linalg::min_eigenvalue(m);
            if min < -DEFAULT_CP_TOL {
                return Err(Error::InvalidPovm(format!(
                    "element {k} has negative eigenvalue {min:e}"
                )));
            }
            total += m;
        }
        let defect = total.max_abs_diff(&ComplexMatrix::identity(dim));
        if defect > Self::SUM_TOL {
            return Err(Error::InvalidPovm(format!(
                "elements sum to the identity only within {defect:e}"
            )));
        }
        Ok(Self { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }
}

/// Instruments `ρ ↦ √M_ω ρ √M_ω`.
pub fn simple_instrument_from_povm(p: &Povm) -> Vec<ChoiOperator> {
    p.elements
        .iter()
        .map(|m| sandwich_channel(&linalg::sqrt_psd(m)))
        .collect()
}

/// Identity instrument split evenly over `branches` outcomes, identity
/// corrections.
pub fn do_nothing_protocol(d: usize, branches: usize) -> Result<Protocol> {
    if branches == 0 || d == 0 {
        return Err(Error::InvalidArgument(
            "dimension and branch count must be positive".into(),
        ));
    }
    let id = ChoiOperator::identity(d);
    let instrument = id.scale(1.0 / branches as f64);
    Protocol::new(
        d,
        (0..branches)
            .map(|_| Branch {
                instrument: instrument.clone(),
                correction: id.clone(),
            })
            .collect(),
    )
}

/// Projective measurement in `basis` followed by repreparation of the
/// observed basis state.
pub fn discriminate_reprepare_protocol(basis: &[PureState]) -> Result<Protocol> {
    let d = basis.len();
    if d == 0 {
        return Err(Error::InvalidArgument("empty basis".into()));
    }
    let mut worst: f64 = 0.0;
    for (i, a) in basis.iter().enumerate() {
        if a.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: a.dim(),
            });
        }
        for (j, b) in basis.iter().enumerate() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((a.inner(b) - target).norm());
        }
    }
    if worst > 1e-10 {
        return Err(Error::NotOrthonormal(worst));
    }
    let id = ComplexMatrix::identity(d);
    let branches = basis
        .iter()
        .map(|phi| {
            let proj = phi.projector();
            Branch {
                instrument: sandwich_channel(&proj),
                // ρ ↦ |φ⟩⟨φ| tr ρ has Choi operator |φ⟩⟨φ| ⊗ 1
                correction: ChoiOperator::from_matrix_unchecked(d, proj.kron(&id)),
            }
        })
        .collect();
    Protocol::new(d, branches)
}

/// Discriminate-and-reprepare in the computational basis.
pub fn computational_dr_protocol(d: usize) -> Result<Protocol> {
    let basis: Vec<PureState> = (0..d).map(|i| PureState::basis(d, i)).collect::<Result<_>>()?;
    discriminate_reprepare_protocol(&basis)
}

/// `Σ_ω C_ω ∘ N ∘ I_ω`.
pub fn average_operation(p: &Protocol, noise: &ChoiOperator) -> Result<AverageOperation> {
    if noise.dim() != p.dim {
        return Err(Error::DimensionMismatch {
            expected: p.dim,
            found: noise.dim(),
        });
    }
    let mut total: Option<ChoiOperator> = None;
    for b in &p.branches {
        let term = compose(&b.correction, &compose(noise, &b.instrument)?)?;
        total = Some(match total {
            None => term,
            Some(t) => t.add(&term)?,
        });
    }
    Ok(AverageOperation::new(total.expect("at least one branch")))
}

/// Probabilities below this are treated as exactly zero.
const PROBABILITY_FLOOR: f64 = 1e-15;
const PROBABILITY_SUM_TOL: f64 = 1e-8;

/// Draws an outcome with probability `tr I_ω(ρ)` and returns the normalized
/// post-measurement state.
pub fn sample_branch<R: Rng + ?Sized>(
    p: &Protocol,
    rho: &ComplexMatrix,
    rng: &mut R,
) -> Result<(usize, ComplexMatrix)> {
    let mut probs = p.branch_probabilities(rho)?;
    for q in &mut probs {
        if *q < PROBABILITY_FLOOR {
            *q = 0.0;
        }
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOL {
        return Err(Error::ProbabilityMismatch(total));
    }
    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut chosen = None;
    for (w, &q) in probs.iter().enumerate() {
        if q == 0.0 {
            continue;
        }
        acc += q;
        chosen = Some(w);
        if u < acc {
            break;
        }
    }
    let w = chosen.ok_or(Error::ProbabilityMismatch(total))?;
    let post = p.branches[w].instrument.apply(rho)?;
    Ok((w, post.scale_real(1.0 / probs[w])))
}
