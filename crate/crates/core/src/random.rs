//! Random channels, unitaries, instruments and protocols.

use alloc::vec::Vec;

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::channel::{ptm_from_choi, ChoiOperator, PauliTransferMatrix};
use crate::linalg;
use crate::math;
use crate::matrix::{partial_trace, BipartiteDims, ComplexMatrix, Subsystem, C64};
use crate::protocol::{Branch, Protocol};

fn ginibre<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    })
}

/// Haar-random unitary: Gram–Schmidt on a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    loop {
        let g = ginibre(d, rng);
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(d);
        let mut degenerate = false;
        for j in 0..d {
            let mut v: Vec<C64> = (0..d).map(|i| g[(i, j)]).collect();
            for q in &cols {
                let proj: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= proj * qi;
                }
            }
            let norm = math::sqrt(v.iter().map(|z| z.norm_sqr()).sum());
            if norm < 1e-10 {
                degenerate = true;
                break;
            }
            v.iter_mut().for_each(|z| *z /= norm);
            cols.push(v);
        }
        if !degenerate {
            return ComplexMatrix::from_fn(d, d, |i, j| cols[j][i]);
        }
    }
}

/// Positive matrix `G G†` from a Ginibre `G`.
fn random_positive<R: Rng + ?Sized>(n: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(n, rng);
    g.matmul(&g.adjoint()).hermitian_part()
}

/// `(1 ⊗ X) E (1 ⊗ X)` with `X = (Tr_A total)^{-1/2}`, applied to each Choi
/// matrix in `parts`, so that their sum becomes trace preserving.
pub(crate) fn normalize_trace(parts: &mut [ComplexMatrix], total: &ComplexMatrix, d: usize) {
    let dims = BipartiteDims::square(d).expect("positive dimension");
    let marginal = partial_trace(total, dims, Subsystem::A).expect("square Choi");
    let x = ComplexMatrix::identity(d).kron(&linalg::inv_sqrt_psd(&marginal, 1e-300));
    for p in parts.iter_mut() {
        *p = x.matmul(p).matmul(&x).hermitian_part();
    }
}

/// Random full-support TPCP map: a Ginibre Gram matrix with its input
/// marginal normalized to the identity.
pub fn random_tpcp<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ChoiOperator {
    let e = random_positive(d * d, rng);
    let mut parts = [e.clone()];
    normalize_trace(&mut parts, &e, d);
    let [m] = parts;
    ChoiOperator::from_matrix_unchecked(d, m)
}

/// `m` CP maps whose sum is trace preserving.
pub fn random_instrument<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Vec<ChoiOperator> {
    let mut parts: Vec<ComplexMatrix> = (0..m).map(|_| random_positive(d * d, rng)).collect();
    let mut total = ComplexMatrix::zeros(d * d, d * d);
    for p in &parts {
        total += p;
    }
    normalize_trace(&mut parts, &total, d);
    parts
        .into_iter()
        .map(|p| ChoiOperator::from_matrix_unchecked(d, p))
        .collect()
}

/// Random valid protocol with `m` branches.
pub fn random_protocol<R: Rng + ?Sized>(d: usize, m: usize, rng: &mut R) -> Protocol {
    let instruments = random_instrument(d, m, rng);
    let branches = instruments
        .into_iter()
        .map(|instrument| Branch {
            instrument,
            correction: random_tpcp(d, rng),
        })
        .collect();
    Protocol::new(d, branches).expect("consistent dimensions")
}

/// Qubit transfer matrix straddling the CP boundary: the translation and
/// the linear part of a random TPCP map, each rescaled by an independent
/// factor drawn from `[0.7, 1.5)`.
pub fn random_qubit_ptm<R: Rng + ?Sized>(rng: &mut R) -> PauliTransferMatrix {
    let base = ptm_from_choi(&random_tpcp(2, rng)).expect("qubit map");
    let st: f64 = rng.random_range(0.7..1.5);
    let se: f64 = rng.random_range(0.7..1.5);
    PauliTransferMatrix::new(base.t * st, base.e * se)
}

/// Uniformly random point of the unit ball in `R³`.
pub fn random_bloch_vector<R: Rng + ?Sized>(rng: &mut R) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        if v.norm_squared() <= 1.0 {
            return v;
        }
    }
}
