//! Average fidelity: the closed form through the Hilbert–Schmidt trace of
//! the average operation, the sampled physical pipeline, and the Choi-form
//! objective used by the optimizer.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::ChoiOperator;
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{haar_random_pure_state, swap_operator, ComplexMatrix, PureState, C64, ZERO};
use crate::par;
use crate::protocol::{sample_branch, Protocol};

/// Choi operator of `Σ_ω C_ω ∘ N ∘ I_ω`.
#[derive(Clone, Debug, PartialEq)]
pub struct AverageOperation {
    choi: ChoiOperator,
}

impl AverageOperation {
    pub fn new(choi: ChoiOperator) -> Self {
        Self { choi }
    }

    pub fn choi(&self) -> &ChoiOperator {
        &self.choi
    }

    pub fn dim(&self) -> usize {
        self.choi.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

impl McEstimate {
    /// `(mean − reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        if self.std_error == 0.0 {
            if self.mean == reference {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - reference) / self.std_error
        }
    }
}

/// `⟨ψ|ρ|ψ⟩`.
pub fn fidelity(rho: &ComplexMatrix, psi: &PureState) -> Result<f64> {
    let d = psi.dim();
    if rho.shape() != (d, d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rho.rows(),
        });
    }
    let a = psi.amplitudes();
    let rho_psi = rho.apply_to(a);
    Ok(a.iter().zip(&rho_psi).map(|(x, y)| x.conj() * y).sum::<C64>().re)
}

/// Hilbert–Schmidt trace `Σ_i ⟨V_i, E(V_i)⟩` of the map, evaluated as
/// `tr[S (id ⊗ E)(S)]`.
pub fn hs_trace_of_map(c: &ChoiOperator) -> f64 {
    let s = swap_operator(c.dim());
    s.matmul(&c.swap_image()).trace().re
}

/// `F̄ = (d + Tr_HS E) / (d(d+1))`.
pub fn average_fidelity_exact(e: &AverageOperation) -> f64 {
    let d = e.dim() as f64;
    (d + hs_trace_of_map(e.choi())) / (d * (d + 1.0))
}

/// `R_ω = Tr_C[(1_A ⊗ C_{CB}ᵀ)(I_{AC} ⊗ 1_B)]`, the partial transpose on B
/// of the Choi operator of `I ∘ C`.
pub fn r_operator(correction: &ChoiOperator, instrument: &ChoiOperator) -> Result<ComplexMatrix> {
    let d = correction.dim();
    if instrument.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: instrument.dim(),
        });
    }
    let (c, i) = (correction.matrix(), instrument.matrix());
    let n = d * d;
    let mut r = ComplexMatrix::zeros(n, n);
    for a in 0..d {
        for b in 0..d {
            for a2 in 0..d {
                for b2 in 0..d {
                    let mut acc = ZERO;
                    for k in 0..d {
                        for k2 in 0..d {
                            acc += c[(k * d + b2, k2 * d + b)] * i[(a * d + k, a2 * d + k2)];
                        }
                    }
                    r[(a * d + b, a2 * d + b2)] = acc;
                }
            }
        }
    }
    Ok(r)
}

/// `f = Σ_ω tr[R_ω (id ⊗ N)(S)]`; for a valid protocol
/// `F̄ = (d + f) / (d(d+1))`. No validity is required of the protocol.
pub fn protocol_objective_choi(protocol: &Protocol, noise: &ChoiOperator) -> Result<f64> {
    let d = protocol.dim();
    if noise.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: noise.dim(),
        });
    }
    let w = noise.swap_image();
    let mut f = 0.0;
    for b in protocol.branches() {
        let r = r_operator(&b.correction, &b.instrument)?;
        f += r.matmul(&w).trace().re;
    }
    Ok(f)
}

/// Converts the Choi-form objective into an average fidelity.
pub fn fidelity_from_objective(f: f64, d: usize) -> f64 {
    let d = d as f64;
    (d + f) / (d * (d + 1.0))
}

/// `Σ_ω ‖Tr_A C_ω − 1‖² + ‖Tr_A Σ_ω I_ω − 1‖²` (squared Frobenius norms).
pub fn penalty(protocol: &Protocol) -> f64 {
    let id = ComplexMatrix::identity(protocol.dim());
    let mut p = 0.0;
    for b in protocol.branches() {
        p += (&b.correction.input_marginal() - &id).frobenius_norm_sqr();
    }
    p + (&protocol.instrument_sum().input_marginal() - &id).frobenius_norm_sqr()
}

const MC_BLOCK: usize = 4096;

#[derive(Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if self.n == 0 {
            return other;
        }
        if other.n == 0 {
            return self;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        Self {
            n,
            mean: self.mean + delta * other.n as f64 / n as f64,
            m2: self.m2 + other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64,
        }
    }
}

/// Samples the physical pipeline: Haar input, instrument outcome drawn by the
/// Born rule, noise, correction, fidelity with the input.
///
/// One seed is drawn from `rng`; sample blocks of fixed size get independent
/// ChaCha streams, so the estimate does not depend on the thread count.
pub fn average_fidelity_monte_carlo<R: Rng + ?Sized>(
    protocol: &Protocol,
    noise: &ChoiOperator,
    n: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    let d = protocol.dim();
    if noise.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: noise.dim(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    let seed: u64 = rng.random();
    let blocks = n.div_ceil(MC_BLOCK);
    let partial: Vec<Result<Moments>> = par::map_indexed(blocks, |block| {
        let mut local = ChaCha8Rng::seed_from_u64(seed);
        local.set_stream(block as u64);
        let count = MC_BLOCK.min(n - block * MC_BLOCK);
        let mut m = Moments::default();
        for _ in 0..count {
            let psi = haar_random_pure_state(d, &mut local);
            let (w, post) = sample_branch(protocol, &psi.projector(), &mut local)?;
            let out = protocol.branches()[w].correction.apply(&noise.apply(&post)?)?;
            m.push(fidelity(&out, &psi)?);
        }
        Ok(m)
    });
    let mut total = Moments::default();
    for m in partial {
        total = total.merge(m?);
    }
    let variance = if total.n > 1 {
        total.m2 / (total.n - 1) as f64
    } else {
        0.0
    };
    Ok(McEstimate {
        mean: total.mean,
        std_error: math::sqrt(variance / total.n as f64),
        samples: total.n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{compose, depolarizing, ChoiOperator};
    use crate::matrix::{hs_inner, pauli, ONE};
    use crate::protocol::{average_operation, computational_dr_protocol, do_nothing_protocol, Branch};
    use crate::random::{random_protocol, random_tpcp};
    use alloc::vec;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    /// Basis sum over matrix units `E_ij`.
    fn hs_trace_by_matrix_units(c: &ChoiOperator) -> f64 {
        let d = c.dim();
        let mut acc = ZERO;
        for i in 0..d {
            for j in 0..d {
                let mut v = ComplexMatrix::zeros(d, d);
                v[(i, j)] = ONE;
                acc += hs_inner(&v, &c.apply(&v).unwrap()).unwrap();
            }
        }
        acc.re
    }

    /// `½ Σ_μ tr[σ_μ E(σ_μ)]` for qubits.
    fn hs_trace_by_paulis(c: &ChoiOperator) -> f64 {
        (0..4)
            .map(|mu| 0.5 * pauli(mu).matmul(&c.apply(&pauli(mu)).unwrap()).trace().re)
            .sum()
    }

    #[test]
    fn fidelity_examples() {
        let mut r = rng(31);
        let psi = haar_random_pure_state(3, &mut r);
        assert!((fidelity(&psi.projector(), &psi).unwrap() - 1.0).abs() < 1e-14);
        let mixed = ComplexMatrix::identity(2).scale_real(0.5);
        assert!((fidelity(&mixed, &haar_random_pure_state(2, &mut r)).unwrap() - 0.5).abs() < 1e-14);
        let plus = PureState::normalized(vec![ONE, ONE]).unwrap();
        let zero = PureState::basis(2, 0).unwrap().projector();
        assert!((fidelity(&zero, &plus).unwrap() - 0.5).abs() < 1e-14);
        assert!(fidelity(&mixed, &psi).is_err());
    }

    #[test]
    fn hs_trace_examples_and_basis_independence() {
        for d in 1..=4 {
            let id = ChoiOperator::identity(d);
            assert!((hs_trace_of_map(&id) - (d * d) as f64).abs() < 1e-12);
            assert!((hs_trace_of_map(&depolarizing(1.0, d)) - 1.0).abs() < 1e-12);
        }
        for eps in [0.0, 0.3, 1.0] {
            let v = hs_trace_of_map(&depolarizing(eps, 2));
            assert!((v - (4.0 - 3.0 * eps)).abs() < 1e-12);
        }
        let mut r = rng(32);
        for d in 2..=3 {
            for _ in 0..50 {
                let e = random_tpcp(d, &mut r);
                let swap_form = hs_trace_of_map(&e);
                assert!((swap_form - hs_trace_by_matrix_units(&e)).abs() < 1e-12);
                if d == 2 {
                    assert!((swap_form - hs_trace_by_paulis(&e)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_fidelity_examples() {
        assert!((average_fidelity_exact(&AverageOperation::new(ChoiOperator::identity(2))) - 1.0).abs() < 1e-14);
        let dn = average_fidelity_exact(&AverageOperation::new(depolarizing(0.4, 2)));
        assert!((dn - 0.8).abs() < 1e-14);
        for eps in [0.0, 0.5, 1.0] {
            let avg = average_operation(&computational_dr_protocol(2).unwrap(), &depolarizing(eps, 2)).unwrap();
            assert!((average_fidelity_exact(&avg) - 2.0 / 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn choi_objective_examples() {
        for eps in [0.0, 0.25, 0.9] {
            let noise = depolarizing(eps, 2);
            let f_dn = protocol_objective_choi(&do_nothing_protocol(2, 2).unwrap(), &noise).unwrap();
            assert!((f_dn - (4.0 - 3.0 * eps)).abs() < 1e-12);
            let f_dr = protocol_objective_choi(&computational_dr_protocol(2).unwrap(), &noise).unwrap();
            assert!((f_dr - 2.0).abs() < 1e-12);
        }
        let f = protocol_objective_choi(&computational_dr_protocol(3).unwrap(), &depolarizing(1.0, 3)).unwrap();
        assert!((f - 3.0).abs() < 1e-12);
        assert!((fidelity_from_objective(f, 3) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn r_operator_is_partial_transpose_of_composition() {
        use crate::matrix::{partial_transpose, BipartiteDims, Subsystem};
        let mut r = rng(33);
        let c = random_tpcp(3, &mut r);
        let i = random_tpcp(3, &mut r);
        let composed = compose(&i, &c).unwrap();
        let expected = partial_transpose(composed.matrix(), BipartiteDims::square(3).unwrap(), Subsystem::B).unwrap();
        assert!(r_operator(&c, &i).unwrap().max_abs_diff(&expected) < 1e-12);
    }

    #[test]
    fn choi_objective_matches_closed_form() {
        let mut r = rng(34);
        for d in 2..=3 {
            for m in 1..=3 {
                let p = random_protocol(d, m, &mut r);
                let noise = random_tpcp(d, &mut r);
                let exact = average_fidelity_exact(&average_operation(&p, &noise).unwrap());
                let f = protocol_objective_choi(&p, &noise).unwrap();
                assert!((fidelity_from_objective(f, d) - exact).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn choi_objective_is_linear_in_each_operator() {
        let mut r = rng(35);
        let noise = random_tpcp(2, &mut r);
        let base = random_protocol(2, 2, &mut r);
        let other = random_protocol(2, 2, &mut r);
        let (alpha, beta) = (0.3, -1.7);
        let mix = |x: &ChoiOperator, y: &ChoiOperator| x.scale(alpha).add(&y.scale(beta)).unwrap();
        let with = |w: usize, corr: Option<ChoiOperator>, inst: Option<ChoiOperator>| {
            let mut branches = base.branches().to_vec();
            if let Some(c) = corr {
                branches[w].correction = c;
            }
            if let Some(i) = inst {
                branches[w].instrument = i;
            }
            protocol_objective_choi(&Protocol::new(2, branches).unwrap(), &noise).unwrap()
        };
        let b = &base.branches()[1];
        let o = &other.branches()[1];
        // f is affine in C_1: f(αX + βY) − f(0) = α(f(X) − f(0)) + β(f(Y) − f(0))
        let zero = ChoiOperator::identity(2).scale(0.0);
        let f0 = with(1, Some(zero.clone()), None);
        let lhs = with(1, Some(mix(&b.correction, &o.correction)), None) - f0;
        let rhs = alpha * (with(1, Some(b.correction.clone()), None) - f0)
            + beta * (with(1, Some(o.correction.clone()), None) - f0);
        assert!((lhs - rhs).abs() < 1e-10);
        let g0 = with(1, None, Some(zero));
        let lhs = with(1, None, Some(mix(&b.instrument, &o.instrument))) - g0;
        let rhs = alpha * (with(1, None, Some(b.instrument.clone())) - g0)
            + beta * (with(1, None, Some(o.instrument.clone())) - g0);
        assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn penalty_examples() {
        assert!(penalty(&do_nothing_protocol(3, 3).unwrap()) < 1e-20);
        assert!(penalty(&computational_dr_protocol(2).unwrap()) < 1e-20);
        for d in 2..=3 {
            let dr = computational_dr_protocol(d).unwrap();
            let mut branches = dr.branches().to_vec();
            branches[0] = Branch {
                instrument: branches[0].instrument.clone(),
                correction: branches[0].correction.scale(2.0),
            };
            let p = penalty(&Protocol::new(d, branches).unwrap());
            assert!((p - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn monte_carlo_matches_canonical_values() {
        let mut r = rng(36);
        let dn = average_fidelity_monte_carlo(&do_nothing_protocol(2, 2).unwrap(), &depolarizing(0.5, 2), 100_000, &mut r)
            .unwrap();
        assert_eq!(dn.samples, 100_000);
        assert!(dn.z_score(0.75).abs() < 3.0, "{dn:?}");
        let dr = average_fidelity_monte_carlo(&computational_dr_protocol(2).unwrap(), &depolarizing(0.3, 2), 100_000, &mut r)
            .unwrap();
        assert!(dr.z_score(2.0 / 3.0).abs() < 3.0, "{dr:?}");
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let p = random_protocol(2, 2, &mut rng(37));
        let noise = depolarizing(0.2, 2);
        let a = average_fidelity_monte_carlo(&p, &noise, 10_000, &mut rng(5)).unwrap();
        let b = average_fidelity_monte_carlo(&p, &noise, 10_000, &mut rng(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn monte_carlo_rejects_invalid_instruments() {
        let bad = Protocol::new(
            2,
            vec![Branch {
                instrument: ChoiOperator::identity(2).scale(0.5),
                correction: ChoiOperator::identity(2),
            }],
        )
        .unwrap();
        let err = average_fidelity_monte_carlo(&bad, &depolarizing(0.1, 2), 10, &mut rng(1)).unwrap_err();
        assert!(matches!(err, Error::ProbabilityMismatch(_)));
    }
}
