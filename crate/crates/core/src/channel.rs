//! Representations of completely positive maps on `L(C^d)`.
//!
//! Choi convention: `E = Σ_{ij} E(|i⟩⟨j|) ⊗ |i⟩⟨j|`, so the first tensor
//! factor carries the output of the map. The map acts as
//! `E(ρ) = Tr_B[(1 ⊗ ρᵀ) E]` and is trace preserving iff `Tr_A E = 1`.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::matrix::{
    max_entangled_vector, partial_trace, pauli, BipartiteDims, ComplexMatrix, Subsystem, C64, ONE,
    ZERO,
};

/// Smallest Choi eigenvalue still accepted as positive.
pub const DEFAULT_CP_TOL: f64 = 1e-9;

const HERMITIAN_TOL: f64 = 1e-10;
const UNITARY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiOperator {
    dim: usize,
    matrix: ComplexMatrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CpVerdict {
    pub completely_positive: bool,
    pub min_eigenvalue: f64,
}

impl ChoiOperator {
    /// Wraps a `d²×d²` matrix, which must be Hermitian within `1e-10`
    /// (relative to its largest entry when that exceeds one).
    pub fn new(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        let n = dim * dim;
        if dim == 0 || matrix.rows() != n || matrix.cols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: matrix.rows(),
            });
        }
        let defect = matrix.hermiticity_defect();
        if defect > HERMITIAN_TOL * matrix.max_abs().max(1.0) {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { dim, matrix })
    }

    pub(crate) fn from_matrix_unchecked(dim: usize, matrix: ComplexMatrix) -> Self {
        debug_assert_eq!(matrix.rows(), dim * dim);
        Self { dim, matrix }
    }

    /// Choi operator of the identity channel, `|Ψ⟩⟨Ψ|`.
    pub fn identity(dim: usize) -> Self {
        let psi = max_entangled_vector(dim);
        Self::from_matrix_unchecked(dim, ComplexMatrix::outer(&psi, &psi))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    fn dims(&self) -> BipartiteDims {
        BipartiteDims::square(self.dim).expect("positive dimension")
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_matrix_unchecked(self.dim, self.matrix.scale_real(s))
    }

    /// Choi operator of the sum of two maps.
    pub fn add(&self, other: &Self) -> Result<Self> {
        check_same_dim(self.dim, other.dim)?;
        Ok(Self::from_matrix_unchecked(self.dim, &self.matrix + &other.matrix))
    }

    /// `Tr_A E`; equals the identity exactly when the map is trace preserving.
    pub fn input_marginal(&self) -> ComplexMatrix {
        partial_trace(&self.matrix, self.dims(), Subsystem::A).expect("shape checked at construction")
    }

    /// `E(ρ) = Tr_B[(1 ⊗ ρᵀ) E]`.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        let d = self.dim;
        if rho.rows() != d || rho.cols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: rho.rows(),
            });
        }
        let e = &self.matrix;
        Ok(ComplexMatrix::from_fn(d, d, |a, a2| {
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    let r = rho[(i, j)];
                    if r != ZERO {
                        acc += r * e[(a * d + i, a2 * d + j)];
                    }
                }
            }
            acc
        }))
    }

    /// `(id ⊗ E)(S)` for the swap operator `S`.
    pub fn swap_image(&self) -> ComplexMatrix {
        let d = self.dim;
        let e = &self.matrix;
        ComplexMatrix::from_fn(d * d, d * d, |r, c| {
            let (i, b) = (r / d, r % d);
            let (j, b2) = (c / d, c % d);
            e[(b * d + j, b2 * d + i)]
        })
    }

    pub fn is_cp(&self, tol: f64) -> CpVerdict {
        let min_eigenvalue = linalg::min_eigenvalue(&self.matrix);
        CpVerdict {
            completely_positive: min_eigenvalue >= -tol,
            min_eigenvalue,
        }
    }

    /// Largest entry of `Tr_A E − 1`.
    pub fn trace_defect(&self) -> f64 {
        self.input_marginal()
            .max_abs_diff(&ComplexMatrix::identity(self.dim))
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.trace_defect() <= tol
    }

    pub fn is_cptp(&self, tol: f64) -> bool {
        self.is_tp(tol) && self.is_cp(tol).completely_positive
    }
}

fn check_same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::DimensionMismatch {
            expected: a,
            found: b,
        });
    }
    Ok(())
}

pub fn apply(choi: &ChoiOperator, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
    choi.apply(rho)
}

pub fn is_cp(choi: &ChoiOperator, tol: f64) -> CpVerdict {
    choi.is_cp(tol)
}

pub fn is_tp(choi: &ChoiOperator, tol: f64) -> bool {
    choi.is_tp(tol)
}

/// A channel given by Kraus operators, `ρ ↦ Σ A_k ρ A_k†`.
#[derive(Clone, Debug, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    operators: Vec<ComplexMatrix>,
}

impl KrausChannel {
    pub fn new(dim: usize, operators: Vec<ComplexMatrix>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be positive".into()));
        }
        if let Some(bad) = operators.iter().find(|a| a.shape() != (dim, dim)) {
            return Err(Error::ShapeMismatch {
                left: (dim, dim),
                right: bad.shape(),
            });
        }
        Ok(Self { dim, operators })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn operators(&self) -> &[ComplexMatrix] {
        &self.operators
    }

    /// `Σ A_k† A_k`.
    pub fn completeness(&self) -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.operators {
            acc += &a.adjoint().matmul(a);
        }
        acc
    }

    pub fn is_tp(&self, tol: f64) -> bool {
        self.completeness()
            .max_abs_diff(&ComplexMatrix::identity(self.dim))
            <= tol
    }

    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.dim, self.dim) {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: rho.rows(),
            });
        }
        let mut acc = ComplexMatrix::zeros(self.dim, self.dim);
        for a in &self.operators {
            acc += &a.matmul(rho).matmul(&a.adjoint());
        }
        Ok(acc)
    }
}

/// `Σ_k |A_k⟩⟩⟨⟨A_k|`, where the row-major flattening of `A` is exactly
/// `Σ_i A|i⟩ ⊗ |i⟩`.
pub fn choi_from_kraus(k: &KrausChannel) -> ChoiOperator {
    let n = k.dim * k.dim;
    let mut m = ComplexMatrix::zeros(n, n);
    for a in &k.operators {
        let v = a.as_slice();
        for r in 0..n {
            if v[r] == ZERO {
                continue;
            }
            for c in 0..n {
                m[(r, c)] += v[r] * v[c].conj();
            }
        }
    }
    ChoiOperator::from_matrix_unchecked(k.dim, m)
}

/// Kraus operators from the spectral decomposition of the Choi operator.
///
/// Eigenvalues in `[-tol, cutoff]` are dropped; anything below `-tol` is
/// reported as a CP violation.
pub fn kraus_from_choi(c: &ChoiOperator, tol: f64) -> Result<KrausChannel> {
    let eig = linalg::hermitian_eigen(&c.matrix);
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -tol {
        return Err(Error::NotCompletelyPositive(min));
    }
    let largest = eig.values.last().copied().unwrap_or(0.0);
    let cutoff = 1e-13 * largest.max(1.0);
    let d = c.dim;
    let operators = eig
        .values
        .iter()
        .zip(&eig.vectors)
        .filter(|(lambda, _)| **lambda > cutoff)
        .map(|(lambda, v)| {
            let s = math::sqrt(*lambda);
            ComplexMatrix::from_vec_unchecked(d, d, v.iter().map(|z| z * s).collect())
        })
        .collect();
    KrausChannel::new(d, operators)
}

/// Choi operator of the composition `outer ∘ inner`.
pub fn compose(outer: &ChoiOperator, inner: &ChoiOperator) -> Result<ChoiOperator> {
    check_same_dim(outer.dim, inner.dim)?;
    let d = outer.dim;
    let n = d * d;
    let (o, i) = (&outer.matrix, &inner.matrix);
    let mut out = ComplexMatrix::zeros(n, n);
    // (O∘I)[(a,b),(a',b')] = Σ_{c,c'} O[(a,c),(a',c')] I[(c,b),(c',b')]
    for c in 0..d {
        for c2 in 0..d {
            for b in 0..d {
                for b2 in 0..d {
                    let w = i[(c * d + b, c2 * d + b2)];
                    if w == ZERO {
                        continue;
                    }
                    for a in 0..d {
                        for a2 in 0..d {
                            out[(a * d + b, a2 * d + b2)] += o[(a * d + c, a2 * d + c2)] * w;
                        }
                    }
                }
            }
        }
    }
    Ok(ChoiOperator::from_matrix_unchecked(d, out))
}

/// `D_ε(ρ) = (1−ε)ρ + ε·tr(ρ)·1/d`. Any real `ε` is accepted; the map is CP
/// only for `ε ∈ [0, d²/(d²−1)]`.
pub fn depolarizing(eps: f64, dim: usize) -> ChoiOperator {
    let mut m = ChoiOperator::identity(dim).matrix.scale_real(1.0 - eps);
    let diag = eps / dim as f64;
    for k in 0..dim * dim {
        m[(k, k)] += C64::new(diag, 0.0);
    }
    ChoiOperator::from_matrix_unchecked(dim, m)
}

/// `ρ ↦ U ρ U†`.
pub fn unitary_channel(u: &ComplexMatrix) -> Result<ChoiOperator> {
    if !u.is_square() {
        return Err(Error::NotUnitary(f64::INFINITY));
    }
    let d = u.rows();
    let defect = u.adjoint().matmul(u).max_abs_diff(&ComplexMatrix::identity(d));
    if defect > UNITARY_TOL {
        return Err(Error::NotUnitary(defect));
    }
    Ok(sandwich_channel(u))
}

/// `ρ ↦ A ρ A†` for an arbitrary square `A`.
pub fn sandwich_channel(a: &ComplexMatrix) -> ChoiOperator {
    let v = a.as_slice();
    ChoiOperator::from_matrix_unchecked(a.rows(), ComplexMatrix::outer(v, v))
}

/// Affine Bloch representation of a trace-preserving qubit map:
/// `E(1) = 1 + Σ_k t_k σ_k` and `E(σ_j) = Σ_k e[(j,k)] σ_k`.
///
/// Note that `e` is indexed (input, output), i.e. it is the transpose of the
/// matrix acting on Bloch column vectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PauliTransferMatrix {
    pub t: Vector3<f64>,
    pub e: Matrix3<f64>,
}

impl PauliTransferMatrix {
    pub fn new(t: Vector3<f64>, e: Matrix3<f64>) -> Self {
        Self { t, e }
    }

    pub fn identity() -> Self {
        Self::new(Vector3::zeros(), Matrix3::identity())
    }

    /// Matrix acting on Bloch vectors: `r ↦ t + M r`.
    pub fn bloch_matrix(&self) -> Matrix3<f64> {
        self.e.transpose()
    }

    /// `Σ_k |t_k ± e[(j,k)]|² ≤ 1` for every `j`; necessary for positivity.
    pub fn satisfies_pauli_positivity(&self, tol: f64) -> bool {
        (0..3).all(|j| {
            [1.0, -1.0].iter().all(|s| {
                let sum: f64 = (0..3).map(|k| math::sq(self.t[k] + s * self.e[(j, k)])).sum();
                sum <= 1.0 + tol
            })
        })
    }
}

pub fn ptm_from_choi(c: &ChoiOperator) -> Result<PauliTransferMatrix> {
    if c.dim != 2 {
        return Err(Error::NotQubit(c.dim));
    }
    let images: Vec<ComplexMatrix> = (0..4).map(|mu| c.apply(&pauli(mu))).collect::<Result<_>>()?;
    let coeff = |m: &ComplexMatrix, k: usize| 0.5 * pauli(k).matmul(m).trace().re;
    let t = Vector3::from_fn(|k, _| coeff(&images[0], k + 1));
    let e = Matrix3::from_fn(|j, k| coeff(&images[j + 1], k + 1));
    Ok(PauliTransferMatrix { t, e })
}

pub fn choi_from_ptm(p: &PauliTransferMatrix) -> ChoiOperator {
    let mut images = Vec::with_capacity(4);
    let mut e1 = pauli(0);
    for k in 0..3 {
        e1 += &pauli(k + 1).scale_real(p.t[k]);
    }
    images.push(e1);
    for j in 0..3 {
        let mut img = ComplexMatrix::zeros(2, 2);
        for k in 0..3 {
            img += &pauli(k + 1).scale_real(p.e[(j, k)]);
        }
        images.push(img);
    }
    // |i⟩⟨j| = ½ Σ_μ (σ_μ)[j,i] σ_μ
    let mut m = ComplexMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let mut unit = ComplexMatrix::zeros(2, 2);
            unit[(i, j)] = ONE;
            let mut img = ComplexMatrix::zeros(2, 2);
            for (mu, image) in images.iter().enumerate() {
                img += &image.scale(pauli(mu)[(j, i)] * 0.5);
            }
            m += &img.kron(&unit);
        }
    }
    ChoiOperator::from_matrix_unchecked(2, m)
}

/// `e = R · diag(d) · R̃` with `R, R̃ ∈ SO(3)`; `t_rotated = R̃ t` is the
/// translation in the frame where the map is diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationDecomposition {
    pub r: Matrix3<f64>,
    pub r_tilde: Matrix3<f64>,
    pub d: Vector3<f64>,
    pub t_rotated: Vector3<f64>,
}

impl RotationDecomposition {
    pub fn reconstruct(&self) -> Matrix3<f64> {
        self.r * Matrix3::from_diagonal(&self.d) * self.r_tilde
    }
}

pub fn ptm_rotation_decomposition(p: &PauliTransferMatrix) -> RotationDecomposition {
    let (mut u, s, mut v_t) = linalg::svd3(&p.e);
    let mut d = s;
    if u.determinant() < 0.0 {
        u.column_mut(2).neg_mut();
        d[2] = -d[2];
    }
    if v_t.determinant() < 0.0 {
        v_t.row_mut(2).neg_mut();
        d[2] = -d[2];
    }
    RotationDecomposition {
        r: u,
        r_tilde: v_t,
        d,
        t_rotated: v_t * p.t,
    }
}

/// Complete-positivity test for a trace-preserving qubit map via the
/// inequalities on its normal form `(d, t)`.
///
/// Checks `|t_i| + |d_i| ≤ 1` and
/// `(d₁ ± d₂)² ≤ (1 ± d₃)² − t₃² − (t₁²+t₂²)·(1 ± d₃ ± t₃)/(1 ∓ d₃ ± t₃)` and
/// `[1 − |d|² − |t|²]² ≥ 4[d₁²(t₁²+d₂²) + d₂²(t₂²+d₃²) + d₃²(t₃²+d₁²) − 2d₁d₂d₃]`.
pub fn qubit_cptp_check_ruskai(p: &PauliTransferMatrix, tol: f64) -> bool {
    let nf = ptm_rotation_decomposition(p);
    let (d, t) = (nf.d, nf.t_rotated);
    if (0..3).any(|i| t[i].abs() + d[i].abs() > 1.0 + tol) {
        return false;
    }
    let (d1, d2, d3) = (d[0], d[1], d[2]);
    let (t1, t2, t3) = (t[0], t[1], t[2]);
    let tperp = t1 * t1 + t2 * t2;
    // (num/den)·tperp, with 0·∞ read as 0
    let ratio_term = |num: f64, den: f64| -> Option<f64> {
        if tperp <= tol * tol {
            Some(0.0)
        } else if den <= 1e-15 {
            None
        } else {
            Some(tperp * num / den)
        }
    };
    for s in [1.0, -1.0] {
        let Some(plus) = ratio_term(1.0 + d3 + s * t3, 1.0 - d3 + s * t3) else {
            return false;
        };
        if math::sq(d1 + d2) > math::sq(1.0 + d3) - t3 * t3 - plus + tol {
            return false;
        }
        let Some(minus) = ratio_term(1.0 - d3 + s * t3, 1.0 + d3 + s * t3) else {
            return false;
        };
        if math::sq(d1 - d2) > math::sq(1.0 - d3) - t3 * t3 - minus + tol {
            return false;
        }
    }
    let lhs = math::sq(1.0 - (d1 * d1 + d2 * d2 + d3 * d3) - (t1 * t1 + t2 * t2 + t3 * t3));
    let rhs = 4.0
        * (d1 * d1 * (t1 * t1 + d2 * d2) + d2 * d2 * (t2 * t2 + d3 * d3) + d3 * d3 * (t3 * t3 + d1 * d1)
            - 2.0 * d1 * d2 * d3);
    lhs + tol >= rhs
}

/// Whether a qubit channel lies in the closure of the extreme points of the
/// TPCP maps: some normal form has `d₃ = d₁d₂`, `t₁ = t₂ = 0` and
/// `t₃² = (1−d₁²)(1−d₂²)`.
///
/// The normal form is unique up to axis permutations, pairwise sign flips of
/// `d`, and rotations inside degenerate singular subspaces; all of these are
/// searched.
pub fn qubit_extreme_closure_check(p: &PauliTransferMatrix, tol: f64) -> bool {
    if !qubit_cptp_check_ruskai(p, tol) {
        return false;
    }
    let nf = ptm_rotation_decomposition(p);
    let (d, t) = (nf.d, nf.t_rotated);

    // Inside a degenerate pair the translation can be rotated onto either axis.
    let mut candidates = alloc::vec![t];
    let degenerate = |i: usize, j: usize| (d[i].abs() - d[j].abs()).abs() <= tol;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        if degenerate(i, j) {
            let norm = math::sqrt(t[i] * t[i] + t[j] * t[j]);
            for axis in [i, j] {
                let mut c = t;
                c[i] = 0.0;
                c[j] = 0.0;
                c[axis] = norm;
                candidates.push(c);
            }
        }
    }
    if degenerate(0, 1) && degenerate(1, 2) {
        for axis in 0..3 {
            let mut c = Vector3::zeros();
            c[axis] = t.norm();
            candidates.push(c);
        }
    }

    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [1, 2, 0], [2, 0, 1], [1, 0, 2], [0, 2, 1], [2, 1, 0]];
    const EVEN_FLIPS: [[f64; 3]; 4] = [
        [1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0],
        [-1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0],
    ];
    candidates.iter().any(|tc| {
        PERMS.iter().any(|perm| {
            let t1 = tc[perm[0]];
            let t2 = tc[perm[1]];
            let t3 = tc[perm[2]];
            if t1.abs() > tol || t2.abs() > tol {
                return false;
            }
            EVEN_FLIPS.iter().any(|f| {
                let d1 = f[0] * d[perm[0]];
                let d2 = f[1] * d[perm[1]];
                let d3 = f[2] * d[perm[2]];
                d1.abs() <= 1.0 + tol
                    && d2.abs() <= 1.0 + tol
                    && (d3 - d1 * d2).abs() <= tol
                    && (t3 * t3 - (1.0 - d1 * d1) * (1.0 - d2 * d2)).abs() <= tol
            })
        })
    })
}

/// For a qubit TPCP map `E`, the TPCP map `Ẽ` with `D_ε ∘ E = Ẽ ∘ D_ε`.
///
/// For `ε ∈ (0,1)` this is `D_ε ∘ E ∘ D_{−ε/(1−ε)}`. At `ε = 0` it is `E`;
/// at `ε = 1` it is the unital part of `E` (translation dropped), which is the
/// continuous limit and satisfies the identity for non-unital `E` as well.
pub fn commute_through_depolarizing(e: &ChoiOperator, eps: f64) -> Result<ChoiOperator> {
    if e.dim != 2 {
        return Err(Error::NotQubit(e.dim));
    }
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::InvalidArgument(format!(
            "depolarizing strength {eps} outside [0, 1]"
        )));
    }
    if eps == 0.0 {
        return Ok(e.clone());
    }
    if eps == 1.0 {
        let p = ptm_from_choi(e)?;
        return Ok(choi_from_ptm(&PauliTransferMatrix::new(Vector3::zeros(), p.e)));
    }
    let inverse = depolarizing(-eps / (1.0 - eps), 2);
    compose(&depolarizing(eps, 2), &compose(e, &inverse)?)
}
