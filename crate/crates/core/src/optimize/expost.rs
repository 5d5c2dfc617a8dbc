use alloc::vec::Vec;

use nalgebra::{Matrix3, Vector3};

use super::anneal::{anneal_expost, AnnealConfig};
use crate::channel::{choi_from_ptm, kraus_from_choi, ptm_from_choi, ptm_rotation_decomposition, ChoiOperator, PauliTransferMatrix};
use crate::error::{Error, Result};
use crate::math;
use crate::matrix::{ComplexMatrix, C64};

/// Sign patterns of `SO(3)` diagonal matrices.
const EVEN_FLIPS: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

fn require_qubit(noise: &ChoiOperator) -> Result<()> {
    if noise.dim() != 2 {
        return Err(Error::NotQubit(noise.dim()));
    }
    Ok(())
}

/// Best unitary correction of a qubit noise channel, with no measurement
/// beforehand, and the average fidelity it reaches.
///
/// With `e = R · diag(d) · R̃` the correction rotates by `R̃ᵀ F Rᵀ` where `F`
/// is the sign pattern maximizing `Σ F_j d_j`; the fidelity is
/// `(6 + 2 Σ F_j d_j) / 12`.
pub fn optimal_expost_qubit(noise: &ChoiOperator) -> Result<(ComplexMatrix, f64)> {
    require_qubit(noise)?;
    let nf = ptm_rotation_decomposition(&ptm_from_choi(noise)?);
    let (flip, score) = EVEN_FLIPS
        .iter()
        .map(|f| (f, f[0] * nf.d[0] + f[1] * nf.d[1] + f[2] * nf.d[2]))
        .fold((&EVEN_FLIPS[0], f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best });
    let rotation = nf.r_tilde.transpose() * Matrix3::from_diagonal(&Vector3::from(*flip)) * nf.r.transpose();
    let choi = choi_from_ptm(&PauliTransferMatrix::new(Vector3::zeros(), rotation));
    let kraus = kraus_from_choi(&choi, 1e-9)?;
    let u = kraus
        .operators()
        .iter()
        .max_by(|a, b| a.frobenius_norm_sqr().total_cmp(&b.frobenius_norm_sqr()))
        .expect("a rotation has one Kraus operator")
        .clone();
    Ok((u, (6.0 + 2.0 * score) / 12.0))
}

/// `R_z(α) R_y(β) R_z(γ)`.
fn euler_unitary(a: f64, b: f64, g: f64) -> ComplexMatrix {
    let rz = |t: f64| {
        ComplexMatrix::diagonal(&[
            C64::new(math::cos(t / 2.0), -math::sin(t / 2.0)),
            C64::new(math::cos(t / 2.0), math::sin(t / 2.0)),
        ])
    };
    let (c, s) = (math::cos(b / 2.0), math::sin(b / 2.0));
    let ry = ComplexMatrix::from_real(2, 2, &[c, -s, s, c]).expect("finite");
    rz(a).matmul(&ry).matmul(&rz(g))
}

/// Grid search over Euler angles followed by pattern-search refinement of
/// the best grid points. Fidelities are evaluated from the Kraus operators
/// of the noise as `(2 + Σ_k |tr(U N_k)|²) / 6`.
pub fn brute_force_unitary_expost(noise: &ChoiOperator, resolution: usize) -> Result<(ComplexMatrix, f64)> {
    require_qubit(noise)?;
    if resolution == 0 {
        return Err(Error::InvalidArgument("resolution must be positive".into()));
    }
    let kraus = kraus_from_choi(noise, 1e-9)?;
    let score = |x: &[f64; 3]| {
        let u = euler_unitary(x[0], x[1], x[2]);
        let s: f64 = kraus.operators().iter().map(|k| u.matmul(k).trace().norm_sqr()).sum();
        (2.0 + s) / 6.0
    };
    let tau = 2.0 * core::f64::consts::PI;
    let h = [tau / resolution as f64, core::f64::consts::PI / resolution as f64, tau / resolution as f64];

    let mut grid: Vec<([f64; 3], f64)> = Vec::with_capacity(resolution * resolution * (resolution + 1));
    for ia in 0..resolution {
        for ib in 0..=resolution {
            for ig in 0..resolution {
                let x = [ia as f64 * h[0], ib as f64 * h[1], ig as f64 * h[2]];
                grid.push((x, score(&x)));
            }
        }
    }
    grid.sort_by(|a, b| b.1.total_cmp(&a.1));

    let mut best = grid[0];
    for &(start, value) in grid.iter().take(8) {
        let (mut x, mut fx) = (start, value);
        let mut step = h;
        while step[0] > 1e-10 {
            let mut moved = false;
            for k in 0..3 {
                for sign in [1.0, -1.0] {
                    let mut y = x;
                    y[k] += sign * step[k];
                    let fy = score(&y);
                    if fy > fx {
                        x = y;
                        fx = fy;
                        moved = true;
                    }
                }
            }
            if !moved {
                step.iter_mut().for_each(|s| *s /= 2.0);
            }
        }
        if fx > best.1 {
            best = (x, fx);
        }
    }
    Ok((euler_unitary(best.0[0], best.0[1], best.0[2]), best.1))
}

/// Best average fidelity found by annealing over all trace-preserving
/// corrections of a qubit noise, with no measurement beforehand.
pub fn brute_force_tpcp_expost(noise: &ChoiOperator, config: &AnnealConfig) -> Result<f64> {
    require_qubit(noise)?;
    Ok(anneal_expost(config, noise)?.fidelity)
}
