//! Numerical and closed-form protocol optimization.

mod anneal;
mod expost;
mod params;
mod sweep;

pub use anneal::{
    anneal, anneal_expost, anneal_noise, anneal_restart, objective_fidelity, project_feasible, AnnealConfig,
    AnnealOutcome, RestartOutcome,
};
pub use expost::{brute_force_tpcp_expost, brute_force_unitary_expost, optimal_expost_qubit};
pub use params::{cholesky_psd, objective, random_init, CholeskyParams};
pub use sweep::{discriminate_reprepare_fidelity, do_nothing_fidelity, sweep, SweepResult, SweepRow, Winner, TIE_TOLERANCE};
