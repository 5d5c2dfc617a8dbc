//! Identity checks run by `qsuppress verify`.

use qsuppress_core::channel::{
    choi_from_kraus, choi_from_ptm, commute_through_depolarizing, compose, depolarizing, kraus_from_choi,
    ptm_from_choi, qubit_cptp_check_ruskai, unitary_channel, DEFAULT_CP_TOL,
};
use qsuppress_core::fidelity::{average_fidelity_exact, fidelity_from_objective, protocol_objective_choi};
use qsuppress_core::matrix::{haar_random_pure_state, swap_operator};
use qsuppress_core::optimize::{
    brute_force_unitary_expost, discriminate_reprepare_fidelity, do_nothing_fidelity, optimal_expost_qubit,
};
use qsuppress_core::protocol::{average_operation, computational_dr_protocol, default_branch_count, do_nothing_protocol};
use qsuppress_core::random::{random_protocol, random_qubit_ptm, random_tpcp};
use qsuppress_core::{AverageOperation, ChoiOperator, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Grid resolution of the brute-force unitary search.
const BRUTE_RESOLUTION: usize = 16;
/// The brute-force search is slow; it runs on at most this many noises.
const BRUTE_CASES: usize = 10;
/// Half-width of the band around the CP boundary excluded from comparison.
const BOUNDARY_BAND: f64 = 1e-8;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    /// Largest deviation seen; for counting checks, the number of failures.
    pub residual: f64,
    pub tolerance: f64,
    pub cases: usize,
}

impl Check {
    fn new(name: &'static str, residual: f64, tolerance: f64, cases: usize) -> Self {
        Self {
            name,
            passed: residual <= tolerance,
            residual,
            tolerance,
            cases,
        }
    }
}

/// Options for a verification run.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub instances: usize,
    pub seed: u64,
    /// Negative control: read Choi operators with their tensor factors in
    /// the wrong order wherever a channel is applied to a state.
    pub broken_convention: bool,
}

fn swapped(c: &ChoiOperator) -> ChoiOperator {
    let s = swap_operator(c.dim());
    ChoiOperator::new(c.dim(), s.matmul(c.matrix()).matmul(&s)).expect("swap keeps hermiticity")
}

fn choi_apply_vs_kraus(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in [2, 3] {
        for _ in 0..o.instances {
            let e = random_tpcp(d, rng);
            let k = kraus_from_choi(&e, DEFAULT_CP_TOL)?;
            let rho = haar_random_pure_state(d, rng).projector();
            let used = if o.broken_convention { swapped(&e) } else { e };
            worst = worst.max(used.apply(&rho)?.max_abs_diff(&k.apply(&rho)?));
            cases += 1;
        }
    }
    Ok(Check::new("choi-apply-vs-kraus", worst, 1e-10, cases))
}

fn representation_round_trips(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<[Check; 2]> {
    let (mut kraus, mut ptm): (f64, f64) = (0.0, 0.0);
    for d in [2, 3] {
        for _ in 0..o.instances {
            let e = random_tpcp(d, rng);
            let back = choi_from_kraus(&kraus_from_choi(&e, DEFAULT_CP_TOL)?);
            kraus = kraus.max(back.matrix().max_abs_diff(e.matrix()));
            if d == 2 {
                let back = choi_from_ptm(&ptm_from_choi(&e)?);
                ptm = ptm.max(back.matrix().max_abs_diff(e.matrix()));
            }
        }
    }
    Ok([
        Check::new("choi-kraus-round-trip", kraus, 1e-10, 2 * o.instances),
        Check::new("choi-ptm-round-trip", ptm, 1e-12, o.instances),
    ])
}

fn closed_form_vs_choi_objective(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<Check> {
    let mut worst: f64 = 0.0;
    for d in [2, 3] {
        for _ in 0..o.instances {
            let p = random_protocol(d, default_branch_count(d), rng);
            let noise = random_tpcp(d, rng);
            let exact = average_fidelity_exact(&average_operation(&p, &noise)?);
            let choi = fidelity_from_objective(protocol_objective_choi(&p, &noise)?, d);
            worst = worst.max((exact - choi).abs());
        }
    }
    Ok(Check::new("closed-form-vs-choi-objective", worst, 1e-10, 2 * o.instances))
}

fn baselines() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for d in [2, 3] {
        let dn = do_nothing_protocol(d, default_branch_count(d))?;
        let dr = computational_dr_protocol(d)?;
        for k in 0..=10 {
            let eps = k as f64 / 10.0;
            let noise = depolarizing(eps, d);
            let f_dn = average_fidelity_exact(&average_operation(&dn, &noise)?);
            let f_dr = average_fidelity_exact(&average_operation(&dr, &noise)?);
            worst = worst
                .max((f_dn - do_nothing_fidelity(d, eps)).abs())
                .max((f_dr - discriminate_reprepare_fidelity(d)).abs());
            cases += 2;
        }
    }
    Ok(Check::new("do-nothing-and-reprepare-baselines", worst, 1e-12, cases))
}

fn commutation(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<[Check; 2]> {
    let mut worst: f64 = 0.0;
    let mut invalid = 0;
    let mut cases = 0;
    for _ in 0..o.instances {
        let e = random_tpcp(2, rng);
        for eps in [0.1, 0.5, 0.9] {
            let tilde = commute_through_depolarizing(&e, eps)?;
            if !(tilde.is_cp(DEFAULT_CP_TOL).completely_positive && tilde.is_tp(1e-10)) {
                invalid += 1;
            }
            let noise = depolarizing(eps, 2);
            let lhs = compose(&noise, &e)?;
            let rhs = compose(&tilde, &noise)?;
            worst = worst.max(lhs.matrix().max_abs_diff(rhs.matrix()));
            cases += 1;
        }
    }
    Ok([
        Check::new("commutation-through-depolarizing", worst, 1e-10, cases),
        Check::new("commuted-map-is-cptp", invalid as f64, 0.0, cases),
    ])
}

fn expost_optimum(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Result<[Check; 2]> {
    let mut exact_gap: f64 = 0.0;
    let mut brute_gap: f64 = 0.0;
    let brute_cases = o.instances.min(BRUTE_CASES);
    for n in 0..o.instances {
        let noise = random_tpcp(2, rng);
        let (u, f) = optimal_expost_qubit(&noise)?;
        let attained = average_fidelity_exact(&AverageOperation::new(compose(&unitary_channel(&u)?, &noise)?));
        exact_gap = exact_gap.max((attained - f).abs());
        if n < brute_cases {
            let (_, brute) = brute_force_unitary_expost(&noise, BRUTE_RESOLUTION)?;
            brute_gap = brute_gap.max((f - brute).abs());
        }
    }
    Ok([
        Check::new("expost-optimum-attained-by-its-unitary", exact_gap, 1e-10, o.instances),
        Check::new("expost-optimum-vs-brute-force", brute_gap, 1e-3, brute_cases),
    ])
}

fn cptp_inequalities(o: &VerifyOptions, rng: &mut ChaCha8Rng) -> Check {
    let mut disagree = 0;
    let mut cases = 0;
    for _ in 0..10 * o.instances {
        let p = random_qubit_ptm(rng);
        let min_eig = choi_from_ptm(&p).is_cp(0.0).min_eigenvalue;
        if min_eig.abs() <= BOUNDARY_BAND {
            continue;
        }
        if qubit_cptp_check_ruskai(&p, 1e-12) != (min_eig > 0.0) {
            disagree += 1;
        }
        cases += 1;
    }
    Check::new("cptp-inequalities-vs-choi-spectrum", disagree as f64, 0.0, cases)
}

/// Runs every suite. Each suite draws from its own stream of `seed`.
pub fn run(o: &VerifyOptions) -> Result<Vec<Check>> {
    let stream = |k: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
        rng.set_stream(k);
        rng
    };
    let mut checks = vec![choi_apply_vs_kraus(o, &mut stream(0))?];
    checks.extend(representation_round_trips(o, &mut stream(1))?);
    checks.push(closed_form_vs_choi_objective(o, &mut stream(2))?);
    checks.push(baselines()?);
    checks.extend(commutation(o, &mut stream(3))?);
    checks.extend(expost_optimum(o, &mut stream(4))?);
    checks.push(cptp_inequalities(o, &mut stream(5)));
    Ok(checks)
}
