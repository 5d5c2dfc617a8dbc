//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::Instant;

use qsuppress_core::channel::{
    choi_from_ptm, commute_through_depolarizing, compose, depolarizing, ptm_from_choi, qubit_cptp_check_ruskai,
    qubit_extreme_closure_check, unitary_channel, DEFAULT_CP_TOL,
};
use qsuppress_core::fidelity::{
    average_fidelity_exact, average_fidelity_monte_carlo, fidelity_from_objective, protocol_objective_choi,
};
use qsuppress_core::matrix::{haar_random_pure_state, swap_operator, ComplexMatrix};
use qsuppress_core::optimize::{
    anneal, anneal_noise, brute_force_tpcp_expost, brute_force_unitary_expost, optimal_expost_qubit, sweep,
    AnnealConfig, Winner,
};
use qsuppress_core::protocol::{average_operation, default_branch_count};
use qsuppress_core::random::{random_protocol, random_qubit_ptm, random_tpcp, random_unitary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Verdict {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Verdict);

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

/// Annealing settings used for qutrits: longer chains with a slower,
/// cooler schedule than the qubit defaults.
fn qutrit_config() -> AnnealConfig {
    AnnealConfig {
        steps: 400_000,
        initial_temperature: 0.03,
        cooling: 0.99995,
        ..AnnealConfig::default()
    }
}

fn qubit_sweep() -> Verdict {
    let config = AnnealConfig::default();
    let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
    let result = sweep(&config, 2, 2, &grid).expect("sweep runs");
    let mut worst_low: f64 = 0.0;
    let mut worst_high = f64::NEG_INFINITY;
    let mut ok = true;
    for row in &result.rows {
        let analytic = (1.0 - row.epsilon / 2.0).max(2.0 / 3.0);
        let gap = analytic - row.best_fidelity;
        worst_low = worst_low.max(gap);
        worst_high = worst_high.max(-gap);
        ok &= gap <= 5e-3 && -gap <= 1e-6;
        let expected = if row.epsilon < 2.0 / 3.0 { Winner::DoNothing } else { Winner::DiscriminateReprepare };
        ok &= row.winner == expected;
    }
    let flip = result
        .rows
        .windows(2)
        .find(|w| w[0].winner != w[1].winner)
        .map(|w| (w[0].epsilon, w[1].epsilon));
    ok &= flip == Some((0.6, 0.7));
    let flip = match flip {
        Some((a, b)) => format!("between {a} and {b}"),
        None => "nowhere".into(),
    };
    verdict(
        ok,
        format!("max shortfall {worst_low:.2e}, max excess {worst_high:.2e}, winner flips {flip}"),
    )
}

fn expost_optimum() -> Verdict {
    let config = AnnealConfig { seed: 1, ..AnnealConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut max_excess = f64::NEG_INFINITY;
    let mut max_brute_gap: f64 = 0.0;
    let mut ok = true;
    for _ in 0..20 {
        let noise = random_tpcp(2, &mut rng);
        let (_, closed) = optimal_expost_qubit(&noise).expect("qubit");
        let annealed = brute_force_tpcp_expost(&noise, &config).expect("qubit");
        let (_, brute) = brute_force_unitary_expost(&noise, 16).expect("qubit");
        max_excess = max_excess.max(annealed - closed);
        max_brute_gap = max_brute_gap.max((closed - brute).abs());
        ok &= annealed <= closed + 1e-6 && (closed - brute).abs() <= 1e-3;
    }
    verdict(
        ok,
        format!("annealed minus closed form at most {max_excess:.2e}, brute-force gap at most {max_brute_gap:.2e}"),
    )
}

fn qutrit_sweep() -> Verdict {
    let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
    let result = sweep(&qutrit_config(), 3, default_branch_count(3), &grid).expect("sweep runs");
    let mut ok = true;
    let mut gaps = Vec::new();
    for row in &result.rows {
        let analytic = (1.0 - 2.0 * row.epsilon / 3.0).max(0.5);
        let gap = analytic - row.best_fidelity;
        gaps.push(format!("{:.2}:{gap:.1e}", row.epsilon));
        ok &= gap <= 1e-2 && -gap <= 1e-6;
        let expected = if row.epsilon < 0.75 - 1e-12 {
            Winner::DoNothing
        } else if row.epsilon > 0.75 + 1e-12 {
            Winner::DiscriminateReprepare
        } else {
            Winner::Both
        };
        ok &= row.winner == expected;
        ok &= (row.dr_fidelity - 0.5).abs() < 1e-15;
    }
    verdict(ok, format!("shortfalls {}, tie reported at 0.75", gaps.join(" ")))
}

fn endpoints() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let m = default_branch_count(d);
        let config = if d == 2 { AnnealConfig::default() } else { qutrit_config() };
        let clean = anneal(&config, d, m, 0.0).expect("runs");
        let full = anneal(&config, d, m, 1.0).expect("runs");
        // the annealer alone, without the closed-form shortcut
        let numeric = anneal_noise(&AnnealConfig { restarts: 20, ..config }, &depolarizing(1.0, d), m).expect("runs");
        let target = 2.0 / (d as f64 + 1.0);
        ok &= (clean.fidelity - 1.0).abs() <= 1e-6;
        ok &= (full.fidelity - target).abs() <= 5e-3;
        ok &= (numeric.fidelity - target).abs() <= 5e-3;
        parts.push(format!(
            "d={d}: F(0)={:.12}, F(1)={:.12}, annealed F(1)={:.6}",
            clean.fidelity, full.fidelity, numeric.fidelity
        ));
    }
    verdict(ok, parts.join("; "))
}

fn fidelity_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut ok = true;
    let mut max_z: f64 = 0.0;
    let mut max_choi_gap: f64 = 0.0;
    let mut beyond = 0;
    let mut total = 0;
    let mut z_sq = 0.0;
    // 100 protocols in all, half of them qubits and half qutrits
    for d in [2usize, 3] {
        for _ in 0..50 {
            let protocol = random_protocol(d, default_branch_count(d), &mut rng);
            let noise = random_tpcp(d, &mut rng);
            let exact = average_fidelity_exact(&average_operation(&protocol, &noise).expect("dims"));
            let choi = fidelity_from_objective(protocol_objective_choi(&protocol, &noise).expect("dims"), d);
            let mc = average_fidelity_monte_carlo(&protocol, &noise, 100_000, &mut rng).expect("runs");
            let z = mc.z_score(exact).abs();
            z_sq += z * z;
            max_z = max_z.max(z);
            max_choi_gap = max_choi_gap.max((exact - choi).abs());
            if z > 3.0 {
                beyond += 1;
            }
            total += 1;
        }
    }
    ok &= beyond == 0 && max_choi_gap <= 1e-10;
    verdict(
        ok,
        format!(
            "{total} protocols, max |z| {max_z:.2} ({beyond} beyond 3), mean z² {:.2}, max closed form vs Choi form {max_choi_gap:.1e}",
            z_sq / total as f64
        ),
    )
}

fn commutation() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for _ in 0..1000 {
        let e = random_tpcp(2, &mut rng);
        for eps in [0.1, 0.5, 0.9] {
            let tilde = commute_through_depolarizing(&e, eps).expect("qubit");
            ok &= tilde.is_cp(DEFAULT_CP_TOL).completely_positive && tilde.is_tp(1e-10);
            let lhs = compose(&depolarizing(eps, 2), &e).expect("dims");
            let rhs = compose(&tilde, &depolarizing(eps, 2)).expect("dims");
            worst = worst.max(lhs.matrix().max_abs_diff(rhs.matrix()));
        }
    }
    ok &= worst < 1e-10;
    verdict(ok, format!("3000 constructions, max residual {worst:.1e}"))
}

fn ruskai() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut agree, mut disagree, mut in_band, mut cp) = (0, 0, 0, 0);
    for _ in 0..10_000 {
        let p = random_qubit_ptm(&mut rng);
        let min_eig = choi_from_ptm(&p).is_cp(0.0).min_eigenvalue;
        if min_eig.abs() <= 1e-8 {
            in_band += 1;
            continue;
        }
        let by_choi = min_eig > 0.0;
        cp += by_choi as usize;
        if qubit_cptp_check_ruskai(&p, 1e-12) == by_choi {
            agree += 1;
        } else {
            disagree += 1;
        }
    }
    let mut extreme_ok = true;
    for _ in 0..100 {
        let u = random_unitary(2, &mut rng);
        let p = ptm_from_choi(&unitary_channel(&u).expect("unitary")).expect("qubit");
        extreme_ok &= qubit_extreme_closure_check(&p, 1e-9);
    }
    for k in 1..20 {
        let p = ptm_from_choi(&depolarizing(k as f64 / 20.0, 2)).expect("qubit");
        extreme_ok &= !qubit_extreme_closure_check(&p, 1e-9);
    }
    verdict(
        disagree == 0 && extreme_ok && cp > 0 && cp < agree,
        format!(
            "{agree} agree, {disagree} disagree, {in_band} in band, {cp} CP; unitaries extreme and depolarizing not: {extreme_ok}"
        ),
    )
}

fn haar_second_moment() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let mut ok = true;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let size = d * d;
        let mut sum = vec![[0.0f64; 2]; size * size];
        let mut sum_sq = vec![[0.0f64; 2]; size * size];
        for _ in 0..n {
            let p = haar_random_pure_state(d, &mut rng).projector();
            let x = p.kron(&p);
            for (k, v) in x.as_slice().iter().enumerate() {
                sum[k][0] += v.re;
                sum[k][1] += v.im;
                sum_sq[k][0] += v.re * v.re;
                sum_sq[k][1] += v.im * v.im;
            }
        }
        let expected = (&ComplexMatrix::identity(size) + &swap_operator(d)).scale_real(1.0 / (d * (d + 1)) as f64);
        let (mut worst, mut failures) = (0.0f64, 0);
        for (k, e) in expected.as_slice().iter().enumerate() {
            for (part, target) in [(0, e.re), (1, e.im)] {
                let mean = sum[k][part] / n as f64;
                let var = (sum_sq[k][part] / n as f64 - mean * mean).max(0.0) * n as f64 / (n - 1) as f64;
                let se = (var / n as f64).sqrt();
                let dev = (mean - target).abs();
                let z = if se > 0.0 { dev / se } else if dev < 1e-12 { 0.0 } else { f64::INFINITY };
                worst = worst.max(z);
                if z > 3.0 {
                    failures += 1;
                }
            }
        }
        ok &= failures == 0;
        parts.push(format!("d={d}: max |z| {worst:.2}, {failures} entries beyond 3"));
    }
    verdict(ok, parts.join("; "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("1 qubit sweep, 100 restarts, eps in {0, 0.1, ..., 1}", qubit_sweep),
        ("2 ex-post correction: annealed TPCP vs closed-form unitary vs brute force", expost_optimum),
        ("3 qutrit sweep, eps in {0, 0.25, 0.5, 0.75, 1}", qutrit_sweep),
        ("4 exact endpoints eps = 0 and eps = 1, d = 2 and 3", endpoints),
        ("5 closed-form fidelity vs Monte Carlo and Choi-form objective", fidelity_oracles),
        ("6 commutation through depolarizing noise", commutation),
        ("7 qubit CPTP inequalities vs Choi spectrum; extreme points", ruskai),
        ("8 Haar second moment", haar_second_moment),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.starts_with(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = run();
        let tag = if v.passed { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {name}: {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        if !v.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
