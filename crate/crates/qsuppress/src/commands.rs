//! The four subcommands. Each writes its artifact to the configured output
//! path, or to stdout, and a short summary to stderr.

use std::io::Write;
use std::path::Path;

use qsuppress_core::channel::depolarizing;
use qsuppress_core::fidelity::{average_fidelity_exact, average_fidelity_monte_carlo};
use qsuppress_core::optimize::{anneal, discriminate_reprepare_fidelity, do_nothing_fidelity, sweep as run_sweep, Winner};
use qsuppress_core::protocol::{average_operation, computational_dr_protocol, do_nothing_protocol};
use qsuppress_core::random::random_protocol;
use qsuppress_core::Protocol;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{NamedProtocol, OutputFormat, RunConfig, Settings};
use crate::error::CliError;
use crate::format::{read_protocol, ProtocolDocument};
use crate::verify::{self, Check, VerifyOptions};

/// |z| above which the Monte-Carlo estimate counts as inconsistent.
pub const Z_THRESHOLD: f64 = 5.0;

pub const SWEEP_HEADER: [&str; 9] = [
    "epsilon",
    "best_F",
    "dn_F",
    "dr_F",
    "winner",
    "penalty_residual",
    "restarts",
    "seed",
    "config",
];

/// 17 significant digits, enough to recover every binary64 value.
pub fn float17(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match output {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::io(path, e)),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))
        }
    }
}

fn emit_json<T: Serialize>(output: Option<&Path>, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    emit(output, text.as_bytes())
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    config: RunConfig,
    seed: u64,
    broken_convention: bool,
    passed: bool,
    checks: &'a [Check],
}

pub fn verify(s: &Settings, broken_convention: bool) -> Result<(), CliError> {
    let checks = verify::run(&VerifyOptions {
        instances: s.instances,
        seed: s.seed,
        broken_convention,
    })?;
    for c in &checks {
        eprintln!(
            "{} {:<40} residual {:.2e} (tolerance {:.0e}, {} cases)",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance,
            c.cases
        );
    }
    let passed = checks.iter().all(|c| c.passed);
    emit_json(
        s.output.as_deref(),
        &VerifyReport {
            config: s.to_config(),
            seed: s.seed,
            broken_convention,
            passed,
            checks: &checks,
        },
    )?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join(", ")))
    }
}

#[derive(Serialize)]
struct SweepRowDocument {
    epsilon: f64,
    #[serde(rename = "best_F")]
    best: f64,
    #[serde(rename = "dn_F")]
    dn: f64,
    #[serde(rename = "dr_F")]
    dr: f64,
    winner: &'static str,
    penalty_residual: f64,
    restarts: usize,
}

#[derive(Serialize)]
struct SweepDocument {
    config: RunConfig,
    seed: u64,
    dim: usize,
    branches: usize,
    rows: Vec<SweepRowDocument>,
}

pub fn sweep(s: &Settings) -> Result<(), CliError> {
    let result = run_sweep(&s.anneal, s.dim, s.branches, &s.grid)?;
    for r in &result.rows {
        eprintln!(
            "eps {:.4}  best {:.6}  DN {:.6}  DR {:.6}  winner {}",
            r.epsilon, r.best_fidelity, r.dn_fidelity, r.dr_fidelity, r.winner
        );
    }
    let config = s.to_config();
    let bytes = match s.format {
        OutputFormat::Csv => {
            let config_json = serde_json::to_string(&config).expect("config serializes");
            let mut w = csv::Writer::from_writer(Vec::new());
            let csv_err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
            w.write_record(SWEEP_HEADER).map_err(csv_err)?;
            for r in &result.rows {
                w.write_record([
                    float17(r.epsilon),
                    float17(r.best_fidelity),
                    float17(r.dn_fidelity),
                    float17(r.dr_fidelity),
                    r.winner.label().to_string(),
                    float17(r.penalty_residual),
                    r.restarts.to_string(),
                    s.seed.to_string(),
                    config_json.clone(),
                ])
                .map_err(csv_err)?;
            }
            w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?
        }
        OutputFormat::Json => {
            let doc = SweepDocument {
                config,
                seed: s.seed,
                dim: result.dim,
                branches: result.branches,
                rows: result
                    .rows
                    .iter()
                    .map(|r| SweepRowDocument {
                        epsilon: r.epsilon,
                        best: r.best_fidelity,
                        dn: r.dn_fidelity,
                        dr: r.dr_fidelity,
                        winner: r.winner.label(),
                        penalty_residual: r.penalty_residual,
                        restarts: r.restarts,
                    })
                    .collect(),
            };
            let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
            text.push('\n');
            text.into_bytes()
        }
    };
    emit(s.output.as_deref(), &bytes)
}

#[derive(Serialize)]
struct OptimizeDocument {
    config: RunConfig,
    seed: u64,
    dim: usize,
    branches: usize,
    epsilon: f64,
    /// Exact average fidelity of `protocol`.
    fidelity: f64,
    penalty_residual: f64,
    /// Objective of the annealed point before projection.
    objective: f64,
    /// Winning restart; absent for closed-form results.
    restart: Option<usize>,
    dn_fidelity: f64,
    dr_fidelity: f64,
    winner: &'static str,
    protocol: ProtocolDocument,
}

pub fn optimize(s: &Settings) -> Result<(), CliError> {
    let out = anneal(&s.anneal, s.dim, s.branches, s.epsilon)?;
    let dn = do_nothing_fidelity(s.dim, s.epsilon);
    let dr = discriminate_reprepare_fidelity(s.dim);
    let winner = Winner::from_fidelities(dn, dr);
    eprintln!(
        "eps {}  F {:.6}  residual {:.2e}  DN {:.6}  DR {:.6}  winner {}",
        s.epsilon, out.fidelity, out.penalty_residual, dn, dr, winner
    );
    emit_json(
        s.output.as_deref(),
        &OptimizeDocument {
            config: s.to_config(),
            seed: s.seed,
            dim: s.dim,
            branches: out.protocol.len(),
            epsilon: s.epsilon,
            fidelity: out.fidelity,
            penalty_residual: out.penalty_residual,
            objective: out.objective,
            restart: out.restart,
            dn_fidelity: dn,
            dr_fidelity: dr,
            winner: winner.label(),
            protocol: ProtocolDocument::from(&out.protocol),
        },
    )
}

#[derive(Serialize)]
struct MonteCarloReport {
    config: RunConfig,
    seed: u64,
    protocol: String,
    dim: usize,
    branches: usize,
    epsilon: f64,
    samples: usize,
    estimate: f64,
    std_error: f64,
    exact: f64,
    z_score: f64,
    threshold: f64,
    passed: bool,
}

/// Tolerance for the physical validity of a loaded protocol.
const LOAD_TOL: f64 = 1e-8;

pub fn montecarlo(s: &Settings) -> Result<(), CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let (protocol, label): (Protocol, String) = match &s.protocol_file {
        Some(path) => {
            let p = read_protocol(path)?;
            p.validate(LOAD_TOL)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (p, path.display().to_string())
        }
        None => {
            let p = match s.protocol {
                NamedProtocol::Dn => do_nothing_protocol(s.dim, s.branches)?,
                NamedProtocol::Dr => computational_dr_protocol(s.dim)?,
                NamedProtocol::Random => random_protocol(s.dim, s.branches, &mut rng),
            };
            (p, s.protocol.label().to_string())
        }
    };
    let d = protocol.dim();
    let noise = depolarizing(s.epsilon, d);
    let exact = average_fidelity_exact(&average_operation(&protocol, &noise)?);
    let mc = average_fidelity_monte_carlo(&protocol, &noise, s.samples, &mut rng)?;
    let z = mc.z_score(exact);
    let passed = z.abs() <= Z_THRESHOLD;
    eprintln!(
        "{label}: estimate {:.6} ± {:.2e}, exact {exact:.6}, z {z:.2}",
        mc.mean, mc.std_error
    );
    emit_json(
        s.output.as_deref(),
        &MonteCarloReport {
            config: s.to_config(),
            seed: s.seed,
            protocol: label,
            dim: d,
            branches: protocol.len(),
            epsilon: s.epsilon,
            samples: mc.samples,
            estimate: mc.mean,
            std_error: mc.std_error,
            exact,
            z_score: z,
            threshold: Z_THRESHOLD,
            passed,
        },
    )?;
    if passed {
        Ok(())
    } else {
        Err(CliError::Check(format!("Monte-Carlo estimate is {z:.2} standard errors from the exact value")))
    }
}
