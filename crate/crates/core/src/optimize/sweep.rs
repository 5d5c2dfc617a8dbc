use alloc::vec::Vec;

use super::anneal::{anneal, AnnealConfig};
use crate::error::{Error, Result};

/// Absolute difference below which the two baselines count as equal.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Winner {
    DoNothing,
    DiscriminateReprepare,
    Both,
}

impl Winner {
    pub fn label(self) -> &'static str {
        match self {
            Winner::DoNothing => "DN",
            Winner::DiscriminateReprepare => "DR",
            Winner::Both => "both",
        }
    }

    pub fn from_fidelities(dn: f64, dr: f64) -> Self {
        if (dn - dr).abs() < TIE_TOLERANCE {
            Winner::Both
        } else if dn > dr {
            Winner::DoNothing
        } else {
            Winner::DiscriminateReprepare
        }
    }
}

impl core::fmt::Display for Winner {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub best_fidelity: f64,
    pub dn_fidelity: f64,
    pub dr_fidelity: f64,
    pub winner: Winner,
    pub penalty_residual: f64,
    /// Restarts actually run; zero for closed-form rows.
    pub restarts: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub dim: usize,
    pub branches: usize,
    pub config: AnnealConfig,
    pub rows: Vec<SweepRow>,
}

/// `1 − (d−1)ε/d`.
pub fn do_nothing_fidelity(d: usize, eps: f64) -> f64 {
    1.0 - (d as f64 - 1.0) * eps / d as f64
}

/// `2/(d+1)`.
pub fn discriminate_reprepare_fidelity(d: usize) -> f64 {
    2.0 / (d as f64 + 1.0)
}

/// Optimizes at every noise strength in `grid`. Each point reuses the
/// configured seed, so any row can be reproduced on its own.
pub fn sweep(config: &AnnealConfig, d: usize, m: usize, grid: &[f64]) -> Result<SweepResult> {
    config.validate()?;
    if let Some(bad) = grid.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidArgument(alloc::format!("noise strength {bad} outside [0, 1]")));
    }
    let mut rows = Vec::with_capacity(grid.len());
    for &eps in grid {
        let outcome = anneal(config, d, m, eps)?;
        let dn = do_nothing_fidelity(d, eps);
        let dr = discriminate_reprepare_fidelity(d);
        rows.push(SweepRow {
            epsilon: eps,
            best_fidelity: outcome.fidelity,
            dn_fidelity: dn,
            dr_fidelity: dr,
            winner: Winner::from_fidelities(dn, dr),
            penalty_residual: outcome.penalty_residual,
            restarts: if outcome.is_exact() { 0 } else { config.restarts },
        });
    }
    Ok(SweepResult {
        dim: d,
        branches: m,
        config: config.clone(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn winner_labels() {
        assert_eq!(Winner::from_fidelities(0.9, 0.6).label(), "DN");
        assert_eq!(Winner::from_fidelities(0.6, 0.9).label(), "DR");
        let dn = do_nothing_fidelity(2, 2.0 / 3.0);
        let dr = discriminate_reprepare_fidelity(2);
        assert!((dn - dr).abs() < 1e-12);
        assert_eq!(Winner::from_fidelities(dn, dr), Winner::Both);
        assert_eq!(Winner::Both.to_string(), "both");
    }

    #[test]
    fn grid_must_be_probabilities() {
        assert!(sweep(&AnnealConfig::default(), 2, 2, &[0.5, -0.1]).is_err());
        assert!(sweep(&AnnealConfig::default(), 2, 2, &[f64::NAN]).is_err());
    }

    #[test]
    fn qubit_sweep_crosses_over() {
        let config = AnnealConfig {
            restarts: 4,
            steps: 8000,
            seed: 1,
            ..AnnealConfig::default()
        };
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let r = sweep(&config, 2, 2, &grid).unwrap();
        assert_eq!(r.rows.len(), 11);
        for row in &r.rows {
            let analytic = row.dn_fidelity.max(row.dr_fidelity);
            assert!(row.best_fidelity <= analytic + 1e-6);
            assert!((0.0..=1.0).contains(&row.best_fidelity));
            let expected = if row.epsilon < 2.0 / 3.0 { Winner::DoNothing } else { Winner::DiscriminateReprepare };
            assert_eq!(row.winner, expected);
        }
        assert_eq!(r.rows[0].restarts, 0);
        assert_eq!(r.rows[5].restarts, 4);
        assert_eq!(sweep(&config, 2, 2, &grid).unwrap(), r);
    }
}
