//! JSON protocol documents.
//!
//! ```json
//! {"dim": 2, "branches": [{"instrument": [[[re, im], ...], ...], "correction": [...]}]}
//! ```
//!
//! Matrices are `d²×d²` Choi operators written row by row, each entry a
//! `[re, im]` pair. Numbers use the shortest decimal form that parses back
//! to the same binary64 value, so a write/read cycle is exact.

use std::path::Path;

use qsuppress_core::{Branch, ChoiOperator, ComplexMatrix, Protocol, C64};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("branch {branch} {which}: {detail}")]
    Shape {
        branch: usize,
        which: &'static str,
        detail: String,
    },
    #[error(transparent)]
    Invalid(#[from] qsuppress_core::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

pub type Matrix = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchDocument {
    pub instrument: Matrix,
    pub correction: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProtocolDocument {
    pub dim: usize,
    pub branches: Vec<BranchDocument>,
}

fn rows_of(m: &ComplexMatrix) -> Matrix {
    m.as_slice()
        .chunks(m.cols())
        .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
        .collect()
}

fn choi_of(rows: &Matrix, dim: usize, branch: usize, which: &'static str) -> Result<ChoiOperator, FormatError> {
    let n = dim * dim;
    let shape = |detail: String| FormatError::Shape { branch, which, detail };
    if rows.len() != n {
        return Err(shape(format!("expected {n} rows, found {}", rows.len())));
    }
    let mut data = Vec::with_capacity(n * n);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n {
            return Err(shape(format!("row {r} has {} entries, expected {n}", row.len())));
        }
        data.extend(row.iter().map(|&[re, im]| C64::new(re, im)));
    }
    Ok(ChoiOperator::new(dim, ComplexMatrix::new(n, n, data)?)?)
}

impl From<&Protocol> for ProtocolDocument {
    fn from(p: &Protocol) -> Self {
        Self {
            dim: p.dim(),
            branches: p
                .branches()
                .iter()
                .map(|b| BranchDocument {
                    instrument: rows_of(b.instrument.matrix()),
                    correction: rows_of(b.correction.matrix()),
                })
                .collect(),
        }
    }
}

impl ProtocolDocument {
    /// Checks shapes and Hermiticity. Physical validity (CP, trace
    /// conditions) is left to [`Protocol::validate`].
    pub fn to_protocol(&self) -> Result<Protocol, FormatError> {
        if self.dim == 0 {
            return Err(qsuppress_core::Error::InvalidArgument("dimension must be positive".into()).into());
        }
        let branches = self
            .branches
            .iter()
            .enumerate()
            .map(|(w, b)| {
                Ok(Branch {
                    instrument: choi_of(&b.instrument, self.dim, w, "instrument")?,
                    correction: choi_of(&b.correction, self.dim, w, "correction")?,
                })
            })
            .collect::<Result<Vec<_>, FormatError>>()?;
        Ok(Protocol::new(self.dim, branches)?)
    }
}

pub fn protocol_to_json(p: &Protocol) -> String {
    serde_json::to_string_pretty(&ProtocolDocument::from(p)).expect("finite entries serialize")
}

pub fn protocol_from_json(s: &str) -> Result<Protocol, FormatError> {
    serde_json::from_str::<ProtocolDocument>(s)?.to_protocol()
}

/// Reads a protocol file. Besides a bare protocol document, accepts the
/// output of `optimize`, whose `protocol` field holds one.
pub fn read_protocol(path: &Path) -> Result<Protocol, FormatError> {
    let text = std::fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let doc = match value.get("protocol") {
        Some(inner) if inner.is_object() => inner.clone(),
        _ => value,
    };
    serde_json::from_value::<ProtocolDocument>(doc)?.to_protocol()
}
