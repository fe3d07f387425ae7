//! Sampled datasets and their on-disk text format.
//!
//! A dataset file is comma-separated text: the first line is the header of
//! variable names, each following line is one record, and values must match
//! the model's domain labels byte-exactly. A sidecar declaration (the
//! `.regime` file written next to the data) records the sampling regime:
//! `observational`, `do:VAR=value,...`, or `randomized:VAR,...` for designs
//! that draw the listed variables uniformly per row.

use std::collections::HashMap;

use serde::Serialize;
use thiserror::Error;

use super::{Regime, Scm};
use crate::graph::VariableId;
use crate::Real;

/// The sampling regime a dataset was drawn under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum RegimeDecl {
    Observational,
    Do(Regime),
    /// Listed variables are drawn uniformly and applied as interventions,
    /// on top of the fixed `base` regime.
    Randomized {
        uniform: Vec<VariableId>,
        base: Regime,
    },
}

impl RegimeDecl {
    /// Sidecar text form.
    pub fn to_decl_string(&self) -> String {
        match self {
            RegimeDecl::Observational => "observational".to_string(),
            RegimeDecl::Do(regime) => {
                let parts: Vec<String> = regime
                    .fixings
                    .iter()
                    .map(|(v, val)| format!("{}={}", v.as_str(), val))
                    .collect();
                format!("do:{}", parts.join(","))
            }
            RegimeDecl::Randomized { uniform, base } => {
                let names: Vec<&str> = uniform.iter().map(|v| v.as_str()).collect();
                if base.is_observational() {
                    format!("randomized:{}", names.join(","))
                } else {
                    let parts: Vec<String> = base
                        .fixings
                        .iter()
                        .map(|(v, val)| format!("{}={}", v.as_str(), val))
                        .collect();
                    format!("randomized:{};do:{}", names.join(","), parts.join(","))
                }
            }
        }
    }

    pub fn parse(text: &str) -> Result<Self, DatasetError> {
        let text = text.trim();
        if text == "observational" {
            return Ok(RegimeDecl::Observational);
        }
        if let Some(rest) = text.strip_prefix("do:") {
            return Ok(RegimeDecl::Do(parse_fixings(rest)?));
        }
        if let Some(rest) = text.strip_prefix("randomized:") {
            let (vars_part, base) = match rest.split_once(";do:") {
                Some((vars, fix)) => (vars, parse_fixings(fix)?),
                None => (rest, Regime::observational()),
            };
            let uniform = vars_part
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| {
                    VariableId::new(s).map_err(|_| DatasetError::BadRegime(text.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            if uniform.is_empty() {
                return Err(DatasetError::BadRegime(text.to_string()));
            }
            return Ok(RegimeDecl::Randomized { uniform, base });
        }
        Err(DatasetError::BadRegime(text.to_string()))
    }
}

fn parse_fixings(text: &str) -> Result<Regime, DatasetError> {
    let mut regime = Regime::observational();
    for pair in text.split(',') {
        let (name, value) = pair
            .split_once('=')
            .ok_or_else(|| DatasetError::BadRegime(text.to_string()))?;
        let var =
            VariableId::new(name).map_err(|_| DatasetError::BadRegime(text.to_string()))?;
        regime = regime.fix(var, value);
    }
    Ok(regime)
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset header names unknown variable {0:?}")]
    UnknownColumn(String),
    #[error("dataset header misses endogenous variable {0:?}")]
    MissingColumn(String),
    #[error("row {row}, column {column}: value {value:?} is not a domain label")]
    BadValue {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row} has {got} fields, expected {expected}")]
    RaggedRow {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("dataset has no rows")]
    Empty,
    #[error("unrecognized regime declaration {0:?}")]
    BadRegime(String),
}

/// Rows of endogenous assignments with their sampling regime.
///
/// Values are stored as indices into the per-column label lists, which come
/// from the generating model's domains, so serialization and re-parsing are
/// exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<VariableId>,
    labels: Vec<Vec<String>>,
    rows: Vec<Vec<u32>>,
    regime: RegimeDecl,
    seed: Option<u64>,
}

impl Dataset {
    pub(crate) fn from_sampled(
        columns: Vec<VariableId>,
        labels: Vec<Vec<String>>,
        rows: Vec<Vec<u32>>,
        regime: RegimeDecl,
        seed: u64,
    ) -> Self {
        Dataset {
            columns,
            labels,
            rows,
            regime,
            seed: Some(seed),
        }
    }

    pub fn columns(&self) -> &[VariableId] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn regime(&self) -> &RegimeDecl {
        &self.regime
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn column_ix(&self, var: &VariableId) -> Option<usize> {
        self.columns.iter().position(|c| c == var)
    }

    /// Value index of `var` in `row` (indices align with the model domain).
    pub fn value_ix(&self, row: usize, column_ix: usize) -> usize {
        self.rows[row][column_ix] as usize
    }

    pub fn label(&self, row: usize, var: &VariableId) -> Option<&str> {
        let col = self.column_ix(var)?;
        Some(&self.labels[col][self.rows[row][col] as usize])
    }

    /// Renders the data file content (header plus one line per row).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let header: Vec<&str> = self.columns.iter().map(|c| c.as_str()).collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for (col, &val) in row.iter().enumerate() {
                if !first {
                    out.push(',');
                }
                first = false;
                out.push_str(&self.labels[col][val as usize]);
            }
            out.push('\n');
        }
        out
    }

    /// Sidecar regime declaration content.
    pub fn regime_text(&self) -> String {
        let mut s = self.regime.to_decl_string();
        s.push('\n');
        s
    }

    /// Parses a data file against the model that defines the domains.
    ///
    /// The header must name endogenous variables of the model; every value
    /// must match one of the column's domain labels byte-exactly.
    pub fn read<T: Real>(
        scm: &Scm<T>,
        text: &str,
        regime_text: &str,
    ) -> Result<Dataset, DatasetError> {
        let regime = RegimeDecl::parse(regime_text)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(DatasetError::Empty)?;
        let mut columns = Vec::new();
        let mut labels: Vec<Vec<String>> = Vec::new();
        let mut label_index: Vec<HashMap<&str, u32>> = Vec::new();
        for name in header.split(',') {
            let var = VariableId::new(name)
                .map_err(|_| DatasetError::UnknownColumn(name.to_string()))?;
            if !scm.is_endogenous(&var) {
                return Err(DatasetError::UnknownColumn(name.to_string()));
            }
            let domain = scm.domain_of(&var).expect("endogenous variable");
            labels.push(domain.labels().to_vec());
            columns.push(var);
            label_index.push(HashMap::new());
        }
        for (col, list) in labels.iter().enumerate() {
            for (ix, label) in list.iter().enumerate() {
                label_index[col].insert(label.as_str(), ix as u32);
            }
        }
        let mut rows = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() {
                return Err(DatasetError::RaggedRow {
                    row: lineno + 2,
                    got: fields.len(),
                    expected: columns.len(),
                });
            }
            let mut row = Vec::with_capacity(fields.len());
            for (col, field) in fields.iter().enumerate() {
                match label_index[col].get(field) {
                    Some(&ix) => row.push(ix),
                    None => {
                        return Err(DatasetError::BadValue {
                            row: lineno + 2,
                            column: columns[col].as_str().to_string(),
                            value: field.to_string(),
                        })
                    }
                }
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(DatasetError::Empty);
        }
        Ok(Dataset {
            columns,
            labels,
            rows,
            regime,
            seed: None,
        })
    }
}
