//! Immutable tables and sub-table views.
//!
//! A [`Table`] always remembers where its rows and columns came from in the
//! raw table: `row_ids` are 1-based original row indices and `col_ids` are
//! 0-based original column indices. Filtering and projection never renumber,
//! so a sub-table printed after three filters still says `row 7:`.

mod cells;
mod ingest;
mod text;
mod value;

pub use cells::{canonicalize, Cell, CellSet};
pub use ingest::{from_csv, parse_any};
pub use text::{parse_subtable, parse_table, serialize};
pub use value::CellValue;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("empty column name at position {0}")]
    EmptyColumnName(usize),
    #[error("value `{0}` contains the ` | ` delimiter or a newline")]
    DelimiterInValue(String),
    #[error("row {row} has {found} values, expected {expected}")]
    RaggedRow { row: usize, found: usize, expected: usize },
    #[error("{0} ids must be strictly increasing")]
    UnorderedIds(&'static str),
    #[error("cell (row {row}, col {col}) does not match the raw table")]
    IndexMismatch { row: usize, col: usize },
    #[error("column `{0}` is not in the raw table")]
    UnknownColumn(String),
    #[error("csv: {0}")]
    Csv(String),
}

/// Header plus data grid with stable original indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<CellValue>>,
    row_ids: Vec<usize>,
    col_ids: Vec<usize>,
}

/// Size accounting used for compression reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStats {
    pub n_rows: usize,
    pub n_cols: usize,
    pub n_cells: usize,
    pub approx_tokens: usize,
}

pub(crate) fn normalize_name(name: &str) -> String {
    name.trim().to_lowercase()
}

impl Table {
    /// Builds a raw table: `row_ids = 1..=N`, `col_ids = 0..M`.
    pub fn new_raw(columns: Vec<String>, rows: Vec<Vec<CellValue>>) -> Result<Self, TableError> {
        let row_ids = (1..=rows.len()).collect();
        let col_ids = (0..columns.len()).collect();
        Self::from_parts(columns, rows, row_ids, col_ids)
    }

    pub fn from_parts(
        columns: Vec<String>,
        rows: Vec<Vec<CellValue>>,
        row_ids: Vec<usize>,
        col_ids: Vec<usize>,
    ) -> Result<Self, TableError> {
        let columns: Vec<String> = columns.into_iter().map(|c| c.trim().to_string()).collect();
        let mut seen = HashSet::new();
        for (i, name) in columns.iter().enumerate() {
            if name.is_empty() {
                return Err(TableError::EmptyColumnName(i));
            }
            value::check_text(name)?;
            if !seen.insert(normalize_name(name)) {
                return Err(TableError::DuplicateColumn(name.clone()));
            }
        }
        if col_ids.len() != columns.len() {
            return Err(TableError::RaggedRow { row: 0, found: col_ids.len(), expected: columns.len() });
        }
        if row_ids.len() != rows.len() {
            return Err(TableError::RaggedRow { row: 0, found: row_ids.len(), expected: rows.len() });
        }
        if !strictly_increasing(&row_ids) || row_ids.first() == Some(&0) {
            return Err(TableError::UnorderedIds("row"));
        }
        if !strictly_increasing(&col_ids) {
            return Err(TableError::UnorderedIds("column"));
        }
        for (row, id) in rows.iter().zip(&row_ids) {
            if row.len() != columns.len() {
                return Err(TableError::RaggedRow { row: *id, found: row.len(), expected: columns.len() });
            }
            for v in row {
                if let CellValue::Text(s) = v {
                    value::check_text(s)?;
                }
            }
        }
        Ok(Self { columns, rows, row_ids, col_ids })
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<CellValue>] {
        &self.rows
    }

    pub fn row_ids(&self) -> &[usize] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[usize] {
        &self.col_ids
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty() || self.columns.is_empty()
    }

    /// Position of a column by case-insensitive name.
    pub fn position_of_name(&self, name: &str) -> Option<usize> {
        let key = normalize_name(name);
        self.columns.iter().position(|c| normalize_name(c) == key)
    }

    /// Position of an original column index within this view.
    pub fn position_of_col_id(&self, col_id: usize) -> Option<usize> {
        self.col_ids.binary_search(&col_id).ok()
    }

    pub fn position_of_row_id(&self, row_id: usize) -> Option<usize> {
        self.row_ids.binary_search(&row_id).ok()
    }

    /// Values of one column (by position) down all rows.
    pub fn column_values(&self, pos: usize) -> impl Iterator<Item = &CellValue> {
        self.rows.iter().map(move |r| &r[pos])
    }

    /// Keeps the rows for which `keep` returns true.
    pub fn retain_rows<F>(&self, mut keep: F) -> Table
    where
        F: FnMut(&[CellValue]) -> bool,
    {
        let mut rows = Vec::new();
        let mut row_ids = Vec::new();
        for (row, id) in self.rows.iter().zip(&self.row_ids) {
            if keep(row) {
                rows.push(row.clone());
                row_ids.push(*id);
            }
        }
        Table { columns: self.columns.clone(), rows, row_ids, col_ids: self.col_ids.clone() }
    }

    /// Keeps the columns at the given positions. Positions are sorted and
    /// deduplicated, so original column order is preserved.
    pub fn project_positions(&self, positions: &[usize]) -> Table {
        let mut pos: Vec<usize> = positions.iter().copied().filter(|&p| p < self.n_cols()).collect();
        pos.sort_unstable();
        pos.dedup();
        Table {
            columns: pos.iter().map(|&p| self.columns[p].clone()).collect(),
            rows: self.rows.iter().map(|r| pos.iter().map(|&p| r[p].clone()).collect()).collect(),
            row_ids: self.row_ids.clone(),
            col_ids: pos.iter().map(|&p| self.col_ids[p]).collect(),
        }
    }

    /// Keeps the rows at the given positions (sorted, deduplicated).
    pub fn select_row_positions(&self, positions: &[usize]) -> Table {
        let mut pos: Vec<usize> = positions.iter().copied().filter(|&p| p < self.n_rows()).collect();
        pos.sort_unstable();
        pos.dedup();
        Table {
            columns: self.columns.clone(),
            rows: pos.iter().map(|&p| self.rows[p].clone()).collect(),
            row_ids: pos.iter().map(|&p| self.row_ids[p]).collect(),
            col_ids: self.col_ids.clone(),
        }
    }

    /// True when every retained (row, col, value) of `self` also appears in
    /// `parent` under the same column name.
    pub fn is_subtable_of(&self, parent: &Table) -> bool {
        let mut col_map = Vec::with_capacity(self.n_cols());
        for (name, id) in self.columns.iter().zip(&self.col_ids) {
            match parent.position_of_col_id(*id) {
                Some(p) if parent.columns[p] == *name => col_map.push(p),
                _ => return false,
            }
        }
        for (row, id) in self.rows.iter().zip(&self.row_ids) {
            let Some(pr) = parent.position_of_row_id(*id) else {
                return false;
            };
            let prow = &parent.rows[pr];
            if row.iter().zip(&col_map).any(|(v, &p)| *v != prow[p]) {
                return false;
            }
        }
        true
    }

    pub fn stats(&self) -> TableStats {
        TableStats {
            n_rows: self.n_rows(),
            n_cols: self.n_cols(),
            n_cells: self.n_rows() * self.n_cols(),
            approx_tokens: serialize(self).split_whitespace().count(),
        }
    }
}

/// Row/column/cell counts and the whitespace-token proxy of the serialization.
pub fn subtable_stats(table: &Table) -> TableStats {
    table.stats()
}

fn strictly_increasing(ids: &[usize]) -> bool {
    ids.windows(2).all(|w| w[0] < w[1])
}
