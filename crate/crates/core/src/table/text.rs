//! The `col: ... / row N: ...` line format.

use std::fmt::Write as _;

use super::{CellValue, Table, TableError};

const DELIM: &str = " | ";

/// Renders a table as `col: A | B` followed by one `row {id}: ` line per row.
pub fn serialize(table: &Table) -> String {
    let mut out = String::new();
    out.push_str("col: ");
    out.push_str(&table.columns().join(DELIM));
    for (row, id) in table.rows().iter().zip(table.row_ids()) {
        let _ = write!(out, "\nrow {id}: ");
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push_str(DELIM);
            }
            let _ = write!(out, "{v}");
        }
    }
    out
}

struct Parsed {
    columns: Vec<String>,
    rows: Vec<Vec<CellValue>>,
    row_ids: Vec<usize>,
}

fn parse_lines(text: &str) -> Result<Parsed, TableError> {
    let mut lines = text.split('\n').enumerate().map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)));
    let (_, header) = lines.next().ok_or(TableError::Parse { line: 1, message: "empty input".into() })?;
    let names =
        header.strip_prefix("col:").ok_or_else(|| TableError::Parse { line: 1, message: "expected `col: ` header".into() })?;
    let names = names.strip_prefix(' ').unwrap_or(names);
    let columns: Vec<String> =
        if names.trim().is_empty() { Vec::new() } else { names.split(DELIM).map(|s| s.trim().to_string()).collect() };

    let mut rows = Vec::new();
    let mut row_ids = Vec::new();
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| TableError::Parse { line: line_no, message };
        let rest = line.strip_prefix("row ").ok_or_else(|| err("expected `row N: `".into()))?;
        let (id, body) = rest.split_once(':').ok_or_else(|| err("missing `:` after row index".into()))?;
        let id: usize = id.trim().parse().map_err(|_| err(format!("bad row index `{id}`")))?;
        if id == 0 {
            return Err(err("row indices start at 1".into()));
        }
        if row_ids.last().is_some_and(|&prev| prev >= id) {
            return Err(err(format!("row {id} is out of order")));
        }
        let body = body.strip_prefix(' ').unwrap_or(body);
        let values: Vec<CellValue> = if columns.is_empty() && body.trim().is_empty() {
            Vec::new()
        } else {
            body.split(DELIM).map(CellValue::parse).collect()
        };
        if values.len() != columns.len() {
            return Err(err(format!("{} values for {} columns", values.len(), columns.len())));
        }
        rows.push(values);
        row_ids.push(id);
    }
    Ok(Parsed { columns, rows, row_ids })
}

/// Parses serialized text into a table whose `col_ids` are `0..M`.
pub fn parse_table(text: &str) -> Result<Table, TableError> {
    let p = parse_lines(text)?;
    let col_ids = (0..p.columns.len()).collect();
    Table::from_parts(p.columns, p.rows, p.row_ids, col_ids)
}

/// Parses serialized text as a view of `raw`, resolving column names to
/// their original indices.
pub fn parse_subtable(text: &str, raw: &Table) -> Result<Table, TableError> {
    let p = parse_lines(text)?;
    let mut col_ids = Vec::with_capacity(p.columns.len());
    let mut columns = Vec::with_capacity(p.columns.len());
    for name in &p.columns {
        let pos = raw.position_of_name(name).ok_or_else(|| TableError::UnknownColumn(name.clone()))?;
        col_ids.push(raw.col_ids()[pos]);
        columns.push(raw.columns()[pos].clone());
    }
    Table::from_parts(columns, p.rows, p.row_ids, col_ids)
}
