use std::collections::BTreeMap;
use std::fmt;

use super::ast::{write_ident, AggArg, DisplayColumn, Operand, Predicate, SelectItem, SqlQuery};
use super::SqlError;
use crate::table::Table;

/// A column resolved against the raw table.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BoundColumn {
    /// Original 0-based column index.
    pub index: usize,
    /// Column name as spelled in the raw table.
    pub name: String,
}

impl DisplayColumn for BoundColumn {
    fn fmt_column(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ident(f, &self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseKind {
    RowFilter(Predicate<BoundColumn>),
    /// Non-empty, sorted by original index, no duplicates.
    ColumnProject(Vec<BoundColumn>),
}

impl ClauseKind {
    /// Projection onto `cols`, normalized to ascending unique indices.
    pub fn project(cols: impl IntoIterator<Item = BoundColumn>) -> ClauseKind {
        let map: BTreeMap<usize, BoundColumn> = cols.into_iter().map(|c| (c.index, c)).collect();
        ClauseKind::ColumnProject(map.into_values().collect())
    }
}

/// One executable pruning step; `order_index` counts from 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseOp {
    pub order_index: usize,
    pub kind: ClauseKind,
}

impl ClauseOp {
    pub fn is_filter(&self) -> bool {
        matches!(self.kind, ClauseKind::RowFilter(_))
    }
}

impl fmt::Display for ClauseOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ClauseKind::RowFilter(p) => write!(f, "filter {p}"),
            ClauseKind::ColumnProject(cols) => {
                f.write_str("keep columns ")?;
                for (i, c) in cols.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str(&c.name)?;
                }
                Ok(())
            }
        }
    }
}

/// A query with every column resolved: the WHERE predicate and the set of
/// columns kept by the final projection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundQuery {
    pub filter: Option<Predicate<BoundColumn>>,
    pub projection: Vec<BoundColumn>,
}

fn resolve(raw: &Table, name: &str) -> Result<BoundColumn, SqlError> {
    let pos = raw.position_of_name(name).ok_or_else(|| SqlError::Bind(name.to_string()))?;
    Ok(BoundColumn { index: raw.col_ids()[pos], name: raw.columns()[pos].clone() })
}

fn all_columns(raw: &Table) -> Vec<BoundColumn> {
    raw.columns().iter().zip(raw.col_ids()).map(|(n, &i)| BoundColumn { index: i, name: n.clone() }).collect()
}

/// Resolves column names case-insensitively against `raw`.
///
/// The projection keeps columns referenced by SELECT, aggregate arguments,
/// GROUP BY and HAVING. When those reference nothing (`SELECT COUNT(*)`), the
/// WHERE columns are kept instead, and failing that every column.
pub fn bind(query: &SqlQuery, raw: &Table) -> Result<BoundQuery, SqlError> {
    let filter = match &query.where_clause {
        Some(p) => Some(p.try_map(&mut |name: &String| resolve(raw, name))?),
        None => None,
    };

    let mut keep = Vec::new();
    let mut star = false;
    let agg_arg = |arg: &AggArg, keep: &mut Vec<BoundColumn>| -> Result<(), SqlError> {
        if let AggArg::Column { name, .. } = arg {
            keep.push(resolve(raw, name)?);
        }
        Ok(())
    };
    for item in &query.select_items {
        match item {
            SelectItem::Star => star = true,
            SelectItem::Column(c) => keep.push(resolve(raw, c)?),
            SelectItem::Aggregate { arg, .. } => agg_arg(arg, &mut keep)?,
        }
    }
    for c in &query.group_by {
        keep.push(resolve(raw, c)?);
    }
    if let Some(h) = &query.having {
        for atom in h.atoms() {
            match &atom.column {
                Operand::Column(c) => keep.push(resolve(raw, c)?),
                Operand::Aggregate { arg, .. } => agg_arg(arg, &mut keep)?,
            }
        }
    }
    if star {
        keep = all_columns(raw);
    }
    if keep.is_empty() {
        if let Some(f) = &filter {
            keep = f.atoms().into_iter().map(|a| a.column.clone()).collect();
        }
    }
    if keep.is_empty() {
        keep = all_columns(raw);
    }
    let ClauseKind::ColumnProject(projection) = ClauseKind::project(keep) else { unreachable!() };
    Ok(BoundQuery { filter, projection })
}

/// Linearizes a query into row filters (one per top-level conjunct, in
/// source order) followed by a single column projection.
pub fn decompose(query: &SqlQuery, raw: &Table) -> Result<Vec<ClauseOp>, SqlError> {
    let bound = bind(query, raw)?;
    let mut kinds = Vec::new();
    if let Some(f) = &bound.filter {
        for conjunct in f.conjuncts() {
            kinds.push(ClauseKind::RowFilter(conjunct.clone()));
        }
    }
    kinds.push(ClauseKind::ColumnProject(bound.projection));
    Ok(kinds.into_iter().enumerate().map(|(i, kind)| ClauseOp { order_index: i + 1, kind }).collect())
}
