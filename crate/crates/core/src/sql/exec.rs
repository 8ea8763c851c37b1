use std::cmp::Ordering;

use super::ast::{Atom, CompareOp, Literal, Predicate};
use super::decompose::{bind, BoundColumn, BoundQuery, ClauseKind, ClauseOp};
use super::{SqlError, SqlQuery};
use crate::table::{CellValue, Table};

/// Evaluates one comparison against a cell value.
///
/// A null cell never matches, and values of different kinds compare false
/// under every operator, including `!=`.
pub fn eval_atom(op: CompareOp, rhs: &Literal, value: &CellValue) -> bool {
    if value.is_null() {
        return false;
    }
    match (op, rhs) {
        (CompareOp::In, Literal::List(items)) => items.iter().any(|l| value.same_kind_cmp(l) == Some(Ordering::Equal)),
        (CompareOp::In, Literal::Scalar(l)) => value.same_kind_cmp(l) == Some(Ordering::Equal),
        (_, Literal::List(_)) => false,
        (op, Literal::Scalar(l)) => match value.same_kind_cmp(l) {
            None => false,
            Some(ord) => match op {
                CompareOp::Eq => ord == Ordering::Equal,
                CompareOp::Ne => ord != Ordering::Equal,
                CompareOp::Lt => ord == Ordering::Less,
                CompareOp::Le => ord != Ordering::Greater,
                CompareOp::Gt => ord == Ordering::Greater,
                CompareOp::Ge => ord != Ordering::Less,
                CompareOp::In => unreachable!(),
            },
        },
    }
}

fn eval(pred: &Predicate<usize>, row: &[CellValue]) -> bool {
    match pred {
        Predicate::Atom(Atom { column, op, rhs }) => eval_atom(*op, rhs, &row[*column]),
        Predicate::And(ch) => ch.iter().all(|c| eval(c, row)),
        Predicate::Or(ch) => ch.iter().any(|c| eval(c, row)),
        Predicate::Not(c) => !eval(c, row),
    }
}

fn locate(table: &Table, col: &BoundColumn) -> Result<usize, SqlError> {
    table.position_of_col_id(col.index).ok_or_else(|| SqlError::Bind(col.name.clone()))
}

/// Keeps the rows of `table` satisfying `pred`.
pub fn filter_rows(pred: &Predicate<BoundColumn>, table: &Table) -> Result<Table, SqlError> {
    let positional = pred.try_map(&mut |c: &BoundColumn| locate(table, c))?;
    Ok(table.retain_rows(|row| eval(&positional, row)))
}

fn project(cols: &[BoundColumn], table: &Table) -> Result<Table, SqlError> {
    let positions = cols.iter().map(|c| locate(table, c)).collect::<Result<Vec<_>, _>>()?;
    Ok(table.project_positions(&positions))
}

/// Applies one clause; fails if it references a column no longer present.
pub fn exec_clause(op: &ClauseOp, table: &Table) -> Result<Table, SqlError> {
    match &op.kind {
        ClauseKind::RowFilter(p) => filter_rows(p, table),
        ClauseKind::ColumnProject(cols) => project(cols, table),
    }
}

/// Whole WHERE in one pass over `raw`, then the projection.
pub fn exec_query(bound: &BoundQuery, raw: &Table) -> Result<Table, SqlError> {
    let filtered = match &bound.filter {
        Some(p) => filter_rows(p, raw)?,
        None => raw.clone(),
    };
    project(&bound.projection, &filtered)
}

pub fn exec_full(query: &SqlQuery, raw: &Table) -> Result<Table, SqlError> {
    exec_query(&bind(query, raw)?, raw)
}
