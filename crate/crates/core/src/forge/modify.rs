//! The clause modification space used for negatives and noisy proposals.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::sql::{exec_clause, Atom, BoundColumn, ClauseKind, ClauseOp, CompareOp, Literal, Predicate};
use crate::table::{canonicalize, CellSet, CellValue, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModificationKind {
    ValueSwap,
    OperatorSwap,
    DropConjunct,
    AddSpuriousConjunct,
    DropGoldColumn,
    KeepExtraColumn,
}

impl ModificationKind {
    pub const ALL: [ModificationKind; 6] = [
        ModificationKind::ValueSwap,
        ModificationKind::OperatorSwap,
        ModificationKind::DropConjunct,
        ModificationKind::AddSpuriousConjunct,
        ModificationKind::DropGoldColumn,
        ModificationKind::KeepExtraColumn,
    ];
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Modification {
    pub kind: ModificationKind,
    pub clause: ClauseOp,
}

/// A modification together with its execution on the parent sub-table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ForgedStep {
    pub kind: ModificationKind,
    pub clause: ClauseOp,
    pub table: Table,
}

fn swapped_op(op: CompareOp) -> Option<CompareOp> {
    Some(match op {
        CompareOp::Lt => CompareOp::Le,
        CompareOp::Le => CompareOp::Lt,
        CompareOp::Gt => CompareOp::Ge,
        CompareOp::Ge => CompareOp::Gt,
        CompareOp::Eq => CompareOp::Ne,
        CompareOp::Ne => CompareOp::Eq,
        CompareOp::In => return None,
    })
}

/// Distinct non-null values of one raw column, sorted, of the same kind as `like`.
fn domain(raw: &Table, col: &BoundColumn, like: &CellValue) -> Vec<CellValue> {
    let Some(pos) = raw.position_of_col_id(col.index) else {
        return Vec::new();
    };
    let set: BTreeSet<&CellValue> = raw.column_values(pos).filter(|v| v.same_kind_cmp(like).is_some()).collect();
    let mut out: Vec<CellValue> = Vec::with_capacity(set.len());
    for v in set {
        // Numeric equality ignores scale; keep one representative per value.
        if out.last().is_none_or(|l| l.same_kind_cmp(v) != Some(std::cmp::Ordering::Equal)) {
            out.push(v.clone());
        }
    }
    out
}

fn same(a: &CellValue, b: &CellValue) -> bool {
    a.same_kind_cmp(b) == Some(std::cmp::Ordering::Equal)
}

fn value_swaps(atom: &Atom<BoundColumn>, raw: &Table) -> Vec<Literal> {
    match &atom.rhs {
        Literal::Scalar(v) if v.is_null() => Vec::new(),
        Literal::Scalar(v @ CellValue::Number(_)) => {
            let dom = domain(raw, &atom.column, v);
            let below = dom.iter().rev().find(|d| d.same_kind_cmp(v) == Some(std::cmp::Ordering::Less));
            let above = dom.iter().find(|d| d.same_kind_cmp(v) == Some(std::cmp::Ordering::Greater));
            below.into_iter().chain(above).map(|d| Literal::Scalar(d.clone())).collect()
        }
        Literal::Scalar(v) => domain(raw, &atom.column, v).into_iter().filter(|d| !same(d, v)).map(Literal::Scalar).collect(),
        Literal::List(items) => {
            let mut out = Vec::new();
            for (j, item) in items.iter().enumerate() {
                if item.is_null() {
                    continue;
                }
                for d in domain(raw, &atom.column, item) {
                    if items.iter().any(|i| same(i, &d)) {
                        continue;
                    }
                    let mut list = items.clone();
                    list[j] = d;
                    out.push(Literal::List(list));
                }
            }
            out
        }
    }
}

fn and_with(pred: &Predicate<BoundColumn>, extra: Predicate<BoundColumn>) -> Predicate<BoundColumn> {
    match pred {
        Predicate::And(ch) => Predicate::And(ch.iter().cloned().chain([extra]).collect()),
        other => Predicate::And(vec![other.clone(), extra]),
    }
}

/// Atoms that cut some but not all rows of `gold_next`, built from its values.
fn spurious_atoms(gold_next: &Table) -> Vec<Predicate<BoundColumn>> {
    let mut out = Vec::new();
    for (pos, (name, &index)) in gold_next.columns().iter().zip(gold_next.col_ids()).enumerate() {
        let column = BoundColumn { index, name: name.clone() };
        let values: Vec<&CellValue> = gold_next.column_values(pos).filter(|v| !v.is_null()).collect();
        let numbers: BTreeSet<_> = values.iter().filter_map(|v| v.as_number().map(|d| d.normalize())).collect();
        let texts: BTreeSet<&CellValue> = values.iter().copied().filter(|v| matches!(v, CellValue::Text(_))).collect();
        let atom = |op, v: CellValue| Predicate::Atom(Atom { column: column.clone(), op, rhs: Literal::Scalar(v) });
        if numbers.len() >= 2 {
            let (lo, hi) = (*numbers.first().unwrap(), *numbers.last().unwrap());
            out.push(atom(CompareOp::Lt, CellValue::Number(hi)));
            out.push(atom(CompareOp::Gt, CellValue::Number(lo)));
        }
        if texts.len() >= 2 || (texts.len() == 1 && !numbers.is_empty()) {
            out.extend(texts.into_iter().map(|v| atom(CompareOp::Ne, v.clone())));
        }
    }
    out
}

/// Every modified clause derivable from `clause`, grouped by kind in a fixed
/// order. Nothing here is executed or filtered.
pub fn candidate_modifications(clause: &ClauseOp, parent: &Table, gold_next: &Table, raw: &Table) -> Vec<Modification> {
    let mut out = Vec::new();
    let mut push = |kind, kind_body: ClauseKind| {
        out.push(Modification { kind, clause: ClauseOp { order_index: clause.order_index, kind: kind_body } })
    };
    match &clause.kind {
        ClauseKind::RowFilter(pred) => {
            let atoms = pred.atoms();
            for (i, atom) in atoms.iter().enumerate() {
                for rhs in value_swaps(atom, raw) {
                    let swapped = Atom { column: atom.column.clone(), op: atom.op, rhs };
                    push(ModificationKind::ValueSwap, ClauseKind::RowFilter(pred.replace_atom(i, swapped)));
                }
            }
            for (i, atom) in atoms.iter().enumerate() {
                if let Some(op) = swapped_op(atom.op) {
                    let swapped = Atom { column: atom.column.clone(), op, rhs: atom.rhs.clone() };
                    push(ModificationKind::OperatorSwap, ClauseKind::RowFilter(pred.replace_atom(i, swapped)));
                }
            }
            if let Predicate::And(ch) | Predicate::Or(ch) = pred {
                if ch.len() >= 2 {
                    for i in 0..ch.len() {
                        let mut rest = ch.clone();
                        rest.remove(i);
                        let body = if rest.len() == 1 {
                            rest.pop().unwrap()
                        } else if matches!(pred, Predicate::And(_)) {
                            Predicate::And(rest)
                        } else {
                            Predicate::Or(rest)
                        };
                        push(ModificationKind::DropConjunct, ClauseKind::RowFilter(body));
                    }
                }
            }
            for extra in spurious_atoms(gold_next) {
                push(ModificationKind::AddSpuriousConjunct, ClauseKind::RowFilter(and_with(pred, extra)));
            }
        }
        ClauseKind::ColumnProject(cols) => {
            if cols.len() >= 2 {
                for i in 0..cols.len() {
                    let mut rest = cols.clone();
                    rest.remove(i);
                    push(ModificationKind::DropGoldColumn, ClauseKind::ColumnProject(rest));
                }
            }
            for (name, &index) in parent.columns().iter().zip(parent.col_ids()) {
                if cols.iter().all(|c| c.index != index) {
                    let extra = BoundColumn { index, name: name.clone() };
                    push(ModificationKind::KeepExtraColumn, ClauseKind::project(cols.iter().cloned().chain([extra])));
                }
            }
        }
    }
    out
}

/// Draws up to `limit` valid negatives for one step.
///
/// Kinds are visited round-robin in a shuffled order, each kind's candidates
/// in shuffled order. A candidate survives if it executes on `parent`, keeps
/// at least one row and column, and its cell set differs from the parent,
/// from `gold_next`, and from every negative already drawn.
pub fn forge_step<R: Rng + ?Sized>(
    clause: &ClauseOp,
    parent: &Table,
    gold_next: &Table,
    raw: &Table,
    limit: usize,
    rng: &mut R,
) -> Vec<ForgedStep> {
    if limit == 0 {
        return Vec::new();
    }
    let mut groups: BTreeMap<ModificationKind, Vec<Modification>> = BTreeMap::new();
    for m in candidate_modifications(clause, parent, gold_next, raw) {
        groups.entry(m.kind).or_default().push(m);
    }
    let mut queues: Vec<Vec<Modification>> = groups
        .into_values()
        .map(|mut g| {
            g.shuffle(rng);
            g.reverse();
            g
        })
        .collect();
    queues.shuffle(rng);

    let cells = |t: &Table| canonicalize(t, raw).ok();
    let mut seen: HashSet<CellSet> = [parent, gold_next].into_iter().filter_map(cells).collect();
    let mut out = Vec::new();
    while out.len() < limit && queues.iter().any(|q| !q.is_empty()) {
        for q in queues.iter_mut() {
            if out.len() >= limit {
                break;
            }
            while let Some(m) = q.pop() {
                let Ok(table) = exec_clause(&m.clause, parent) else { continue };
                if table.is_empty() {
                    continue;
                }
                let Some(c) = cells(&table) else { continue };
                if seen.insert(c) {
                    out.push(ForgedStep { kind: m.kind, clause: m.clause, table });
                    break;
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_for;
    use crate::sql::{decompose, parse_sql};
    use crate::table::fixtures::employees;

    fn employee_ops() -> Vec<ClauseOp> {
        let q = parse_sql(
            "SELECT COUNT(Employee), City, \"Hire Year\", Salary FROM employees \
             WHERE Department = 'Engineering' AND City IN ('Tokyo', 'Osaka') AND \"Hire Year\" > 2020 AND Salary > 130000",
        )
        .unwrap();
        decompose(&q, &employees()).unwrap()
    }

    fn chain(ops: &[ClauseOp]) -> Vec<Table> {
        let mut cur = vec![employees()];
        for op in ops {
            let next = exec_clause(op, cur.last().unwrap()).unwrap();
            cur.push(next);
        }
        cur
    }

    #[test]
    fn operator_swap_on_boundary_free_data_is_degenerate() {
        let ops = employee_ops();
        let t = chain(&ops);
        let raw = employees();
        let ge = candidate_modifications(&ops[3], &t[3], &t[4], &raw)
            .into_iter()
            .find(|m| m.kind == ModificationKind::OperatorSwap)
            .unwrap();
        assert_eq!(ge.clause.to_string(), "filter Salary >= 130000");
        assert_eq!(exec_clause(&ge.clause, &t[3]).unwrap(), t[4]);
        let drawn = forge_step(&ops[3], &t[3], &t[4], &raw, 100, &mut rng_for(&[0]));
        assert!(drawn.iter().all(|d| d.kind != ModificationKind::OperatorSwap));
    }

    #[test]
    fn numeric_value_swap_uses_nearest_neighbours() {
        let ops = employee_ops();
        let t = chain(&ops);
        let swaps: Vec<String> = candidate_modifications(&ops[2], &t[2], &t[3], &employees())
            .into_iter()
            .filter(|m| m.kind == ModificationKind::ValueSwap)
            .map(|m| m.clause.to_string())
            .collect();
        assert_eq!(swaps, vec!["filter \"Hire Year\" > 2019", "filter \"Hire Year\" > 2021"]);
    }

    #[test]
    fn drop_gold_column_differs_in_one_column() {
        let ops = employee_ops();
        let t = chain(&ops);
        let raw = employees();
        let drawn = forge_step(&ops[4], &t[4], &t[5], &raw, 100, &mut rng_for(&[1]));
        let drop_salary = drawn
            .iter()
            .find(|d| d.kind == ModificationKind::DropGoldColumn && !d.table.columns().contains(&"Salary".to_string()))
            .expect("dropping Salary is valid");
        let gold = canonicalize(&t[5], &raw).unwrap();
        let neg = canonicalize(&drop_salary.table, &raw).unwrap();
        assert!(neg.is_subset(&gold));
        let missing: Vec<Cell> = gold.iter().filter(|c| !neg.contains(c)).collect();
        assert_eq!(missing.len(), 1);
        assert_eq!(missing[0].col, 4);
    }

    use crate::table::Cell;

    #[test]
    fn drawn_negatives_are_valid_and_distinct() {
        let ops = employee_ops();
        let t = chain(&ops);
        let raw = employees();
        for (s, op) in ops.iter().enumerate() {
            let drawn = forge_step(op, &t[s], &t[s + 1], &raw, 100, &mut rng_for(&[s as u64]));
            let mut cells = HashSet::new();
            for d in &drawn {
                assert!(!d.table.is_empty());
                assert_ne!(d.table, t[s]);
                assert_ne!(d.table, t[s + 1]);
                assert_eq!(exec_clause(&d.clause, &t[s]).unwrap(), d.table);
                assert!(cells.insert(canonicalize(&d.table, &raw).unwrap()));
            }
        }
    }

    #[test]
    fn text_value_swap_and_spurious_conjuncts() {
        let ops = employee_ops();
        let t = chain(&ops);
        let mods = candidate_modifications(&ops[0], &t[0], &t[1], &employees());
        let swaps: Vec<String> =
            mods.iter().filter(|m| m.kind == ModificationKind::ValueSwap).map(|m| m.clause.to_string()).collect();
        assert!(swaps.contains(&"filter Department = 'Sales'".to_string()));
        assert!(!swaps.contains(&"filter Department = 'Engineering'".to_string()));
        let spurious: Vec<String> =
            mods.iter().filter(|m| m.kind == ModificationKind::AddSpuriousConjunct).map(|m| m.clause.to_string()).collect();
        assert!(spurious.contains(&"filter Department = 'Engineering' AND Salary < 140000".to_string()));
        // Department has one value in the gold output, so no spurious atom on it.
        assert!(spurious.iter().all(|s| !s.contains("Department !=")));
    }

    #[test]
    fn drop_disjunct_and_zero_limit() {
        let raw = employees();
        let q = parse_sql("SELECT Employee FROM t WHERE City = 'Tokyo' OR Level = 'L3'").unwrap();
        let ops = decompose(&q, &raw).unwrap();
        let next = exec_clause(&ops[0], &raw).unwrap();
        let drops: Vec<String> = candidate_modifications(&ops[0], &raw, &next, &raw)
            .into_iter()
            .filter(|m| m.kind == ModificationKind::DropConjunct)
            .map(|m| m.clause.to_string())
            .collect();
        assert_eq!(drops, vec!["filter Level = 'L3'", "filter City = 'Tokyo'"]);
        assert!(forge_step(&ops[0], &raw, &next, &raw, 0, &mut rng_for(&[0])).is_empty());
    }
}
