use std::collections::BTreeMap;

use super::{CellValue, Table, TableError};

/// One indexed data cell of a raw table.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cell {
    /// 1-based original row index.
    pub row: usize,
    /// 0-based original column index.
    pub col: usize,
    pub value: CellValue,
}

/// Canonical cell-set view of a sub-table, keyed by `(row, col)`.
///
/// Header cells are not part of the set.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellSet {
    cells: BTreeMap<(usize, usize), CellValue>,
}

impl CellSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a cell; returns false if `(row, col)` was already present.
    pub fn insert(&mut self, cell: Cell) -> bool {
        use std::collections::btree_map::Entry;
        match self.cells.entry((cell.row, cell.col)) {
            Entry::Occupied(_) => false,
            Entry::Vacant(v) => {
                v.insert(cell.value);
                true
            }
        }
    }

    pub fn remove(&mut self, row: usize, col: usize) -> Option<CellValue> {
        self.cells.remove(&(row, col))
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<&CellValue> {
        self.cells.get(&(row, col))
    }

    /// A cell matches only if position and value both agree.
    pub fn contains(&self, cell: &Cell) -> bool {
        self.get(cell.row, cell.col) == Some(&cell.value)
    }

    pub fn iter(&self) -> impl Iterator<Item = Cell> + '_ {
        self.cells.iter().map(|(&(row, col), v)| Cell { row, col, value: v.clone() })
    }

    pub fn intersection_len(&self, other: &CellSet) -> usize {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        small.cells.iter().filter(|(k, v)| large.cells.get(k) == Some(v)).count()
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.len() <= other.len() && self.intersection_len(other) == self.len()
    }
}

impl FromIterator<Cell> for CellSet {
    fn from_iter<I: IntoIterator<Item = Cell>>(iter: I) -> Self {
        let mut set = CellSet::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

/// Canonical cells of `table`, checked against `raw`.
pub fn canonicalize(table: &Table, raw: &Table) -> Result<CellSet, TableError> {
    let mut col_pos = Vec::with_capacity(table.n_cols());
    for &c in table.col_ids() {
        let p = raw.position_of_col_id(c).ok_or(TableError::IndexMismatch { row: 0, col: c })?;
        col_pos.push(p);
    }
    let mut set = CellSet::new();
    for (row, &r) in table.rows().iter().zip(table.row_ids()) {
        let rp = raw
            .position_of_row_id(r)
            .ok_or(TableError::IndexMismatch { row: r, col: table.col_ids().first().copied().unwrap_or(0) })?;
        let raw_row = &raw.rows()[rp];
        for ((v, &c), &p) in row.iter().zip(table.col_ids()).zip(&col_pos) {
            if raw_row[p] != *v {
                return Err(TableError::IndexMismatch { row: r, col: c });
            }
            set.insert(Cell { row: r, col: c, value: v.clone() });
        }
    }
    Ok(set)
}
