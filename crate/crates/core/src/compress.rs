//! Before/after size accounting for pruned sub-tables.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::table::{Table, TableStats};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRow {
    pub instance_id: u64,
    pub raw: TableStats,
    pub pruned: TableStats,
    /// `1 − pruned cells / raw cells`.
    pub cell_compression: f64,
    /// `1 − pruned tokens / raw tokens`.
    pub token_compression: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CompressionReport {
    pub rows: Vec<CompressionRow>,
    /// Cell-weighted mean of the per-row compression, `1 − Σ pruned / Σ raw`.
    pub aggregate_cell_compression: f64,
    pub aggregate_token_compression: f64,
    /// Ids present on only one side.
    pub unpaired: Vec<u64>,
    /// Ids whose pruned table is not a sub-table of its raw table.
    pub not_subtable: Vec<u64>,
}

fn ratio_saved(pruned: usize, raw: usize) -> f64 {
    if raw == 0 {
        0.0
    } else {
        1.0 - pruned as f64 / raw as f64
    }
}

/// Pairs raw and pruned tables by instance id; rows come out sorted by id.
pub fn compression_report(raws: &[(u64, Table)], pruned: &[(u64, Table)]) -> CompressionReport {
    let raw_map: BTreeMap<u64, &Table> = raws.iter().map(|(i, t)| (*i, t)).collect();
    let pruned_map: BTreeMap<u64, &Table> = pruned.iter().map(|(i, t)| (*i, t)).collect();
    let mut report = CompressionReport::default();
    let (mut raw_cells, mut pruned_cells, mut raw_tokens, mut pruned_tokens) = (0, 0, 0, 0);
    for (&id, raw) in &raw_map {
        let Some(p) = pruned_map.get(&id) else {
            report.unpaired.push(id);
            continue;
        };
        if !p.is_subtable_of(raw) {
            report.not_subtable.push(id);
            continue;
        }
        let (rs, ps) = (raw.stats(), p.stats());
        raw_cells += rs.n_cells;
        pruned_cells += ps.n_cells;
        raw_tokens += rs.approx_tokens;
        pruned_tokens += ps.approx_tokens;
        report.rows.push(CompressionRow {
            instance_id: id,
            cell_compression: ratio_saved(ps.n_cells, rs.n_cells),
            token_compression: ratio_saved(ps.approx_tokens, rs.approx_tokens),
            raw: rs,
            pruned: ps,
        });
    }
    report.unpaired.extend(pruned_map.keys().filter(|id| !raw_map.contains_key(id)));
    report.unpaired.sort_unstable();
    report.aggregate_cell_compression = ratio_saved(pruned_cells, raw_cells);
    report.aggregate_token_compression = ratio_saved(pruned_tokens, raw_tokens);
    report
}

impl CompressionReport {
    pub const CSV_HEADER: &'static str =
        "instance_id,raw_rows,raw_cols,raw_cells,raw_tokens,pruned_rows,pruned_cols,pruned_cells,pruned_tokens,cell_compression,token_compression";

    /// Per-row lines followed by an `all` line with the aggregates.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::CSV_HEADER);
        let sum = |f: fn(&CompressionRow) -> usize| self.rows.iter().map(f).sum::<usize>();
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{:.4},{:.4}\n",
                r.instance_id,
                r.raw.n_rows,
                r.raw.n_cols,
                r.raw.n_cells,
                r.raw.approx_tokens,
                r.pruned.n_rows,
                r.pruned.n_cols,
                r.pruned.n_cells,
                r.pruned.approx_tokens,
                r.cell_compression,
                r.token_compression
            ));
        }
        out.push_str(&format!(
            "all,{},{},{},{},{},{},{},{},{:.4},{:.4}\n",
            sum(|r| r.raw.n_rows),
            sum(|r| r.raw.n_cols),
            sum(|r| r.raw.n_cells),
            sum(|r| r.raw.approx_tokens),
            sum(|r| r.pruned.n_rows),
            sum(|r| r.pruned.n_cols),
            sum(|r| r.pruned.n_cells),
            sum(|r| r.pruned.approx_tokens),
            self.aggregate_cell_compression,
            self.aggregate_token_compression
        ));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::fixtures::employees;

    #[test]
    fn identity_and_weighted_aggregate() {
        let raw = employees();
        let small = raw.select_row_positions(&[6]).project_positions(&[0, 2, 3, 4]);
        let half = raw.select_row_positions(&[0, 1, 2, 3]);
        let report = compression_report(
            &[(0, raw.clone()), (1, raw.clone()), (2, raw.clone())],
            &[(0, raw.clone()), (1, small), (2, half)],
        );
        assert_eq!(report.rows[0].cell_compression, 0.0);
        assert!((report.rows[1].cell_compression - (1.0 - 4.0 / 56.0)).abs() < 1e-12);
        assert_eq!(report.rows[2].cell_compression, 0.5);
        assert!((report.aggregate_cell_compression - (1.0 - (56.0 + 4.0 + 28.0) / 168.0)).abs() < 1e-12);
        let csv = report.to_csv();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().last().unwrap().starts_with("all,24,21,168,"));
    }

    #[test]
    fn flags_unpaired_and_foreign() {
        let raw = employees();
        let other = crate::table::parse_table("col: Employee\nrow 1: Nobody").unwrap();
        let report = compression_report(&[(0, raw.clone()), (1, raw.clone())], &[(1, other), (5, raw)]);
        assert_eq!(report.unpaired, vec![0, 5]);
        assert_eq!(report.not_subtable, vec![1]);
        assert!(report.rows.is_empty());
    }
}
