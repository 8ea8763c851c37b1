use super::{parse_table, CellValue, Table, TableError};

/// Reads CSV text (first record is the header) as a raw table.
pub fn from_csv(text: &str) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_reader(text.as_bytes());
    let columns: Vec<String> =
        reader.headers().map_err(|e| TableError::Csv(e.to_string()))?.iter().map(|h| h.trim().to_string()).collect();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| TableError::Csv(e.to_string()))?;
        rows.push(record.iter().map(CellValue::parse).collect());
    }
    Table::new_raw(columns, rows)
}

/// Serialized text if it starts with `col: `, CSV otherwise.
pub fn parse_any(text: &str) -> Result<Table, TableError> {
    if text.starts_with("col:") {
        parse_table(text)
    } else {
        from_csv(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::serialize;

    #[test]
    fn csv_and_line_format_agree() {
        let csv = "Employee,City,Salary\nRina Nakamura,Tokyo,140000\n\"Sato, Akira\",Osaka,\n";
        let a = from_csv(csv).unwrap();
        let b = parse_any(&serialize(&a)).unwrap();
        assert_eq!(a, b);
        assert!(a.rows()[1][2].is_null());
        assert_eq!(parse_any(csv).unwrap(), a);
    }

    #[test]
    fn ragged_csv_is_an_error() {
        assert!(matches!(from_csv("A,B\n1\n"), Err(TableError::Csv(_))));
    }
}
