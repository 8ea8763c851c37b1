use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rust_decimal::Decimal;

use super::TableError;

/// A single data value.
///
/// Numbers compare numerically (`3.5 == 3.50`) but keep their written scale.
/// Text is stored trimmed. Values of different kinds are never equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellValue {
    Text(String),
    Number(Decimal),
    Null,
}

impl CellValue {
    pub fn text(s: impl Into<String>) -> Self {
        CellValue::Text(s.into().trim().to_string())
    }

    pub fn number(d: Decimal) -> Self {
        CellValue::Number(d)
    }

    /// Classifies raw text: empty → Null, canonical decimal → Number, else Text.
    pub fn parse(raw: &str) -> Self {
        let s = raw.trim();
        if s.is_empty() {
            return CellValue::Null;
        }
        if is_canonical_decimal(s) {
            if let Ok(d) = Decimal::from_str(s) {
                return CellValue::Number(d);
            }
        }
        CellValue::Text(s.to_string())
    }

    pub fn is_null(&self) -> bool {
        matches!(self, CellValue::Null)
    }

    pub fn as_number(&self) -> Option<Decimal> {
        match self {
            CellValue::Number(d) => Some(*d),
            _ => None,
        }
    }

    /// Ordering between two values of the same non-null kind.
    pub fn same_kind_cmp(&self, other: &CellValue) -> Option<Ordering> {
        match (self, other) {
            (CellValue::Number(a), CellValue::Number(b)) => Some(a.cmp(b)),
            (CellValue::Text(a), CellValue::Text(b)) => Some(a.as_str().cmp(b.as_str())),
            _ => None,
        }
    }
}

impl fmt::Display for CellValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellValue::Text(s) => f.write_str(s),
            CellValue::Number(d) => write!(f, "{d}"),
            CellValue::Null => Ok(()),
        }
    }
}

/// `-?(0|[1-9][0-9]*)(\.[0-9]+)?` without negative zero, so that the parsed
/// decimal prints back to exactly the same text.
fn is_canonical_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').unwrap_or(s);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    if int.is_empty() || !int.bytes().all(|b| b.is_ascii_digit()) {
        return false;
    }
    if int.len() > 1 && int.starts_with('0') {
        return false;
    }
    if let Some(f) = frac {
        if f.is_empty() || !f.bytes().all(|b| b.is_ascii_digit()) {
            return false;
        }
    }
    if s.starts_with('-') && body.bytes().all(|b| b == b'0' || b == b'.') {
        return false;
    }
    // Decimal carries 28 significant digits; anything longer stays text.
    body.bytes().filter(u8::is_ascii_digit).count() <= 28
}

/// Rejects text the ` | ` grammar could not read back.
pub(crate) fn check_text(s: &str) -> Result<(), TableError> {
    if s.contains(" | ") || s.contains('\n') || s.contains('\r') || s.starts_with("| ") || s.ends_with(" |") {
        return Err(TableError::DelimiterInValue(s.to_string()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification() {
        assert_eq!(CellValue::parse("  "), CellValue::Null);
        assert_eq!(CellValue::parse("3.5"), CellValue::Number(Decimal::from_str("3.5").unwrap()));
        assert_eq!(CellValue::parse("hi"), CellValue::text("hi"));
        for s in ["007", "1e5", "-0", "-0.00", "1.", ".5", "120,000", "+3"] {
            assert!(matches!(CellValue::parse(s), CellValue::Text(_)), "{s}");
        }
    }

    #[test]
    fn numbers_round_trip_their_text() {
        for s in ["0", "0.50", "-12.030", "140000", "9999999999999999999999999999"] {
            assert_eq!(CellValue::parse(s).to_string(), s);
        }
    }

    #[test]
    fn number_equality_is_numeric() {
        assert_eq!(CellValue::parse("3.5"), CellValue::parse("3.50"));
        assert_ne!(CellValue::parse("3"), CellValue::text("3x"));
        assert_ne!(CellValue::Null, CellValue::text(""));
    }
}
