//! Recursive-descent parser for the single-table dialect.

use std::str::FromStr;

use rust_decimal::Decimal;

use super::ast::*;
use super::lexer::{is_reserved, lex, Tok, Token};
use super::SqlError;
use crate::table::CellValue;

const JOIN_WORDS: &[&str] = &["JOIN", "INNER", "LEFT", "RIGHT", "FULL", "OUTER", "CROSS", "NATURAL"];
const TAIL_WORDS: &[(&str, &str)] = &[
    ("ORDER", "ORDER BY"),
    ("LIMIT", "LIMIT"),
    ("OFFSET", "OFFSET"),
    ("UNION", "UNION"),
    ("INTERSECT", "INTERSECT"),
    ("EXCEPT", "EXCEPT"),
];

/// Parses one query of the restricted dialect.
pub fn parse_sql(text: &str) -> Result<SqlQuery, SqlError> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, at: 0, end: text.len() };
    let q = p.query()?;
    Ok(q)
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    end: usize,
}

fn unsupported(what: &str) -> SqlError {
    SqlError::Unsupported(what.to_string())
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.at).map(|t| &t.tok)
    }

    fn peek_at(&self, k: usize) -> Option<&Tok> {
        self.tokens.get(self.at + k).map(|t| &t.tok)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |t| t.pos)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.at).map(|t| t.tok.clone());
        self.at += 1;
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, SqlError> {
        Err(SqlError::Syntax { position: self.pos(), message: message.into() })
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Word(w)) if w.eq_ignore_ascii_case(kw))
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            self.error(format!("expected {kw}"))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok, what: &str) -> Result<(), SqlError> {
        if self.eat(tok) {
            Ok(())
        } else {
            self.error(format!("expected {what}"))
        }
    }

    fn query(&mut self) -> Result<SqlQuery, SqlError> {
        if self.is_kw("WITH") {
            return Err(unsupported("WITH"));
        }
        self.expect_kw("SELECT")?;
        let distinct = self.eat_kw("DISTINCT");
        let mut select_items = vec![self.select_item()?];
        while self.eat(&Tok::Comma) {
            select_items.push(self.select_item()?);
        }
        self.expect_kw("FROM")?;
        if self.peek() == Some(&Tok::LParen) {
            return Err(unsupported("subquery"));
        }
        let source_table = self.identifier("table name")?;
        if self.eat_kw("AS") {
            self.identifier("alias")?;
        } else if matches!(self.peek(), Some(Tok::Word(w)) if !is_reserved(w)) {
            self.bump();
        }
        self.reject_tail()?;
        if self.peek() == Some(&Tok::Comma) {
            return Err(unsupported("multiple tables in FROM"));
        }

        let mut where_clause = None;
        if self.eat_kw("WHERE") {
            let pred = self.predicate()?;
            where_clause = Some(pred.try_map(&mut |op: &Operand| match op {
                Operand::Column(c) => Ok(c.clone()),
                Operand::Aggregate { .. } => Err(unsupported("aggregate in WHERE")),
            })?);
        }
        self.reject_tail()?;
        let mut group_by = Vec::new();
        if self.eat_kw("GROUP") {
            self.expect_kw("BY")?;
            group_by.push(self.column()?);
            while self.eat(&Tok::Comma) {
                group_by.push(self.column()?);
            }
        }
        let mut having = None;
        if self.eat_kw("HAVING") {
            having = Some(self.predicate()?);
        }
        self.reject_tail()?;
        self.eat(&Tok::Semi);
        if self.peek().is_some() {
            return self.error("unexpected trailing input");
        }
        Ok(SqlQuery { distinct, select_items, source_table, where_clause, group_by, having })
    }

    fn reject_tail(&self) -> Result<(), SqlError> {
        if let Some(Tok::Word(w)) = self.peek() {
            let up = w.to_ascii_uppercase();
            if JOIN_WORDS.contains(&up.as_str()) {
                return Err(unsupported("JOIN"));
            }
            if let Some((_, name)) = TAIL_WORDS.iter().find(|(k, _)| *k == up) {
                return Err(unsupported(name));
            }
        }
        Ok(())
    }

    fn identifier(&mut self, what: &str) -> Result<String, SqlError> {
        match self.peek().cloned() {
            Some(Tok::Word(w)) if !is_reserved(&w) => {
                self.bump();
                Ok(w)
            }
            Some(Tok::Quoted(q)) => {
                self.bump();
                Ok(q)
            }
            _ => self.error(format!("expected {what}")),
        }
    }

    /// Column reference, accepting an optional `table.` qualifier.
    fn column(&mut self) -> Result<String, SqlError> {
        let first = self.identifier("column name")?;
        if self.peek() == Some(&Tok::Other('.')) {
            self.bump();
            return self.identifier("column name");
        }
        Ok(first)
    }

    fn aggregate_start(&self) -> Option<AggFunc> {
        match (self.peek(), self.peek_at(1)) {
            (Some(Tok::Word(w)), Some(Tok::LParen)) => AggFunc::from_keyword(w),
            _ => None,
        }
    }

    fn aggregate(&mut self, func: AggFunc) -> Result<(AggFunc, AggArg), SqlError> {
        self.bump();
        self.expect(&Tok::LParen, "`(`")?;
        let arg = if self.eat(&Tok::Star) {
            AggArg::Star
        } else {
            let distinct = self.eat_kw("DISTINCT");
            AggArg::Column { name: self.column()?, distinct }
        };
        if matches!(self.peek(), Some(Tok::Other(_) | Tok::Star | Tok::Minus)) {
            return Err(unsupported("arithmetic expressions"));
        }
        self.expect(&Tok::RParen, "`)`")?;
        Ok((func, arg))
    }

    fn select_item(&mut self) -> Result<SelectItem, SqlError> {
        if self.eat(&Tok::Star) {
            return Ok(SelectItem::Star);
        }
        let item = if let Some(func) = self.aggregate_start() {
            let (func, arg) = self.aggregate(func)?;
            SelectItem::Aggregate { func, arg }
        } else {
            SelectItem::Column(self.column()?)
        };
        if matches!(self.peek(), Some(Tok::Other(_) | Tok::Star | Tok::Minus)) {
            return Err(unsupported("arithmetic expressions"));
        }
        if self.eat_kw("AS") {
            self.identifier("alias")?;
        }
        Ok(item)
    }

    fn predicate(&mut self) -> Result<Predicate<Operand>, SqlError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_kw("OR") {
            parts.push(self.conjunction()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::Or(parts) })
    }

    fn conjunction(&mut self) -> Result<Predicate<Operand>, SqlError> {
        let mut parts = vec![self.unary()?];
        while self.eat_kw("AND") {
            parts.push(self.unary()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { Predicate::And(parts) })
    }

    fn unary(&mut self) -> Result<Predicate<Operand>, SqlError> {
        if self.eat_kw("NOT") {
            return Ok(Predicate::Not(Box::new(self.unary()?)));
        }
        if self.is_kw("EXISTS") {
            return Err(unsupported("EXISTS"));
        }
        if self.peek() == Some(&Tok::LParen) {
            if matches!(self.peek_at(1), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("SELECT")) {
                return Err(unsupported("subquery"));
            }
            self.bump();
            let inner = self.predicate()?;
            self.expect(&Tok::RParen, "`)`")?;
            return Ok(inner);
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Predicate<Operand>, SqlError> {
        let operand = if let Some(func) = self.aggregate_start() {
            let (func, arg) = self.aggregate(func)?;
            Operand::Aggregate { func, arg }
        } else {
            Operand::Column(self.column()?)
        };
        for kw in ["LIKE", "BETWEEN", "IS"] {
            if self.is_kw(kw) {
                return Err(unsupported(kw));
            }
        }
        let negated_in = self.is_kw("NOT") && matches!(self.peek_at(1), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("IN"));
        if negated_in {
            self.bump();
        }
        if self.eat_kw("IN") {
            self.expect(&Tok::LParen, "`(` after IN")?;
            if self.is_kw("SELECT") {
                return Err(unsupported("subquery"));
            }
            let mut list = vec![self.literal()?];
            while self.eat(&Tok::Comma) {
                list.push(self.literal()?);
            }
            self.expect(&Tok::RParen, "`)`")?;
            let atom = Predicate::Atom(Atom { column: operand, op: CompareOp::In, rhs: Literal::List(list) });
            return Ok(if negated_in { Predicate::Not(Box::new(atom)) } else { atom });
        }
        let op = match self.peek() {
            Some(Tok::Eq) => CompareOp::Eq,
            Some(Tok::Ne) => CompareOp::Ne,
            Some(Tok::Lt) => CompareOp::Lt,
            Some(Tok::Le) => CompareOp::Le,
            Some(Tok::Gt) => CompareOp::Gt,
            Some(Tok::Ge) => CompareOp::Ge,
            Some(Tok::Other(_) | Tok::Star | Tok::Minus) => return Err(unsupported("arithmetic expressions")),
            _ => return self.error("expected comparison operator"),
        };
        self.bump();
        if self.peek() == Some(&Tok::LParen) {
            if matches!(self.peek_at(1), Some(Tok::Word(w)) if w.eq_ignore_ascii_case("SELECT")) {
                return Err(unsupported("subquery"));
            }
            return Err(unsupported("expressions on the right-hand side"));
        }
        let value = self.literal()?;
        if matches!(self.peek(), Some(Tok::Other(_) | Tok::Star | Tok::Minus)) {
            return Err(unsupported("arithmetic expressions"));
        }
        Ok(Predicate::Atom(Atom { column: operand, op, rhs: Literal::Scalar(value) }))
    }

    fn literal(&mut self) -> Result<CellValue, SqlError> {
        let negative = self.eat(&Tok::Minus);
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.bump();
                let text = if negative { format!("-{n}") } else { n };
                Decimal::from_str(&text)
                    .map(CellValue::Number)
                    .or_else(|_| self.error(format!("numeric literal `{text}` out of range")))
            }
            Some(Tok::Str(s)) if !negative => {
                self.bump();
                Ok(CellValue::text(s))
            }
            Some(Tok::Word(w)) if !negative && w.eq_ignore_ascii_case("NULL") => {
                self.bump();
                Ok(CellValue::Null)
            }
            Some(Tok::Word(_) | Tok::Quoted(_)) if !negative => Err(unsupported("column-to-column comparison")),
            _ => self.error("expected literal"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(name: &str) -> String {
        name.to_string()
    }

    #[test]
    fn conjunction_example() {
        let q = parse_sql("SELECT COUNT(*) FROM t WHERE Department = 'Engineering' AND Salary > 130000").unwrap();
        assert_eq!(q.select_items, vec![SelectItem::Aggregate { func: AggFunc::Count, arg: AggArg::Star }]);
        assert_eq!(
            q.where_clause,
            Some(Predicate::And(vec![
                Predicate::Atom(Atom {
                    column: col("Department"),
                    op: CompareOp::Eq,
                    rhs: Literal::Scalar(CellValue::text("Engineering"))
                }),
                Predicate::Atom(Atom {
                    column: col("Salary"),
                    op: CompareOp::Gt,
                    rhs: Literal::Scalar(CellValue::parse("130000"))
                }),
            ]))
        );
    }

    #[test]
    fn minimal_query() {
        let q = parse_sql("SELECT a FROM t").unwrap();
        assert_eq!(q.select_items, vec![SelectItem::Column(col("a"))]);
        assert_eq!(q.where_clause, None);
        assert!(q.group_by.is_empty() && q.having.is_none());
    }

    #[test]
    fn in_lists_not_and_precedence() {
        let q = parse_sql("select x from t where not a in ('p', 'q') or b <= -3 and c != 2;").unwrap();
        let w = q.where_clause.unwrap();
        let Predicate::Or(parts) = &w else { panic!("{w:?}") };
        assert!(matches!(&parts[0], Predicate::Not(_)));
        assert!(matches!(&parts[1], Predicate::And(v) if v.len() == 2));
        let q = parse_sql("SELECT x FROM t WHERE a NOT IN (1)").unwrap();
        assert!(matches!(q.where_clause, Some(Predicate::Not(_))));
    }

    #[test]
    fn group_by_and_having() {
        let q = parse_sql("SELECT City, AVG(Salary) FROM t GROUP BY City HAVING COUNT(DISTINCT Employee) > 2").unwrap();
        assert_eq!(q.group_by, vec![col("City")]);
        let h = q.having.unwrap();
        assert!(matches!(h, Predicate::Atom(Atom { column: Operand::Aggregate { func: AggFunc::Count, .. }, .. })));
    }

    #[test]
    fn quoted_identifiers() {
        let q = parse_sql("SELECT \"Hire Year\", [Salary] FROM employees AS e WHERE `Hire Year` > 2020").unwrap();
        assert_eq!(q.select_items, vec![SelectItem::Column(col("Hire Year")), SelectItem::Column(col("Salary"))]);
    }

    #[test]
    fn unsupported_features() {
        let cases = [
            ("SELECT a FROM t JOIN u ON t.x = u.x", "JOIN"),
            ("SELECT a FROM t, u", "multiple tables in FROM"),
            ("SELECT a FROM t ORDER BY a", "ORDER BY"),
            ("SELECT a FROM t WHERE b = 1 LIMIT 3", "LIMIT"),
            ("SELECT a FROM (SELECT a FROM t)", "subquery"),
            ("SELECT a FROM t WHERE b IN (SELECT b FROM u)", "subquery"),
            ("SELECT a FROM t WHERE b LIKE 'x%'", "LIKE"),
            ("SELECT a FROM t WHERE b + 1 > 2", "arithmetic expressions"),
            ("SELECT a FROM t WHERE COUNT(*) > 2", "aggregate in WHERE"),
            ("SELECT a FROM t WHERE a = b", "column-to-column comparison"),
        ];
        for (sql, what) in cases {
            assert_eq!(parse_sql(sql), Err(SqlError::Unsupported(what.into())), "{sql}");
        }
    }

    #[test]
    fn syntax_errors_carry_positions() {
        assert!(matches!(parse_sql("SELECT FROM t"), Err(SqlError::Syntax { position: 7, .. })));
        assert!(matches!(parse_sql("SELECT a FROM t WHERE"), Err(SqlError::Syntax { position: 21, .. })));
        assert!(matches!(parse_sql("SELECT a FROM t WHERE a IN ()"), Err(SqlError::Syntax { .. })));
        assert!(matches!(parse_sql("SELECT a t"), Err(SqlError::Syntax { .. })));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for sql in [
            "SELECT COUNT(Employee), City, \"Hire Year\" FROM t WHERE (a = 1 OR b IN ('x', 'y''z')) AND NOT c < -2.50",
            "SELECT DISTINCT * FROM \"my table\" GROUP BY a, b HAVING MAX(c) >= 3 OR a = NULL",
        ] {
            let q = parse_sql(sql).unwrap();
            let again = parse_sql(&q.to_string()).unwrap();
            assert_eq!(q, again, "{q}");
        }
    }
}
