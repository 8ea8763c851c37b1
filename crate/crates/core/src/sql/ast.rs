use std::fmt;

use crate::table::CellValue;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Avg,
    Min,
    Max,
}

impl AggFunc {
    pub(crate) fn from_keyword(word: &str) -> Option<Self> {
        match word.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggFunc::Count),
            "SUM" => Some(AggFunc::Sum),
            "AVG" => Some(AggFunc::Avg),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Avg => "AVG",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AggArg {
    Star,
    Column { name: String, distinct: bool },
}

/// Left-hand side of a comparison. Aggregates only appear under HAVING.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operand {
    Column(String),
    Aggregate { func: AggFunc, arg: AggArg },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SelectItem {
    Star,
    Column(String),
    Aggregate { func: AggFunc, arg: AggArg },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CompareOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    In,
}

impl CompareOp {
    pub fn is_order(self) -> bool {
        matches!(self, CompareOp::Lt | CompareOp::Le | CompareOp::Gt | CompareOp::Ge)
    }

    fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Lt => "<",
            CompareOp::Le => "<=",
            CompareOp::Gt => ">",
            CompareOp::Ge => ">=",
            CompareOp::In => "IN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Scalar(CellValue),
    /// Non-empty; only used with [`CompareOp::In`].
    List(Vec<CellValue>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom<C> {
    pub column: C,
    pub op: CompareOp,
    pub rhs: Literal,
}

/// Boolean tree over comparison atoms, generic over how columns are named.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Predicate<C> {
    Atom(Atom<C>),
    And(Vec<Predicate<C>>),
    Or(Vec<Predicate<C>>),
    Not(Box<Predicate<C>>),
}

impl<C> Predicate<C> {
    pub fn try_map<D, E>(&self, f: &mut impl FnMut(&C) -> Result<D, E>) -> Result<Predicate<D>, E> {
        Ok(match self {
            Predicate::Atom(a) => Predicate::Atom(Atom { column: f(&a.column)?, op: a.op, rhs: a.rhs.clone() }),
            Predicate::And(ch) => Predicate::And(ch.iter().map(|c| c.try_map(f)).collect::<Result<_, _>>()?),
            Predicate::Or(ch) => Predicate::Or(ch.iter().map(|c| c.try_map(f)).collect::<Result<_, _>>()?),
            Predicate::Not(c) => Predicate::Not(Box::new(c.try_map(f)?)),
        })
    }

    /// Atoms in left-to-right order.
    pub fn atoms(&self) -> Vec<&Atom<C>> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Atom<C>>) {
        match self {
            Predicate::Atom(a) => out.push(a),
            Predicate::And(ch) | Predicate::Or(ch) => ch.iter().for_each(|c| c.collect_atoms(out)),
            Predicate::Not(c) => c.collect_atoms(out),
        }
    }

    /// Top-level conjuncts, flattening nested ANDs.
    pub fn conjuncts(&self) -> Vec<&Predicate<C>> {
        match self {
            Predicate::And(ch) => ch.iter().flat_map(|c| c.conjuncts()).collect(),
            other => vec![other],
        }
    }
}

impl<C: Clone> Predicate<C> {
    /// Copy with the `index`-th atom (in [`Predicate::atoms`] order) replaced.
    pub fn replace_atom(&self, index: usize, atom: Atom<C>) -> Predicate<C> {
        let mut counter = 0;
        self.replace_atom_inner(index, &atom, &mut counter)
    }

    fn replace_atom_inner(&self, index: usize, atom: &Atom<C>, counter: &mut usize) -> Predicate<C> {
        match self {
            Predicate::Atom(a) => {
                let here = *counter;
                *counter += 1;
                if here == index {
                    Predicate::Atom(atom.clone())
                } else {
                    Predicate::Atom(a.clone())
                }
            }
            Predicate::And(ch) => Predicate::And(ch.iter().map(|c| c.replace_atom_inner(index, atom, counter)).collect()),
            Predicate::Or(ch) => Predicate::Or(ch.iter().map(|c| c.replace_atom_inner(index, atom, counter)).collect()),
            Predicate::Not(c) => Predicate::Not(Box::new(c.replace_atom_inner(index, atom, counter))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SqlQuery {
    pub distinct: bool,
    pub select_items: Vec<SelectItem>,
    pub source_table: String,
    pub where_clause: Option<Predicate<String>>,
    pub group_by: Vec<String>,
    pub having: Option<Predicate<Operand>>,
}

/// Plain identifiers print bare, anything else in double quotes.
pub(crate) fn write_ident(f: &mut fmt::Formatter<'_>, name: &str) -> fmt::Result {
    let plain = name.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        && !super::lexer::is_reserved(name);
    if plain {
        f.write_str(name)
    } else {
        write!(f, "\"{}\"", name.replace('"', "\"\""))
    }
}

pub(crate) fn write_value(f: &mut fmt::Formatter<'_>, v: &CellValue) -> fmt::Result {
    match v {
        CellValue::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
        CellValue::Number(d) => write!(f, "{d}"),
        CellValue::Null => f.write_str("NULL"),
    }
}

impl fmt::Display for AggArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AggArg::Star => f.write_str("*"),
            AggArg::Column { name, distinct } => {
                if *distinct {
                    f.write_str("DISTINCT ")?;
                }
                write_ident(f, name)
            }
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Column(c) => write_ident(f, c),
            Operand::Aggregate { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

impl fmt::Display for SelectItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SelectItem::Star => f.write_str("*"),
            SelectItem::Column(c) => write_ident(f, c),
            SelectItem::Aggregate { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

/// Rendering hook so the same tree printer serves every column type.
pub trait DisplayColumn {
    fn fmt_column(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result;
}

impl DisplayColumn for String {
    fn fmt_column(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_ident(f, self)
    }
}

impl DisplayColumn for Operand {
    fn fmt_column(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl<C: DisplayColumn> fmt::Display for Atom<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.column.fmt_column(f)?;
        write!(f, " {} ", self.op.symbol())?;
        match &self.rhs {
            Literal::Scalar(v) => write_value(f, v),
            Literal::List(vs) => {
                f.write_str("(")?;
                for (i, v) in vs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write_value(f, v)?;
                }
                f.write_str(")")
            }
        }
    }
}

impl<C: DisplayColumn> fmt::Display for Predicate<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<C: DisplayColumn>(f: &mut fmt::Formatter<'_>, ch: &[Predicate<C>], sep: &str) -> fmt::Result {
            for (i, c) in ch.iter().enumerate() {
                if i > 0 {
                    f.write_str(sep)?;
                }
                match c {
                    Predicate::Atom(_) | Predicate::Not(_) => write!(f, "{c}")?,
                    _ => write!(f, "({c})")?,
                }
            }
            Ok(())
        }
        match self {
            Predicate::Atom(a) => write!(f, "{a}"),
            Predicate::And(ch) => join(f, ch, " AND "),
            Predicate::Or(ch) => join(f, ch, " OR "),
            Predicate::Not(c) => match c.as_ref() {
                Predicate::Atom(_) | Predicate::Not(_) => write!(f, "NOT {c}"),
                _ => write!(f, "NOT ({c})"),
            },
        }
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.select_items.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str(" FROM ")?;
        write_ident(f, &self.source_table)?;
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            for (i, c) in self.group_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_ident(f, c)?;
            }
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        Ok(())
    }
}
