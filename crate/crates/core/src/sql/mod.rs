//! Restricted single-table SQL: parsing, clause-level decomposition, and
//! execution of each clause on a [`Table`](crate::table::Table).
//!
//! The accepted dialect is
//!
//! ```text
//! query      = "SELECT" ["DISTINCT"] item {"," item} "FROM" name [["AS"] alias]
//!              ["WHERE" pred] ["GROUP" "BY" column {"," column}] ["HAVING" pred] [";"] ;
//! item       = "*" | agg | column ;
//! agg        = ("COUNT" | "SUM" | "AVG" | "MIN" | "MAX") "(" ("*" | ["DISTINCT"] column) ")" ;
//! pred       = conj {"OR" conj} ;
//! conj       = unary {"AND" unary} ;
//! unary      = "NOT" unary | "(" pred ")" | comparison ;
//! comparison = operand (cmp literal | ["NOT"] "IN" "(" literal {"," literal} ")") ;
//! operand    = column | agg ;                 (* aggregates only under HAVING *)
//! cmp        = "=" | "!=" | "<>" | "<" | "<=" | ">" | ">=" ;
//! literal    = string | ["-"] number | "NULL" ;
//! column     = word | '"' text '"' | "`" text "`" | "[" text "]" ;
//! ```

pub mod ast;
mod decompose;
mod exec;
mod lexer;
mod parser;

pub use ast::{AggArg, AggFunc, Atom, CompareOp, Literal, Operand, Predicate, SelectItem, SqlQuery};
pub use decompose::{bind, decompose, BoundColumn, BoundQuery, ClauseKind, ClauseOp};
pub use exec::{eval_atom, exec_clause, exec_full, exec_query, filter_rows};
pub use parser::parse_sql;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SqlError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unsupported feature: {0}")]
    Unsupported(String),
    #[error("unknown column `{0}`")]
    Bind(String),
}
