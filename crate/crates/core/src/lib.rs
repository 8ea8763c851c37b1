//! Table pruning for table question answering.
//!
//! A single-table SQL query is split into clause-level steps whose execution
//! yields a gold trajectory of shrinking sub-tables ([`forge`]). Sub-tables
//! are scored by an F-alpha over canonical cell sets ([`scoring`]), and a
//! verifier-guided beam search over pruning steps ([`search`]) picks the best
//! sub-table from proposals made by pluggable pruner back-ends.
//!
//! Sub-tables keep the original 1-based row ids and 0-based column ids of
//! their raw table, so every table in a trajectory is comparable cell by cell.
//! With the default `parallel` feature, instance- and candidate-level work
//! runs on rayon; outputs never depend on the execution mode.

pub mod bench;
pub mod compress;
pub mod forge;
pub mod par;
pub mod scoring;
pub mod search;
pub mod seed;
pub mod sql;
pub mod synth;
pub mod table;
