//! Batch forging over a JSONL file of `{question, sql, table}` instances.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{build_trajectory, emit_instance, forge_negatives, Corpora, EmitterConfig, ForgeError, NegativeStep, Trajectory};
use crate::par::{map_ordered, ExecMode};
use crate::sql::{parse_sql, SqlError};
use crate::table::{parse_any, serialize, Table, TableError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    pub question: String,
    pub sql: String,
    /// CSV text, or the `col: …` serialization.
    pub table: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SkipReason {
    Json(String),
    Table(TableError),
    Sql(SqlError),
    DegenerateGold,
    EmptyRaw,
    Blocklisted,
}

impl SkipReason {
    /// Stable reason code for logs and manifests.
    pub fn code(&self) -> &'static str {
        match self {
            SkipReason::Json(_) => "bad_json",
            SkipReason::Table(_) => "bad_table",
            SkipReason::Sql(SqlError::Syntax { .. }) => "sql_syntax",
            SkipReason::Sql(SqlError::Unsupported(_)) => "unsupported_feature",
            SkipReason::Sql(SqlError::Bind(_)) => "bind_error",
            SkipReason::DegenerateGold => "degenerate_gold",
            SkipReason::EmptyRaw => "empty_raw",
            SkipReason::Blocklisted => "blocklisted",
        }
    }
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Json(m) => write!(f, "{}: {m}", self.code()),
            SkipReason::Table(e) => write!(f, "{}: {e}", self.code()),
            SkipReason::Sql(e) => write!(f, "{}: {e}", self.code()),
            _ => f.write_str(self.code()),
        }
    }
}

impl From<ForgeError> for SkipReason {
    fn from(e: ForgeError) -> Self {
        match e {
            ForgeError::Sql(s) => SkipReason::Sql(s),
            ForgeError::DegenerateGold => SkipReason::DegenerateGold,
            ForgeError::EmptyRaw => SkipReason::EmptyRaw,
            ForgeError::Config(m) => SkipReason::Json(m),
        }
    }
}

/// Raw tables excluded from forging, compared by serialization.
#[derive(Debug, Clone, Default)]
pub struct Blocklist {
    tables: HashSet<String>,
}

impl Blocklist {
    pub fn from_tables<'a>(tables: impl IntoIterator<Item = &'a Table>) -> Self {
        Self { tables: tables.into_iter().map(serialize).collect() }
    }

    /// Tables of every parseable instance line; other lines are ignored.
    pub fn from_instances_jsonl(text: &str) -> Self {
        let tables: Vec<Table> = parse_instances(text)
            .into_iter()
            .filter_map(|(_, r)| r.ok())
            .filter_map(|inst| parse_any(&inst.table).ok())
            .collect();
        Self::from_tables(&tables)
    }

    pub fn contains(&self, table: &Table) -> bool {
        self.tables.contains(&serialize(table))
    }

    pub fn len(&self) -> usize {
        self.tables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }
}

/// Parses each non-blank line; the id is the 0-based line index.
pub fn parse_instances(text: &str) -> Vec<(u64, Result<Instance, SkipReason>)> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i as u64, serde_json::from_str(l).map_err(|e| SkipReason::Json(e.to_string()))))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForgedInstance {
    pub instance_id: u64,
    pub trajectory: Trajectory,
    pub negatives: Vec<NegativeStep>,
}

pub fn forge_instance(
    instance_id: u64,
    inst: &Instance,
    cfg: &EmitterConfig,
    blocklist: Option<&Blocklist>,
) -> Result<ForgedInstance, SkipReason> {
    let raw = parse_any(&inst.table).map_err(SkipReason::Table)?;
    if blocklist.is_some_and(|b| b.contains(&raw)) {
        return Err(SkipReason::Blocklisted);
    }
    let query = parse_sql(&inst.sql).map_err(SkipReason::Sql)?;
    let trajectory = build_trajectory(&inst.question, &query, &raw)?;
    let negatives = forge_negatives(&trajectory, cfg, instance_id);
    Ok(ForgedInstance { instance_id, trajectory, negatives })
}

#[derive(Debug, Clone, Default)]
pub struct ForgeOutcome {
    pub forged: Vec<ForgedInstance>,
    pub skipped: Vec<(u64, SkipReason)>,
    pub corpora: Corpora,
}

/// Forges every instance and emits all corpora, ordered by instance id
/// whatever the execution mode.
pub fn forge_all(
    instances: &[(u64, Result<Instance, SkipReason>)],
    cfg: &EmitterConfig,
    blocklist: Option<&Blocklist>,
    mode: ExecMode,
) -> ForgeOutcome {
    let results = map_ordered(mode, instances, |(id, inst)| {
        let forged = match inst {
            Ok(inst) => forge_instance(*id, inst, cfg, blocklist),
            Err(e) => Err(e.clone()),
        }?;
        let corpora = emit_instance(forged.instance_id, &forged.trajectory, &forged.negatives, cfg);
        Ok::<_, SkipReason>((forged, corpora))
    });
    let mut out = ForgeOutcome::default();
    for ((id, _), r) in instances.iter().zip(results) {
        match r {
            Ok((forged, corpora)) => {
                out.forged.push(forged);
                out.corpora.append(corpora);
            }
            Err(e) => out.skipped.push((*id, e)),
        }
    }
    out
}
