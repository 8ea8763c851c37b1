//! Gold trajectories, off-trajectory negatives and training-corpus records.
//!
//! A trajectory `T_0 = raw, T_1, …, T_n` is obtained by executing the
//! decomposed clauses of a gold query one at a time. Negatives at step `t`
//! come from executing a modified `c_t` on the gold parent `T_{t-1}`.

mod corpus;
mod modify;
mod pipeline;

pub use corpus::{emit_corpora, emit_instance, Corpora, CorpusRecord, RecordKind, RecordMeta};
pub use modify::{candidate_modifications, forge_step, ForgedStep, Modification, ModificationKind};
pub use pipeline::{forge_all, forge_instance, parse_instances, Blocklist, ForgeOutcome, ForgedInstance, Instance, SkipReason};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::rng_for;
use crate::sql::{decompose, exec_clause, exec_full, ClauseOp, SqlError, SqlQuery};
use crate::table::Table;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ForgeError {
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error("gold final sub-table is empty")]
    DegenerateGold,
    #[error("raw table has no rows or no columns")]
    EmptyRaw,
    #[error("invalid emitter config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrajectoryStep {
    pub clause: ClauseOp,
    pub subtable: Table,
}

/// Invariant: `steps` is non-empty and each subtable is the execution of its
/// clause on the previous subtable (or on `raw` for the first).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    pub question: String,
    pub raw: Table,
    pub steps: Vec<TrajectoryStep>,
}

impl Trajectory {
    /// Number of clauses `n`.
    pub fn n(&self) -> usize {
        self.steps.len()
    }

    pub fn gold_final(&self) -> &Table {
        &self.steps.last().expect("trajectory has steps").subtable
    }

    /// `T_0` for `t = 0`, otherwise the gold sub-table after `t` clauses.
    pub fn table_at(&self, t: usize) -> &Table {
        if t == 0 {
            &self.raw
        } else {
            &self.steps[t - 1].subtable
        }
    }

    pub fn clauses(&self) -> impl Iterator<Item = &ClauseOp> {
        self.steps.iter().map(|s| &s.clause)
    }
}

pub fn build_trajectory(question: &str, query: &SqlQuery, raw: &Table) -> Result<Trajectory, ForgeError> {
    if raw.is_empty() {
        return Err(ForgeError::EmptyRaw);
    }
    let mut steps = Vec::new();
    let mut current = raw.clone();
    for clause in decompose(query, raw)? {
        current = exec_clause(&clause, &current)?;
        steps.push(TrajectoryStep { clause, subtable: current.clone() });
    }
    if current.is_empty() {
        return Err(ForgeError::DegenerateGold);
    }
    debug_assert_eq!(Ok(&current), exec_full(query, raw).as_ref());
    Ok(Trajectory { question: question.to_string(), raw: raw.clone(), steps })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmitterConfig {
    pub lambda_correction_weight: f64,
    pub beta_dpo: f64,
    pub alpha: f64,
    pub negatives_per_step: usize,
    pub rng_seed: u64,
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self { lambda_correction_weight: 1.0, beta_dpo: 0.2, alpha: 1.5, negatives_per_step: 2, rng_seed: 0 }
    }
}

impl EmitterConfig {
    pub fn validate(&self) -> Result<(), ForgeError> {
        for (name, v) in [("lambda", self.lambda_correction_weight), ("beta", self.beta_dpo), ("alpha", self.alpha)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(ForgeError::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeStep {
    /// 1-based step index `t`; the parent is `T_{t-1}`.
    pub step: usize,
    pub modified_clause: ClauseOp,
    pub negative_subtable: Table,
    pub kind: ModificationKind,
}

/// Seeded negatives for every step of `traj`, ordered by step then kind.
///
/// The random stream for step `t` depends only on the seed, `instance_id`
/// and `t`, so instances can be forged in any order.
pub fn forge_negatives(traj: &Trajectory, cfg: &EmitterConfig, instance_id: u64) -> Vec<NegativeStep> {
    let mut out = Vec::new();
    for (i, step) in traj.steps.iter().enumerate() {
        let t = i + 1;
        let mut rng = rng_for(&[cfg.rng_seed, instance_id, t as u64]);
        let mut drawn: Vec<NegativeStep> =
            forge_step(&step.clause, traj.table_at(i), &step.subtable, &traj.raw, cfg.negatives_per_step, &mut rng)
                .into_iter()
                .map(|f| NegativeStep { step: t, modified_clause: f.clause, negative_subtable: f.table, kind: f.kind })
                .collect();
        drawn.sort_by_key(|n| n.kind);
        out.extend(drawn);
    }
    out
}
