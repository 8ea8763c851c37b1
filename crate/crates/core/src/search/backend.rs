//! Pruner and verifier interfaces with in-process implementations.

use rand::seq::IndexedRandom;
use rand::Rng;
use thiserror::Error;

use crate::forge::{forge_step, Trajectory};
use crate::scoring::{score, ScoreConfig, ScoreError};
use crate::seed::{fnv1a, rng_for};
use crate::sql::{filter_rows, ClauseKind, ClauseOp};
use crate::table::{canonicalize, serialize, CellSet, Table};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("transport error after {attempts} attempt(s): {message}")]
    Transport { attempts: usize, message: String },
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("backend rejected input: {0}")]
    Invalid(String),
}

impl From<ScoreError> for BackendError {
    fn from(e: ScoreError) -> Self {
        BackendError::Invalid(e.to_string())
    }
}

/// One proposal request. `nonce` distinguishes otherwise identical requests
/// so seeded back-ends can draw independent samples; it is not sent over the wire.
#[derive(Debug, Clone, Copy)]
pub struct ProposeRequest<'a> {
    pub question: &'a str,
    pub raw: &'a Table,
    pub current: &'a Table,
    pub count: usize,
    pub nonce: u64,
}

/// Proposes candidate next sub-tables. Each returned table should be a
/// sub-table of `current`; the search drops any that are not.
pub trait PrunerBackend: Send + Sync {
    fn propose(&self, req: &ProposeRequest<'_>) -> Result<Vec<Table>, BackendError>;

    /// Concurrent calls the back-end tolerates; 1 means strictly serial.
    fn max_concurrency(&self) -> usize {
        usize::MAX
    }
}

/// Scores a sub-table in `[0, 1]`.
pub trait VerifierBackend: Send + Sync {
    fn assess(&self, question: &str, raw: &Table, candidate: &Table) -> Result<f64, BackendError>;

    fn max_concurrency(&self) -> usize {
        usize::MAX
    }
}

/// Applies `clause` if every column it needs is present. Filters on missing
/// columns are skipped; projections keep whichever listed columns remain.
fn apply_lenient(clause: &ClauseOp, current: &Table) -> Option<(ClauseOp, Table)> {
    match &clause.kind {
        ClauseKind::RowFilter(pred) => {
            let next = filter_rows(pred, current).ok()?;
            Some((clause.clone(), next))
        }
        ClauseKind::ColumnProject(cols) => {
            let kept: Vec<_> = cols.iter().filter(|c| current.position_of_col_id(c.index).is_some()).cloned().collect();
            if kept.is_empty() {
                return None;
            }
            let positions: Vec<usize> = kept.iter().filter_map(|c| current.position_of_col_id(c.index)).collect();
            let next = current.project_positions(&positions);
            Some((ClauseOp { order_index: clause.order_index, kind: ClauseKind::ColumnProject(kept) }, next))
        }
    }
}

/// Replays the gold clauses: the next sub-table is the result of the first
/// clause (in order) that changes `current`, or `current` itself when none do.
#[derive(Debug, Clone)]
pub struct OraclePruner {
    clauses: Vec<ClauseOp>,
}

impl OraclePruner {
    pub fn new(traj: &Trajectory) -> Self {
        Self { clauses: traj.clauses().cloned().collect() }
    }

    /// The changing gold clause (restricted to `current`) and its output.
    pub fn gold_step(&self, current: &Table) -> Option<(ClauseOp, Table)> {
        self.clauses.iter().filter_map(|c| apply_lenient(c, current)).find(|(_, next)| next != current)
    }

    pub fn next_table(&self, current: &Table) -> Table {
        self.gold_step(current).map_or_else(|| current.clone(), |(_, t)| t)
    }
}

impl PrunerBackend for OraclePruner {
    fn propose(&self, req: &ProposeRequest<'_>) -> Result<Vec<Table>, BackendError> {
        Ok(vec![self.next_table(req.current); req.count])
    }
}

/// Gold replay corrupted with probability `error_rate` per proposal.
///
/// A corrupted proposal is a forged negative of the gold step on `current`;
/// failing that, `current` minus one random row or column; failing that,
/// `current` unchanged. It never equals the gold next sub-table. Once the
/// gold clauses are exhausted every proposal is a stop.
#[derive(Debug, Clone)]
pub struct NoisyPruner {
    oracle: OraclePruner,
    raw: Table,
    error_rate: f64,
    seed: u64,
}

impl NoisyPruner {
    pub fn new(traj: &Trajectory, error_rate: f64, seed: u64) -> Result<Self, BackendError> {
        if !(0.0..=1.0).contains(&error_rate) {
            return Err(BackendError::Invalid(format!("error_rate {error_rate} outside [0, 1]")));
        }
        Ok(Self { oracle: OraclePruner::new(traj), raw: traj.raw.clone(), error_rate, seed })
    }

    fn corrupt<R: Rng>(&self, clause: &ClauseOp, current: &Table, gold_next: &Table, rng: &mut R) -> Table {
        if let Some(f) = forge_step(clause, current, gold_next, &self.raw, 1, rng).pop() {
            return f.table;
        }
        let mut options = Vec::new();
        if current.n_rows() >= 2 {
            for r in 0..current.n_rows() {
                let keep: Vec<usize> = (0..current.n_rows()).filter(|&p| p != r).collect();
                options.push(current.select_row_positions(&keep));
            }
        }
        if current.n_cols() >= 2 {
            for c in 0..current.n_cols() {
                let keep: Vec<usize> = (0..current.n_cols()).filter(|&p| p != c).collect();
                options.push(current.project_positions(&keep));
            }
        }
        options.retain(|t| t != gold_next);
        options.choose(rng).cloned().unwrap_or_else(|| current.clone())
    }
}

impl PrunerBackend for NoisyPruner {
    fn propose(&self, req: &ProposeRequest<'_>) -> Result<Vec<Table>, BackendError> {
        let Some((clause, gold_next)) = self.oracle.gold_step(req.current) else {
            return Ok(vec![req.current.clone(); req.count]);
        };
        let fingerprint = fnv1a(serialize(req.current).as_bytes());
        Ok((0..req.count as u64)
            .map(|i| {
                let mut rng = rng_for(&[self.seed, fingerprint, req.nonce, i]);
                if rng.random_bool(self.error_rate) {
                    self.corrupt(&clause, req.current, &gold_next, &mut rng)
                } else {
                    gold_next.clone()
                }
            })
            .collect())
    }
}

/// `F_α` against a known gold final sub-table.
#[derive(Debug, Clone)]
pub struct ExactVerifier {
    raw: Table,
    gold: CellSet,
    cfg: ScoreConfig,
}

impl ExactVerifier {
    pub fn new(raw: &Table, gold_final: &Table, cfg: ScoreConfig) -> Result<Self, BackendError> {
        let gold = canonicalize(gold_final, raw).map_err(|e| BackendError::Invalid(e.to_string()))?;
        cfg.validate()?;
        if gold.is_empty() {
            return Err(ScoreError::EmptyReference.into());
        }
        Ok(Self { raw: raw.clone(), gold, cfg })
    }

    pub fn for_trajectory(traj: &Trajectory, cfg: ScoreConfig) -> Result<Self, BackendError> {
        Self::new(&traj.raw, traj.gold_final(), cfg)
    }

    pub fn score_table(&self, candidate: &Table) -> Result<f64, BackendError> {
        let cells = canonicalize(candidate, &self.raw).map_err(|e| BackendError::Invalid(e.to_string()))?;
        Ok(score(&cells, &self.gold, &self.cfg)?.f_alpha)
    }
}

impl VerifierBackend for ExactVerifier {
    fn assess(&self, _question: &str, _raw: &Table, candidate: &Table) -> Result<f64, BackendError> {
        self.score_table(candidate)
    }
}
