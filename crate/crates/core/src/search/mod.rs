//! Verifier-guided search over pruning trajectories.
//!
//! Beam search keeps the `k` best sub-tables per depth: the first depth
//! draws `k·b` proposals from `T_0`, every later depth expands each beam
//! entry `b` times. The result is the best sub-table seen at any depth,
//! `T_0` included. Best-of-N runs `N = k·b` independent chains of depth
//! `D_max` and keeps the best final; Sequential runs one chain of depth
//! `D_max·k·b` so all three spend the same number of proposals.

mod backend;
pub mod remote;

pub use backend::{BackendError, ExactVerifier, NoisyPruner, OraclePruner, ProposeRequest, PrunerBackend, VerifierBackend};

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par::{map_bounded, ExecMode};
use crate::seed::derive_seed;
use crate::table::{canonicalize, CellSet, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    Beam,
    BestOfN,
    Sequential,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "beam" => Ok(Strategy::Beam),
            "bestofn" | "bon" => Ok(Strategy::BestOfN),
            "sequential" | "seq" => Ok(Strategy::Sequential),
            other => Err(format!("unknown strategy `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub beam_width: usize,
    pub branching: usize,
    pub max_depth: usize,
    pub strategy: Strategy,
    pub rng_seed: u64,
    #[serde(default)]
    pub exec_mode: ExecMode,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { beam_width: 2, branching: 2, max_depth: 4, strategy: Strategy::Beam, rng_seed: 0, exec_mode: ExecMode::Parallel }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.beam_width == 0 || self.branching == 0 || self.max_depth == 0 {
            return Err(SearchError::Config("k, b and max depth must all be at least 1".into()));
        }
        Ok(())
    }

    /// Proposals requested by any strategy: `k·b·D_max`.
    pub fn proposal_budget(&self) -> usize {
        self.beam_width * self.branching * self.max_depth
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("raw table is empty")]
    EmptyRaw,
    #[error("{stage} at depth {depth}: {source}")]
    Backend {
        stage: &'static str,
        depth: usize,
        #[source]
        source: BackendError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredCandidate {
    #[serde(serialize_with = "ser_table")]
    pub table: Table,
    pub score: f64,
    pub depth: usize,
    /// Index of the parent in the previous beam (or chain index for
    /// Best-of-N); `None` for `T_0`.
    pub parent: Option<usize>,
    pub branch: usize,
}

fn ser_table<S: serde::Serializer>(t: &Table, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&crate::table::serialize(t))
}

/// Entries sorted by descending score with stable tie order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Beam {
    pub depth: usize,
    pub entries: Vec<ScoredCandidate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub depth: usize,
    pub requested: usize,
    pub returned: usize,
    /// Proposals that were not sub-tables of their parent.
    pub invalid: usize,
    pub duplicates: usize,
    /// `(parent, branch)` of each selected entry, in beam order.
    pub selected: Vec<(Option<usize>, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchResult {
    pub strategy: Strategy,
    pub best: ScoredCandidate,
    pub all_beams: Vec<Beam>,
    pub pruner_calls: usize,
    pub verifier_calls: usize,
    pub trace: Vec<TraceStep>,
}

struct Driver<'a> {
    question: &'a str,
    raw: &'a Table,
    pruner: &'a dyn PrunerBackend,
    verifier: &'a dyn VerifierBackend,
    cfg: &'a SearchConfig,
    cache: HashMap<CellSet, f64>,
    pruner_calls: usize,
    verifier_calls: usize,
}

/// Clamps a reply into `[0, 1]`; NaN becomes 0.
fn sanitize(score: f64) -> f64 {
    if score.is_nan() {
        0.0
    } else {
        score.clamp(0.0, 1.0)
    }
}

/// Sort key: score descending, then depth, parent and branch ascending.
fn rank(a: &ScoredCandidate, b: &ScoredCandidate) -> std::cmp::Ordering {
    b.score.total_cmp(&a.score).then(a.depth.cmp(&b.depth)).then(a.parent.cmp(&b.parent)).then(a.branch.cmp(&b.branch))
}

struct Proposal {
    table: Table,
    parent: Option<usize>,
    branch: usize,
}

impl Driver<'_> {
    fn nonce(&self, depth: usize, parent: usize) -> u64 {
        derive_seed(&[self.cfg.rng_seed, depth as u64, parent as u64])
    }

    /// Runs one propose call per `(parent index, parent table, count)` job.
    fn propose(
        &mut self,
        depth: usize,
        jobs: &[(Option<usize>, &Table, usize)],
    ) -> Result<(Vec<Proposal>, TraceStep), SearchError> {
        let replies = map_bounded(self.cfg.exec_mode, self.pruner.max_concurrency(), jobs, |&(parent, current, count)| {
            let req = ProposeRequest {
                question: self.question,
                raw: self.raw,
                current,
                count,
                nonce: self.nonce(depth, parent.map_or(0, |p| p + 1)),
            };
            self.pruner.propose(&req)
        });
        let mut trace = TraceStep { depth, requested: 0, returned: 0, invalid: 0, duplicates: 0, selected: Vec::new() };
        let mut out = Vec::new();
        for (&(parent, current, count), reply) in jobs.iter().zip(replies) {
            self.pruner_calls += count;
            trace.requested += count;
            let reply = reply.map_err(|source| SearchError::Backend { stage: "propose", depth, source })?;
            for (branch, table) in reply.into_iter().take(count).enumerate() {
                trace.returned += 1;
                if table.is_subtable_of(current) {
                    out.push(Proposal { table, parent, branch });
                } else {
                    trace.invalid += 1;
                }
            }
        }
        Ok((out, trace))
    }

    /// Scores tables, calling the verifier once per distinct cell set.
    fn assess(&mut self, depth: usize, tables: &[&Table]) -> Result<Vec<f64>, SearchError> {
        let keys: Vec<CellSet> = tables
            .iter()
            .map(|t| canonicalize(t, self.raw))
            .collect::<Result<_, _>>()
            .map_err(|e| SearchError::Backend { stage: "assess", depth, source: BackendError::Invalid(e.to_string()) })?;
        let mut todo: Vec<(usize, &Table)> = Vec::new();
        let mut pending = std::collections::HashSet::new();
        for (i, k) in keys.iter().enumerate() {
            if !self.cache.contains_key(k) && pending.insert(k) {
                todo.push((i, tables[i]));
            }
        }
        let scores = map_bounded(self.cfg.exec_mode, self.verifier.max_concurrency(), &todo, |(_, t)| {
            self.verifier.assess(self.question, self.raw, t)
        });
        self.verifier_calls += todo.len();
        for ((i, _), s) in todo.iter().zip(scores) {
            let s = s.map_err(|source| SearchError::Backend { stage: "assess", depth, source })?;
            self.cache.insert(keys[*i].clone(), sanitize(s));
        }
        Ok(keys.iter().map(|k| self.cache[k]).collect())
    }

    /// Dedups proposals by cell set (earliest wins), scores them, keeps the top `k`.
    fn select(
        &mut self,
        depth: usize,
        proposals: Vec<Proposal>,
        k: usize,
        trace: &mut TraceStep,
    ) -> Result<Vec<ScoredCandidate>, SearchError> {
        let mut seen = std::collections::HashSet::new();
        let mut pool = Vec::new();
        for p in proposals {
            let key = canonicalize(&p.table, self.raw).expect("proposals are sub-tables of raw");
            if seen.insert(key) {
                pool.push(p);
            } else {
                trace.duplicates += 1;
            }
        }
        let tables: Vec<&Table> = pool.iter().map(|p| &p.table).collect();
        let scores = self.assess(depth, &tables)?;
        let mut scored: Vec<ScoredCandidate> = pool
            .into_iter()
            .zip(scores)
            .map(|(p, score)| ScoredCandidate { table: p.table, score, depth, parent: p.parent, branch: p.branch })
            .collect();
        scored.sort_by(rank);
        scored.truncate(k);
        trace.selected = scored.iter().map(|c| (c.parent, c.branch)).collect();
        Ok(scored)
    }

    fn root(&mut self) -> Result<ScoredCandidate, SearchError> {
        let score = self.assess(0, &[self.raw])?[0];
        Ok(ScoredCandidate { table: self.raw.clone(), score, depth: 0, parent: None, branch: 0 })
    }

    fn beam(&mut self, k: usize, b: usize, depth_limit: usize) -> Result<(Vec<Beam>, Vec<TraceStep>), SearchError> {
        let root = self.root()?;
        let mut beams = vec![Beam { depth: 0, entries: vec![root] }];
        let mut traces = Vec::new();
        for depth in 1..=depth_limit {
            let prev = &beams.last().unwrap().entries;
            let jobs: Vec<(Option<usize>, &Table, usize)> = if depth == 1 {
                vec![(None, &prev[0].table, k * b)]
            } else {
                prev.iter().enumerate().map(|(i, e)| (Some(i), &e.table, b)).collect()
            };
            let (proposals, mut trace) = self.propose(depth, &jobs)?;
            let entries = self.select(depth, proposals, k, &mut trace)?;
            traces.push(trace);
            if entries.is_empty() {
                break;
            }
            beams.push(Beam { depth, entries });
        }
        Ok((beams, traces))
    }

    fn best_of_n(&mut self, n: usize, depth_limit: usize) -> Result<(Vec<Beam>, Vec<TraceStep>), SearchError> {
        let mut traces = Vec::new();
        let raw = self.raw;
        let (first, trace) = self.propose(1, &[(None, raw, n)])?;
        traces.push(trace);
        // Chain r continues from its own first proposal; chains whose first
        // proposal was missing or invalid are dropped.
        let mut chains: Vec<(usize, Table)> = first.into_iter().map(|p| (p.branch, p.table)).collect();
        for depth in 2..=depth_limit {
            let jobs: Vec<(Option<usize>, &Table, usize)> = chains.iter().map(|(r, t)| (Some(*r), t, 1)).collect();
            let (props, trace) = self.propose(depth, &jobs)?;
            traces.push(trace);
            for p in props {
                let r = p.parent.expect("chain proposals carry their chain");
                if let Some(slot) = chains.iter_mut().find(|(c, _)| *c == r) {
                    slot.1 = p.table;
                }
            }
        }
        let finals: Vec<&Table> = chains.iter().map(|(_, t)| t).collect();
        let scores = self.assess(depth_limit, &finals)?;
        let mut entries: Vec<ScoredCandidate> = chains
            .iter()
            .zip(scores)
            .map(|((r, t), score)| ScoredCandidate { table: t.clone(), score, depth: depth_limit, parent: Some(*r), branch: 0 })
            .collect();
        entries.sort_by(rank);
        if let Some(last) = traces.last_mut() {
            last.selected = entries.iter().map(|c| (c.parent, c.branch)).collect();
        }
        Ok((vec![Beam { depth: depth_limit, entries }], traces))
    }
}

/// Runs the configured strategy. A depth where no proposal survives ends
/// the search with the best sub-table found so far.
pub fn run_search(
    question: &str,
    raw: &Table,
    pruner: &dyn PrunerBackend,
    verifier: &dyn VerifierBackend,
    cfg: &SearchConfig,
) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    if raw.is_empty() {
        return Err(SearchError::EmptyRaw);
    }
    let mut d = Driver { question, raw, pruner, verifier, cfg, cache: HashMap::new(), pruner_calls: 0, verifier_calls: 0 };
    let (k, b, depth) = (cfg.beam_width, cfg.branching, cfg.max_depth);
    let (all_beams, trace) = match cfg.strategy {
        Strategy::Beam => d.beam(k, b, depth)?,
        Strategy::Sequential => d.beam(1, 1, depth * k * b)?,
        Strategy::BestOfN => d.best_of_n(k * b, depth)?,
    };
    let best = all_beams.iter().flat_map(|beam| beam.entries.iter()).min_by(|a, b| rank(a, b)).cloned();
    let best = match best {
        Some(b) => b,
        None => d.root()?,
    };
    Ok(SearchResult {
        strategy: cfg.strategy,
        best,
        all_beams,
        pruner_calls: d.pruner_calls,
        verifier_calls: d.verifier_calls,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge::tests::employee_trajectory;
    use crate::scoring::ScoreConfig;

    fn cfg(k: usize, b: usize, d: usize, strategy: Strategy) -> SearchConfig {
        SearchConfig { beam_width: k, branching: b, max_depth: d, strategy, rng_seed: 1, exec_mode: ExecMode::Sequential }
    }

    #[test]
    fn oracle_beam_recovers_gold() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let c = cfg(2, 2, traj.n() + 1, Strategy::Beam);
        let r = run_search(&traj.question, &traj.raw, &OraclePruner::new(&traj), &v, &c).unwrap();
        assert_eq!(r.best.score, 1.0);
        assert_eq!(&r.best.table, traj.gold_final());
        assert_eq!(r.best.depth, traj.n());
        assert!(r.pruner_calls <= c.proposal_budget());
        assert!(r.all_beams.iter().all(|b| b.entries.len() <= 2));
        // Duplicated oracle proposals collapse to one entry per depth.
        assert!(r.all_beams.iter().all(|b| b.entries.len() == 1));
        assert_eq!(r.trace[0].duplicates, 3);
    }

    #[test]
    fn unit_beam_matches_direct_chain() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let p = NoisyPruner::new(&traj, 0.4, 8).unwrap();
        let beam = run_search(&traj.question, &traj.raw, &p, &v, &cfg(1, 1, 6, Strategy::Beam)).unwrap();
        let seq = run_search(&traj.question, &traj.raw, &p, &v, &cfg(1, 1, 6, Strategy::Sequential)).unwrap();
        assert_eq!(beam.all_beams, seq.all_beams);
        assert_eq!(beam.best, seq.best);
        let mut cur = traj.raw.clone();
        for (depth, b) in beam.all_beams.iter().enumerate().skip(1) {
            let nonce = derive_seed(&[1, depth as u64, if depth == 1 { 0 } else { 1 }]);
            let req = ProposeRequest { question: &traj.question, raw: &traj.raw, current: &cur, count: 1, nonce };
            cur = p.propose(&req).unwrap().remove(0);
            assert_eq!(b.entries[0].table, cur);
        }
    }

    #[test]
    fn budgets_and_monotone_selection() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let p = NoisyPruner::new(&traj, 0.5, 2).unwrap();
        for strategy in [Strategy::Beam, Strategy::BestOfN, Strategy::Sequential] {
            let c = cfg(2, 2, 4, strategy);
            let r = run_search(&traj.question, &traj.raw, &p, &v, &c).unwrap();
            assert_eq!(r.pruner_calls, 16, "{strategy:?}");
            assert!(r.verifier_calls <= 16 + 1);
            let max = r.all_beams.iter().flat_map(|b| &b.entries).map(|e| e.score).fold(0.0, f64::max);
            assert_eq!(r.best.score, max);
            for b in &r.all_beams {
                assert!(b.entries.windows(2).all(|w| w[0].score >= w[1].score));
            }
        }
    }

    #[test]
    fn containment_along_every_branch() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let p = NoisyPruner::new(&traj, 0.7, 4).unwrap();
        let r = run_search(&traj.question, &traj.raw, &p, &v, &cfg(3, 2, 4, Strategy::Beam)).unwrap();
        for w in r.all_beams.windows(2) {
            for e in &w[1].entries {
                let parent = match e.parent {
                    None => &w[0].entries[0].table,
                    Some(i) => &w[0].entries[i].table,
                };
                assert!(e.table.is_subtable_of(parent));
                assert!(e.table.is_subtable_of(&traj.raw));
            }
        }
    }

    #[test]
    fn deterministic_across_exec_modes() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let p = NoisyPruner::new(&traj, 0.5, 6).unwrap();
        let mut c = cfg(2, 2, 4, Strategy::Beam);
        let a = run_search(&traj.question, &traj.raw, &p, &v, &c).unwrap();
        c.exec_mode = ExecMode::Parallel;
        let b = run_search(&traj.question, &traj.raw, &p, &v, &c).unwrap();
        assert_eq!(a, b);
    }

    struct Hostile;
    impl PrunerBackend for Hostile {
        fn propose(&self, req: &ProposeRequest<'_>) -> Result<Vec<Table>, BackendError> {
            // Row 99 exists nowhere, so this is never a sub-table.
            let one = crate::table::serialize(&req.raw.select_row_positions(&[0]));
            let t = crate::table::parse_table(&one.replace("row 1:", "row 99:")).unwrap();
            Ok(vec![t; req.count])
        }
    }

    #[test]
    fn invalid_proposals_end_search_with_best_so_far() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let r = run_search(&traj.question, &traj.raw, &Hostile, &v, &cfg(2, 2, 4, Strategy::Beam)).unwrap();
        assert_eq!(r.best.table, traj.raw);
        assert_eq!(r.trace.len(), 1);
        assert_eq!(r.trace[0].invalid, 4);
        assert_eq!(r.all_beams.len(), 1);
    }

    #[test]
    fn config_errors() {
        let traj = employee_trajectory();
        let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let r = run_search("", &traj.raw, &OraclePruner::new(&traj), &v, &cfg(0, 2, 4, Strategy::Beam));
        assert!(matches!(r, Err(SearchError::Config(_))));
        assert_eq!("best-of-n".parse::<Strategy>(), Ok(Strategy::BestOfN));
    }
}
