//! Training records derived from trajectories and their negatives.

use serde::{Deserialize, Serialize};

use super::{EmitterConfig, NegativeStep, Trajectory};
use crate::scoring::{decimal_to_f64, score, ScoreConfig};
use crate::table::{canonicalize, serialize, CellSet, Table};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Progression,
    Correction,
    Preference,
    Verifier,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub lambda: f64,
    pub beta: f64,
    pub alpha: f64,
    pub seed: u64,
    pub instance_id: u64,
    pub step: usize,
}

/// One JSONL line. Progression and Correction set `target`, Preference sets
/// `chosen` and `rejected`, Verifier sets `score`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub kind: RecordKind,
    pub question: String,
    pub raw_table: String,
    pub current_subtable: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chosen: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub meta: RecordMeta,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpora {
    pub progression: Vec<CorpusRecord>,
    pub correction: Vec<CorpusRecord>,
    pub preference: Vec<CorpusRecord>,
    pub verifier: Vec<CorpusRecord>,
}

impl Corpora {
    pub fn append(&mut self, mut other: Corpora) {
        self.progression.append(&mut other.progression);
        self.correction.append(&mut other.correction);
        self.preference.append(&mut other.preference);
        self.verifier.append(&mut other.verifier);
    }

    pub fn total(&self) -> usize {
        self.progression.len() + self.correction.len() + self.preference.len() + self.verifier.len()
    }

    /// `(file stem, records)` in output order.
    pub fn streams(&self) -> [(&'static str, &[CorpusRecord]); 4] {
        [("d_plus", &self.progression), ("d_minus", &self.correction), ("d_pref", &self.preference), ("d_ver", &self.verifier)]
    }

    /// One JSON object per line, each line `\n`-terminated.
    pub fn to_jsonl(records: &[CorpusRecord]) -> String {
        let mut out = String::new();
        for r in records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

struct Ctx<'a> {
    cfg: &'a EmitterConfig,
    instance_id: u64,
    question: &'a str,
    raw_text: String,
}

impl Ctx<'_> {
    fn record(&self, kind: RecordKind, step: usize, current: &Table) -> CorpusRecord {
        CorpusRecord {
            kind,
            question: self.question.to_string(),
            raw_table: self.raw_text.clone(),
            current_subtable: serialize(current),
            target: None,
            chosen: None,
            rejected: None,
            score: None,
            meta: RecordMeta {
                lambda: self.cfg.lambda_correction_weight,
                beta: self.cfg.beta_dpo,
                alpha: self.cfg.alpha,
                seed: self.cfg.rng_seed,
                instance_id: self.instance_id,
                step,
            },
        }
    }
}

fn cells(t: &Table, raw: &Table) -> CellSet {
    canonicalize(t, raw).expect("trajectory tables are sub-tables of raw")
}

/// Records for one instance.
///
/// A negative at step `s` yields a Correction record only if its cells
/// contain those of the next gold sub-table `T_{s+1}` (or `T_n` when `s = n`)
/// and it differs from every gold sub-table, so the target stays reachable
/// by pruning alone.
pub fn emit_instance(instance_id: u64, traj: &Trajectory, negatives: &[NegativeStep], cfg: &EmitterConfig) -> Corpora {
    let ctx = Ctx { cfg, instance_id, question: &traj.question, raw_text: serialize(&traj.raw) };
    let n = traj.n();
    let gold_cells: Vec<CellSet> = (0..=n).map(|t| cells(traj.table_at(t), &traj.raw)).collect();
    let score_cfg = ScoreConfig { alpha: cfg.alpha };
    let verifier_score = |c: &CellSet| {
        let rep = score(c, &gold_cells[n], &score_cfg).expect("gold final is non-empty");
        decimal_to_f64(rep.f_alpha_rounded())
    };

    let mut out = Corpora::default();
    for t in 1..=n {
        let mut r = ctx.record(RecordKind::Progression, t, traj.table_at(t - 1));
        r.target = Some(serialize(traj.table_at(t)));
        out.progression.push(r);
    }
    for neg in negatives {
        let s = neg.step;
        let neg_cells = cells(&neg.negative_subtable, &traj.raw);

        let mut p = ctx.record(RecordKind::Preference, s, traj.table_at(s - 1));
        p.chosen = Some(serialize(traj.table_at(s)));
        p.rejected = Some(serialize(&neg.negative_subtable));
        out.preference.push(p);

        let target = (s + 1).min(n);
        let off_trajectory = gold_cells.iter().all(|g| *g != neg_cells);
        if off_trajectory && gold_cells[target].is_subset(&neg_cells) {
            let mut c = ctx.record(RecordKind::Correction, s, &neg.negative_subtable);
            c.target = Some(serialize(traj.table_at(target)));
            out.correction.push(c);
        }
    }
    for (t, gold) in gold_cells.iter().enumerate() {
        let mut v = ctx.record(RecordKind::Verifier, t, traj.table_at(t));
        v.score = Some(verifier_score(gold));
        out.verifier.push(v);
        for neg in negatives.iter().filter(|x| x.step == t) {
            let mut v = ctx.record(RecordKind::Verifier, t, &neg.negative_subtable);
            v.score = Some(verifier_score(&cells(&neg.negative_subtable, &traj.raw)));
            out.verifier.push(v);
        }
    }
    out
}

/// Concatenates [`emit_instance`] over `(instance_id, trajectory, negatives)`
/// triples in the given order.
pub fn emit_corpora<'a, I>(items: I, cfg: &EmitterConfig) -> Corpora
where
    I: IntoIterator<Item = (u64, &'a Trajectory, &'a [NegativeStep])>,
{
    let mut out = Corpora::default();
    for (id, traj, negs) in items {
        out.append(emit_instance(id, traj, negs, cfg));
    }
    out
}
