//! HTTP JSON adapters for hosted pruner and verifier models.
//!
//! Pruner request `{question, raw_table, current_subtable, count}`, reply
//! `{candidates: [table text]}`. Verifier request `{question, raw_table,
//! subtable}`, reply `{score: number}`. One JSON object per POST body.
//!
//! Transport failures and 5xx replies are retried with exponential backoff;
//! 4xx replies and malformed bodies fail immediately as protocol errors.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};
use ureq::Agent;

use super::backend::{BackendError, ProposeRequest, PrunerBackend, VerifierBackend};
use crate::table::{parse_subtable, serialize, Table};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    pub endpoint: String,
    pub timeout: Duration,
    /// Extra attempts after the first.
    pub retries: usize,
    pub backoff: Duration,
    pub max_concurrency: usize,
}

impl RemoteConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            timeout: Duration::from_secs(30),
            retries: 2,
            backoff: Duration::from_millis(100),
            max_concurrency: 4,
        }
    }
}

#[derive(Debug, Default)]
pub struct RemoteCounters {
    pub requests: AtomicUsize,
    pub retries: AtomicUsize,
    pub dropped_candidates: AtomicUsize,
    pub clamped_scores: AtomicUsize,
}

impl RemoteCounters {
    pub fn get(c: &AtomicUsize) -> usize {
        c.load(Ordering::Relaxed)
    }
}

struct Client {
    cfg: RemoteConfig,
    agent: Agent,
    counters: RemoteCounters,
}

enum Attempt {
    Retry(String),
    Fail(BackendError),
}

impl Client {
    fn new(cfg: RemoteConfig) -> Self {
        let agent: Agent = Agent::config_builder().timeout_global(Some(cfg.timeout)).http_status_as_error(false).build().into();
        Self { cfg, agent, counters: RemoteCounters::default() }
    }

    fn once(&self, body: &str) -> Result<Value, Attempt> {
        self.counters.requests.fetch_add(1, Ordering::Relaxed);
        let mut resp = self
            .agent
            .post(&self.cfg.endpoint)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| Attempt::Retry(e.to_string()))?;
        match status {
            200..=299 => {
                serde_json::from_str(&text).map_err(|e| Attempt::Fail(BackendError::Protocol(format!("reply is not JSON: {e}"))))
            }
            500..=599 => Err(Attempt::Retry(format!("HTTP {status}"))),
            _ => Err(Attempt::Fail(BackendError::Protocol(format!("HTTP {status}: {}", text.trim())))),
        }
    }

    fn post(&self, payload: &Value) -> Result<serde_json::Map<String, Value>, BackendError> {
        let body = payload.to_string();
        let attempts = self.cfg.retries + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                self.counters.retries.fetch_add(1, Ordering::Relaxed);
                thread::sleep(self.cfg.backoff * (1u32 << (attempt - 1).min(16)));
            }
            match self.once(&body) {
                Ok(Value::Object(map)) => return Ok(map),
                Ok(_) => return Err(BackendError::Protocol("reply is not a JSON object".into())),
                Err(Attempt::Fail(e)) => return Err(e),
                Err(Attempt::Retry(m)) => {
                    log::warn!("{} attempt {} failed: {m}", self.cfg.endpoint, attempt + 1);
                    last = m;
                }
            }
        }
        Err(BackendError::Transport { attempts, message: last })
    }
}

pub struct RemotePruner {
    client: Client,
}

impl RemotePruner {
    pub fn new(cfg: RemoteConfig) -> Self {
        Self { client: Client::new(cfg) }
    }

    pub fn counters(&self) -> &RemoteCounters {
        &self.client.counters
    }
}

/// Parses a pruner reply; candidates that do not parse against `raw` or are
/// not sub-tables of `current` are dropped and counted.
pub fn decode_candidates(
    reply: &serde_json::Map<String, Value>,
    raw: &Table,
    current: &Table,
    dropped: &AtomicUsize,
) -> Result<Vec<Table>, BackendError> {
    let list = reply.get("candidates").ok_or_else(|| BackendError::Protocol("missing field `candidates`".into()))?;
    let list = list.as_array().ok_or_else(|| BackendError::Protocol("`candidates` is not an array".into()))?;
    let mut out = Vec::with_capacity(list.len());
    for item in list {
        let text = item.as_str().ok_or_else(|| BackendError::Protocol("candidate is not a string".into()))?;
        match parse_subtable(text, raw) {
            Ok(t) if t.is_subtable_of(current) => out.push(t),
            Ok(_) => {
                log::warn!("dropping candidate that is not a sub-table of the current table");
                dropped.fetch_add(1, Ordering::Relaxed);
            }
            Err(e) => {
                log::warn!("dropping unparseable candidate: {e}");
                dropped.fetch_add(1, Ordering::Relaxed);
            }
        }
    }
    Ok(out)
}

/// Parses a verifier reply, clamping the score into `[0, 1]`.
pub fn decode_score(reply: &serde_json::Map<String, Value>, clamped: &AtomicUsize) -> Result<f64, BackendError> {
    let v = reply.get("score").ok_or_else(|| BackendError::Protocol("missing field `score`".into()))?;
    let s = v.as_f64().ok_or_else(|| BackendError::Protocol("`score` is not a number".into()))?;
    if !s.is_finite() {
        return Err(BackendError::Protocol("`score` is not finite".into()));
    }
    if !(0.0..=1.0).contains(&s) {
        log::warn!("clamping out-of-range score {s}");
        clamped.fetch_add(1, Ordering::Relaxed);
    }
    Ok(s.clamp(0.0, 1.0))
}

impl PrunerBackend for RemotePruner {
    fn propose(&self, req: &ProposeRequest<'_>) -> Result<Vec<Table>, BackendError> {
        let payload = json!({
            "question": req.question,
            "raw_table": serialize(req.raw),
            "current_subtable": serialize(req.current),
            "count": req.count,
        });
        let reply = self.client.post(&payload)?;
        decode_candidates(&reply, req.raw, req.current, &self.client.counters.dropped_candidates)
    }

    fn max_concurrency(&self) -> usize {
        self.client.cfg.max_concurrency
    }
}

pub struct RemoteVerifier {
    client: Client,
}

impl RemoteVerifier {
    pub fn new(cfg: RemoteConfig) -> Self {
        Self { client: Client::new(cfg) }
    }

    pub fn counters(&self) -> &RemoteCounters {
        &self.client.counters
    }
}

impl VerifierBackend for RemoteVerifier {
    fn assess(&self, question: &str, raw: &Table, candidate: &Table) -> Result<f64, BackendError> {
        let payload = json!({
            "question": question,
            "raw_table": serialize(raw),
            "subtable": serialize(candidate),
        });
        let reply = self.client.post(&payload)?;
        decode_score(&reply, &self.client.counters.clamped_scores)
    }

    fn max_concurrency(&self) -> usize {
        self.client.cfg.max_concurrency
    }
}
