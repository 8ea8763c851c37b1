use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::{json, Value};
use tablepruner::bench::{run_grid, BenchGrid, BenchRow};
use tablepruner::compress::compression_report;
use tablepruner::forge::{build_trajectory, forge_all, parse_instances, Blocklist, Corpora, EmitterConfig, Trajectory};
use tablepruner::par::ExecMode;
use tablepruner::scoring::{score as score_sets, ScoreConfig};
use tablepruner::search::remote::{RemoteConfig, RemotePruner, RemoteVerifier};
use tablepruner::search::{
    run_search, ExactVerifier, NoisyPruner, OraclePruner, PrunerBackend, SearchConfig, SearchError, SearchResult, VerifierBackend,
};
use tablepruner::sql::parse_sql;
use tablepruner::synth::{generate_instances, SynthConfig};
use tablepruner::table::{canonicalize, parse_any, parse_subtable, parse_table, serialize, Table};

use crate::manifest::{write_atomic, RunManifest};
use crate::{BenchArgs, CliError, Common, CompressArgs, ForgeArgs, PruneArgs, RemoteArgs, ScoreArgs, SynthArgs};

fn read_input(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn exec_mode(c: &Common) -> ExecMode {
    if c.sequential {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    }
}

fn score_config(c: &Common) -> Result<ScoreConfig, CliError> {
    ScoreConfig::new(c.alpha).map_err(|e| CliError::Usage(e.to_string()))
}

fn search_error(e: SearchError) -> CliError {
    match e {
        SearchError::Config(_) | SearchError::EmptyRaw => CliError::Usage(e.to_string()),
        SearchError::Backend { .. } => CliError::Backend(e.to_string()),
    }
}

/// Trajectories of every instance that decomposes; the rest are logged.
fn load_trajectories(text: &str) -> (Vec<(u64, Trajectory)>, usize) {
    let mut out = Vec::new();
    let mut skipped = 0;
    for (id, inst) in parse_instances(text) {
        let built = inst.map_err(|e| e.to_string()).and_then(|inst| {
            let raw = parse_any(&inst.table).map_err(|e| e.to_string())?;
            let q = parse_sql(&inst.sql).map_err(|e| e.to_string())?;
            build_trajectory(&inst.question, &q, &raw).map_err(|e| e.to_string())
        });
        match built {
            Ok(t) => out.push((id, t)),
            Err(e) => {
                log::warn!("instance {id} skipped: {e}");
                skipped += 1;
            }
        }
    }
    (out, skipped)
}

pub fn forge(a: &ForgeArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = EmitterConfig {
        lambda_correction_weight: a.lambda,
        beta_dpo: a.beta,
        alpha: a.common.alpha,
        negatives_per_step: a.negatives_per_step,
        rng_seed: a.common.seed,
    };
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let text = read_input(&a.input)?;
    let blocklist = a.blocklist.as_deref().map(read_input).transpose()?.map(|t| Blocklist::from_instances_jsonl(&t));
    let instances = parse_instances(&text);
    let out = forge_all(&instances, &cfg, blocklist.as_ref(), exec_mode(&a.common));

    let mut reasons: BTreeMap<&str, usize> = BTreeMap::new();
    let mut skipped_lines = String::new();
    for (id, reason) in &out.skipped {
        log::warn!("instance {id} skipped: {reason}");
        *reasons.entry(reason.code()).or_default() += 1;
        skipped_lines += &(json!({"instance_id": id, "reason": reason.code(), "detail": reason.to_string()}).to_string() + "\n");
    }

    let dir = &a.common.out_dir;
    let mut manifest = RunManifest::new(
        "forge",
        a.common.seed,
        json!({ "emitter": cfg, "blocklist_tables": blocklist.as_ref().map_or(0, Blocklist::len) }),
    );
    manifest.inputs.push(a.input.clone());
    manifest.inputs.extend(a.blocklist.clone());
    let mut records = BTreeMap::new();
    for (stem, recs) in out.corpora.streams() {
        manifest.outputs.push(write_atomic(dir, &format!("{stem}.jsonl"), &Corpora::to_jsonl(recs))?);
        records.insert(stem, recs.len());
    }
    let golds: String = out
        .forged
        .iter()
        .map(|f| json!({"instance_id": f.instance_id, "table": serialize(f.trajectory.gold_final())}).to_string() + "\n")
        .collect();
    manifest.outputs.push(write_atomic(dir, "gold_finals.jsonl", &golds)?);
    manifest.outputs.push(write_atomic(dir, "skipped.jsonl", &skipped_lines)?);
    manifest.counters = json!({
        "instances_read": instances.len(),
        "instances_forged": out.forged.len(),
        "instances_skipped": out.skipped.len(),
        "skip_reasons": reasons,
        "negatives": out.forged.iter().map(|f| f.negatives.len()).sum::<usize>(),
        "records": records,
        "records_total": out.corpora.total(),
    });
    log::info!("forged {} of {} instances into {} records", out.forged.len(), instances.len(), out.corpora.total());
    manifest.finish(dir, started)?;
    Ok(())
}

fn remote_config(url: &str, r: &RemoteArgs) -> Result<RemoteConfig, CliError> {
    if !(r.timeout.is_finite() && r.timeout > 0.0) {
        return Err(CliError::Usage(format!("timeout must be positive, got {}", r.timeout)));
    }
    let mut cfg = RemoteConfig::new(url);
    cfg.timeout = Duration::from_secs_f64(r.timeout);
    cfg.retries = r.retries;
    Ok(cfg)
}

fn trace_json(r: &SearchResult) -> Value {
    let beams: Vec<Value> = r
        .all_beams
        .iter()
        .map(|b| {
            let entries: Vec<Value> = b
                .entries
                .iter()
                .map(|e| json!({"table": serialize(&e.table), "score": e.score, "parent": e.parent, "branch": e.branch}))
                .collect();
            json!({"depth": b.depth, "entries": entries})
        })
        .collect();
    json!({
        "strategy": r.strategy,
        "best": {"table": serialize(&r.best.table), "score": r.best.score, "depth": r.best.depth},
        "pruner_calls": r.pruner_calls,
        "verifier_calls": r.verifier_calls,
        "steps": r.trace,
        "beams": beams,
    })
}

pub fn prune(a: &PruneArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let raw = parse_any(&read_input(&a.table)?).map_err(|e| CliError::Usage(format!("{}: {e}", a.table.display())))?;
    let score_cfg = score_config(&a.common)?;
    let cfg = SearchConfig {
        beam_width: a.search.k,
        branching: a.search.b,
        max_depth: a.search.max_depth,
        strategy: a.search.strategy,
        rng_seed: a.common.seed,
        exec_mode: exec_mode(&a.common),
    };
    cfg.validate().map_err(search_error)?;
    let traj = a
        .sql
        .as_deref()
        .map(|sql| {
            let q = parse_sql(sql).map_err(|e| CliError::Usage(e.to_string()))?;
            build_trajectory(&a.question, &q, &raw).map_err(|e| CliError::Usage(e.to_string()))
        })
        .transpose()?;

    let backend = |e: tablepruner::search::BackendError| CliError::Usage(e.to_string());
    let pruner: Box<dyn PrunerBackend> = match (&a.remote.pruner_endpoint, &traj) {
        (Some(url), _) => Box::new(RemotePruner::new(remote_config(url, &a.remote)?)),
        (None, Some(t)) if a.noise == 0.0 => Box::new(OraclePruner::new(t)),
        (None, Some(t)) => Box::new(NoisyPruner::new(t, a.noise, a.common.seed).map_err(backend)?),
        (None, None) => return Err(CliError::Usage("pass --pruner-endpoint or --sql".into())),
    };
    let verifier: Box<dyn VerifierBackend> = match (&a.remote.verifier_endpoint, &traj) {
        (Some(url), _) => Box::new(RemoteVerifier::new(remote_config(url, &a.remote)?)),
        (None, Some(t)) => Box::new(ExactVerifier::for_trajectory(t, score_cfg).map_err(backend)?),
        (None, None) => return Err(CliError::Usage("pass --verifier-endpoint or --sql".into())),
    };
    let result = run_search(&a.question, &raw, pruner.as_ref(), verifier.as_ref(), &cfg).map_err(search_error)?;
    let best = serialize(&result.best.table);
    println!("{best}");

    let dir = &a.common.out_dir;
    let mut manifest =
        RunManifest::new("prune", a.common.seed, json!({"search": cfg, "score": score_cfg, "noise": a.noise, "sql": a.sql}));
    manifest.inputs.push(a.table.clone());
    manifest.outputs.push(write_atomic(dir, "pruned.txt", &(best + "\n"))?);
    let trace = serde_json::to_string_pretty(&trace_json(&result)).expect("trace serializes");
    manifest.outputs.push(write_atomic(dir, "trace.json", &(trace + "\n"))?);
    manifest.counters =
        json!({"pruner_calls": result.pruner_calls, "verifier_calls": result.verifier_calls, "best_score": result.best.score});
    manifest.finish(dir, started)?;
    Ok(())
}

pub fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let (loaded, skipped) = load_trajectories(&read_input(&a.corpus)?);
    if loaded.is_empty() {
        return Err(CliError::Usage(format!("{} has no usable instances", a.corpus.display())));
    }
    if let Some(bad) = a.noise.iter().find(|n| !(0.0..=1.0).contains(*n)) {
        return Err(CliError::Usage(format!("noise {bad} outside [0, 1]")));
    }
    let trajs: Vec<Trajectory> = loaded.into_iter().map(|(_, t)| t).collect();
    let grid = BenchGrid {
        strategies: a.strategies.clone(),
        depths: a.depths.clone(),
        widths: a.k.clone(),
        branching: a.b,
        noise: a.noise.clone(),
        seed: a.common.seed,
        score: score_config(&a.common)?,
    };
    let rows = run_grid(&trajs, &grid, exec_mode(&a.common)).map_err(search_error)?;
    let mut csv = String::from(BenchRow::CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        csv += &(r.csv_line() + "\n");
    }
    print!("{csv}");

    let dir = &a.common.out_dir;
    let config = json!({
        "strategies": grid.strategies, "depths": grid.depths, "k": grid.widths, "b": grid.branching,
        "noise": grid.noise, "score": grid.score,
    });
    let mut manifest = RunManifest::new("bench", a.common.seed, config);
    manifest.inputs.push(a.corpus.clone());
    manifest.outputs.push(write_atomic(dir, "bench.csv", &csv)?);
    manifest.counters = json!({
        "instances": trajs.len(),
        "instances_skipped": skipped,
        "cells": rows.len(),
        "pruner_calls_max": rows.iter().map(|r| r.max_pruner_calls).max(),
    });
    manifest.finish(dir, started)?;
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = score_config(&a.common)?;
    let raw = parse_any(&read_input(&a.raw)?).map_err(|e| CliError::Usage(format!("{}: {e}", a.raw.display())))?;
    let cells = |path: &Path| {
        let t = parse_subtable(&read_input(path)?, &raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        canonicalize(&t, &raw).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    };
    let report = score_sets(&cells(&a.candidate)?, &cells(&a.reference)?, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
    let text = serde_json::to_string(&report).expect("report serializes");
    println!("{text}");

    let dir = &a.common.out_dir;
    let mut manifest = RunManifest::new("score", a.common.seed, json!({"score": cfg}));
    manifest.inputs.extend([a.candidate.clone(), a.reference.clone(), a.raw.clone()]);
    manifest.outputs.push(write_atomic(dir, "score.json", &(text + "\n"))?);
    manifest.counters = serde_json::to_value(&report).expect("report serializes");
    manifest.finish(dir, started)?;
    Ok(())
}

#[derive(Deserialize)]
struct PrunedLine {
    instance_id: u64,
    table: String,
}

pub fn compress_report(a: &CompressArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let mut raws: Vec<(u64, Table)> = Vec::new();
    for (id, inst) in parse_instances(&read_input(&a.corpus)?) {
        match inst.map_err(|e| e.to_string()).and_then(|i| parse_any(&i.table).map_err(|e| e.to_string())) {
            Ok(t) => raws.push((id, t)),
            Err(e) => log::warn!("instance {id} skipped: {e}"),
        }
    }
    let mut pruned = Vec::new();
    for (n, line) in read_input(&a.pruned)?.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let p: PrunedLine =
            serde_json::from_str(line).map_err(|e| CliError::Usage(format!("{} line {}: {e}", a.pruned.display(), n + 1)))?;
        let parsed = match raws.iter().find(|(id, _)| *id == p.instance_id) {
            Some((_, raw)) => parse_subtable(&p.table, raw),
            None => parse_table(&p.table),
        };
        match parsed {
            Ok(t) => pruned.push((p.instance_id, t)),
            Err(e) => log::warn!("pruned output for instance {} does not fit its raw table: {e}", p.instance_id),
        }
    }
    let report = compression_report(&raws, &pruned);
    for id in &report.unpaired {
        log::warn!("instance {id} has no counterpart");
    }
    for id in &report.not_subtable {
        log::warn!("instance {id}: pruned output is not a sub-table of its raw table");
    }
    let csv = report.to_csv();
    print!("{csv}");

    let dir = &a.common.out_dir;
    let mut manifest = RunManifest::new("compress-report", a.common.seed, json!({}));
    manifest.inputs.extend([a.corpus.clone(), a.pruned.clone()]);
    manifest.outputs.push(write_atomic(dir, "compression.csv", &csv)?);
    manifest.counters = json!({
        "paired": report.rows.len(),
        "unpaired": report.unpaired,
        "not_subtable": report.not_subtable,
        "aggregate_cell_compression": report.aggregate_cell_compression,
        "aggregate_token_compression": report.aggregate_token_compression,
    });
    manifest.finish(dir, started)?;
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let cfg = SynthConfig { max_rows: a.max_rows, max_cols: a.max_cols, ..SynthConfig::default() };
    let lines: String = generate_instances(a.n, a.common.seed, &cfg)
        .iter()
        .map(|i| serde_json::to_string(i).expect("instance serializes") + "\n")
        .collect();
    let dir = &a.common.out_dir;
    let mut manifest = RunManifest::new(
        "synth",
        a.common.seed,
        json!({"n": a.n, "max_rows": cfg.max_rows, "max_cols": cfg.max_cols, "max_conjuncts": cfg.max_conjuncts, "null_rate": cfg.null_rate}),
    );
    manifest.outputs.push(write_atomic(dir, "instances.jsonl", &lines)?);
    manifest.counters = json!({"instances": a.n});
    manifest.finish(dir, started)?;
    Ok(())
}
