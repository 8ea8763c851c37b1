mod common;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use common::{employees, oracle_server, StubServer, EMPLOYEE_QUESTION, EMPLOYEE_SQL};
use proptest::prelude::*;
use tablepruner::forge::{build_trajectory, Trajectory};
use tablepruner::par::ExecMode;
use tablepruner::scoring::ScoreConfig;
use tablepruner::search::remote::{RemoteConfig, RemotePruner, RemoteVerifier};
use tablepruner::search::{run_search, BackendError, ExactVerifier, NoisyPruner, SearchConfig, SearchError, Strategy};
use tablepruner::sql::parse_sql;
use tablepruner::synth::{generate_instances, SynthConfig};
use tablepruner::table::parse_any;

fn employee_trajectory() -> Trajectory {
    build_trajectory(EMPLOYEE_QUESTION, &parse_sql(EMPLOYEE_SQL).unwrap(), &employees()).unwrap()
}

fn synth_trajectory(seed: u64) -> Trajectory {
    let inst = &generate_instances(1, seed, &SynthConfig::default())[0];
    build_trajectory(&inst.question, &parse_sql(&inst.sql).unwrap(), &parse_any(&inst.table).unwrap()).unwrap()
}

fn cfg(strategy: Strategy, mode: ExecMode) -> SearchConfig {
    SearchConfig { beam_width: 2, branching: 2, max_depth: 5, strategy, rng_seed: 11, exec_mode: mode }
}

#[test]
fn server_errors_surface_with_stage_and_depth() {
    let traj = employee_trajectory();
    let server = StubServer::start(|_, _| (500, "down".into()));
    let mut rc = RemoteConfig::new(format!("{}/pruner", server.url));
    rc.retries = 1;
    rc.backoff = Duration::from_millis(1);
    let pruner = RemotePruner::new(rc);
    let verifier = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
    let err = run_search(&traj.question, &traj.raw, &pruner, &verifier, &cfg(Strategy::Beam, ExecMode::Parallel)).unwrap_err();
    match err {
        SearchError::Backend { stage: "propose", depth: 1, source: BackendError::Transport { attempts: 2, .. } } => {}
        other => panic!("{other:?}"),
    }
    assert_eq!(pruner.counters().requests.load(Ordering::Relaxed), 2);
}

#[test]
fn remote_concurrency_is_bounded() {
    let traj = employee_trajectory();
    let inflight = Arc::new(AtomicUsize::new(0));
    let peak = Arc::new(AtomicUsize::new(0));
    let (i, p) = (inflight.clone(), peak.clone());
    let inner = oracle_server(std::slice::from_ref(&traj));
    let inner_url = format!("{}/verifier", inner.url);
    let forward = RemoteVerifier::new(RemoteConfig::new(inner_url));
    let raw = traj.raw.clone();
    let server = StubServer::start(move |_, body| {
        let now = i.fetch_add(1, Ordering::SeqCst) + 1;
        p.fetch_max(now, Ordering::SeqCst);
        std::thread::sleep(Duration::from_millis(2));
        let v: serde_json::Value = serde_json::from_str(body).unwrap();
        let sub = tablepruner::table::parse_subtable(v["subtable"].as_str().unwrap(), &raw).unwrap();
        let s = tablepruner::search::VerifierBackend::assess(&forward, "", &raw, &sub).unwrap();
        i.fetch_sub(1, Ordering::SeqCst);
        (200, serde_json::json!({ "score": s }).to_string())
    });
    let mut rc = RemoteConfig::new(format!("{}/verifier", server.url));
    rc.max_concurrency = 1;
    let verifier = RemoteVerifier::new(rc);
    let pruner = NoisyPruner::new(&traj, 0.5, 1).unwrap();
    let local = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
    let c = cfg(Strategy::Beam, ExecMode::Parallel);
    let remote = run_search(&traj.question, &traj.raw, &pruner, &verifier, &c).unwrap();
    assert_eq!(remote, run_search(&traj.question, &traj.raw, &pruner, &local, &c).unwrap());
    assert_eq!(peak.load(Ordering::SeqCst), 1);
}

#[test]
fn zero_config_is_rejected() {
    let traj = employee_trajectory();
    let v = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
    let p = NoisyPruner::new(&traj, 0.0, 0).unwrap();
    let mut c = cfg(Strategy::Beam, ExecMode::Sequential);
    c.beam_width = 0;
    assert!(matches!(run_search("", &traj.raw, &p, &v, &c), Err(SearchError::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn search_is_deterministic_and_within_budget(
        seed in any::<u64>(),
        noise in 0.0f64..1.0,
        k in 1usize..4,
        b in 1usize..4,
        depth in 1usize..5,
        strategy in prop_oneof![Just(Strategy::Beam), Just(Strategy::BestOfN), Just(Strategy::Sequential)],
    ) {
        let traj = synth_trajectory(seed);
        let pruner = NoisyPruner::new(&traj, noise, seed).unwrap();
        let verifier = ExactVerifier::for_trajectory(&traj, ScoreConfig::default()).unwrap();
        let c = SearchConfig { beam_width: k, branching: b, max_depth: depth, strategy, rng_seed: seed, exec_mode: ExecMode::Parallel };
        let par = run_search(&traj.question, &traj.raw, &pruner, &verifier, &c).unwrap();
        let seq = run_search(&traj.question, &traj.raw, &pruner, &verifier, &SearchConfig { exec_mode: ExecMode::Sequential, ..c }).unwrap();
        prop_assert_eq!(&par, &seq);
        prop_assert!(par.pruner_calls <= c.proposal_budget());
        prop_assert!(par.verifier_calls <= c.proposal_budget() + 1);
        prop_assert!(par.best.table.is_subtable_of(&traj.raw));
        prop_assert!((0.0..=1.0).contains(&par.best.score));
        let t0 = verifier.score_table(&traj.raw).unwrap();
        if strategy == Strategy::Beam {
            prop_assert!(par.best.score >= t0);
        }
        for beam in &par.all_beams {
            prop_assert!(beam.entries.windows(2).all(|w| w[0].score >= w[1].score));
        }
    }
}
