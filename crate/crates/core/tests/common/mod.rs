#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde_json::{json, Value};
use tablepruner::forge::Trajectory;
use tablepruner::scoring::ScoreConfig;
use tablepruner::search::{ExactVerifier, OraclePruner, ProposeRequest, PrunerBackend, VerifierBackend};
use tablepruner::table::{parse_subtable, parse_table, serialize, Table};

pub const EMPLOYEES: &str = "col: Employee | Department | City | Hire Year | Salary | Level | Manager
row 1: Akira Sato | Engineering | Tokyo | 2021 | 120000 | L4 | K. Tanaka
row 2: Mei Chen | Engineering | Osaka | 2019 | 130000 | L4 | K. Tanaka
row 3: Haruto Ito | Engineering | Osaka | 2022 | 105000 | L3 | M. Suzuki
row 4: Yuna Park | Sales | Tokyo | 2021 | 90000 | L3 | R. Lee
row 5: Kenji Watanabe | Engineering | Nagoya | 2023 | 115000 | L4 | M. Suzuki
row 6: Sara Kim | Engineering | Tokyo | 2020 | 98000 | L3 | M. Suzuki
row 7: Rina Nakamura | Engineering | Tokyo | 2024 | 140000 | L5 | K. Tanaka
row 8: Daichi Mori | HR | Osaka | 2022 | 80000 | L2 | T. Yamada";

pub const EMPLOYEE_SQL: &str = "SELECT COUNT(Employee), City, \"Hire Year\", Salary FROM employees \
    WHERE Department = 'Engineering' AND City IN ('Tokyo', 'Osaka') AND \"Hire Year\" > 2020 AND Salary > 130000";

pub const EMPLOYEE_QUESTION: &str = "Count the engineers in Tokyo or Osaka hired after 2020 with salary above 130000.";

pub fn employees() -> Table {
    parse_table(EMPLOYEES).unwrap()
}

type Handler = dyn Fn(&str, &str) -> (u16, String) + Send + Sync;

/// Minimal HTTP server answering every POST through `handler(path, body)`.
pub struct StubServer {
    pub url: String,
    server: Arc<tiny_http::Server>,
    worker: Option<JoinHandle<()>>,
}

impl StubServer {
    pub fn start(handler: impl Fn(&str, &str) -> (u16, String) + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let port = server.server_addr().to_ip().unwrap().port();
        let handler: Arc<Handler> = Arc::new(handler);
        let srv = server.clone();
        let worker = std::thread::spawn(move || {
            for mut req in srv.incoming_requests() {
                let mut body = String::new();
                let _ = req.as_reader().read_to_string(&mut body);
                let (status, text) = handler(req.url(), &body);
                let resp = tiny_http::Response::from_string(text).with_status_code(status);
                let _ = req.respond(resp);
            }
        });
        Self { url: format!("http://127.0.0.1:{port}"), server, worker: Some(worker) }
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

/// Serves the oracle pruner at `/pruner` and the exact verifier at
/// `/verifier` for every trajectory, keyed by raw-table text.
pub fn oracle_server(trajs: &[Trajectory]) -> StubServer {
    let mut backends: HashMap<String, (Table, OraclePruner, ExactVerifier)> = HashMap::new();
    for t in trajs {
        backends.insert(
            serialize(&t.raw),
            (t.raw.clone(), OraclePruner::new(t), ExactVerifier::for_trajectory(t, ScoreConfig::default()).unwrap()),
        );
    }
    StubServer::start(move |path, body| {
        let v: Value = serde_json::from_str(body).unwrap();
        let (raw, pruner, verifier) = &backends[v["raw_table"].as_str().unwrap()];
        match path {
            "/pruner" => {
                let current = parse_subtable(v["current_subtable"].as_str().unwrap(), raw).unwrap();
                let req = ProposeRequest {
                    question: v["question"].as_str().unwrap(),
                    raw,
                    current: &current,
                    count: v["count"].as_u64().unwrap() as usize,
                    nonce: 0,
                };
                let cands: Vec<String> = pruner.propose(&req).unwrap().iter().map(serialize).collect();
                (200, json!({ "candidates": cands }).to_string())
            }
            "/verifier" => {
                let sub = parse_subtable(v["subtable"].as_str().unwrap(), raw).unwrap();
                (200, json!({ "score": verifier.assess("", raw, &sub).unwrap() }).to_string())
            }
            _ => (404, "no such route".into()),
        }
    })
}
