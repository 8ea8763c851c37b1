//! Monte-Carlo comparison of search strategies on forged trajectories.
//!
//! Every strategy sees the same noisy pruner seed and search seed per
//! instance, so Beam and Best-of-N share their first-depth samples and
//! per-instance differences can be paired.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::forge::Trajectory;
use crate::par::{map_ordered, ExecMode};
use crate::scoring::ScoreConfig;
use crate::search::{run_search, ExactVerifier, NoisyPruner, SearchConfig, SearchError, Strategy};
use crate::seed::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InstanceOutcome {
    pub final_f: f64,
    pub pruner_calls: usize,
    pub verifier_calls: usize,
}

/// Runs one configuration over every trajectory; outcome `i` belongs to
/// trajectory `i`.
pub fn evaluate(
    trajs: &[Trajectory],
    search: &SearchConfig,
    noise: f64,
    seed: u64,
    score: ScoreConfig,
    mode: ExecMode,
) -> Result<Vec<InstanceOutcome>, SearchError> {
    let indexed: Vec<(u64, &Trajectory)> = trajs.iter().enumerate().map(|(i, t)| (i as u64, t)).collect();
    map_ordered(mode, &indexed, |&(i, traj)| {
        let backend_err = |source| SearchError::Backend { stage: "setup", depth: 0, source };
        let pruner = NoisyPruner::new(traj, noise, derive_seed(&[seed, i, 0])).map_err(backend_err)?;
        let verifier = ExactVerifier::for_trajectory(traj, score).map_err(backend_err)?;
        let cfg = SearchConfig { rng_seed: derive_seed(&[seed, i, 1]), exec_mode: ExecMode::Sequential, ..*search };
        let r = run_search(&traj.question, &traj.raw, &pruner, &verifier, &cfg)?;
        let final_f = verifier.score_table(&r.best.table).map_err(backend_err)?;
        Ok(InstanceOutcome { final_f, pruner_calls: r.pruner_calls, verifier_calls: r.verifier_calls })
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Half-width of the two-sided 95% t interval; 0 when `n < 2`.
    pub half_width: f64,
}

pub fn summarize(xs: &[f64]) -> Summary {
    let n = xs.len();
    if n == 0 {
        return Summary { n, mean: f64::NAN, half_width: f64::NAN };
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Summary { n, mean, half_width: 0.0 };
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("dof > 0").inverse_cdf(0.975);
    Summary { n, mean, half_width: t * (var / n as f64).sqrt() }
}

/// One-sided paired t-test of `mean(a - b) > 0`; returns `(t, p)`.
/// Identical samples give `(0, 1)`, a constant positive gap `(∞, 0)`.
pub fn paired_t_greater(a: &[f64], b: &[f64]) -> (f64, f64) {
    assert_eq!(a.len(), b.len(), "paired samples differ in length");
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let n = d.len() as f64;
    let mean = d.iter().sum::<f64>() / n;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return if mean > 0.0 { (f64::INFINITY, 0.0) } else { (0.0, 1.0) };
    }
    let t = mean / (var / n).sqrt();
    let p = StudentsT::new(0.0, 1.0, n - 1.0).expect("dof > 0").sf(t);
    (t, p)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchGrid {
    pub strategies: Vec<Strategy>,
    pub depths: Vec<usize>,
    pub widths: Vec<usize>,
    pub branching: usize,
    pub noise: Vec<f64>,
    pub seed: u64,
    pub score: ScoreConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub strategy: Strategy,
    pub max_depth: usize,
    pub k: usize,
    pub b: usize,
    pub noise: f64,
    pub instances: usize,
    pub mean_f: f64,
    pub half_width: f64,
    pub budget: usize,
    pub max_pruner_calls: usize,
    pub mean_verifier_calls: f64,
}

impl BenchRow {
    pub const CSV_HEADER: &'static str =
        "strategy,max_depth,k,b,noise,instances,mean_f,half_width,budget,max_pruner_calls,mean_verifier_calls";

    pub fn csv_line(&self) -> String {
        let strategy = serde_json::to_value(self.strategy).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
        format!(
            "{strategy},{},{},{},{},{},{:.4},{:.4},{},{},{:.2}",
            self.max_depth,
            self.k,
            self.b,
            self.noise,
            self.instances,
            self.mean_f,
            self.half_width,
            self.budget,
            self.max_pruner_calls,
            self.mean_verifier_calls
        )
    }
}

/// Every (noise, width, depth, strategy) cell in that nesting order.
/// Fails if any strategy requests more than its `k·b·D_max` proposals.
pub fn run_grid(trajs: &[Trajectory], grid: &BenchGrid, mode: ExecMode) -> Result<Vec<BenchRow>, SearchError> {
    let mut rows = Vec::new();
    for &noise in &grid.noise {
        for &k in &grid.widths {
            for &depth in &grid.depths {
                for &strategy in &grid.strategies {
                    let cfg = SearchConfig {
                        beam_width: k,
                        branching: grid.branching,
                        max_depth: depth,
                        strategy,
                        rng_seed: 0,
                        exec_mode: mode,
                    };
                    let out = evaluate(trajs, &cfg, noise, grid.seed, grid.score, mode)?;
                    let budget = cfg.proposal_budget();
                    let max_calls = out.iter().map(|o| o.pruner_calls).max().unwrap_or(0);
                    if max_calls > budget {
                        return Err(SearchError::Config(format!("{strategy:?} used {max_calls} proposals over budget {budget}")));
                    }
                    let s = summarize(&out.iter().map(|o| o.final_f).collect::<Vec<_>>());
                    rows.push(BenchRow {
                        strategy,
                        max_depth: depth,
                        k,
                        b: grid.branching,
                        noise,
                        instances: s.n,
                        mean_f: s.mean,
                        half_width: s.half_width,
                        budget,
                        max_pruner_calls: max_calls,
                        mean_verifier_calls: out.iter().map(|o| o.verifier_calls as f64).sum::<f64>() / out.len().max(1) as f64,
                    });
                }
            }
        }
    }
    Ok(rows)
}
