//! End-to-end solving: preprocess, bound, search, recover, decode, and map
//! the walk back to the input graph.

use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baseline::{brute_force_tour, solve_dp};
use crate::circuit::{build, CircuitType, SizeCounts, Target};
use crate::instance::{compute_bounds, postprocess, preprocess, Bounds, MetricWalk, PreprocessStats, RawInstance, Walk};
use crate::mld::Execution;
use crate::recovery::{decode_walk, recover, RecoveryStats, RecoveryStrategy};
use crate::search::{search, SearchConfig, SearchStats, SearchStrategy};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub circuit_type: CircuitType,
    pub search: SearchStrategy,
    pub recovery: RecoveryStrategy,
    pub theta: usize,
    pub seed: u64,
    pub execution: Execution,
    /// Extra Monte Carlo recovery attempts with fresh seeds.
    pub recovery_retries: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            circuit_type: CircuitType::Compact,
            search: SearchStrategy::Unified,
            recovery: RecoveryStrategy::MonteCarlo,
            theta: 20,
            seed: 0,
            execution: Execution::default(),
            recovery_retries: 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Baseline {
    Dp,
    Brute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Circuit,
    Baseline(Baseline),
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Circuit => "circuit",
            Solver::Baseline(Baseline::Dp) => "dp",
            Solver::Baseline(Baseline::Brute) => "brute",
        }
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circuit" => Ok(Solver::Circuit),
            "dp" => Ok(Solver::Baseline(Baseline::Dp)),
            "brute" => Ok(Solver::Baseline(Baseline::Brute)),
            _ => Err(Error::InvalidParameter(format!("unknown solver {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Telemetry {
    pub preprocess_ms: f64,
    pub search_ms: f64,
    pub recovery_ms: f64,
    pub total_ms: f64,
    /// Peak resident set size in KiB, where the platform reports it.
    pub peak_rss_kib: Option<u64>,
    pub search: SearchStats,
    pub recovery: RecoveryStats,
    pub recovery_attempts: usize,
    /// Recovery circuit size before pruning.
    pub recovery_circuit: Option<SizeCounts>,
    /// Reachable (vertex, color set) states, for the DP baseline.
    pub dp_states: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solver: Solver,
    pub config: Option<SolverConfig>,
    pub lambda: f64,
    pub bounds: Bounds,
    pub scaled_weight: i64,
    pub real_weight: f64,
    /// Closed walk on the input graph's vertex ids.
    pub walk: Vec<usize>,
    /// The same walk on metric vertex indices, before path expansion.
    pub metric_walk: MetricWalk,
    pub colors: usize,
    pub preprocess: PreprocessStats,
    pub telemetry: Telemetry,
}

impl SolveReport {
    /// `key value` lines: status, scaled_weight, real_weight, walk, colors.
    pub fn result_text(&self) -> String {
        let mut s = String::new();
        let walk: Vec<String> = self.walk.iter().map(|v| v.to_string()).collect();
        writeln!(s, "status ok").unwrap();
        writeln!(s, "scaled_weight {}", self.scaled_weight).unwrap();
        writeln!(s, "real_weight {}", self.real_weight).unwrap();
        writeln!(s, "walk {}", walk.join(" ")).unwrap();
        writeln!(s, "colors {}", self.colors).unwrap();
        s
    }
}

/// Peak resident memory from `/proc/self/status`.
pub fn peak_rss_kib() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

fn trivial_report(raw: &RawInstance, lambda: f64, solver: Solver, config: Option<SolverConfig>) -> SolveReport {
    let s = raw.start();
    SolveReport {
        solver,
        config,
        lambda,
        bounds: Bounds { lo: 0, hi: 0 },
        scaled_weight: 0,
        real_weight: 0.0,
        walk: vec![s],
        metric_walk: Walk { vertices: vec![0], weight: 0 },
        colors: 0,
        preprocess: PreprocessStats { n: raw.n(), m: raw.m(), n_reduced: 1, m_reduced: 0 },
        telemetry: Telemetry { peak_rss_kib: peak_rss_kib(), ..Telemetry::default() },
    }
}

/// Maps a metric walk back to the input graph and fills in the report.
fn finish_report(
    raw: &RawInstance,
    mi: &crate::MetricInstance,
    metric_walk: MetricWalk,
    solver: Solver,
    config: Option<SolverConfig>,
    bounds: Bounds,
    telemetry: Telemetry,
) -> Result<SolveReport> {
    if !mi.is_solution(&metric_walk) {
        return Err(Error::RecoveryFailed(format!("decoded walk {:?} is not a solution", metric_walk.vertices)));
    }
    let expanded = postprocess(mi, &metric_walk);
    let real_weight = raw
        .walk_weight(&expanded.vertices)
        .ok_or_else(|| Error::RecoveryFailed("expanded walk uses a missing edge".into()))?;
    Ok(SolveReport {
        solver,
        config,
        lambda: mi.lambda(),
        bounds,
        scaled_weight: metric_walk.weight,
        real_weight,
        colors: raw.collected_colors(&expanded.vertices),
        walk: expanded.vertices,
        metric_walk,
        preprocess: mi.stats(),
        telemetry,
    })
}

/// Solves with the circuit pipeline.
pub fn solve(raw: &RawInstance, lambda: f64, cfg: &SolverConfig) -> Result<SolveReport> {
    let total = Instant::now();
    if raw.t() == 0 {
        return Ok(trivial_report(raw, lambda, Solver::Circuit, Some(*cfg)));
    }
    let mut telemetry = Telemetry::default();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let phase = Instant::now();
    let mi = preprocess(raw, lambda)?;
    let bounds = compute_bounds(&mi);
    telemetry.preprocess_ms = ms(phase);

    let phase = Instant::now();
    let search_cfg = SearchConfig {
        theta: cfg.theta,
        strategy: cfg.search,
        circuit_type: cfg.circuit_type,
        seed: rng.gen(),
        execution: cfg.execution,
    };
    let outcome = search(&mi, bounds, &search_cfg)?;
    telemetry.search = outcome.stats;
    telemetry.search_ms = ms(phase);
    log::debug!("search found scaled weight {} within {:?}", outcome.weight, bounds);

    let phase = Instant::now();
    let circuit = build(cfg.circuit_type, &mi, bounds, Target::Single(outcome.weight))?;
    telemetry.recovery_circuit = circuit.info().map(|i| i.constructed);
    let attempts = match cfg.recovery {
        RecoveryStrategy::MonteCarlo => 1 + cfg.recovery_retries,
        RecoveryStrategy::LasVegas => 1,
    };
    let mut last_err = None;
    let mut decoded = None;
    for attempt in 0..attempts {
        telemetry.recovery_attempts = attempt + 1;
        match recover(&circuit, cfg.recovery, cfg.theta, rng.gen(), cfg.execution) {
            Ok(rec) => {
                telemetry.recovery.detect_calls += rec.stats.detect_calls;
                telemetry.recovery.splits += rec.stats.splits;
                decoded = Some(decode_walk(&rec.certificate, &circuit, &mi)?);
                break;
            }
            Err(Error::RecoveryFailed(msg)) => {
                log::info!("recovery attempt {} failed: {msg}", attempt + 1);
                last_err = Some(Error::RecoveryFailed(msg));
            }
            Err(e) => return Err(e),
        }
    }
    let decoded = match decoded {
        Some(d) => d,
        None => return Err(last_err.expect("at least one attempt")),
    };
    telemetry.recovery_ms = ms(phase);
    telemetry.total_ms = ms(total);
    telemetry.peak_rss_kib = peak_rss_kib();
    finish_report(raw, &mi, decoded.walk, Solver::Circuit, Some(*cfg), bounds, telemetry)
}

/// Solves exactly on the same preprocessed instance.
pub fn solve_baseline(raw: &RawInstance, lambda: f64, which: Baseline) -> Result<SolveReport> {
    let total = Instant::now();
    let solver = Solver::Baseline(which);
    if raw.t() == 0 {
        return Ok(trivial_report(raw, lambda, solver, None));
    }
    let mut telemetry = Telemetry::default();
    let phase = Instant::now();
    let mi = preprocess(raw, lambda)?;
    let bounds = compute_bounds(&mi);
    telemetry.preprocess_ms = ms(phase);

    let phase = Instant::now();
    let walk = match which {
        Baseline::Dp => {
            let sol = solve_dp(&mi)?;
            telemetry.dp_states = Some(sol.states);
            sol.walk
        }
        Baseline::Brute => {
            let (weight, vertices) = brute_force_tour(mi.n(), |a, b| mi.dist(a, b), mi.colors(), mi.t(), 0i64)?;
            Walk { vertices, weight }
        }
    };
    telemetry.search_ms = ms(phase);
    telemetry.total_ms = ms(total);
    telemetry.peak_rss_kib = peak_rss_kib();
    finish_report(raw, &mi, walk, solver, None, bounds, telemetry)
}

/// Dispatches on the solver kind.
pub fn run_solver(raw: &RawInstance, lambda: f64, solver: Solver, cfg: &SolverConfig) -> Result<SolveReport> {
    match solver {
        Solver::Circuit => solve(raw, lambda, cfg),
        Solver::Baseline(b) => solve_baseline(raw, lambda, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::tiny;
    use crate::instance::{generate_random, GenConfig};
    use crate::recovery::RecoveryStrategy;

    #[test]
    fn tiny_every_configuration() {
        let raw = tiny();
        for circuit_type in CircuitType::ALL {
            for search in SearchStrategy::ALL {
                for recovery in RecoveryStrategy::ALL {
                    let cfg = SolverConfig { circuit_type, search, recovery, seed: 5, ..SolverConfig::default() };
                    let r = solve(&raw, 1.0, &cfg).unwrap();
                    assert_eq!(r.scaled_weight, 7);
                    assert_eq!(r.real_weight, 7.0);
                    assert!(raw.is_solution(&r.walk));
                    assert_eq!(raw.walk_weight(&r.walk), Some(r.real_weight));
                }
            }
        }
    }

    #[test]
    fn result_text_format() {
        let r = solve(&tiny(), 1.0, &SolverConfig::default()).unwrap();
        let text = r.result_text();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "status ok");
        assert_eq!(lines[1], "scaled_weight 7");
        assert_eq!(lines[2], "real_weight 7");
        assert!(lines[3] == "walk 0 1 2 0" || lines[3] == "walk 0 2 1 0");
        assert_eq!(lines[4], "colors 2");
    }

    #[test]
    fn zero_target_builds_nothing() {
        let raw = tiny().with_target(0).unwrap();
        let r = solve(&raw, 1.0, &SolverConfig::default()).unwrap();
        assert_eq!((r.scaled_weight, r.walk.clone()), (0, vec![0]));
        assert_eq!(r.telemetry.search.builds, 0);
    }

    #[test]
    fn baselines_on_tiny() {
        for b in [Baseline::Dp, Baseline::Brute] {
            let r = solve_baseline(&tiny(), 1.0, b).unwrap();
            assert_eq!(r.scaled_weight, 7);
            assert_eq!(r.real_weight, 7.0);
        }
    }

    #[test]
    fn scaled_instances_report_consistent_weights() {
        for seed in 0..10 {
            let raw = generate_random(&GenConfig::new(6, 4, 3, seed)).unwrap();
            let r = solve(&raw, 10.0, &SolverConfig { seed, ..SolverConfig::default() }).unwrap();
            let dp = solve_baseline(&raw, 10.0, Baseline::Dp).unwrap();
            assert!(r.scaled_weight >= dp.scaled_weight);
            assert!(raw.is_solution(&r.walk));
            assert!((raw.walk_weight(&r.walk).unwrap() - r.real_weight).abs() < 1e-9);
        }
    }
}
