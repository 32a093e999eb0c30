//! Searching for the optimal scaled weight with a one-sided randomized
//! feasibility oracle.
//!
//! All strategies only ever lower `hi` on a positive answer, and positive
//! answers are always correct, so none of them can return a weight below the
//! optimum.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{build, Circuit, CircuitType, SizeCounts, Target};
use crate::instance::{Bounds, MetricInstance};
use crate::mld::{EvalPlan, Execution, MldParams};
use crate::{Error, Result};

/// Proven lower bound on the detector's success probability.
pub const SUCCESS_PROBABILITY: f64 = 0.25;

/// Probability of probing a higher midpoint in the probabilistic search.
pub const GO_HIGHER_PROBABILITY: f64 = 1.0 - SUCCESS_PROBABILITY / 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SearchStrategy {
    Standard,
    Probabilistic,
    Unified,
}

impl SearchStrategy {
    pub const ALL: [SearchStrategy; 3] =
        [SearchStrategy::Standard, SearchStrategy::Probabilistic, SearchStrategy::Unified];

    pub fn name(self) -> &'static str {
        match self {
            SearchStrategy::Standard => "binary",
            SearchStrategy::Probabilistic => "probabilistic",
            SearchStrategy::Unified => "unified",
        }
    }
}

impl fmt::Display for SearchStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SearchStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(SearchStrategy::Standard),
            _ => Self::ALL
                .into_iter()
                .find(|x| x.name() == s)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown search strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub theta: usize,
    pub strategy: SearchStrategy,
    pub circuit_type: CircuitType,
    pub seed: u64,
    pub execution: Execution,
}

impl SearchConfig {
    pub fn new(strategy: SearchStrategy, circuit_type: CircuitType, theta: usize, seed: u64) -> Self {
        Self { theta, strategy, circuit_type, seed, execution: Execution::default() }
    }
}

/// Oracle-call accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SearchStats {
    /// Circuits constructed.
    pub builds: usize,
    /// Detector evaluations (one per probe).
    pub evaluations: usize,
    /// Largest circuit built, as constructed before pruning.
    pub largest_circuit: SizeCounts,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOutcome {
    pub weight: i64,
    pub stats: SearchStats,
}

/// A randomized, one-sided feasibility test for walk weights.
pub trait WeightOracle {
    /// Is there a solution of weight in `[lo, l]`? `true` is always correct.
    fn probe(&mut self, lo: i64, l: i64, seed: u64) -> Result<bool>;

    /// Per-weight answers for every `l ∈ [lo, hi]`, from one evaluation.
    fn probe_all(&mut self, lo: i64, hi: i64, seed: u64) -> Result<Vec<bool>>;
}

/// The oracle backed by circuit construction and the detector. The most
/// recent circuit is cached so repeated probes of the same weight skip the
/// rebuild.
pub struct CircuitOracle<'a> {
    mi: &'a MetricInstance,
    circuit_type: CircuitType,
    execution: Execution,
    cache: Option<((i64, i64, bool), Circuit, EvalPlan)>,
    pub stats: SearchStats,
}

impl<'a> CircuitOracle<'a> {
    pub fn new(mi: &'a MetricInstance, circuit_type: CircuitType, execution: Execution) -> Self {
        Self { mi, circuit_type, execution, cache: None, stats: SearchStats::default() }
    }

    fn run(&mut self, lo: i64, hi: i64, all: bool, seed: u64) -> Result<Vec<bool>> {
        let key = (lo, hi, all);
        if self.cache.as_ref().map_or(true, |(k, _, _)| *k != key) {
            let target = if all { Target::AllOutputs } else { Target::Single(hi) };
            let c = build(self.circuit_type, self.mi, Bounds { lo, hi }, target)?;
            let size = c.info().map_or(c.size(), |i| i.constructed);
            if size.edges > self.stats.largest_circuit.edges {
                self.stats.largest_circuit = size;
            }
            self.stats.builds += 1;
            let plan = EvalPlan::new(&c);
            self.cache = Some((key, c, plan));
        }
        let (_, c, plan) = self.cache.as_ref().expect("just filled");
        let params = MldParams::sample(c, seed)?;
        self.stats.evaluations += 1;
        Ok(plan.evaluate_with(&params, self.execution).detected)
    }
}

impl WeightOracle for CircuitOracle<'_> {
    fn probe(&mut self, lo: i64, l: i64, seed: u64) -> Result<bool> {
        Ok(self.run(lo, l, false, seed)?[0])
    }

    fn probe_all(&mut self, lo: i64, hi: i64, seed: u64) -> Result<Vec<bool>> {
        self.run(lo, hi, true, seed)
    }
}

/// Smallest `θ'` with `(1 - (1-p)^θ')^exponent ≥ 1 - (1-p)^θ`, `p = 1/4`.
pub fn theta_prime(theta: usize, exponent: u64) -> usize {
    let q: f64 = 1.0 - SUCCESS_PROBABILITY;
    if exponent == 0 {
        return 1;
    }
    let target = (-q.powi(theta as i32)).ln_1p();
    let mut tp = 1usize;
    while exponent as f64 * (-q.powi(tp as i32)).ln_1p() < target {
        tp += 1;
    }
    tp
}

fn floor_log2(x: i64) -> u64 {
    if x <= 1 {
        0
    } else {
        63 - x.leading_zeros() as u64
    }
}

fn check(bounds: Bounds, theta: usize) -> Result<()> {
    if theta == 0 {
        return Err(Error::InvalidParameter("theta must be at least 1".into()));
    }
    if bounds.lo > bounds.hi {
        return Err(Error::InvalidParameter(format!("bounds {bounds:?} are empty")));
    }
    Ok(())
}

/// Bisection; a weight is rejected after `θ'` consecutive negative probes.
pub fn run_standard(oracle: &mut impl WeightOracle, bounds: Bounds, theta: usize, seed: u64) -> Result<i64> {
    check(bounds, theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tp = theta_prime(theta, floor_log2(bounds.span()));
    let Bounds { mut lo, mut hi } = bounds;
    while lo < hi {
        let l = (lo + hi).div_euclid(2);
        let mut feasible = false;
        for _ in 0..tp {
            if oracle.probe(lo, l, rng.gen())? {
                feasible = true;
                break;
            }
        }
        if feasible {
            hi = l;
        } else {
            lo = l + 1;
        }
    }
    Ok(hi)
}

/// Bisection with a stack of pending midpoints: one probe per iteration, and
/// after a negative answer the search randomly tries a higher midpoint before
/// coming back.
pub fn run_probabilistic(
    oracle: &mut impl WeightOracle,
    bounds: Bounds,
    theta: usize,
    seed: u64,
) -> Result<i64> {
    check(bounds, theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tp = theta_prime(theta, bounds.span() as u64);
    let Bounds { mut lo, mut hi } = bounds;
    let mut stack: Vec<(i64, usize)> = Vec::new();
    while lo < hi {
        if stack.is_empty() {
            stack.push(((lo + hi).div_euclid(2), 0));
        }
        let (l, c) = stack.pop().expect("non-empty");
        if oracle.probe(lo, l, rng.gen())? {
            hi = l;
        } else if c + 1 >= tp {
            lo = l + 1;
            stack.clear();
        } else {
            stack.push((l, c + 1));
            if l < hi - 1 && rng.gen_bool(GO_HIGHER_PROBABILITY) {
                stack.push(((l + 1 + hi).div_euclid(2), 0));
            }
        }
    }
    Ok(hi)
}

/// Up to `θ` rounds of one multi-output evaluation over `[lo, hi]`, each
/// lowering `hi` to the smallest weight reported feasible.
pub fn run_unified(oracle: &mut impl WeightOracle, bounds: Bounds, theta: usize, seed: u64) -> Result<i64> {
    check(bounds, theta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let Bounds { lo, mut hi } = bounds;
    for _ in 0..theta {
        if lo == hi {
            break;
        }
        let answers = oracle.probe_all(lo, hi, rng.gen())?;
        if let Some(i) = answers.iter().position(|&b| b) {
            hi = lo + i as i64;
        }
    }
    Ok(hi)
}

pub fn run_strategy(
    oracle: &mut impl WeightOracle,
    strategy: SearchStrategy,
    bounds: Bounds,
    theta: usize,
    seed: u64,
) -> Result<i64> {
    match strategy {
        SearchStrategy::Standard => run_standard(oracle, bounds, theta, seed),
        SearchStrategy::Probabilistic => run_probabilistic(oracle, bounds, theta, seed),
        SearchStrategy::Unified => run_unified(oracle, bounds, theta, seed),
    }
}

/// Runs the configured strategy with the circuit-backed oracle.
pub fn search(mi: &MetricInstance, bounds: Bounds, cfg: &SearchConfig) -> Result<SearchOutcome> {
    let start = Instant::now();
    let mut oracle = CircuitOracle::new(mi, cfg.circuit_type, cfg.execution);
    let weight = run_strategy(&mut oracle, cfg.strategy, bounds, cfg.theta, cfg.seed)?;
    let mut stats = oracle.stats;
    stats.wall_ms = start.elapsed().as_secs_f64() * 1e3;
    Ok(SearchOutcome { weight, stats })
}

pub fn search_standard(mi: &MetricInstance, bounds: Bounds, cfg: &SearchConfig) -> Result<SearchOutcome> {
    search(mi, bounds, &SearchConfig { strategy: SearchStrategy::Standard, ..*cfg })
}

pub fn search_probabilistic(
    mi: &MetricInstance,
    bounds: Bounds,
    cfg: &SearchConfig,
) -> Result<SearchOutcome> {
    search(mi, bounds, &SearchConfig { strategy: SearchStrategy::Probabilistic, ..*cfg })
}

pub fn search_unified(mi: &MetricInstance, bounds: Bounds, cfg: &SearchConfig) -> Result<SearchOutcome> {
    search(mi, bounds, &SearchConfig { strategy: SearchStrategy::Unified, ..*cfg })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baseline::solve_dp;
    use crate::instance::fixtures::tiny;
    use crate::instance::{compute_bounds, generate_random, preprocess, GenConfig};

    /// Answers truthfully with probability `p`, otherwise says no.
    struct Mock {
        opt: i64,
        p: f64,
        rng: ChaCha8Rng,
        probes: Vec<(i64, i64)>,
        rounds: usize,
    }

    impl Mock {
        fn new(opt: i64, p: f64, seed: u64) -> Self {
            Self { opt, p, rng: ChaCha8Rng::seed_from_u64(seed), probes: vec![], rounds: 0 }
        }
    }

    impl WeightOracle for Mock {
        fn probe(&mut self, lo: i64, l: i64, _seed: u64) -> Result<bool> {
            self.probes.push((lo, l));
            Ok(self.opt <= l && self.rng.gen_bool(self.p))
        }

        fn probe_all(&mut self, lo: i64, hi: i64, _seed: u64) -> Result<Vec<bool>> {
            self.rounds += 1;
            Ok((lo..=hi).map(|l| l >= self.opt && self.rng.gen_bool(self.p)).collect())
        }
    }

    #[test]
    fn theta_prime_values() {
        assert_eq!(theta_prime(1, 1), 1);
        assert_eq!(theta_prime(20, 0), 1);
        assert_eq!(theta_prime(20, 1), 20);
        for e in 1..50 {
            let tp = theta_prime(20, e);
            let q: f64 = 0.75;
            assert!((1.0 - q.powi(tp as i32)).powi(e as i32) >= 1.0 - q.powi(20));
            if tp > 1 {
                assert!((1.0 - q.powi(tp as i32 - 1)).powi(e as i32) < 1.0 - q.powi(20));
            }
        }
        assert!(theta_prime(20, 16) > theta_prime(20, 4));
    }

    #[test]
    fn trivial_bounds_need_no_probes() {
        for s in SearchStrategy::ALL {
            let mut m = Mock::new(5, 1.0, 0);
            assert_eq!(run_strategy(&mut m, s, Bounds { lo: 5, hi: 5 }, 20, 0).unwrap(), 5);
            assert!(m.probes.is_empty() && m.rounds == 0);
        }
    }

    #[test]
    fn perfect_oracle_finds_optimum() {
        for s in SearchStrategy::ALL {
            for opt in 10..=30 {
                let mut m = Mock::new(opt, 1.0, opt as u64);
                assert_eq!(run_strategy(&mut m, s, Bounds { lo: 10, hi: 30 }, 20, 1).unwrap(), opt);
            }
        }
    }

    #[test]
    fn weak_oracle_never_underestimates_and_usually_succeeds() {
        for s in SearchStrategy::ALL {
            let mut hits = 0;
            for seed in 0..200u64 {
                let opt = 10 + (seed % 21) as i64;
                let mut m = Mock::new(opt, 0.25, seed);
                let w = run_strategy(&mut m, s, Bounds { lo: 10, hi: 30 }, 20, seed).unwrap();
                assert!(w >= opt);
                hits += (w == opt) as usize;
            }
            assert!(hits >= 195, "{s}: {hits}");
        }
    }

    #[test]
    fn probabilistic_goes_higher_only_below_hi_minus_one() {
        // With lo = 0, hi = 2 the first midpoint is 1 = hi - 1, so no higher
        // midpoint may ever be probed.
        let mut m = Mock::new(2, 1.0, 0);
        assert_eq!(run_probabilistic(&mut m, Bounds { lo: 0, hi: 2 }, 5, 3).unwrap(), 2);
        assert!(m.probes.iter().all(|&(_, l)| l == 1));
    }

    #[test]
    fn unified_all_false_keeps_hi() {
        let mut m = Mock::new(7, 0.0, 0);
        assert_eq!(run_unified(&mut m, Bounds { lo: 3, hi: 9 }, 4, 0).unwrap(), 9);
        assert_eq!(m.rounds, 4);
    }

    #[test]
    fn tiny_all_strategies_and_circuits() {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        let bounds = compute_bounds(&mi);
        for ct in CircuitType::ALL {
            for s in SearchStrategy::ALL {
                let out = search(&mi, bounds, &SearchConfig::new(s, ct, 20, 9)).unwrap();
                assert_eq!(out.weight, 7, "{ct} {s}");
            }
        }
    }

    #[test]
    fn random_instances_match_dp() {
        for seed in 0..20 {
            let cfg = GenConfig { integral: true, weight_max: 20.0, ..GenConfig::new(6, 4, 1 + seed as usize % 4, seed) };
            let mi = preprocess(&generate_random(&cfg).unwrap(), 1.0).unwrap();
            let opt = solve_dp(&mi).unwrap().weight;
            let bounds = compute_bounds(&mi);
            assert!(bounds.contains(opt));
            let out = search(&mi, bounds, &SearchConfig::new(SearchStrategy::Unified, CircuitType::Compact, 20, seed))
                .unwrap();
            assert_eq!(out.weight, opt, "seed {seed}");
        }
    }
}
