//! Extracting a tree certificate from a single-output circuit and decoding
//! it into a walk.
//!
//! Both recovery procedures sweep the circuit from the output towards the
//! variables. Nodes that lost every out-edge are deleted; at each addition
//! gate the in-edges are halved repeatedly, using the detector to decide
//! which half can go, until one in-edge is left.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, NodeKind, Role};
use crate::instance::{MetricInstance, MetricWalk, Walk};
use crate::mld::{EvalPlan, Execution, MldParams};
use crate::{Error, Result};

/// Detector calls the Las Vegas variant may spend on a single split before
/// giving up with a diagnostic.
pub const LV_ATTEMPT_CAP: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RecoveryStrategy {
    MonteCarlo,
    LasVegas,
}

impl RecoveryStrategy {
    pub const ALL: [RecoveryStrategy; 2] = [RecoveryStrategy::MonteCarlo, RecoveryStrategy::LasVegas];

    pub fn name(self) -> &'static str {
        match self {
            RecoveryStrategy::MonteCarlo => "mc",
            RecoveryStrategy::LasVegas => "lv",
        }
    }
}

impl fmt::Display for RecoveryStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RecoveryStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown recovery strategy {s:?}")))
    }
}

/// A sub-circuit given by node and edge subsets of its parent circuit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeCertificate {
    pub output: u32,
    /// Sorted node ids.
    pub nodes: Vec<u32>,
    /// Sorted edge ids.
    pub edges: Vec<usize>,
}

impl TreeCertificate {
    /// Variable labels in the certificate.
    pub fn variables(&self, c: &Circuit) -> Vec<u32> {
        self.nodes
            .iter()
            .filter_map(|&v| match c.node(v).kind {
                NodeKind::Variable(l) => Some(l),
                _ => None,
            })
            .collect()
    }

    /// Verifies every structural property of a tree certificate of `c` with
    /// `c.degree_bound()` variables.
    pub fn check(&self, c: &Circuit) -> Result<()> {
        let fail = |msg: String| Err(Error::RecoveryFailed(format!("invalid certificate: {msg}")));
        let in_cert: BTreeSet<u32> = self.nodes.iter().copied().collect();
        let edge_set: BTreeSet<usize> = self.edges.iter().copied().collect();
        if !in_cert.contains(&self.output) {
            return fail("output missing".into());
        }
        let heads = c.edge_heads();
        let mut out_deg = vec![0usize; c.num_nodes()];
        for &e in &self.edges {
            let (u, v) = (c.edge_source(e), heads[e]);
            if !in_cert.contains(&u) || !in_cert.contains(&v) {
                return fail(format!("edge {e} leaves the node set"));
            }
            out_deg[u as usize] += 1;
        }
        if self.edges.len() + 1 != self.nodes.len() {
            return fail(format!("{} nodes but {} edges", self.nodes.len(), self.edges.len()));
        }
        // With |E| = |V| - 1, reaching every node from the output makes the
        // underlying graph a tree.
        let mut reached = BTreeSet::from([self.output]);
        let mut stack = vec![self.output];
        while let Some(v) = stack.pop() {
            for e in c.in_edge_range(v) {
                if edge_set.contains(&e) && reached.insert(c.edge_source(e)) {
                    stack.push(c.edge_source(e));
                }
            }
        }
        if reached.len() != self.nodes.len() {
            return fail("not connected to the output".into());
        }
        let mut adds = 0;
        let mut vars = 0;
        for &v in &self.nodes {
            let kept = c.in_edge_range(v).filter(|e| edge_set.contains(e)).count();
            match c.node(v).kind {
                NodeKind::Add => {
                    adds += 1;
                    if kept != 1 {
                        return fail(format!("addition gate {v} keeps {kept} in-edges"));
                    }
                }
                NodeKind::Mul => {
                    if kept != c.in_edge_range(v).len() {
                        return fail(format!("multiplication gate {v} lost in-edges"));
                    }
                }
                NodeKind::Variable(_) => {
                    vars += 1;
                    if out_deg[v as usize] != 1 {
                        return fail(format!("variable {v} has out-degree {}", out_deg[v as usize]));
                    }
                }
            }
        }
        let t = c.degree_bound();
        if vars != t {
            return fail(format!("{vars} variables, expected {t}"));
        }
        if adds > 2 * t {
            return fail(format!("{adds} addition gates exceed {}", 2 * t));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecoveryStats {
    pub detect_calls: usize,
    /// Balanced partitions performed.
    pub splits: usize,
}

#[derive(Debug, Clone)]
pub struct Recovery {
    pub certificate: TreeCertificate,
    pub stats: RecoveryStats,
}

/// Tombstone state of a recovery run.
struct Sweep<'a> {
    c: &'a Circuit,
    edge_alive: Vec<bool>,
    node_alive: Vec<bool>,
    live_out: Vec<u32>,
    heads: Vec<u32>,
    rng: ChaCha8Rng,
    execution: Execution,
    stats: RecoveryStats,
}

impl<'a> Sweep<'a> {
    fn new(c: &'a Circuit, seed: u64, execution: Execution) -> Self {
        Self {
            c,
            edge_alive: vec![true; c.num_edges()],
            node_alive: vec![true; c.num_nodes()],
            live_out: c.out_degrees(),
            heads: c.edge_heads(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            execution,
            stats: RecoveryStats::default(),
        }
    }

    fn remove_edge(&mut self, e: usize) {
        if std::mem::replace(&mut self.edge_alive[e], false) {
            self.live_out[self.c.edge_source(e) as usize] -= 1;
        }
    }

    fn live_in_edges(&self, v: u32) -> Vec<usize> {
        self.c.in_edge_range(v).filter(|&e| self.edge_alive[e]).collect()
    }

    /// One detector run on the current circuit minus the edges in `x`.
    fn detect_without(&mut self, x: &[usize]) -> Result<bool> {
        for &e in x {
            self.edge_alive[e] = false;
        }
        let plan = EvalPlan::restricted(self.c, Some(&self.edge_alive), &[0]);
        for &e in x {
            self.edge_alive[e] = true;
        }
        self.stats.detect_calls += 1;
        let params = MldParams::sample(self.c, self.rng.gen())?;
        Ok(plan.evaluate_with(&params, self.execution).detected[0])
    }

    /// Runs the sweep; `choose` receives the balanced partition `(A, B)` of
    /// the live in-edges of an addition gate and returns the half to delete.
    fn run<F>(mut self, mut choose: F) -> Result<Recovery>
    where
        F: FnMut(&mut Self, &[usize], &[usize]) -> Result<bool>,
    {
        let r = self.c.outputs()[0].node;
        for v in (0..=r).rev() {
            if !self.node_alive[v as usize] {
                continue;
            }
            if v != r && self.live_out[v as usize] == 0 {
                self.node_alive[v as usize] = false;
                for e in self.c.in_edge_range(v) {
                    self.remove_edge(e);
                }
                continue;
            }
            if self.c.node(v).kind != NodeKind::Add {
                continue;
            }
            loop {
                let live = self.live_in_edges(v);
                if live.len() <= 1 {
                    break;
                }
                let (a, b) = live.split_at(live.len().div_ceil(2));
                self.stats.splits += 1;
                let drop_a = choose(&mut self, a, b)?;
                for &e in if drop_a { a } else { b } {
                    self.remove_edge(e);
                }
            }
        }
        for v in r + 1..self.c.num_nodes() as u32 {
            self.node_alive[v as usize] = false;
        }
        let nodes: Vec<u32> =
            (0..self.c.num_nodes() as u32).filter(|&v| self.node_alive[v as usize]).collect();
        let edges: Vec<usize> = (0..self.c.num_edges())
            .filter(|&e| self.edge_alive[e] && self.node_alive[self.heads[e] as usize])
            .collect();
        let certificate = TreeCertificate { output: r, nodes, edges };
        certificate.check(self.c)?;
        Ok(Recovery { certificate, stats: self.stats })
    }
}

fn require_single_output(c: &Circuit) -> Result<()> {
    if c.outputs().len() != 1 {
        return Err(Error::InvalidParameter(format!(
            "recovery needs a single-output circuit, got {} outputs",
            c.outputs().len()
        )));
    }
    Ok(())
}

/// Monte Carlo recovery: at each split, up to `theta` detector runs on the
/// circuit without `A`; any positive answer deletes `A`, otherwise `B` goes.
pub fn recover_mc(c: &Circuit, theta: usize, seed: u64) -> Result<Recovery> {
    recover_mc_with(c, theta, seed, Execution::default())
}

pub fn recover_mc_with(c: &Circuit, theta: usize, seed: u64, execution: Execution) -> Result<Recovery> {
    require_single_output(c)?;
    if theta == 0 {
        return Err(Error::InvalidParameter("theta must be at least 1".into()));
    }
    Sweep::new(c, seed, execution).run(|sweep, a, _| {
        for _ in 0..theta {
            if sweep.detect_without(a)? {
                return Ok(true);
            }
        }
        Ok(false)
    })
}

/// Las Vegas recovery: at each split, alternately test the circuit without
/// `A` and without `B` until one answer is positive, and delete that half.
pub fn recover_lv(c: &Circuit, seed: u64) -> Result<Recovery> {
    recover_lv_with(c, seed, Execution::default())
}

pub fn recover_lv_with(c: &Circuit, seed: u64, execution: Execution) -> Result<Recovery> {
    require_single_output(c)?;
    Sweep::new(c, seed, execution).run(|sweep, a, b| {
        for attempt in 0..LV_ATTEMPT_CAP {
            let drop_a = attempt % 2 == 0;
            if sweep.detect_without(if drop_a { a } else { b })? {
                return Ok(drop_a);
            }
        }
        Err(Error::RecoveryFailed(format!(
            "no positive detection after {LV_ATTEMPT_CAP} attempts; the circuit is likely not recoverable"
        )))
    })
}

pub fn recover(
    c: &Circuit,
    strategy: RecoveryStrategy,
    theta: usize,
    seed: u64,
    execution: Execution,
) -> Result<Recovery> {
    match strategy {
        RecoveryStrategy::MonteCarlo => recover_mc_with(c, theta, seed, execution),
        RecoveryStrategy::LasVegas => recover_lv_with(c, seed, execution),
    }
}

/// A walk read off a certificate, on metric vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodedWalk {
    pub walk: MetricWalk,
    /// Distinct color labels taken by the certificate.
    pub colors: Vec<u32>,
}

/// Reads the transmitter of every layer off the certificate and emits
/// `s, v1, ..., vt, s` with consecutive repeats collapsed.
pub fn decode_walk(cert: &TreeCertificate, c: &Circuit, mi: &MetricInstance) -> Result<DecodedWalk> {
    let t = c.degree_bound();
    let mut per_layer: Vec<Option<(u32, i64)>> = vec![None; t + 1];
    for &v in &cert.nodes {
        let node = c.node(v);
        if node.role != Role::Transmitter {
            continue;
        }
        let meta = node.meta.ok_or_else(|| Error::MalformedCircuit(format!("gate {v} lacks metadata")))?;
        let layer = meta.layer as usize;
        if layer == 0 || layer > t || per_layer[layer].replace((meta.vertex, meta.weight)).is_some() {
            return Err(Error::MalformedCircuit(format!("unexpected transmitter at layer {layer}")));
        }
    }
    let s = mi.start();
    let mut vertices = vec![s];
    let mut weight = 0;
    for (layer, entry) in per_layer.iter().enumerate().skip(1) {
        let (v, d) = entry.ok_or_else(|| Error::MalformedCircuit(format!("no transmitter at layer {layer}")))?;
        let v = v as usize;
        let prev = *vertices.last().expect("non-empty");
        if weight + mi.dist(prev, v) != d {
            return Err(Error::MalformedCircuit(format!("layer {layer} weight {d} is inconsistent")));
        }
        weight = d;
        if v != prev {
            vertices.push(v);
        }
    }
    weight += mi.dist(*vertices.last().expect("non-empty"), s);
    vertices.push(s);
    let mut colors = cert.variables(c);
    colors.sort_unstable();
    colors.dedup();
    Ok(DecodedWalk { walk: Walk { vertices, weight }, colors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build, CircuitBuilder, CircuitType, Target};
    use crate::instance::fixtures::tiny;
    use crate::instance::{compute_bounds, generate_random, preprocess, Bounds, GenConfig};
    use crate::mld::detect;

    fn tiny_circuit(ct: CircuitType) -> (MetricInstance, Circuit) {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        let c = build(ct, &mi, compute_bounds(&mi), Target::Single(7)).unwrap();
        (mi, c)
    }

    #[test]
    fn tree_input_is_returned_unchanged() {
        let mut b = CircuitBuilder::new();
        let x = b.variable(0);
        let y = b.variable(1);
        let m = b.mul(Role::Generic, None);
        b.edge(x, m);
        b.edge(y, m);
        let o = b.add(Role::Output, None);
        b.edge(m, o);
        b.output(o, 0);
        let c = b.finish(2).unwrap();
        for rec in [recover_mc(&c, 5, 1).unwrap(), recover_lv(&c, 1).unwrap()] {
            assert_eq!(rec.stats.detect_calls, 0);
            assert_eq!(rec.certificate.nodes, vec![0, 1, 2, 3]);
            assert_eq!(rec.certificate.edges.len(), 3);
        }
    }

    #[test]
    fn lv_on_tiny_always_succeeds() {
        for ct in CircuitType::ALL {
            let (mi, c) = tiny_circuit(ct);
            for seed in 0..100 {
                let rec = recover_lv(&c, seed).unwrap();
                let w = decode_walk(&rec.certificate, &c, &mi).unwrap();
                assert_eq!(w.walk.weight, 7, "{ct}");
                assert!(w.walk.vertices == [0, 1, 2, 0] || w.walk.vertices == [0, 2, 1, 0]);
                assert_eq!(w.colors, vec![0, 1]);
                assert!(mi.is_solution(&w.walk));
            }
        }
    }

    #[test]
    fn mc_on_tiny_mostly_succeeds_and_agrees_with_lv() {
        for ct in CircuitType::ALL {
            let (mi, c) = tiny_circuit(ct);
            let mut ok = 0;
            for seed in 0..50 {
                if let Ok(rec) = recover_mc(&c, 20, seed) {
                    let w = decode_walk(&rec.certificate, &c, &mi).unwrap();
                    assert_eq!(w.walk.weight, 7);
                    ok += 1;
                }
            }
            assert!(ok >= 45, "{ct}: {ok}");
        }
    }

    #[test]
    fn t_one_certificate() {
        let mi = preprocess(&tiny().with_target(1).unwrap(), 1.0).unwrap();
        let bounds = compute_bounds(&mi);
        let c = build(CircuitType::Compact, &mi, bounds, Target::Single(bounds.lo)).unwrap();
        let rec = recover_lv(&c, 3).unwrap();
        let w = decode_walk(&rec.certificate, &c, &mi).unwrap();
        assert_eq!(w.walk.vertices, vec![0, 1, 0]);
        assert_eq!(w.walk.weight, 2 * mi.dist(0, 1));
    }

    #[test]
    fn same_vertex_steps_collapse() {
        // Both colors sit on vertex 1 only.
        let mi = MetricInstance::from_matrix(vec![vec![0, 3], vec![3, 0]], vec![0, 0b11], 2, 2).unwrap();
        for ct in [CircuitType::Naive, CircuitType::Standard, CircuitType::Compact, CircuitType::SemiCompact] {
            let c = build(ct, &mi, Bounds { lo: 6, hi: 6 }, Target::Single(6)).unwrap();
            let rec = recover_lv(&c, 0).unwrap();
            let w = decode_walk(&rec.certificate, &c, &mi).unwrap();
            assert_eq!(w.walk.vertices, vec![0, 1, 0], "{ct}");
            assert_eq!(w.walk.weight, 6);
        }
    }

    #[test]
    fn certificates_on_random_instances() {
        for seed in 0..20u64 {
            let cfg = GenConfig { integral: true, ..GenConfig::new(6, 4, 1 + seed as usize % 4, seed) };
            let mi = preprocess(&generate_random(&cfg).unwrap(), 1.0).unwrap();
            let bounds = compute_bounds(&mi);
            let ct = CircuitType::ALL[seed as usize % 4];
            let c = build(ct, &mi, bounds, Target::Single(bounds.hi)).unwrap();
            assert!((0..20).any(|s| detect(&c, s).unwrap().any()));
            let rec = recover_lv(&c, seed).unwrap();
            rec.certificate.check(&c).unwrap();
            let w = decode_walk(&rec.certificate, &c, &mi).unwrap();
            assert!(mi.is_solution(&w.walk));
            assert!(w.walk.weight <= bounds.hi && w.walk.weight >= bounds.lo);
            assert_eq!(w.colors.len(), mi.t());

            let theta = 20;
            if let Ok(mc) = recover_mc(&c, theta, seed) {
                let adds = 2 * mi.t();
                let max_in = (0..c.num_nodes() as u32).map(|v| c.in_edge_range(v).len()).max().unwrap();
                let log = (usize::BITS - max_in.leading_zeros()) as usize;
                assert!(mc.stats.detect_calls <= 4 * adds * log.max(1) * theta);
            }
        }
    }

    #[test]
    fn checker_rejects_broken_certificates() {
        let (_, c) = tiny_circuit(CircuitType::Standard);
        let rec = recover_lv(&c, 0).unwrap();
        let mut broken = rec.certificate.clone();
        broken.edges.pop();
        assert!(broken.check(&c).is_err());
        let mut whole = rec.certificate.clone();
        whole.nodes = (0..c.num_nodes() as u32).collect();
        whole.edges = (0..c.num_edges()).collect();
        assert!(whole.check(&c).is_err());
    }

    #[test]
    fn unrecoverable_circuit_reports_failure() {
        let c = crate::circuit::fixtures::coefficient_two();
        assert!(matches!(recover_mc(&c, 3, 0), Err(Error::RecoveryFailed(_))));
    }
}
