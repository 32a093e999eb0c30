//! Arithmetic circuits over color variables.
//!
//! Nodes are stored in topological order: every edge points from a lower to
//! a higher node id, so evaluation is a single forward sweep. In-edges are
//! kept in compressed sparse row form. Every edge whose head is an addition
//! gate carries a dense fingerprint id; the detector attaches a random ring
//! element to each of them.

mod build;
mod symbolic;

pub use build::{build, build_compact, build_naive, build_semicompact, build_standard};
pub use symbolic::{expand_symbolic, naive_detect, Monomial, Polynomial, Symbol};

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

pub const NO_FINGERPRINT: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    /// A variable node; the payload is its label (a color id in the
    /// constructions).
    Variable(u32),
    Add,
    Mul,
}

/// What a gate means in the walk encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Variable,
    Auxiliary,
    Receiver,
    Transmitter,
    Output,
    Generic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    None,
    Color(u32),
    Multiplicity(u32),
}

/// Walk-encoding metadata: layer, metric vertex, accumulated walk weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GateMeta {
    pub layer: u32,
    pub vertex: u32,
    pub weight: i64,
    pub tag: Tag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node {
    pub kind: NodeKind,
    pub role: Role,
    pub meta: Option<GateMeta>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutputNode {
    pub node: u32,
    /// The walk weight `ℓ` this output decides.
    pub target: i64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CircuitType {
    Naive,
    Standard,
    Compact,
    SemiCompact,
}

impl CircuitType {
    pub const ALL: [CircuitType; 4] =
        [CircuitType::Naive, CircuitType::Standard, CircuitType::Compact, CircuitType::SemiCompact];

    pub fn name(self) -> &'static str {
        match self {
            CircuitType::Naive => "naive",
            CircuitType::Standard => "standard",
            CircuitType::Compact => "compact",
            CircuitType::SemiCompact => "semi-compact",
        }
    }
}

impl fmt::Display for CircuitType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CircuitType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown circuit type {s:?}")))
    }
}

/// Which outputs a construction creates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Target {
    /// One output deciding "is there a solution of weight in `[lo, ℓ]`?".
    Single(i64),
    /// One output per `ℓ` in `[lo, hi]` deciding "weight exactly `ℓ`".
    AllOutputs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SizeCounts {
    pub nodes: usize,
    pub edges: usize,
}

/// Provenance of a circuit built by one of the constructions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConstructionInfo {
    pub circuit_type: CircuitType,
    pub layers: usize,
    /// Sizes straight out of the construction, before pruning.
    pub constructed: SizeCounts,
}

#[derive(Debug, Clone)]
pub struct Circuit {
    nodes: Vec<Node>,
    in_offsets: Vec<u32>,
    in_sources: Vec<u32>,
    fingerprint: Vec<u32>,
    num_fingerprints: usize,
    outputs: Vec<OutputNode>,
    degree_bound: usize,
    info: Option<ConstructionInfo>,
}

impl Circuit {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: u32) -> &Node {
        &self.nodes[id as usize]
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.in_sources.len()
    }

    pub fn outputs(&self) -> &[OutputNode] {
        &self.outputs
    }

    /// The degree bound `k` handed to the detector (the target `t`).
    pub fn degree_bound(&self) -> usize {
        self.degree_bound
    }

    pub fn info(&self) -> Option<&ConstructionInfo> {
        self.info.as_ref()
    }

    pub fn num_fingerprints(&self) -> usize {
        self.num_fingerprints
    }

    /// Range of edge ids entering `node`.
    pub fn in_edge_range(&self, node: u32) -> std::ops::Range<usize> {
        self.in_offsets[node as usize] as usize..self.in_offsets[node as usize + 1] as usize
    }

    /// Tail of edge `e`.
    pub fn edge_source(&self, e: usize) -> u32 {
        self.in_sources[e]
    }

    /// Fingerprint id of edge `e`, or [`NO_FINGERPRINT`] if its head is a
    /// multiplication gate.
    pub fn edge_fingerprint(&self, e: usize) -> u32 {
        self.fingerprint[e]
    }

    pub fn in_neighbors(&self, node: u32) -> &[u32] {
        &self.in_sources[self.in_edge_range(node)]
    }

    /// Head node of every edge, indexed by edge id.
    pub fn edge_heads(&self) -> Vec<u32> {
        let mut heads = vec![0; self.num_edges()];
        for v in 0..self.nodes.len() as u32 {
            for e in self.in_edge_range(v) {
                heads[e] = v;
            }
        }
        heads
    }

    pub fn out_degrees(&self) -> Vec<u32> {
        let mut out = vec![0; self.nodes.len()];
        for &u in &self.in_sources {
            out[u as usize] += 1;
        }
        out
    }

    pub fn size(&self) -> SizeCounts {
        SizeCounts { nodes: self.num_nodes(), edges: self.num_edges() }
    }

    /// Number of multiplication gates with two or more non-variable
    /// in-neighbors. Zero means every certificate is a tree certificate.
    pub fn mul_gates_with_multiple_gate_inputs(&self) -> usize {
        (0..self.nodes.len() as u32)
            .filter(|&v| self.nodes[v as usize].kind == NodeKind::Mul)
            .filter(|&v| {
                self.in_neighbors(v)
                    .iter()
                    .filter(|&&u| !matches!(self.nodes[u as usize].kind, NodeKind::Variable(_)))
                    .count()
                    > 1
            })
            .count()
    }

    /// Nodes that can reach `targets` (inclusive), restricted to edges with
    /// `edge_alive[e]` when a mask is given.
    pub fn ancestors(&self, targets: &[u32], edge_alive: Option<&[bool]>) -> Vec<bool> {
        let mut mark = vec![false; self.nodes.len()];
        for &t in targets {
            mark[t as usize] = true;
        }
        for v in (0..self.nodes.len()).rev() {
            if !mark[v] {
                continue;
            }
            for e in self.in_edge_range(v as u32) {
                if edge_alive.map_or(true, |alive| alive[e]) {
                    mark[self.in_sources[e] as usize] = true;
                }
            }
        }
        mark
    }

    /// Drops every node that cannot reach an output.
    pub fn prune(&self) -> Circuit {
        let targets: Vec<u32> = self.outputs.iter().map(|o| o.node).collect();
        let keep = self.ancestors(&targets, None);
        let mut remap = vec![u32::MAX; self.nodes.len()];
        let mut b = CircuitBuilder::new();
        for (v, node) in self.nodes.iter().enumerate() {
            if keep[v] {
                remap[v] = b.push(*node);
            }
        }
        for v in 0..self.nodes.len() {
            if !keep[v] {
                continue;
            }
            for &u in self.in_neighbors(v as u32) {
                b.edge(remap[u as usize], remap[v]);
            }
        }
        for o in &self.outputs {
            b.output(remap[o.node as usize], o.target);
        }
        let mut pruned = b.finish(self.degree_bound).expect("pruning preserves validity");
        pruned.info = self.info;
        pruned
    }

    /// Restricts the circuit to a single output (by index into
    /// [`Circuit::outputs`]) without changing node ids.
    pub fn with_single_output(&self, index: usize) -> Circuit {
        let mut c = self.clone();
        c.outputs = vec![self.outputs[index]];
        c
    }
}

/// Incremental circuit construction. Node ids are assigned in push order and
/// every edge must go from a lower to a higher id.
#[derive(Debug, Default)]
pub struct CircuitBuilder {
    nodes: Vec<Node>,
    edges: Vec<(u32, u32)>,
    outputs: Vec<OutputNode>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, node: Node) -> u32 {
        self.nodes.push(node);
        (self.nodes.len() - 1) as u32
    }

    pub fn variable(&mut self, label: u32) -> u32 {
        self.push(Node { kind: NodeKind::Variable(label), role: Role::Variable, meta: None })
    }

    pub fn add(&mut self, role: Role, meta: Option<GateMeta>) -> u32 {
        self.push(Node { kind: NodeKind::Add, role, meta })
    }

    pub fn mul(&mut self, role: Role, meta: Option<GateMeta>) -> u32 {
        self.push(Node { kind: NodeKind::Mul, role, meta })
    }

    pub fn edge(&mut self, from: u32, to: u32) {
        self.edges.push((from, to));
    }

    pub fn output(&mut self, node: u32, target: i64) {
        self.outputs.push(OutputNode { node, target });
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Validates and freezes the circuit: edges must respect node order,
    /// variables must be sources, multiplication gates need at least one
    /// input, and variable labels must be distinct.
    pub fn finish(self, degree_bound: usize) -> Result<Circuit> {
        let n = self.nodes.len();
        let bad = |msg: String| Err(Error::MalformedCircuit(msg));
        let mut in_degree = vec![0u32; n];
        for &(from, to) in &self.edges {
            if from as usize >= n || to as usize >= n {
                return bad(format!("edge ({from}, {to}) references a missing node"));
            }
            if from >= to {
                return bad(format!("edge ({from}, {to}) violates topological order"));
            }
            in_degree[to as usize] += 1;
        }
        let mut labels = std::collections::HashSet::new();
        for (v, node) in self.nodes.iter().enumerate() {
            match node.kind {
                NodeKind::Variable(label) => {
                    if in_degree[v] != 0 {
                        return bad(format!("variable node {v} has in-edges"));
                    }
                    if !labels.insert(label) {
                        return bad(format!("variable label {label} used twice"));
                    }
                }
                NodeKind::Mul if in_degree[v] == 0 => {
                    return bad(format!("multiplication gate {v} has no inputs"));
                }
                _ => {}
            }
        }
        for o in &self.outputs {
            if o.node as usize >= n {
                return bad(format!("output {} references a missing node", o.node));
            }
        }

        let mut in_offsets = vec![0u32; n + 1];
        for v in 0..n {
            in_offsets[v + 1] = in_offsets[v] + in_degree[v];
        }
        let mut cursor: Vec<u32> = in_offsets[..n].to_vec();
        let mut in_sources = vec![0u32; self.edges.len()];
        for &(from, to) in &self.edges {
            in_sources[cursor[to as usize] as usize] = from;
            cursor[to as usize] += 1;
        }
        let mut fingerprint = vec![NO_FINGERPRINT; self.edges.len()];
        let mut num_fingerprints = 0;
        for v in 0..n {
            if self.nodes[v].kind == NodeKind::Add {
                for slot in &mut fingerprint[in_offsets[v] as usize..in_offsets[v + 1] as usize] {
                    *slot = num_fingerprints;
                    num_fingerprints += 1;
                }
            }
        }
        Ok(Circuit {
            nodes: self.nodes,
            in_offsets,
            in_sources,
            fingerprint,
            num_fingerprints: num_fingerprints as usize,
            outputs: self.outputs,
            degree_bound,
            info: None,
        })
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builder_rejects_bad_structure() {
        let mut b = CircuitBuilder::new();
        let m = b.mul(Role::Generic, None);
        let x = b.variable(0);
        b.edge(x, m);
        assert!(b.finish(1).is_err());

        let mut b = CircuitBuilder::new();
        b.mul(Role::Generic, None);
        assert!(b.finish(1).is_err());

        let mut b = CircuitBuilder::new();
        b.variable(3);
        b.variable(3);
        assert!(b.finish(1).is_err());
    }

    #[test]
    fn fingerprints_only_on_addition_inputs() {
        let c = fixtures::coefficient_two();
        assert_eq!(c.num_fingerprints(), 4);
        for v in 0..c.num_nodes() as u32 {
            for e in c.in_edge_range(v) {
                let is_add = c.node(v).kind == NodeKind::Add;
                assert_eq!(c.edge_fingerprint(e) != NO_FINGERPRINT, is_add);
            }
        }
    }

    #[test]
    fn prune_drops_dead_nodes() {
        let mut b = CircuitBuilder::new();
        let x = b.variable(0);
        let y = b.variable(1);
        let dead = b.add(Role::Generic, None);
        b.edge(y, dead);
        let out = b.add(Role::Output, None);
        b.edge(x, out);
        b.output(out, 1);
        let c = b.finish(1).unwrap();
        let p = c.prune();
        assert_eq!(p.size(), SizeCounts { nodes: 2, edges: 1 });
        assert_eq!(p.outputs()[0].target, 1);
    }

    #[test]
    fn circuit_type_names_round_trip() {
        for ct in CircuitType::ALL {
            assert_eq!(ct.name().parse::<CircuitType>().unwrap(), ct);
        }
        assert!("bogus".parse::<CircuitType>().is_err());
    }
}
