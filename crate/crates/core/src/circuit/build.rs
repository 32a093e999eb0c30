use std::collections::BTreeMap;

use super::{
    Circuit, CircuitBuilder, CircuitType, ConstructionInfo, GateMeta, Role, SizeCounts, Tag, Target,
};
use crate::instance::{Bounds, MetricInstance};
use crate::{Error, Result};

/// Builds the circuit of the given type for the metric instance.
///
/// With [`Target::Single`]`(ℓ)` the circuit has one output that is satisfiable
/// iff a solution of weight in `[bounds.lo, ℓ]` exists. With
/// [`Target::AllOutputs`] there is one output per `ℓ ∈ [bounds.lo, bounds.hi]`.
/// The returned circuit is pruned; [`ConstructionInfo::constructed`] records
/// the size before pruning.
pub fn build(
    circuit_type: CircuitType,
    mi: &MetricInstance,
    bounds: Bounds,
    target: Target,
) -> Result<Circuit> {
    match circuit_type {
        CircuitType::Naive => build_naive(mi, bounds, target),
        CircuitType::Standard => build_standard(mi, bounds, target),
        CircuitType::Compact => build_compact(mi, bounds, target),
        CircuitType::SemiCompact => build_semicompact(mi, bounds, target),
    }
}

/// A transmitter gate of the previous layer: (node, vertex, weight, tag).
type Transmitter = (u32, usize, i64, Tag);

struct Layered<'a> {
    mi: &'a MetricInstance,
    bounds: Bounds,
    target: Target,
    cap: i64,
    b: CircuitBuilder,
    vars: Vec<u32>,
}

impl<'a> Layered<'a> {
    fn new(mi: &'a MetricInstance, bounds: Bounds, target: Target) -> Result<Self> {
        if mi.t() == 0 {
            return Err(Error::InvalidParameter("circuits need a target t >= 1".into()));
        }
        let cap = match target {
            Target::Single(l) => l,
            Target::AllOutputs => bounds.hi,
        };
        let mut b = CircuitBuilder::new();
        let vars = (0..mi.k() as u32).map(|c| b.variable(c)).collect();
        Ok(Self { mi, bounds, target, cap, b, vars })
    }

    fn meta(layer: usize, v: usize, d: i64, tag: Tag) -> Option<GateMeta> {
        Some(GateMeta { layer: layer as u32, vertex: v as u32, weight: d, tag })
    }

    fn colors_of(&self, v: usize) -> impl Iterator<Item = usize> {
        let mask = self.mi.colors()[v];
        (0..self.mi.k()).filter(move |&c| mask >> c & 1 == 1)
    }

    /// Wires the last layer into the outputs and freezes the circuit.
    fn finish(mut self, circuit_type: CircuitType, last: &[Transmitter]) -> Result<Circuit> {
        let s = self.mi.start();
        let closing = |&(node, v, d, _): &Transmitter| (node, d + self.mi.dist(v, s));
        match self.target {
            Target::Single(l) => {
                let o = self.b.add(Role::Output, None);
                for (node, total) in last.iter().map(closing) {
                    if self.bounds.lo <= total && total <= l {
                        self.b.edge(node, o);
                    }
                }
                self.b.output(o, l);
            }
            Target::AllOutputs => {
                let first = self.b.num_nodes() as u32;
                for l in self.bounds.lo..=self.bounds.hi {
                    let o = self.b.add(Role::Output, None);
                    self.b.output(o, l);
                }
                for (node, total) in last.iter().map(closing) {
                    if self.bounds.contains(total) {
                        self.b.edge(node, first + (total - self.bounds.lo) as u32);
                    }
                }
            }
        }
        let constructed = SizeCounts { nodes: self.b.num_nodes(), edges: self.b.num_edges() };
        let mut circuit = self.b.finish(self.mi.t())?;
        circuit.info = Some(ConstructionInfo { circuit_type, layers: self.mi.t(), constructed });
        Ok(circuit.prune())
    }
}

/// Layer one for the two constructions whose transmitters carry a color:
/// `T[1, v, w(s, v), c] = x_c`.
fn colored_first_layer(l: &mut Layered) -> Vec<Transmitter> {
    let s = l.mi.start();
    let mut out = Vec::new();
    for v in 1..l.mi.n() {
        let d = l.mi.dist(s, v);
        if d > l.cap {
            continue;
        }
        for c in l.colors_of(v).collect::<Vec<_>>() {
            let tag = Tag::Color(c as u32);
            let node = l.b.mul(Role::Transmitter, Layered::meta(1, v, d, tag));
            l.b.edge(l.vars[c], node);
            out.push((node, v, d, tag));
        }
    }
    out
}

/// Successor keys `(v, d, c)` of a colored transmitter: any vertex other than
/// the start, any color of it different from the transmitter's color.
fn colored_successors(
    l: &Layered,
    prev: &Transmitter,
) -> Vec<(usize, i64, usize)> {
    let &(_, u, du, tag) = prev;
    let Tag::Color(cu) = tag else { unreachable!("colored layer") };
    let mut out = Vec::new();
    for v in 1..l.mi.n() {
        let d = du + l.mi.dist(u, v);
        if d > l.cap {
            continue;
        }
        for c in l.colors_of(v) {
            if c != cu as usize {
                out.push((v, d, c));
            }
        }
    }
    out
}

/// One multiplication gate per (transition, color) feeding a transmitter
/// that sums them.
pub fn build_naive(mi: &MetricInstance, bounds: Bounds, target: Target) -> Result<Circuit> {
    let mut l = Layered::new(mi, bounds, target)?;
    let mut prev = colored_first_layer(&mut l);
    for layer in 2..=mi.t() {
        let mut heads: BTreeMap<(usize, i64, usize), Vec<u32>> = BTreeMap::new();
        for p in &prev {
            for (v, d, c) in colored_successors(&l, p) {
                let meta = Layered::meta(layer, v, d, Tag::Color(c as u32));
                let r = l.b.mul(Role::Receiver, meta);
                l.b.edge(p.0, r);
                l.b.edge(l.vars[c], r);
                heads.entry((v, d, c)).or_default().push(r);
            }
        }
        prev = heads
            .into_iter()
            .map(|((v, d, c), inputs)| {
                let tag = Tag::Color(c as u32);
                let node = l.b.add(Role::Transmitter, Layered::meta(layer, v, d, tag));
                for r in inputs {
                    l.b.edge(r, node);
                }
                (node, v, d, tag)
            })
            .collect();
    }
    l.finish(CircuitType::Naive, &prev)
}

/// One addition gate per (vertex, weight, color) summing the incoming
/// transitions, multiplied once by the color variable.
pub fn build_standard(mi: &MetricInstance, bounds: Bounds, target: Target) -> Result<Circuit> {
    let mut l = Layered::new(mi, bounds, target)?;
    let mut prev = colored_first_layer(&mut l);
    for layer in 2..=mi.t() {
        let mut incoming: BTreeMap<(usize, i64, usize), Vec<u32>> = BTreeMap::new();
        for p in &prev {
            for key in colored_successors(&l, p) {
                incoming.entry(key).or_default().push(p.0);
            }
        }
        let receivers: Vec<_> = incoming
            .iter()
            .map(|(&(v, d, c), sources)| {
                let r = l.b.add(Role::Receiver, Layered::meta(layer, v, d, Tag::Color(c as u32)));
                for &src in sources {
                    l.b.edge(src, r);
                }
                r
            })
            .collect();
        prev = incoming
            .keys()
            .zip(receivers)
            .map(|(&(v, d, c), r)| {
                let tag = Tag::Color(c as u32);
                let node = l.b.mul(Role::Transmitter, Layered::meta(layer, v, d, tag));
                l.b.edge(r, node);
                l.b.edge(l.vars[c], node);
                (node, v, d, tag)
            })
            .collect();
    }
    l.finish(CircuitType::Standard, &prev)
}

/// Colors are folded into one auxiliary sum per (layer, vertex); gates are
/// indexed by (vertex, weight) only.
pub fn build_compact(mi: &MetricInstance, bounds: Bounds, target: Target) -> Result<Circuit> {
    let mut l = Layered::new(mi, bounds, target)?;
    let n = mi.n();
    let t = mi.t();
    // aux[layer - 1][v]
    let mut aux = vec![vec![u32::MAX; n]; t];
    for (i, row) in aux.iter_mut().enumerate() {
        for (v, slot) in row.iter_mut().enumerate().skip(1) {
            let a = l.b.add(Role::Auxiliary, Layered::meta(i + 1, v, 0, Tag::None));
            for c in l.colors_of(v).collect::<Vec<_>>() {
                l.b.edge(l.vars[c], a);
            }
            *slot = a;
        }
    }

    let s = mi.start();
    let mut prev: Vec<Transmitter> = Vec::new();
    for v in 1..n {
        let d = mi.dist(s, v);
        if d <= l.cap {
            let node = l.b.mul(Role::Transmitter, Layered::meta(1, v, d, Tag::None));
            l.b.edge(aux[0][v], node);
            prev.push((node, v, d, Tag::None));
        }
    }
    for layer in 2..=t {
        let mut incoming: BTreeMap<(usize, i64), Vec<u32>> = BTreeMap::new();
        for &(node, u, du, _) in &prev {
            for v in 1..n {
                let d = du + mi.dist(u, v);
                if d <= l.cap {
                    incoming.entry((v, d)).or_default().push(node);
                }
            }
        }
        let receivers: Vec<_> = incoming
            .iter()
            .map(|(&(v, d), sources)| {
                let r = l.b.add(Role::Receiver, Layered::meta(layer, v, d, Tag::None));
                for &src in sources {
                    l.b.edge(src, r);
                }
                r
            })
            .collect();
        prev = incoming
            .keys()
            .zip(receivers)
            .map(|(&(v, d), r)| {
                let node = l.b.mul(Role::Transmitter, Layered::meta(layer, v, d, Tag::None));
                l.b.edge(r, node);
                l.b.edge(aux[layer - 1][v], node);
                (node, v, d, Tag::None)
            })
            .collect();
    }
    l.finish(CircuitType::Compact, &prev)
}

/// Like the compact construction, but gates also track how many colors have
/// been taken at the current vertex, and the auxiliary sums are shared
/// across layers.
pub fn build_semicompact(mi: &MetricInstance, bounds: Bounds, target: Target) -> Result<Circuit> {
    let mut l = Layered::new(mi, bounds, target)?;
    let n = mi.n();
    let t = mi.t();
    let limit: Vec<usize> =
        (0..n).map(|v| (mi.colors()[v].count_ones() as usize).min(t)).collect();
    // aux[v][i - 1]
    let mut aux = vec![Vec::new(); n];
    for v in 1..n {
        for i in 1..=limit[v] {
            let a = l.b.add(Role::Auxiliary, Layered::meta(0, v, 0, Tag::Multiplicity(i as u32)));
            for c in l.colors_of(v).collect::<Vec<_>>() {
                l.b.edge(l.vars[c], a);
            }
            aux[v].push(a);
        }
    }

    let s = mi.start();
    let mut prev: Vec<Transmitter> = Vec::new();
    for v in 1..n {
        let d = mi.dist(s, v);
        if d <= l.cap && limit[v] >= 1 {
            let tag = Tag::Multiplicity(1);
            let node = l.b.mul(Role::Transmitter, Layered::meta(1, v, d, tag));
            l.b.edge(aux[v][0], node);
            prev.push((node, v, d, tag));
        }
    }
    for layer in 2..=t {
        let mut incoming: BTreeMap<(usize, i64, usize), Vec<u32>> = BTreeMap::new();
        for &(node, u, du, tag) in &prev {
            let Tag::Multiplicity(i) = tag else { unreachable!("multiplicity layer") };
            let i = i as usize;
            if i < limit[u] {
                incoming.entry((u, du, i + 1)).or_default().push(node);
            }
            for v in 1..n {
                if v == u || limit[v] == 0 {
                    continue;
                }
                let d = du + mi.dist(u, v);
                if d <= l.cap {
                    incoming.entry((v, d, 1)).or_default().push(node);
                }
            }
        }
        let receivers: Vec<_> = incoming
            .iter()
            .map(|(&(v, d, i), sources)| {
                let tag = Tag::Multiplicity(i as u32);
                let r = l.b.add(Role::Receiver, Layered::meta(layer, v, d, tag));
                for &src in sources {
                    l.b.edge(src, r);
                }
                r
            })
            .collect();
        prev = incoming
            .keys()
            .zip(receivers)
            .map(|(&(v, d, i), r)| {
                let tag = Tag::Multiplicity(i as u32);
                let node = l.b.mul(Role::Transmitter, Layered::meta(layer, v, d, tag));
                l.b.edge(r, node);
                l.b.edge(aux[v][i - 1], node);
                (node, v, d, tag)
            })
            .collect();
    }
    l.finish(CircuitType::SemiCompact, &prev)
}
