//! Instance model for Graph Inspection.
//!
//! A [`RawInstance`] is what users hand us: an undirected graph with real,
//! nonnegative edge weights and a color set on every vertex. The algebraic
//! solver only works on complete metric graphs with integral weights, which
//! [`preprocess`] produces as a [`MetricInstance`]. Color sets are bitmasks,
//! so at most 64 colors are supported.

mod bounds;
mod format;
mod generate;
mod metric;

pub use bounds::compute_bounds;
pub use format::{parse_instance, write_instance, ParseError};
pub use generate::{generate_random, GenConfig};
pub use metric::{postprocess, preprocess, MetricInstance, PreprocessStats};

use crate::{Error, Result};

/// Maximum number of colors (color sets are `u64` bitmasks).
pub const MAX_COLORS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

/// The Graph Inspection input.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInstance {
    n: usize,
    k: usize,
    t: usize,
    start: usize,
    colors: Vec<u64>,
    edges: Vec<Edge>,
}

impl RawInstance {
    /// Validates and builds an instance. Colors on the start vertex are
    /// dropped with a warning.
    pub fn new(
        k: usize,
        t: usize,
        start: usize,
        mut colors: Vec<u64>,
        edges: Vec<Edge>,
    ) -> Result<Self> {
        let n = colors.len();
        let invalid = |msg: String| Err(Error::InvalidInstance(msg));
        if k > MAX_COLORS {
            return invalid(format!("{k} colors exceed the supported maximum of {MAX_COLORS}"));
        }
        if t > k {
            return invalid(format!("target t={t} exceeds color count k={k}"));
        }
        if start >= n {
            return invalid(format!("start vertex {start} out of range (n={n})"));
        }
        let allowed = color_universe(k);
        for (v, &c) in colors.iter().enumerate() {
            if c & !allowed != 0 {
                return invalid(format!("vertex {v} carries a color id >= k={k}"));
            }
        }
        let mut seen = std::collections::HashSet::new();
        for e in &edges {
            if e.u >= n || e.v >= n {
                return invalid(format!("edge ({}, {}) references a missing vertex", e.u, e.v));
            }
            if e.u == e.v {
                return invalid(format!("self-loop on vertex {}", e.u));
            }
            if !(e.weight >= 0.0) || !e.weight.is_finite() {
                return invalid(format!("edge ({}, {}) has invalid weight {}", e.u, e.v, e.weight));
            }
            if !seen.insert((e.u.min(e.v), e.u.max(e.v))) {
                return invalid(format!("duplicate edge ({}, {})", e.u, e.v));
            }
        }
        if colors[start] != 0 {
            log::warn!("dropping colors from start vertex {start}");
            colors[start] = 0;
        }
        Ok(Self { n, k, t, start, colors, edges })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn colors(&self) -> &[u64] {
        &self.colors
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Returns a copy with a different target `t`.
    pub fn with_target(&self, t: usize) -> Result<Self> {
        Self::new(self.k, t, self.start, self.colors.clone(), self.edges.clone())
    }

    /// Weight of the cheapest direct edge between `u` and `v`, if any.
    pub fn edge_weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edges
            .iter()
            .filter(|e| (e.u == u && e.v == v) || (e.u == v && e.v == u))
            .map(|e| e.weight)
            .fold(None, |acc: Option<f64>, w| Some(acc.map_or(w, |a| a.min(w))))
    }

    /// Recomputes the weight of a walk given as original vertex ids by
    /// summing direct edge weights. `None` if two consecutive vertices are
    /// not adjacent.
    pub fn walk_weight(&self, vertices: &[usize]) -> Option<f64> {
        let mut total = 0.0;
        for pair in vertices.windows(2) {
            if pair[0] == pair[1] {
                continue;
            }
            total += self.edge_weight(pair[0], pair[1])?;
        }
        Some(total)
    }

    /// Number of distinct colors collected along `vertices`.
    pub fn collected_colors(&self, vertices: &[usize]) -> usize {
        vertices.iter().fold(0u64, |acc, &v| acc | self.colors[v]).count_ones() as usize
    }

    /// True when the walk is closed at `s`, collects at least `t` colors, and
    /// only uses existing edges.
    pub fn is_solution(&self, vertices: &[usize]) -> bool {
        vertices.first() == Some(&self.start)
            && vertices.last() == Some(&self.start)
            && self.collected_colors(vertices) >= self.t
            && self.walk_weight(vertices).is_some()
    }
}

/// Bitmask with the low `k` bits set.
pub fn color_universe(k: usize) -> u64 {
    if k >= 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Lower and upper bounds on the optimal (scaled) walk weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Bounds {
    pub lo: i64,
    pub hi: i64,
}

impl Bounds {
    pub fn new(lo: i64, hi: i64) -> Result<Self> {
        if lo < 0 || lo > hi {
            return Err(Error::InvalidParameter(format!("invalid bounds [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    /// Number of candidate weights, `hi - lo + 1`.
    pub fn span(&self) -> i64 {
        self.hi - self.lo + 1
    }

    pub fn contains(&self, weight: i64) -> bool {
        self.lo <= weight && weight <= self.hi
    }
}

/// A closed walk given as a vertex sequence plus its weight. On a
/// [`MetricInstance`] the vertices are metric indices and the weight is an
/// integer; on a [`RawInstance`] they are original ids with a real weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Walk<W> {
    pub vertices: Vec<usize>,
    pub weight: W,
}

pub type MetricWalk = Walk<i64>;
pub type RawWalk = Walk<f64>;

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub const TINY_TEXT: &str = "\
GI 1
# canonical four-vertex example
4 6 2 2
s 0
v 0
v 1 0
v 2 1
v 3 0 1
e 0 1 2
e 0 2 3
e 0 3 6
e 1 2 2
e 1 3 3
e 2 3 3
";

    pub fn tiny() -> RawInstance {
        parse_instance(TINY_TEXT.as_bytes()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge(u: usize, v: usize, weight: f64) -> Edge {
        Edge { u, v, weight }
    }

    #[test]
    fn start_colors_are_stripped() {
        let inst = RawInstance::new(2, 1, 0, vec![0b11, 0b01], vec![edge(0, 1, 1.0)]).unwrap();
        assert_eq!(inst.colors()[0], 0);
    }

    #[test]
    fn rejects_invariant_violations() {
        assert!(RawInstance::new(2, 3, 0, vec![0, 1], vec![]).is_err());
        assert!(RawInstance::new(1, 1, 0, vec![0, 0b10], vec![]).is_err());
        assert!(RawInstance::new(1, 1, 0, vec![0, 1], vec![edge(1, 1, 1.0)]).is_err());
        assert!(RawInstance::new(1, 1, 0, vec![0, 1], vec![edge(0, 1, -1.0)]).is_err());
        assert!(
            RawInstance::new(1, 1, 0, vec![0, 1], vec![edge(0, 1, 1.0), edge(1, 0, 2.0)]).is_err()
        );
    }

    #[test]
    fn walk_helpers() {
        let tiny = fixtures::tiny();
        assert_eq!(tiny.walk_weight(&[0, 1, 2, 0]), Some(7.0));
        assert_eq!(tiny.collected_colors(&[0, 1, 2, 0]), 2);
        assert!(tiny.is_solution(&[0, 1, 2, 0]));
        assert!(!tiny.is_solution(&[0, 1, 0]));
    }

    #[test]
    fn bounds_validation() {
        assert!(Bounds::new(3, 2).is_err());
        assert!(Bounds::new(-1, 2).is_err());
        assert_eq!(Bounds::new(6, 7).unwrap().span(), 2);
    }
}
