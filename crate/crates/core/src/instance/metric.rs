use super::{RawInstance, RawWalk, Walk};
use crate::{Error, Result};

const NO_PRED: usize = usize::MAX;

/// Sizes before and after preprocessing (`m'` counts closure edges).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreprocessStats {
    pub n: usize,
    pub m: usize,
    pub n_reduced: usize,
    pub m_reduced: usize,
}

/// A complete metric graph with integral weights, ready for the algebraic
/// solver. Index 0 is always the start vertex.
#[derive(Debug, Clone)]
pub struct MetricInstance {
    vertex_map: Vec<usize>,
    dist: Vec<i64>,
    colors: Vec<u64>,
    t: usize,
    k: usize,
    lambda: f64,
    raw_n: usize,
    raw_dist: Vec<f64>,
    raw_pred: Vec<usize>,
    stats: PreprocessStats,
}

impl MetricInstance {
    /// Builds a metric instance directly from an integer distance matrix,
    /// with vertex 0 as the start. The matrix must be symmetric, zero on
    /// the diagonal, and satisfy the triangle inequality. Every matrix entry
    /// is treated as a direct edge of the underlying graph.
    pub fn from_matrix(dist: Vec<Vec<i64>>, colors: Vec<u64>, k: usize, t: usize) -> Result<Self> {
        let n = dist.len();
        if n == 0 || colors.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidInstance("distance matrix shape mismatch".into()));
        }
        if colors[0] != 0 {
            return Err(Error::InvalidInstance("start vertex must be colorless".into()));
        }
        let flat: Vec<i64> = dist.into_iter().flatten().collect();
        let mi = Self {
            vertex_map: (0..n).collect(),
            raw_dist: flat.iter().map(|&d| d as f64).collect(),
            raw_pred: (0..n * n).map(|ij| ij / n).collect(),
            dist: flat,
            colors,
            t,
            k,
            lambda: 1.0,
            raw_n: n,
            stats: PreprocessStats { n, m: n * (n - 1) / 2, n_reduced: n, m_reduced: n * (n - 1) / 2 },
        };
        if let Some((a, b, c)) = mi.metric_violation() {
            return Err(Error::InvalidInstance(format!("triangle inequality fails on ({a}, {b}, {c})")));
        }
        if mi.reachable_colors() < t {
            return Err(Error::Infeasible { reachable: mi.reachable_colors(), target: t });
        }
        Ok(mi)
    }

    /// Number of surviving vertices (including the start).
    pub fn n(&self) -> usize {
        self.vertex_map.len()
    }

    pub fn start(&self) -> usize {
        0
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn colors(&self) -> &[u64] {
        &self.colors
    }

    pub fn dist(&self, a: usize, b: usize) -> i64 {
        self.dist[a * self.n() + b]
    }

    pub fn original_id(&self, idx: usize) -> usize {
        self.vertex_map[idx]
    }

    pub fn vertex_map(&self) -> &[usize] {
        &self.vertex_map
    }

    /// Real shortest-path distance between two original vertices.
    pub fn raw_dist(&self, u: usize, v: usize) -> f64 {
        self.raw_dist[u * self.raw_n + v]
    }

    pub fn stats(&self) -> PreprocessStats {
        self.stats
    }

    pub fn reachable_colors(&self) -> usize {
        self.colors.iter().fold(0u64, |a, &c| a | c).count_ones() as usize
    }

    /// First triple violating the triangle inequality, if any.
    pub fn metric_violation(&self) -> Option<(usize, usize, usize)> {
        let n = self.n();
        for a in 0..n {
            if self.dist(a, a) != 0 {
                return Some((a, a, a));
            }
            for b in 0..n {
                if self.dist(a, b) != self.dist(b, a) || self.dist(a, b) < 0 {
                    return Some((a, b, a));
                }
                for c in 0..n {
                    if self.dist(a, c) > self.dist(a, b) + self.dist(b, c) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    /// Sum of metric distances along a vertex sequence.
    pub fn sequence_weight(&self, vertices: &[usize]) -> i64 {
        vertices.windows(2).map(|p| self.dist(p[0], p[1])).sum()
    }

    /// Union of color sets along a vertex sequence.
    pub fn sequence_colors(&self, vertices: &[usize]) -> u64 {
        vertices.iter().fold(0, |acc, &v| acc | self.colors[v])
    }

    /// Whether `walk` is a closed walk at the start that collects at least
    /// `t` colors and whose stated weight matches its sequence.
    pub fn is_solution(&self, walk: &Walk<i64>) -> bool {
        walk.vertices.first() == Some(&0)
            && walk.vertices.last() == Some(&0)
            && walk.vertices.iter().all(|&v| v < self.n())
            && self.sequence_colors(&walk.vertices).count_ones() as usize >= self.t
            && self.sequence_weight(&walk.vertices) == walk.weight
    }

    /// Shortest path between two original vertices, inclusive of both ends.
    fn raw_path(&self, u: usize, v: usize) -> Vec<usize> {
        let n = self.raw_n;
        let mut path = vec![v];
        let mut cur = v;
        while cur != u {
            cur = self.raw_pred[u * n + cur];
            assert_ne!(cur, NO_PRED, "postprocess on disconnected pair ({u}, {v})");
            path.push(cur);
        }
        path.reverse();
        path
    }
}

fn floyd_warshall(n: usize, dist: &mut [f64], pred: &mut [usize]) {
    for mid in 0..n {
        for i in 0..n {
            let dim = dist[i * n + mid];
            if dim.is_infinite() {
                continue;
            }
            for j in 0..n {
                let via = dim + dist[mid * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                    pred[i * n + j] = pred[mid * n + j];
                }
            }
        }
    }
}

fn floyd_warshall_int(n: usize, dist: &mut [i64]) {
    for mid in 0..n {
        for i in 0..n {
            let dim = dist[i * n + mid];
            for j in 0..n {
                let via = dim + dist[mid * n + j];
                if via < dist[i * n + j] {
                    dist[i * n + j] = via;
                }
            }
        }
    }
}

/// Turns a raw instance into a complete metric graph with integral weights:
/// all-pairs shortest paths on the original graph, removal of vertices that
/// are unreachable or colorless (except the start), scaling of the closure
/// distances by `lambda` with round-half-away-from-zero, and a second
/// shortest-path pass to restore the triangle inequality.
pub fn preprocess(raw: &RawInstance, lambda: f64) -> Result<MetricInstance> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("scaling factor must be positive, got {lambda}")));
    }
    let n = raw.n();
    let mut raw_dist = vec![f64::INFINITY; n * n];
    let mut raw_pred = vec![NO_PRED; n * n];
    for v in 0..n {
        raw_dist[v * n + v] = 0.0;
        raw_pred[v * n + v] = v;
    }
    for e in raw.edges() {
        for (a, b) in [(e.u, e.v), (e.v, e.u)] {
            if e.weight < raw_dist[a * n + b] {
                raw_dist[a * n + b] = e.weight;
                raw_pred[a * n + b] = a;
            }
        }
    }
    floyd_warshall(n, &mut raw_dist, &mut raw_pred);

    let s = raw.start();
    let mut vertex_map = vec![s];
    vertex_map.extend(
        (0..n).filter(|&v| v != s && raw_dist[s * n + v].is_finite() && raw.colors()[v] != 0),
    );
    let colors: Vec<u64> = vertex_map.iter().map(|&v| raw.colors()[v]).collect();
    let reachable = colors.iter().fold(0u64, |a, &c| a | c).count_ones() as usize;
    if reachable < raw.t() {
        return Err(Error::Infeasible { reachable, target: raw.t() });
    }

    let nr = vertex_map.len();
    let mut dist = vec![0i64; nr * nr];
    for (a, &u) in vertex_map.iter().enumerate() {
        for (b, &v) in vertex_map.iter().enumerate() {
            // f64::round rounds half away from zero.
            dist[a * nr + b] = (lambda * raw_dist[u * n + v]).round() as i64;
        }
    }
    floyd_warshall_int(nr, &mut dist);

    Ok(MetricInstance {
        stats: PreprocessStats { n, m: raw.m(), n_reduced: nr, m_reduced: nr * (nr - 1) / 2 },
        vertex_map,
        dist,
        colors,
        t: raw.t(),
        k: raw.k(),
        lambda,
        raw_n: n,
        raw_dist,
        raw_pred,
    })
}

/// Maps a walk on the metric instance back to the original graph by
/// replacing every closure edge with a shortest path.
pub fn postprocess(mi: &MetricInstance, walk: &Walk<i64>) -> RawWalk {
    let original: Vec<usize> = walk.vertices.iter().map(|&v| mi.original_id(v)).collect();
    let mut vertices = vec![original[0]];
    let mut weight = 0.0;
    for pair in original.windows(2) {
        let (u, v) = (pair[0], pair[1]);
        if u == v {
            continue;
        }
        weight += mi.raw_dist(u, v);
        vertices.extend_from_slice(&mi.raw_path(u, v)[1..]);
    }
    Walk { vertices, weight }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::tiny;
    use crate::instance::{parse_instance, Edge};

    /// Hand-checkable brute force: relax every pair through every path of
    /// up to n-1 edges by repeated min-plus squaring.
    fn brute_closure(raw: &RawInstance) -> Vec<Vec<f64>> {
        let n = raw.n();
        let mut d = vec![vec![f64::INFINITY; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0.0;
        }
        for e in raw.edges() {
            d[e.u][e.v] = d[e.u][e.v].min(e.weight);
            d[e.v][e.u] = d[e.v][e.u].min(e.weight);
        }
        for _ in 0..n {
            let prev = d.clone();
            for i in 0..n {
                for j in 0..n {
                    for m in 0..n {
                        d[i][j] = d[i][j].min(prev[i][m] + prev[m][j]);
                    }
                }
            }
        }
        d
    }

    #[test]
    fn tiny_closure() {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        assert_eq!(mi.dist(0, 1), 2);
        assert_eq!(mi.dist(0, 2), 3);
        assert_eq!(mi.dist(0, 3), 5);
        let brute = brute_closure(&tiny());
        for a in 0..4 {
            for b in 0..4 {
                assert_eq!(mi.dist(a, b) as f64, brute[a][b]);
            }
        }
        assert!(mi.metric_violation().is_none());
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        let raw = RawInstance::new(1, 1, 0, vec![0, 1], vec![Edge { u: 0, v: 1, weight: 0.26 }]).unwrap();
        assert_eq!(preprocess(&raw, 10.0).unwrap().dist(0, 1), 3);
        let raw = RawInstance::new(1, 1, 0, vec![0, 1], vec![Edge { u: 0, v: 1, weight: 0.25 }]).unwrap();
        assert_eq!(preprocess(&raw, 10.0).unwrap().dist(0, 1), 3);
    }

    #[test]
    fn rounding_can_break_metricity_and_is_repaired() {
        // 0.4 + 0.4 rounds to 0 + 0 while the direct 0.8 rounds to 1.
        let text = "GI 1\n3 3 2 2\ns 0\nv 0\nv 1 0\nv 2 1\ne 0 1 0.4\ne 1 2 0.4\ne 0 2 0.8\n";
        let mi = preprocess(&parse_instance(text.as_bytes()).unwrap(), 1.0).unwrap();
        assert_eq!(mi.dist(0, 2), 0);
        assert!(mi.metric_violation().is_none());
    }

    #[test]
    fn removes_colorless_and_unreachable_vertices() {
        let text = "GI 1\n5 3 1 1\ns 0\nv 0\nv 1\nv 2 0\nv 3 0\nv 4 0\ne 0 1 1\ne 1 2 1\ne 3 4 1\n";
        let mi = preprocess(&parse_instance(text.as_bytes()).unwrap(), 1.0).unwrap();
        assert_eq!(mi.vertex_map(), &[0, 2]);
        assert_eq!(mi.dist(0, 1), 2);
        assert_eq!(mi.stats(), PreprocessStats { n: 5, m: 3, n_reduced: 2, m_reduced: 1 });
    }

    #[test]
    fn infeasible_when_too_few_colors_reachable() {
        let text = "GI 1\n3 1 2 2\ns 0\nv 0\nv 1 0\nv 2 1\ne 0 1 1\n";
        let err = preprocess(&parse_instance(text.as_bytes()).unwrap(), 1.0).unwrap_err();
        assert!(matches!(err, Error::Infeasible { reachable: 1, target: 2 }));
    }

    #[test]
    fn integral_metric_input_is_unchanged() {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        let raw_closure = brute_closure(&tiny());
        for a in 0..mi.n() {
            for b in 0..mi.n() {
                assert_eq!(mi.dist(a, b) as f64, raw_closure[mi.original_id(a)][mi.original_id(b)]);
            }
        }
    }

    #[test]
    fn postprocess_tiny_is_identity() {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        let raw = postprocess(&mi, &Walk { vertices: vec![0, 1, 2, 0], weight: 7 });
        assert_eq!(raw.vertices, vec![0, 1, 2, 0]);
        assert_eq!(raw.weight, 7.0);
    }

    #[test]
    fn postprocess_trivial_walk() {
        let raw = tiny().with_target(0).unwrap();
        let mi = preprocess(&raw, 1.0).unwrap();
        let out = postprocess(&mi, &Walk { vertices: vec![0], weight: 0 });
        assert_eq!(out.vertices, vec![0]);
        assert_eq!(out.weight, 0.0);
    }

    #[test]
    fn postprocess_expands_through_intermediate() {
        // d(0,2) routes through the colorless vertex 1, which is dropped by
        // preprocessing and must reappear after expansion.
        let text = "GI 1\n3 3 1 1\ns 0\nv 0\nv 1\nv 2 0\ne 0 1 1\ne 1 2 1\ne 0 2 5\n";
        let raw = parse_instance(text.as_bytes()).unwrap();
        let mi = preprocess(&raw, 1.0).unwrap();
        assert_eq!(mi.n(), 2);
        let out = postprocess(&mi, &Walk { vertices: vec![0, 1, 0], weight: 4 });
        assert_eq!(out.vertices, vec![0, 1, 2, 1, 0]);
        assert_eq!(out.weight, 4.0);
        assert_eq!(raw.walk_weight(&out.vertices), Some(4.0));
    }
}
