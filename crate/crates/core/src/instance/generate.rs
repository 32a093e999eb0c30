use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Edge, RawInstance};
use crate::{Error, Result};

const MAX_ATTEMPTS: usize = 10_000;

/// Parameters for [`generate_random`]. Vertex 0 is the start.
#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub n: usize,
    pub k: usize,
    pub t: usize,
    pub weight_max: f64,
    /// Probability that any given vertex pair is joined by an edge.
    pub density: f64,
    pub seed: u64,
    /// Draw integer weights from `1..=weight_max` instead of reals in
    /// `(0, weight_max]`.
    pub integral: bool,
}

impl GenConfig {
    pub fn new(n: usize, k: usize, t: usize, seed: u64) -> Self {
        Self { n, k, t, weight_max: 10.0, density: 0.5, seed, integral: false }
    }
}

/// Generates a connected random instance, deterministic in the seed. Every
/// non-start vertex receives 0 to 3 colors and every color appears at least
/// once.
pub fn generate_random(cfg: &GenConfig) -> Result<RawInstance> {
    let GenConfig { n, k, t, weight_max, density, seed, integral } = *cfg;
    let bad = |msg: String| Err(Error::InvalidParameter(msg));
    if n < 2 {
        return bad(format!("need at least two vertices, got n={n}"));
    }
    if t < 1 || t > k {
        return bad(format!("need 1 <= t <= k, got t={t}, k={k}"));
    }
    if k > 3 * (n - 1) || k > super::MAX_COLORS {
        return bad(format!("cannot place k={k} colors on {} vertices with at most 3 each", n - 1));
    }
    if !(density > 0.0 && density <= 1.0) {
        return bad(format!("density must lie in (0, 1], got {density}"));
    }
    if !(weight_max > 0.0) || (integral && weight_max < 1.0) {
        return bad(format!("invalid maximum weight {weight_max}"));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut palette: Vec<usize> = (0..k).collect();
    palette.shuffle(&mut rng);
    let mut colors = vec![0u64; n];
    for (i, &c) in palette.iter().enumerate() {
        colors[1 + i % (n - 1)] |= 1 << c;
    }
    for mask in colors.iter_mut().skip(1) {
        let want = rng.gen_range(0..=3usize.min(k));
        let missing: Vec<usize> = palette.iter().copied().filter(|&c| *mask >> c & 1 == 0).collect();
        let extra = want.saturating_sub(mask.count_ones() as usize);
        for &c in missing.choose_multiple(&mut rng, extra) {
            *mask |= 1 << c;
        }
    }

    for _ in 0..MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen::<f64>() < density {
                    let weight = if integral {
                        rng.gen_range(1..=weight_max as i64) as f64
                    } else {
                        weight_max * (1.0 - rng.gen::<f64>())
                    };
                    edges.push(Edge { u, v, weight });
                }
            }
        }
        if is_connected(n, &edges) {
            return RawInstance::new(k, t, 0, colors, edges);
        }
    }
    bad(format!("no connected graph after {MAX_ATTEMPTS} attempts at density {density}"))
}

fn is_connected(n: usize, edges: &[Edge]) -> bool {
    let mut adj = vec![vec![]; n];
    for e in edges {
        adj[e.u].push(e.v);
        adj[e.v].push(e.u);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            if !std::mem::replace(&mut seen[v], true) {
                stack.push(v);
            }
        }
    }
    seen.into_iter().all(|s| s)
}
