//! Exact solvers used as oracles and baselines.
//!
//! [`solve_dp`] runs a least-cost search over (vertex, collected color set)
//! states, so its memory grows as `2^k · n`. [`solve_brute`] enumerates all
//! orderings of at most `t` colored vertices; it shares no code with the DP.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::ops::Add;

use crate::instance::{MetricInstance, MetricWalk, Walk};
use crate::{Error, Result};

/// Maximum number of vertex sequences the brute force may enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 20_000_000;

#[derive(Debug, Clone)]
pub struct DpSolution {
    pub weight: i64,
    pub walk: MetricWalk,
    /// Number of distinct (vertex, color set) states reached.
    pub states: usize,
}

/// Exact optimum by least-cost expansion of (vertex, color set) states.
pub fn solve_dp(mi: &MetricInstance) -> Result<DpSolution> {
    let n = mi.n();
    let k = mi.k();
    let t = mi.t();
    let s = mi.start();
    if t == 0 {
        return Ok(DpSolution { weight: 0, walk: Walk { vertices: vec![s], weight: 0 }, states: 1 });
    }
    if k > 24 {
        return Err(Error::InvalidParameter(format!("DP over 2^{k} color sets is not supported")));
    }
    let subsets = 1usize << k;
    let idx = |v: usize, set: u64| v * subsets + set as usize;
    let mut cost = vec![i64::MAX; n * subsets];
    let mut parent = vec![usize::MAX; n * subsets];
    let mut done = vec![false; n * subsets];
    let mut heap = BinaryHeap::new();
    cost[idx(s, 0)] = 0;
    heap.push(Reverse((0i64, s, 0u64)));
    let mut best: Option<(i64, usize)> = None;
    let mut reached = 1usize;

    while let Some(Reverse((c, v, set))) = heap.pop() {
        let id = idx(v, set);
        if done[id] {
            continue;
        }
        done[id] = true;
        if best.is_some_and(|(b, _)| c >= b) {
            break;
        }
        if set.count_ones() as usize >= t {
            let total = c + mi.dist(v, s);
            if best.map_or(true, |(b, _)| total < b) {
                best = Some((total, id));
            }
            continue;
        }
        for u in 0..n {
            let gained = mi.colors()[u] & !set;
            if u == v || gained == 0 {
                continue;
            }
            let next = set | gained;
            let nid = idx(u, next);
            let nc = c + mi.dist(v, u);
            if cost[nid] == i64::MAX {
                reached += 1;
            }
            if nc < cost[nid] {
                cost[nid] = nc;
                parent[nid] = id;
                heap.push(Reverse((nc, u, next)));
            }
        }
    }

    let (weight, mut id) = best.ok_or(Error::Infeasible {
        reachable: mi.reachable_colors(),
        target: t,
    })?;
    let mut vertices = vec![s];
    while id != usize::MAX {
        vertices.push(id / subsets);
        id = parent[id];
    }
    vertices.reverse();
    Ok(DpSolution { weight, walk: Walk { vertices, weight }, states: reached })
}

/// Exact optimum by enumerating every ordering of at most `t` distinct
/// colored vertices.
pub fn solve_brute(mi: &MetricInstance) -> Result<i64> {
    let (w, _) = brute_force_tour(mi.n(), |a, b| mi.dist(a, b), mi.colors(), mi.t(), 0i64)?;
    Ok(w)
}

/// Generic permutation brute force over any closure distance. Vertex 0 is
/// the start; returns the optimum and its tour.
pub fn brute_force_tour<W, F>(
    n: usize,
    dist: F,
    colors: &[u64],
    t: usize,
    zero: W,
) -> Result<(W, Vec<usize>)>
where
    W: Copy + Add<Output = W> + PartialOrd,
    F: Fn(usize, usize) -> W,
{
    if t == 0 {
        return Ok((zero, vec![0]));
    }
    let candidates: Vec<usize> = (1..n).filter(|&v| colors[v] != 0).collect();
    let m = candidates.len() as u128;
    let mut sequences = 0u128;
    let mut falling = 1u128;
    for j in 0..(t as u128).min(m) {
        falling = falling.saturating_mul(m - j);
        sequences = sequences.saturating_add(falling);
    }
    if sequences > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard { sequences, limit: BRUTE_FORCE_LIMIT });
    }

    struct Search<'a, W, F> {
        dist: F,
        colors: &'a [u64],
        candidates: Vec<usize>,
        t: usize,
        used: Vec<bool>,
        path: Vec<usize>,
        best: Option<(W, Vec<usize>)>,
    }

    impl<W: Copy + Add<Output = W> + PartialOrd, F: Fn(usize, usize) -> W> Search<'_, W, F> {
        fn extend(&mut self, at: usize, cost: W, collected: u64) {
            if collected.count_ones() as usize >= self.t {
                let total = cost + (self.dist)(at, 0);
                if self.best.as_ref().map_or(true, |(b, _)| total < *b) {
                    let mut tour = vec![0];
                    tour.extend_from_slice(&self.path);
                    tour.push(0);
                    self.best = Some((total, tour));
                }
                return;
            }
            if self.path.len() == self.t {
                return;
            }
            for i in 0..self.candidates.len() {
                if self.used[i] {
                    continue;
                }
                let v = self.candidates[i];
                self.used[i] = true;
                self.path.push(v);
                self.extend(v, cost + (self.dist)(at, v), collected | self.colors[v]);
                self.path.pop();
                self.used[i] = false;
            }
        }
    }

    let mut search = Search {
        dist,
        colors,
        used: vec![false; candidates.len()],
        candidates,
        t,
        path: Vec::new(),
        best: None,
    };
    search.extend(0, zero, 0);
    let reachable = colors.iter().fold(0u64, |a, &c| a | c).count_ones() as usize;
    search.best.ok_or(Error::Infeasible { reachable, target: t })
}
