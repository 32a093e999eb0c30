use super::{Bounds, MetricInstance};

/// Bounds on the optimal scaled weight.
///
/// The lower bound is twice the `t`-th smallest per-color distance from the
/// start: any solution reaches a vertex carrying its most expensive collected
/// color and comes back. The upper bound is the weight of the greedy tour
/// that always moves to the nearest vertex offering a new color.
pub fn compute_bounds(mi: &MetricInstance) -> Bounds {
    let t = mi.t();
    if t == 0 {
        return Bounds { lo: 0, hi: 0 };
    }
    let s = mi.start();
    let mut per_color: Vec<i64> = (0..mi.k())
        .filter_map(|c| {
            (0..mi.n())
                .filter(|&v| mi.colors()[v] >> c & 1 == 1)
                .map(|v| mi.dist(s, v))
                .min()
        })
        .collect();
    per_color.sort_unstable();
    let lo = 2 * per_color[t - 1];

    let mut collected = 0u64;
    let mut current = s;
    let mut hi = 0;
    while (collected.count_ones() as usize) < t {
        let next = (0..mi.n())
            .filter(|&v| mi.colors()[v] & !collected != 0)
            .min_by_key(|&v| (mi.dist(current, v), v))
            .expect("preprocessing guarantees t reachable colors");
        hi += mi.dist(current, next);
        collected |= mi.colors()[next];
        current = next;
    }
    hi += mi.dist(current, s);
    Bounds { lo, hi }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::fixtures::tiny;
    use crate::instance::preprocess;

    #[test]
    fn tiny_bounds() {
        let mi = preprocess(&tiny(), 1.0).unwrap();
        assert_eq!(compute_bounds(&mi), Bounds { lo: 6, hi: 7 });
    }

    #[test]
    fn zero_target() {
        let mi = preprocess(&tiny().with_target(0).unwrap(), 1.0).unwrap();
        assert_eq!(compute_bounds(&mi), Bounds { lo: 0, hi: 0 });
    }

    #[test]
    fn all_colors_on_one_vertex() {
        let mi = MetricInstance::from_matrix(
            vec![vec![0, 4, 9], vec![4, 0, 5], vec![9, 5, 0]],
            vec![0, 0b111, 0b001],
            3,
            3,
        )
        .unwrap();
        assert_eq!(compute_bounds(&mi), Bounds { lo: 8, hi: 8 });
    }
}
