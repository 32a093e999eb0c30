use graph_inspection::baseline::{solve_brute, solve_dp};
use graph_inspection::circuit::{build, CircuitType, Target};
use graph_inspection::instance::{
    compute_bounds, generate_random, parse_instance, postprocess, preprocess, write_instance, GenConfig,
};
use graph_inspection::mld::detect;
use graph_inspection::{Bounds, RawInstance};
use proptest::prelude::*;

fn instance(integral: bool) -> impl Strategy<Value = RawInstance> {
    (3usize..=8, 1usize..=5, any::<u64>(), 0.3f64..=1.0).prop_flat_map(move |(n, k, seed, density)| {
        let k = k.min(3 * (n - 1));
        (1..=k).prop_map(move |t| {
            let mut cfg = GenConfig::new(n, k, t, seed);
            cfg.density = density;
            cfg.integral = integral;
            cfg.weight_max = if integral { 20.0 } else { 10.0 };
            generate_random(&cfg).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(raw in instance(false)) {
        let text = write_instance(&raw);
        let back = parse_instance(text.as_bytes()).unwrap();
        prop_assert_eq!(back, raw);
    }

    #[test]
    fn metric_closure_is_metric(raw in instance(false), lambda in prop::sample::select(vec![1.0, 3.5, 10.0, 100.0])) {
        let mi = preprocess(&raw, lambda).unwrap();
        let n = mi.n();
        for a in 0..n {
            prop_assert_eq!(mi.dist(a, a), 0);
            for b in 0..n {
                prop_assert!(mi.dist(a, b) >= 0);
                prop_assert_eq!(mi.dist(a, b), mi.dist(b, a));
                for c in 0..n {
                    prop_assert!(mi.dist(a, c) <= mi.dist(a, b) + mi.dist(b, c));
                }
            }
            if a != mi.start() {
                prop_assert!(mi.colors()[a] != 0);
            }
        }
        prop_assert!(mi.metric_violation().is_none());
    }

    #[test]
    fn bounds_bracket_the_optimum(raw in instance(true)) {
        let mi = preprocess(&raw, 1.0).unwrap();
        let b = compute_bounds(&mi);
        let dp = solve_dp(&mi).unwrap();
        prop_assert!(0 <= b.lo && b.lo <= dp.weight && dp.weight <= b.hi);
        prop_assert_eq!(solve_brute(&mi).unwrap(), dp.weight);
        prop_assert!(mi.is_solution(&dp.walk));
        prop_assert_eq!(mi.sequence_weight(&dp.walk.vertices), dp.weight);
    }

    #[test]
    fn postprocessed_walk_is_a_raw_solution(raw in instance(false), lambda in prop::sample::select(vec![1.0, 10.0])) {
        let mi = preprocess(&raw, lambda).unwrap();
        let dp = solve_dp(&mi).unwrap();
        let out = postprocess(&mi, &dp.walk);
        prop_assert!(raw.is_solution(&out.vertices));
        let w = raw.walk_weight(&out.vertices).unwrap();
        prop_assert!((w - out.weight).abs() < 1e-9);
        let pairs: f64 = dp.walk.vertices.windows(2)
            .map(|p| mi.raw_dist(mi.original_id(p[0]), mi.original_id(p[1])))
            .sum();
        prop_assert!((pairs - out.weight).abs() < 1e-9);
    }

    #[test]
    fn detector_never_reports_below_optimum(raw in instance(true), seed in any::<u64>()) {
        let mi = preprocess(&raw, 1.0).unwrap();
        let opt = solve_dp(&mi).unwrap().weight;
        let hi = compute_bounds(&mi).hi;
        let bounds = Bounds::new(0, hi).unwrap();
        for ty in CircuitType::ALL {
            let c = build(ty, &mi, bounds, Target::AllOutputs).unwrap();
            let r = detect(&c, seed).unwrap();
            for (o, hit) in c.outputs().iter().zip(r.detected) {
                prop_assert!(!hit || o.target >= opt);
            }
        }
    }
}
