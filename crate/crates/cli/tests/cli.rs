use std::path::Path;
use std::process::{Command, Output};

const TINY: &str = "\
GI 1
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

fn gi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gi")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn tiny_file(dir: &Path) -> String {
    let p = dir.join("tiny.gi");
    std::fs::write(&p, TINY).unwrap();
    p.to_str().unwrap().to_owned()
}

fn field<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines().find_map(|l| l.strip_prefix(key)).unwrap().trim()
}

#[test]
fn solve_tiny_reports_weight_seven() {
    let dir = tempfile::tempdir().unwrap();
    let input = tiny_file(dir.path());
    for extra in [&[][..], &["--circuit", "semi-compact", "--search", "binary", "--recovery", "lv"][..]] {
        let mut args = vec!["solve", "--input", &input, "--seed", "1"];
        args.extend_from_slice(extra);
        let out = gi(&args);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        assert_eq!(field(&text, "status "), "ok");
        assert_eq!(field(&text, "real_weight "), "7");
        assert_eq!(field(&text, "colors "), "2");
        let walk: Vec<&str> = field(&text, "walk ").split(' ').collect();
        assert_eq!((walk.first(), walk.last()), (Some(&"0"), Some(&"0")));
    }
}

#[test]
fn baselines_agree_with_solver() {
    let dir = tempfile::tempdir().unwrap();
    let input = tiny_file(dir.path());
    for solver in ["dp", "brute"] {
        let out = gi(&["solve", "--input", &input, "--solver", solver]);
        assert_eq!(out.status.code(), Some(0));
        assert_eq!(field(&stdout(&out), "scaled_weight "), "7");
        let oracle = gi(&["oracle", "--input", &input, "--solver", solver]);
        assert_eq!(field(&stdout(&oracle), "scaled_weight "), "7");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(gi(&["solve"]).status.code(), Some(64));
    let missing = dir.path().join("missing.gi");
    assert_eq!(gi(&["solve", "--input", missing.to_str().unwrap()]).status.code(), Some(66));
    let bad = dir.path().join("bad.gi");
    std::fs::write(&bad, "GI 1\n2 1 1 1\ns 0\nv 0\nv 1 0\ne 0 0 1.0\n").unwrap();
    assert_eq!(gi(&["solve", "--input", bad.to_str().unwrap()]).status.code(), Some(65));
    let infeasible = dir.path().join("infeasible.gi");
    std::fs::write(&infeasible, "GI 1\n3 1 2 2\ns 0\nv 0\nv 1 0\nv 2 1\ne 0 1 1\n").unwrap();
    assert_eq!(gi(&["solve", "--input", infeasible.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, seed: &str| {
        let p = dir.path().join(name);
        let out = gi(&["gen", "--n", "9", "--k", "5", "--t", "3", "--seed", seed, "--output", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    let a = run("a.gi", "42");
    assert_eq!(a, run("b.gi", "42"));
    assert_ne!(a, run("c.gi", "43"));
    let p = dir.path().join("a.gi");
    let out = gi(&["solve", "--input", p.to_str().unwrap(), "--solver", "dp"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn stats_lists_every_construction() {
    let dir = tempfile::tempdir().unwrap();
    let input = tiny_file(dir.path());
    let out = gi(&["stats", "--input", &input, "--ell", "7"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows, ["naive,2,18,24,1", "standard,2,17,22,1", "compact,2,24,33,1", "semi-compact,2,20,26,1"]);
}

#[test]
fn bench_rows_are_sound_and_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let input = tiny_file(dir.path());
    let args = ["bench", "--input", &input, "--searches", "binary,unified", "--repeats", "2", "--seed", "5"];
    let first = gi(&args);
    assert_eq!(first.status.code(), Some(0));
    let text = stdout(&first);
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let rows: Vec<_> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 4 * 2 * 2);
    for r in &rows {
        assert_eq!(&r[col("error")], "");
        assert_eq!(&r[col("real_weight")], "7");
        let ratio: f64 = r[col("ratio_to_oracle")].parse().unwrap();
        assert!(ratio >= 1.0 - 1e-9);
    }
    let strip = |t: &str| -> Vec<String> {
        t.lines().map(|l| l.split(',').take(15).collect::<Vec<_>>().join(",")).collect()
    };
    assert_eq!(strip(&text), strip(&stdout(&gi(&args))));
}
