//! The line-based GI text format.
//!
//! ```text
//! GI 1
//! <n> <m> <k> <t>
//! s <id>
//! v <id> [<color> ...]      (n lines)
//! e <u> <v> <weight>        (m lines)
//! ```
//!
//! Everything after a `#` is a comment; blank lines are ignored.

use std::fmt::Write as _;

use thiserror::Error;

use super::{Edge, RawInstance, MAX_COLORS};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("input is not valid UTF-8")]
    InvalidUtf8,
    #[error("line {line}: malformed header: {reason}")]
    MalformedHeader { line: usize, reason: String },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("line {line}: start vertex {start} out of range (n={n})")]
    StartOutOfRange { line: usize, start: usize, n: usize },
    #[error("line {line}: vertex id {id} out of range (n={n})")]
    VertexOutOfRange { line: usize, id: usize, n: usize },
    #[error("line {line}: vertex {id} declared twice")]
    DuplicateVertex { line: usize, id: usize },
    #[error("line {line}: color {color} out of range (k={k})")]
    ColorOutOfRange { line: usize, color: usize, k: usize },
    #[error("line {line}: self-loop on vertex {vertex}")]
    SelfLoop { line: usize, vertex: usize },
    #[error("line {line}: duplicate edge ({u}, {v})")]
    DuplicateEdge { line: usize, u: usize, v: usize },
    #[error("line {line}: negative edge weight {weight}")]
    NegativeWeight { line: usize, weight: f64 },
    #[error("line {line}: target t={t} exceeds color count k={k}")]
    TargetExceedsColors { line: usize, t: usize, k: usize },
    #[error("line {line}: k={k} exceeds the supported maximum of {MAX_COLORS} colors")]
    TooManyColors { line: usize, k: usize },
    #[error("line {line}: expected {expected} {what} lines, found {found}")]
    CountMismatch { line: usize, what: &'static str, expected: usize, found: usize },
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with comments stripped, as (line number, tokens).
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (idx, raw) in self.inner.by_ref() {
            self.last = idx + 1;
            let content = raw.split('#').next().unwrap_or("");
            let tokens: Vec<&str> = content.split_whitespace().collect();
            if !tokens.is_empty() {
                return Some((idx + 1, tokens));
            }
        }
        None
    }
}

fn number<T: std::str::FromStr>(token: &str, line: usize, what: &str) -> Result<T, ParseError> {
    token.parse().map_err(|_| ParseError::MalformedLine {
        line,
        reason: format!("cannot parse {what} from {token:?}"),
    })
}

/// Parses a GI instance. Colors on the start vertex are dropped with a
/// warning.
pub fn parse_instance(text: &[u8]) -> Result<RawInstance, ParseError> {
    let text = std::str::from_utf8(text).map_err(|_| ParseError::InvalidUtf8)?;
    let mut lines = Lines { inner: text.lines().enumerate(), last: 0 };

    let header = |line: usize, reason: &str| ParseError::MalformedHeader { line, reason: reason.to_string() };

    let (line, magic) = lines.next_tokens().ok_or_else(|| header(1, "missing magic line"))?;
    if magic != ["GI", "1"] {
        return Err(header(line, "expected `GI 1`"));
    }

    let (line, counts) = lines.next_tokens().ok_or_else(|| header(line + 1, "missing counts line"))?;
    if counts.len() != 4 {
        return Err(header(line, "expected `<n> <m> <k> <t>`"));
    }
    let parse_count = |tok: &str| tok.parse::<usize>().map_err(|_| header(line, "counts must be nonnegative integers"));
    let n = parse_count(counts[0])?;
    let m = parse_count(counts[1])?;
    let k = parse_count(counts[2])?;
    let t = parse_count(counts[3])?;
    if k > MAX_COLORS {
        return Err(ParseError::TooManyColors { line, k });
    }
    if t > k {
        return Err(ParseError::TargetExceedsColors { line, t, k });
    }
    if n == 0 {
        return Err(header(line, "instance needs at least one vertex"));
    }

    let (line, start_line) = lines.next_tokens().ok_or_else(|| header(line + 1, "missing start line"))?;
    if start_line.len() != 2 || start_line[0] != "s" {
        return Err(header(line, "expected `s <id>`"));
    }
    let start: usize = start_line[1].parse().map_err(|_| header(line, "start id must be an integer"))?;
    if start >= n {
        return Err(ParseError::StartOutOfRange { line, start, n });
    }

    let mut colors = vec![0u64; n];
    let mut declared = vec![false; n];
    for found in 0..n {
        let Some((line, tokens)) = lines.next_tokens() else {
            return Err(ParseError::CountMismatch { line: lines.last, what: "vertex", expected: n, found });
        };
        if tokens[0] != "v" {
            return Err(ParseError::CountMismatch { line, what: "vertex", expected: n, found });
        }
        if tokens.len() < 2 {
            return Err(ParseError::MalformedLine { line, reason: "expected `v <id> [<color> ...]`".into() });
        }
        let id: usize = number(tokens[1], line, "vertex id")?;
        if id >= n {
            return Err(ParseError::VertexOutOfRange { line, id, n });
        }
        if std::mem::replace(&mut declared[id], true) {
            return Err(ParseError::DuplicateVertex { line, id });
        }
        for tok in &tokens[2..] {
            let color: usize = number(tok, line, "color")?;
            if color >= k {
                return Err(ParseError::ColorOutOfRange { line, color, k });
            }
            colors[id] |= 1u64 << color;
        }
    }

    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for found in 0..m {
        let Some((line, tokens)) = lines.next_tokens() else {
            return Err(ParseError::CountMismatch { line: lines.last, what: "edge", expected: m, found });
        };
        if tokens[0] != "e" {
            return Err(ParseError::CountMismatch { line, what: "edge", expected: m, found });
        }
        if tokens.len() != 4 {
            return Err(ParseError::MalformedLine { line, reason: "expected `e <u> <v> <weight>`".into() });
        }
        let u: usize = number(tokens[1], line, "vertex id")?;
        let v: usize = number(tokens[2], line, "vertex id")?;
        let weight: f64 = number(tokens[3], line, "weight")?;
        for id in [u, v] {
            if id >= n {
                return Err(ParseError::VertexOutOfRange { line, id, n });
            }
        }
        if u == v {
            return Err(ParseError::SelfLoop { line, vertex: u });
        }
        if !weight.is_finite() {
            return Err(ParseError::MalformedLine { line, reason: format!("weight {weight} is not finite") });
        }
        if weight < 0.0 {
            return Err(ParseError::NegativeWeight { line, weight });
        }
        if !seen.insert((u.min(v), u.max(v))) {
            return Err(ParseError::DuplicateEdge { line, u, v });
        }
        edges.push(Edge { u, v, weight });
    }

    if let Some((line, _)) = lines.next_tokens() {
        return Err(ParseError::MalformedLine { line, reason: "trailing content after the edge list".into() });
    }

    if colors[start] != 0 {
        log::warn!("dropping colors from start vertex {start}");
        colors[start] = 0;
    }
    Ok(RawInstance::new(k, t, start, colors, edges).expect("parser enforces every instance invariant"))
}

/// Serializes an instance in the GI format. Weights use the shortest
/// representation that parses back to the same `f64`.
pub fn write_instance(inst: &RawInstance) -> String {
    let mut out = String::new();
    writeln!(out, "GI 1").unwrap();
    writeln!(out, "{} {} {} {}", inst.n(), inst.m(), inst.k(), inst.t()).unwrap();
    writeln!(out, "s {}", inst.start()).unwrap();
    for (v, &mask) in inst.colors().iter().enumerate() {
        write!(out, "v {v}").unwrap();
        for c in 0..inst.k() {
            if mask >> c & 1 == 1 {
                write!(out, " {c}").unwrap();
            }
        }
        out.push('\n');
    }
    for e in inst.edges() {
        writeln!(out, "e {} {} {}", e.u, e.v, e.weight).unwrap();
    }
    out
}
