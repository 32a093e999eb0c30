//! Randomized multilinear monomial detection.
//!
//! Each variable gets a random vector in `GF(2)^k` and each addition-gate
//! input edge a random nonzero element of `GF(2^d)`. For every character
//! `χ ∈ GF(2)^k` the circuit is evaluated over `Z_{2^{k+1}}[z]/(q)` with
//! variable `x` set to `1 + (-1)^{⟨v_x, χ⟩}`; the character sum of an output
//! is nonzero only if its polynomial has a multilinear monomial of degree at
//! most `k` with an odd coefficient. One-sided error: a `true` answer is
//! always correct.

mod plan;
pub mod ring;

pub use plan::{EvalPlan, Execution};
pub use ring::{extension_degree, Ring};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::{Circuit, NodeKind};
use crate::Result;

/// Randomness and ring for one detector run.
#[derive(Debug, Clone)]
pub struct MldParams {
    pub ring: Ring,
    pub seed: u64,
    /// Indexed by variable label; bit `i` is coordinate `i`.
    pub variable_vectors: Vec<u64>,
    /// Indexed by fingerprint id; nonzero `GF(2^d)` bitmasks.
    pub fingerprints: Vec<u32>,
}

impl MldParams {
    /// Samples parameters with degree bound `c.degree_bound()` and the
    /// default extension degree.
    pub fn sample(c: &Circuit, seed: u64) -> Result<Self> {
        let k = c.degree_bound();
        Self::sample_with_degree(c, k, extension_degree(k), seed)
    }

    pub fn sample_with_degree(c: &Circuit, k: usize, d: usize, seed: u64) -> Result<Self> {
        let ring = Ring::new(k, d)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let labels = c
            .nodes()
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Variable(l) => Some(l as usize + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        let coord_mask = if k >= 64 { u64::MAX } else { (1u64 << k) - 1 };
        let variable_vectors = (0..labels).map(|_| rng.gen::<u64>() & coord_mask).collect();
        let fingerprints =
            (0..c.num_fingerprints()).map(|_| rng.gen_range(1..1u32 << d)).collect();
        Ok(Self { ring, seed, variable_vectors, fingerprints })
    }
}

/// Per-output verdicts, in the order of [`Circuit::outputs`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MldResult {
    pub detected: Vec<bool>,
}

impl MldResult {
    pub fn any(&self) -> bool {
        self.detected.iter().any(|&b| b)
    }
}

/// One evaluation of all outputs with the given parameters.
pub fn evaluate_once(c: &Circuit, params: &MldParams) -> MldResult {
    EvalPlan::new(c).evaluate(params)
}

/// Samples fresh parameters from `seed` and evaluates every output once.
pub fn detect(c: &Circuit, seed: u64) -> Result<MldResult> {
    Ok(evaluate_once(c, &MldParams::sample(c, seed)?))
}
