//! Algebraic solver for the Graph Inspection problem.
//!
//! Given an edge-weighted graph whose vertices carry sets of colors, a start
//! vertex `s` and a target `t`, find a minimum-weight closed walk from `s`
//! that collects at least `t` distinct colors.
//!
//! The solver reduces the question "is there a solution of weight at most
//! `ℓ`?" to multilinear monomial detection on an arithmetic circuit, answers
//! it with a randomized group-algebra evaluation, searches for the optimal
//! `ℓ`, and finally extracts a tree certificate from the circuit and decodes
//! it into a walk. Two exact solvers (a color-subset DP and a permutation
//! brute force) serve as oracles.
//!
//! Module map:
//! - [`instance`]: instance model, the GI text format, metric preprocessing,
//!   bounds, postprocessing and random generation.
//! - [`baseline`]: exact DP and brute-force solvers.
//! - [`circuit`]: circuit IR, the four constructions and symbolic expansion.
//! - [`mld`]: the randomized multilinear detector.
//! - [`search`]: optimal-weight search strategies.
//! - [`recovery`]: tree-certificate extraction and walk decoding.
//! - [`pipeline`]: end-to-end orchestration and result reporting.

pub mod baseline;
pub mod circuit;
mod error;
pub mod instance;
pub mod mld;
pub mod pipeline;
pub mod recovery;
pub mod search;

pub use error::{Error, Result};
pub use instance::{Bounds, MetricInstance, RawInstance, Walk};
