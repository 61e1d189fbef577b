//! First-order limits of graphs with bounded tree-width, at desk scale.
//!
//! The crate covers the full pipeline from finite graphs to an executable
//! finite-depth model of their limit:
//!
//! - [`graph`]: marked, 2-edge-colored rooted k-trees and validation.
//! - [`decompose`]: exact tree decompositions and the k-tree encoder.
//! - [`logic`]: first-order formulas, Stone pairings, and
//!   Ehrenfeucht-Fraisse game oracles.
//! - [`hintikka`]: canonical local types, the type trie, and Hanf-threshold
//!   equivalence.
//! - [`sequence`]: graph-sequence statistics: null-partition marking and
//!   discrete/limit measure estimation.
//! - [`dyadic`]: exact torus arithmetic (dyadic fractions and `q + c*sqrt(2)`
//!   coordinates).
//! - [`limit`]: the finite-depth limit machine: measure-preserving coordinate
//!   bijections, edge classification, parent maps, and vertex sampling.
//! - [`verify`]: seeded, deterministic checks for every structural property
//!   the limit machine promises.

pub mod decompose;
pub mod dyadic;
pub mod families;
pub mod graph;
pub mod hintikka;
pub mod limit;
pub mod logic;
pub mod rng_util;
pub mod sequence;
pub mod verify;
