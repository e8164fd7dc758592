//! Simplicial-homology toolkit for self-organizing cellular networks.
//!
//! A network is a [`geometry::NodeSet`] of planar nodes with communication,
//! coverage and rejection radii. From it we build abstract simplicial
//! complexes ([`complex`]), read off connectivity and coverage holes as the
//! Betti numbers β0 and β1 ([`homology`]), and drive the vertex-removal
//! engine in [`reduction`]. Three network-management algorithms sit on top:
//!
//! - [`frequency`]: frequency auto-planning with a greedy-coloring baseline,
//! - [`energy`]: switching nodes off under coverage and QoS constraints,
//! - [`recovery`]: patching a damaged network with Ginibre-DPP placed nodes
//!   ([`dpp`]) against a grid set-cover baseline.
//!
//! [`experiments`] runs seeded Monte-Carlo batches over all three and writes
//! CSV reports.

// Validation uses `!(x > 0.0)` so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod complex;
pub mod dpp;
pub mod energy;
pub mod error;
pub mod experiments;
pub mod frequency;
pub mod geometry;
pub mod homology;
pub mod io;
pub mod recovery;
pub mod reduction;

mod bits;

pub use complex::{Simplex, SimplicialComplex};
pub use error::{Error, Result};
pub use geometry::{Node, NodeSet, Point};
pub use homology::BettiPair;

/// Seeded generator used everywhere a scenario needs randomness.
///
/// ChaCha8 is fixed by its algorithm, so streams stay reproducible across
/// `rand` releases.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds the generator for one scenario seed.
pub fn seeded_rng(seed: u64) -> SeededRng {
    use rand::SeedableRng;
    SeededRng::seed_from_u64(seed)
}
