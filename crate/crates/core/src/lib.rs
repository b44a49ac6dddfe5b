//! Diffusion-limited aggregation on the Boolean lattice `{0,1}^n`.
//!
//! Particles take uniformly random decreasing walks from the all-ones vertex
//! and stick at the last vertex before the first occupied one; the all-zeros
//! vertex starts occupied. The crate simulates that process, measures the
//! statistics used to study it, evaluates the closed-form quantities of its
//! analysis, and runs verification experiments over many seeded trials.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dla;
pub mod harness;
pub mod lattice;
pub mod observables;
pub mod theory;

pub use dla::{ClusterState, DepositOutcome, RunOptions, StopRule, TrialRecord};
pub use lattice::{DecreasingWalk, DescendingWalk, VertexMask};
pub use theory::{LogScalar, TheoryContext};
