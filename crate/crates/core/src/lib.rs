//! The lambda-mixed Birth-death/death-Birth Moran process on undirected
//! connected graphs.
//!
//! * [`graph`]: graph construction, edge-list I/O, families, G(n, p), degree
//!   certification.
//! * [`kernel`]: the process itself (transition law, sampling, trajectories).
//! * [`drift`]: potentials and edge-wise drift terms.
//! * [`exact`]: brute-force absorbing-chain solver over all `2^n` states.
//! * [`closed_forms`]: neutral formulas, the cycle product formula and the
//!   star transfer-matrix recurrence.
//! * [`estimator`]: Monte Carlo fixation estimates with cutoff handling.

pub mod closed_forms;
pub mod drift;
pub mod estimator;
pub mod exact;
pub mod graph;
pub mod kernel;
pub mod rng;
pub mod scalar;

pub use graph::{degree_profile, DegreeProfile, Graph, GraphError};
pub use kernel::{Configuration, ExactParams, ProcessParams};
pub use scalar::{Rational, Scalar};
