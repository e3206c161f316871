//! Representation learning on directed graphs through complex-phase
//! propagation.
//!
//! The toolkit builds a Hermitian propagation operator from a digraph: the
//! symmetrized, self-looped, degree-normalized adjacency modulated by
//! per-pair phases `exp(±2πi q)`, where the potential q in [0, 1/4] sets
//! how strongly edge direction matters (q = 0 ignores it, q = 1/4 makes
//! one-way edges purely imaginary). Potentials can be fixed, derived from
//! closed-form structural rules, adapted weight-free from degree-entropy
//! and motif statistics fused with feature agreement, or learned by a small
//! scorer trained end to end through the propagation.
//!
//! On top sit a decoupled training pipeline (propagate once, train a small
//! attention head over the step stack, re-encode the potentials on a
//! schedule) for node and link tasks, and an attribute-synchronization
//! study that recovers planted node angles from noisy pairwise offsets via
//! the same Hermitian eigenvector machinery.
//!
//! Everything is generic over `f32`/`f64` through [`Scalar`]; the `*64`
//! aliases below are the common entry points.

pub mod dense;
pub mod encoding;
pub mod error;
pub mod graph;
pub mod io;
pub mod magnetic;
pub mod model;
pub mod scalar;
pub mod sync;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// f64 workhorse aliases.
pub type Digraph64 = graph::Digraph<f64>;
pub type Mat64 = dense::Mat<f64>;
pub type CMat64 = dense::CMat<f64>;
pub type ComplexCsr64 = magnetic::ComplexCsr<f64>;
pub type PropagationStack64 = magnetic::PropagationStack<f64>;
pub type ModelState64 = model::ModelState<f64>;
pub type TrainOutput64 = model::TrainOutput<f64>;
pub type SyncProblem64 = sync::SyncProblem<f64>;

/// f32 variants for memory-constrained propagation.
pub type Digraph32 = graph::Digraph<f32>;
pub type Mat32 = dense::Mat<f32>;
pub type CMat32 = dense::CMat<f32>;
