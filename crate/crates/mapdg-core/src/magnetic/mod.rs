//! The q-parameterized magnetic graph operator and its propagation.

mod csr;
mod phases;
mod power;
mod propagate;

pub use csr::ComplexCsr;
pub use phases::{assemble_star_mgo, build_symmetric_norm, EdgePhaseAssignment};
pub use power::{power_iteration, DenseHermitian, HermitianOp, PowerIteration};
pub use propagate::{load_stack, propagate, save_stack, PropagationStack, QStats};
