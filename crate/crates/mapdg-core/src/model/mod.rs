//! Trainable propagation-and-aggregation model with adaptive potentials.

pub mod adam;
pub mod forward;
pub mod link;
pub mod metrics;
pub mod mlp;
pub mod state;
pub mod train;

pub use adam::{Adam, AdamHyper};
pub use forward::{
    attention_backward, attention_forward, concat_steps, cross_entropy_masked, edge_q_backward,
    edge_q_forward, gather_pair_rows, propagation_backward, q_pair_gradient, scatter_pair_rows,
    softmax_rows, AttCache, EdgeQCache,
};
pub use link::{make_link_split, LinkSplit};
pub use metrics::{accuracy, argmax_tie_lowest, auc, average_precision};
pub use mlp::{sigmoid, Linear, LinearGrads, Mlp, MlpCache, MlpGrads};
pub use state::{
    load_checkpoint, save_checkpoint, ModelDims, ModelState, Strategy, Task, TrainConfig,
};
pub use train::{predict_link, predict_node, soft_labels, train, EpochRecord, TrainOutput};
