//! Directed graphs with node features, labels, and split masks.

mod digraph;
mod ingest;
mod motifs;
mod synth;

pub use digraph::{DegreeStats, Digraph, IngestReport, Splits};
pub use ingest::{
    ingest, load_bundle, read_edge_list, read_features, read_labels, save_bundle,
    split_by_counts, SplitSpec,
};
pub use motifs::{count_motifs, MotifStats};
pub use synth::{generate_synthetic, generate_synthetic_with, SynthParams};
