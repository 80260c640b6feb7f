//! Attributed graphs, adjacency normalization, node splits, CSV ingestion and
//! a seeded generator of graphs with controllable bias.

mod data;
mod io;
pub(crate) mod normalize;
mod split;
mod synth;

use thiserror::Error;

pub use data::AttributedGraph;
pub use io::{load_graph, write_graph, LoadOptions};
pub use normalize::{normalize_adjacency, row_normalize_neighbors};
pub use split::{split_nodes, Split};
pub use synth::{generate_biased_graph, SynthSpec};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid graph: {0}")]
    Invalid(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("split fractions {0:?} are invalid: {1}")]
    InvalidSplit((f64, f64, f64), String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: String, column: String },
    #[error("{path}: edge references unknown node `{id}`")]
    UnknownNode { path: String, id: String },
    #[error("{path}: sensitive column has {count} distinct values ({values}), expected two")]
    SensitiveValues { path: String, count: usize, values: String },
    #[error("{path}, row {row}: column `{column}` has non-numeric value `{value}`")]
    NonNumeric { path: String, row: usize, column: String, value: String },
}
