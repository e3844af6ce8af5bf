//! Currency graph snapshots, MLE currency values and prediction features.

mod features;
mod history;
mod links;
mod matrix;
mod values;

pub use features::{
    build_feature_graph, edge_momentum_features, node_features, prediction_edge_set,
    scale_target, unscale_prediction, FeatureGraph, LookbackWindows,
};
pub use history::{HistoryView, MarketHistory};
pub use links::{reciprocal_edges, GraphSnapshot, LinkSet};
pub use matrix::RateMatrix;
pub use values::{currency_values, CurrencyValues};
