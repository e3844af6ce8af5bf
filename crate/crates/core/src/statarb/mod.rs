//! Second stage: constraint-guaranteed trade weights from predicted rates.

mod graph;
mod links;
mod loss;
mod plan;
mod system;
mod train;

pub use graph::{arbitrage_residuals, build_statarb_graph, DayState, StatArbGraph, EPS_S};
pub use links::{tradable_links, TradableLinks};
pub use loss::{fxsa_loss, fxsa_loss_grad, BatchStats, EPS_VAR};
pub use plan::{
    c1_to_u, certificates, gain_gradient_raw, h_so, holdings_hat, verify_c1, C1Report, Certificates,
    Realization, TradePlan, DEGENERATE_FLOOR, PROJECTION_NOISE,
};
pub use system::{build_constraints, symmetrize_predictions, ConstraintSystem, KERNEL_TOL};
pub use train::{
    decide_trades, evaluate_fxsa, fxsa_batch_gradient, train_fxsa, FxsaConfig, FxsaModel, FxsaSample,
    StateBook,
};
