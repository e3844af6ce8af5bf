//! Walk-forward backtest of the trading network against the LP benchmark.

mod engine;
pub mod metrics;
mod report;

pub use engine::{
    build_state_book, predicted_carry, run_prediction_stage, run_walk_forward, BacktestConfig, BacktestReport,
    DailyRecord, PredictionStage, RefitReport, Strategy, StrategyReport, StrategySet, Summary, WalkForwardRun,
};
