//! Small graph network: node/edge convolutions, reverse-mode gradients, Adam.

mod adam;
mod arch;
mod gnn;
mod scaler;
mod training;

pub use adam::Adam;
pub use arch::{width_for_budget, Architecture, Layout, OutputMode, SlpLayout};
pub use gnn::{GnnParams, GraphRef, HeadInit, Tape, CHECKPOINT_VERSION, LEAKY_SLOPE};
pub use scaler::{Scaler, ScalerAccumulator, STD_FLOOR};
pub use training::{select_best, GridPoint, GridResult, HyperGrid, TrainKnobs};
