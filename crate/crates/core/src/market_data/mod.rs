//! Trading calendar, FX and interest-rate panels, ingestion, cleaning and
//! the synthetic market generator.

mod calendar;
mod clean;
mod load;
mod panel;
mod synth;

pub use calendar::{is_weekend, TradingCalendar};
pub use clean::{
    apply_corrections, clean_panels, impute_on_log_maturity, CleanedPanels, CleaningAction,
    CleaningConfig, CleaningEntry, CleaningLog, OutlierRule,
};
pub use load::{
    calendar_spanning, load_panels, load_panels_from, write_fx_csv, write_ir_csv, LoadReport,
    FX_HEADER, IR_HEADER,
};
pub use panel::{symmetrize_rates, FxPanel, IrPanel, OneSided, DAYS_PER_YEAR, MATURITIES};
pub use synth::{currency_codes, generate_synthetic, GroundTruth, SyntheticConfig, SyntheticMarket};

mod prepare;
pub use prepare::Market;
