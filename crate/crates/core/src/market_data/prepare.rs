use super::calendar::TradingCalendar;
use super::clean::{apply_corrections, clean_panels, CleaningConfig, CleaningLog};
use super::panel::{symmetrize_rates, FxPanel, IrPanel, OneSided};
use crate::error::Result;

/// Cleaned, symmetrized market data on a common calendar.
#[derive(Debug, Clone)]
pub struct Market {
    pub calendar: TradingCalendar,
    /// Symmetrized observed quotes; gaps stay gaps.
    pub fx: FxPanel,
    /// Forward-filled shadow of `fx`, read only by the currency-value solver.
    pub fx_filled: FxPanel,
    pub ir: IrPanel,
    pub one_sided: Vec<OneSided>,
    pub log: CleaningLog,
}

impl Market {
    /// Corrections, then symmetrization, then fills and imputation.
    pub fn prepare(
        calendar: TradingCalendar,
        mut fx: FxPanel,
        ir: IrPanel,
        cfg: &CleaningConfig,
    ) -> Result<Self> {
        let mut log = CleaningLog::default();
        apply_corrections(&mut fx, cfg, &calendar, &mut log)?;
        let (sym, one_sided) = symmetrize_rates(&fx)?;
        let cleaned = clean_panels(&sym, &ir, cfg)?;
        log.entries.extend(cleaned.log.entries);
        Ok(Self {
            calendar,
            fx: cleaned.fx,
            fx_filled: cleaned.fx_filled,
            ir: cleaned.ir,
            one_sided,
            log,
        })
    }

    pub fn n_currencies(&self) -> usize {
        self.fx.n_currencies()
    }

    pub fn n_days(&self) -> usize {
        self.fx.n_days()
    }

    pub fn currencies(&self) -> &[String] {
        self.fx.currencies()
    }
}
