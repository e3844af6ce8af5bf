//! Delimited-text ingestion of FX and interest-rate observations.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDate;

use super::calendar::TradingCalendar;
use super::panel::{FxPanel, IrPanel};
use crate::error::{Error, Result};

pub const FX_HEADER: [&str; 4] = ["date", "base", "quote", "rate"];
pub const IR_HEADER: [&str; 4] = ["date", "currency", "maturity_years", "rate"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LoadReport {
    /// Rows dated on a day that is not in the calendar (weekends included).
    pub dropped_off_calendar: usize,
    pub fx_rows: usize,
    pub ir_rows: usize,
}

struct FxRow {
    line: u64,
    date: NaiveDate,
    base: String,
    quote: String,
    rate: f64,
}

struct IrRow {
    line: u64,
    date: NaiveDate,
    currency: String,
    maturity: u32,
    rate: f64,
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn records<R: Read>(
    reader: R,
    path: &Path,
    header: [&str; 4],
) -> Result<Vec<(u64, [String; 4])>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let got = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .clone();
    if got.len() != 4 || got.iter().zip(header).any(|(a, b)| a != b) {
        return Err(parse_err(
            path,
            1,
            format!("expected header `{}`", header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line()).unwrap_or(0);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        if rec.len() != 4 {
            return Err(parse_err(path, line, format!("expected 4 fields, got {}", rec.len())));
        }
        out.push((line, [0, 1, 2, 3].map(|k| rec[k].to_string())));
    }
    Ok(out)
}

fn parse_date(path: &Path, line: u64, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|e| parse_err(path, line, format!("bad date `{s}`: {e}")))
}

fn parse_rate(path: &Path, line: u64, s: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| parse_err(path, line, format!("bad rate `{s}`")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite rate `{s}`")));
    }
    Ok(v)
}

fn read_fx<R: Read>(reader: R, path: &Path) -> Result<Vec<FxRow>> {
    records(reader, path, FX_HEADER)?
        .into_iter()
        .map(|(line, [d, b, q, r])| {
            let rate = parse_rate(path, line, &r)?;
            if rate <= 0.0 {
                return Err(parse_err(path, line, format!("FX rate must be positive, got {rate}")));
            }
            if b == q {
                return Err(parse_err(path, line, format!("base equals quote `{b}`")));
            }
            Ok(FxRow {
                line,
                date: parse_date(path, line, &d)?,
                base: b,
                quote: q,
                rate,
            })
        })
        .collect()
}

fn read_ir<R: Read>(reader: R, path: &Path) -> Result<Vec<IrRow>> {
    records(reader, path, IR_HEADER)?
        .into_iter()
        .map(|(line, [d, c, m, r])| {
            let maturity: u32 = m
                .parse()
                .map_err(|_| parse_err(path, line, format!("bad maturity `{m}`")))?;
            if IrPanel::maturity_slot(maturity).is_none() {
                return Err(parse_err(path, line, format!("unsupported maturity {maturity}")));
            }
            Ok(IrRow {
                line,
                date: parse_date(path, line, &d)?,
                currency: c,
                maturity,
                rate: parse_rate(path, line, &r)?,
            })
        })
        .collect()
}

/// Loads both panels from readers. `fx_name`/`ir_name` label error messages.
pub fn load_panels_from<R1: Read, R2: Read>(
    fx: R1,
    fx_name: &Path,
    ir: R2,
    ir_name: &Path,
    calendar: &TradingCalendar,
) -> Result<(FxPanel, IrPanel, LoadReport)> {
    let fx_rows = read_fx(fx, fx_name)?;
    let ir_rows = read_ir(ir, ir_name)?;

    let codes: BTreeSet<String> = fx_rows
        .iter()
        .flat_map(|r| [r.base.clone(), r.quote.clone()])
        .chain(ir_rows.iter().map(|r| r.currency.clone()))
        .collect();
    let currencies: Vec<String> = codes.into_iter().collect();
    let idx = |c: &str| currencies.binary_search_by(|x| x.as_str().cmp(c)).unwrap();

    let mut report = LoadReport::default();
    let mut fxp = FxPanel::new(currencies.clone(), calendar.len());
    for r in &fx_rows {
        let Some(t) = calendar.index_of(r.date) else {
            report.dropped_off_calendar += 1;
            continue;
        };
        let (i, j) = (idx(&r.base), idx(&r.quote));
        if fxp.get(t, i, j).is_some() {
            return Err(Error::Duplicate {
                key: format!("{} {}/{} (line {})", r.date, r.base, r.quote, r.line),
            });
        }
        fxp.set(t, i, j, r.rate);
        report.fx_rows += 1;
    }

    let mut irp = IrPanel::new(currencies.clone(), calendar.len());
    for r in &ir_rows {
        let Some(t) = calendar.index_of(r.date) else {
            report.dropped_off_calendar += 1;
            continue;
        };
        let i = idx(&r.currency);
        let m = IrPanel::maturity_slot(r.maturity).unwrap();
        if irp.get(t, i, m).is_some() {
            return Err(Error::Duplicate {
                key: format!("{} {} {}y (line {})", r.date, r.currency, r.maturity, r.line),
            });
        }
        irp.set(t, i, m, r.rate);
        report.ir_rows += 1;
    }
    Ok((fxp, irp, report))
}

pub fn load_panels(
    fx_path: &Path,
    ir_path: &Path,
    calendar: &TradingCalendar,
) -> Result<(FxPanel, IrPanel, LoadReport)> {
    let fx = std::fs::File::open(fx_path)?;
    let ir = std::fs::File::open(ir_path)?;
    load_panels_from(fx, fx_path, ir, ir_path, calendar)
}

/// Weekday calendar spanning every date mentioned in either file.
pub fn calendar_spanning(fx_path: &Path, ir_path: &Path) -> Result<TradingCalendar> {
    let fx = read_fx(std::fs::File::open(fx_path)?, fx_path)?;
    let ir = read_ir(std::fs::File::open(ir_path)?, ir_path)?;
    let dates = fx.iter().map(|r| r.date).chain(ir.iter().map(|r| r.date));
    let (lo, hi) = dates.fold((None, None), |(lo, hi): (Option<NaiveDate>, Option<NaiveDate>), d| {
        (Some(lo.map_or(d, |x| x.min(d))), Some(hi.map_or(d, |x| x.max(d))))
    });
    match (lo, hi) {
        (Some(lo), Some(hi)) => Ok(TradingCalendar::weekdays(lo, hi)),
        _ => Err(Error::Config("input files contain no observations".into())),
    }
}

pub fn write_fx_csv<W: std::io::Write>(panel: &FxPanel, calendar: &TradingCalendar, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FX_HEADER).map_err(csv_io)?;
    let n = panel.n_currencies();
    for t in 1..=panel.n_days() {
        let d = calendar.date(t).to_string();
        for i in 0..n {
            for j in 0..n {
                if let Some(v) = panel.get(t, i, j) {
                    let c = panel.currencies();
                    out.write_record([d.as_str(), &c[i], &c[j], &format!("{v:?}")])
                        .map_err(csv_io)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_ir_csv<W: std::io::Write>(panel: &IrPanel, calendar: &TradingCalendar, w: W) -> Result<()> {
    use super::panel::MATURITIES;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(IR_HEADER).map_err(csv_io)?;
    let c = panel.currencies();
    for t in 1..=panel.n_days() {
        let d = calendar.date(t).to_string();
        for (i, code) in c.iter().enumerate() {
            for (m, years) in MATURITIES.iter().enumerate() {
                if let Some(v) = panel.get(t, i, m) {
                    out.write_record([d.as_str(), code, &years.to_string(), &format!("{v:?}")])
                        .map_err(csv_io)?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cal() -> TradingCalendar {
        TradingCalendar::weekdays(
            NaiveDate::from_ymd_opt(2015, 1, 2).unwrap(),
            NaiveDate::from_ymd_opt(2015, 1, 9).unwrap(),
        )
    }

    const IR_EMPTY: &str = "date,currency,maturity_years,rate\n";

    fn load(fx: &str, ir: &str) -> Result<(FxPanel, IrPanel, LoadReport)> {
        load_panels_from(
            fx.as_bytes(),
            Path::new("fx.csv"),
            ir.as_bytes(),
            Path::new("ir.csv"),
            &cal(),
        )
    }

    #[test]
    fn single_row_is_ingested() {
        let (fx, _, rep) = load("date,base,quote,rate\n2015-01-02,USD,EUR,0.83\n", IR_EMPTY).unwrap();
        let (u, e) = (fx.currency_index("USD").unwrap(), fx.currency_index("EUR").unwrap());
        assert_eq!(fx.get(1, u, e), Some(0.83));
        assert_eq!(rep.fx_rows, 1);
        assert_eq!(rep.dropped_off_calendar, 0);
    }

    #[test]
    fn saturday_row_is_dropped_and_counted() {
        let (fx, _, rep) = load("date,base,quote,rate\n2015-01-03,USD,EUR,0.83\n", IR_EMPTY).unwrap();
        assert_eq!(fx.count(), 0);
        assert_eq!(rep.dropped_off_calendar, 1);
    }

    #[test]
    fn duplicate_key_is_rejected_with_the_key() {
        let err = load(
            "date,base,quote,rate\n2015-01-02,USD,EUR,0.83\n2015-01-02,USD,EUR,0.84\n",
            IR_EMPTY,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("USD/EUR") && msg.contains("2015-01-02"), "{msg}");
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let err = load(
            "date,base,quote,rate\n2015-01-02,USD,EUR,0.83\n2015-01-05,USD,EUR,abc\n",
            IR_EMPTY,
        )
        .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn ir_rows_land_in_maturity_slots() {
        let (_, ir, _) = load(
            "date,base,quote,rate\n",
            "date,currency,maturity_years,rate\n2015-01-05,JPY,5,0.001\n",
        )
        .unwrap();
        assert_eq!(ir.get(2, 0, 2), Some(0.001));
        assert!(load("date,base,quote,rate\n", "date,currency,maturity_years,rate\n2015-01-05,JPY,3,0.001\n").is_err());
    }
}
