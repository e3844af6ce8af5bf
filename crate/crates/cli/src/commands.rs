//! The subcommands. Each writes into a staging directory that is moved into
//! place only when the command succeeds.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fxarb::backtest::metrics::fmt_metric;
use fxarb::backtest::{run_prediction_stage, run_walk_forward, Strategy};
use fxarb::fx_graph::MarketHistory;
use fxarb::market_data::{
    calendar_spanning, generate_synthetic, load_panels, write_fx_csv, write_ir_csv, Market,
};
use fxarb::par::Exec;
use fxarb::verify::run_battery;
use log::info;

use crate::config::{DataSource, Loaded};

/// Exit status for a run that finished but found certificate violations or
/// failed checks.
pub const EXIT_FAILED_CHECKS: i32 = 2;

pub struct Output {
    command: String,
    dir: PathBuf,
    staging: PathBuf,
    files: Vec<String>,
    stamp: String,
    committed: bool,
}

impl Output {
    pub fn new(dir: &Path, command: &str, loaded: &Loaded) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let staging = dir.join(format!(".{command}.partial"));
        if staging.exists() {
            fs::remove_dir_all(&staging)?;
        }
        fs::create_dir(&staging)?;
        Ok(Self {
            command: command.to_string(),
            dir: dir.to_path_buf(),
            staging,
            files: Vec::new(),
            stamp: format!(
                "# fxarb {} command={command} config_sha256={} seed={}\n",
                env!("CARGO_PKG_VERSION"),
                loaded.hash,
                loaded.config.seed
            ),
            committed: false,
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.files.push(name.to_string());
        self.staging.join(name)
    }

    /// A text artifact, prefixed with the provenance comment line.
    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, format!("{}{body}", self.stamp)).with_context(|| format!("writing {name}"))
    }

    pub fn bytes(&mut self, name: &str, body: &[u8]) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, body).with_context(|| format!("writing {name}"))
    }

    /// A JSON artifact wrapping `value` with the config hash and seed.
    pub fn json(&mut self, name: &str, loaded: &Loaded, value: serde_json::Value) -> Result<()> {
        let doc = serde_json::json!({
            "config_sha256": loaded.hash,
            "seed": loaded.config.seed,
            "content": value,
        });
        let body = serde_json::to_string_pretty(&doc)? + "\n";
        self.bytes(name, body.as_bytes())
    }

    pub fn with_file(&mut self, name: &str, write: impl FnOnce(&mut fs::File) -> Result<()>) -> Result<()> {
        let p = self.path(name);
        let mut f = fs::File::create(&p)?;
        std::io::Write::write_all(&mut f, self.stamp.as_bytes())?;
        write(&mut f).with_context(|| format!("writing {name}"))
    }

    /// Config echo, effective settings and a manifest, then the move into place.
    pub fn commit(mut self, loaded: &Loaded) -> Result<Vec<PathBuf>> {
        if !loaded.raw.is_empty() {
            self.bytes("config.toml", &loaded.raw)?;
        }
        self.text("effective_config.toml", &loaded.config.to_toml()?)?;
        let mut manifest = String::new();
        for f in &self.files {
            let _ = writeln!(manifest, "{f}");
        }
        let name = format!("{}_manifest.txt", self.command);
        self.text(&name, &manifest)?;
        let mut out = Vec::new();
        for f in &self.files {
            let dest = self.dir.join(f);
            fs::rename(self.staging.join(f), &dest).with_context(|| format!("moving {f} into place"))?;
            out.push(dest);
        }
        fs::remove_dir_all(&self.staging)?;
        self.committed = true;
        Ok(out)
    }
}

impl Drop for Output {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.staging);
        }
    }
}

pub fn exec(loaded: &Loaded) -> Exec {
    if loaded.config.threads == 1 {
        Exec::Sequential
    } else {
        Exec::default()
    }
}

/// The prepared market named by the config; file inputs must already exist.
pub fn load_market(loaded: &Loaded) -> Result<Market> {
    let data = &loaded.config.data;
    match data.source {
        DataSource::Synthetic => {
            let s = generate_synthetic(&data.synthetic)?;
            Ok(Market::prepare(s.calendar, s.fx, s.ir, &data.cleaning)?)
        }
        DataSource::Files => {
            let fx = data.fx_path.as_deref().expect("validated");
            let ir = data.ir_path.as_deref().expect("validated");
            for (what, p) in [("FX", fx), ("interest-rate", ir)] {
                if !p.is_file() {
                    bail!(
                        "missing prerequisite: {what} file {} not found (run `fxarb synth` to create one)",
                        p.display()
                    );
                }
            }
            let calendar = calendar_spanning(fx, ir)?;
            let (fxp, irp, report) = load_panels(fx, ir, &calendar)?;
            info!(
                "loaded {} FX and {} rate rows; {} off-calendar rows dropped",
                report.fx_rows, report.ir_rows, report.dropped_off_calendar
            );
            Ok(Market::prepare(calendar, fxp, irp, &data.cleaning)?)
        }
    }
}

pub fn synth(loaded: &Loaded) -> Result<i32> {
    let cfg = &loaded.config.data.synthetic;
    let s = generate_synthetic(cfg)?;
    let mut out = Output::new(&loaded.config.output_dir, "synth", loaded)?;
    out.with_file("fx.csv", |f| Ok(write_fx_csv(&s.fx, &s.calendar, f)?))?;
    out.with_file("ir.csv", |f| Ok(write_ir_csv(&s.ir, &s.calendar, f)?))?;
    let mut truth = String::from("date,currency,log_value\n");
    for (t, row) in s.truth.log_values.iter().enumerate().skip(1) {
        for (i, v) in row.iter().enumerate() {
            let _ = writeln!(truth, "{},{},{v:?}", s.calendar.date(t), s.fx.currencies()[i]);
        }
    }
    out.text("true_log_values.csv", &truth)?;
    let files = out.commit(loaded)?;
    println!("wrote {} files to {}", files.len(), loaded.config.output_dir.display());
    Ok(0)
}

pub fn ingest(loaded: &Loaded) -> Result<i32> {
    let market = load_market(loaded)?;
    let mut out = Output::new(&loaded.config.output_dir, "ingest", loaded)?;
    out.with_file("clean_fx.csv", |f| Ok(write_fx_csv(&market.fx, &market.calendar, f)?))?;
    out.with_file("clean_ir.csv", |f| Ok(write_ir_csv(&market.ir, &market.calendar, f)?))?;
    out.text("cleaning_log.csv", &market.log.to_records())?;
    let mut one = String::from("t,base,quote\n");
    for o in &market.one_sided {
        let _ = writeln!(one, "{},{},{}", o.t, market.currencies()[o.base], market.currencies()[o.quote]);
    }
    out.text("one_sided_quotes.csv", &one)?;
    out.commit(loaded)?;
    println!(
        "{} currencies over {} trading days; {} cleaning actions, {} one-sided quotes",
        market.n_currencies(),
        market.n_days(),
        market.log.entries.len(),
        market.one_sided.len()
    );
    Ok(0)
}

fn grid_csv(rows: impl Iterator<Item = (usize, usize, fxarb::neural::GridResult, bool)>) -> String {
    let mut s = String::from("k,budget,layers,hidden,val_score,epochs,selected\n");
    for (k, _, r, sel) in rows {
        let _ = writeln!(
            s,
            "{k},{},{},{},{:?},{},{sel}",
            r.point.budget, r.point.layers, r.hidden, r.val_score, r.epochs
        );
    }
    s
}

pub fn train_fxrp(loaded: &Loaded) -> Result<i32> {
    let cfg = &loaded.config;
    let market = load_market(loaded)?;
    let exec = exec(loaded);
    let history = MarketHistory::with_exec(&market, exec);
    let stage = run_prediction_stage(&cfg.backtest, &market, &history, cfg.seed, exec)?;
    let mut out = Output::new(&cfg.output_dir, "train-fxrp", loaded)?;
    for m in &stage.models {
        let params: serde_json::Value = serde_json::from_str(&m.params.to_json()?)?;
        out.json(&format!("fxrp_k{}.json", m.k), loaded, params)?;
    }
    let rows = stage
        .models
        .iter()
        .flat_map(|m| m.table.iter().enumerate().map(move |(i, r)| (m.k, i, r.clone(), i == m.best)));
    out.text("fxrp_grid.csv", &grid_csv(rows))?;
    out.text("predictions.csv", &stage.store.to_records(market.currencies()))?;
    out.commit(loaded)?;
    for m in &stage.models {
        println!("refit {}: validation MSE {:.6e}", m.k, m.val_mse);
    }
    Ok(0)
}

pub fn backtest(loaded: &Loaded) -> Result<i32> {
    let cfg = &loaded.config;
    let market = load_market(loaded)?;
    let exec = exec(loaded);
    let history = MarketHistory::with_exec(&market, exec);
    let run = run_walk_forward(&cfg.backtest, &market, &history, cfg.seed, exec)?;
    let r = &run.report;
    let mut out = Output::new(&cfg.output_dir, "backtest", loaded)?;
    out.text("summary.csv", &r.summary_csv())?;
    out.text("daily.csv", &r.daily_csv())?;
    out.text("rolling.csv", &r.rolling_csv())?;
    out.text("refits.csv", &r.refits_csv())?;
    out.text("predictions.csv", &run.predictions.store.to_records(market.currencies()))?;
    let rows = run.fxsa_models.iter().flat_map(|(k, m)| {
        let k = *k;
        m.table.iter().enumerate().map(move |(i, r)| (k, i, r.clone(), i == m.best))
    });
    out.text("fxsa_grid.csv", &grid_csv(rows))?;
    let mut checks = String::from("kind,detail\n");
    for v in &r.violations {
        let _ = writeln!(checks, "violation,{}", v.replace(',', ";"));
    }
    for t in &r.lp_dominance_failures {
        let _ = writeln!(checks, "lp_dominance,t={t}");
    }
    out.text("certificate_failures.csv", &checks)?;
    out.commit(loaded)?;

    print!("{}", r.summary_csv());
    if let (Some(g), Some(l)) = (r.strategy(Strategy::Gnn), r.strategy(Strategy::Lp)) {
        println!(
            "mean HHI gnn {} lp {}; mean holdings gnn {} lp {}",
            fmt_metric(g.summary.mean_hhi),
            fmt_metric(l.summary.mean_hhi),
            fmt_metric(g.summary.mean_holdings),
            fmt_metric(l.summary.mean_holdings)
        );
    }
    if r.violations.is_empty() && r.lp_dominance_failures.is_empty() {
        Ok(0)
    } else {
        eprintln!(
            "{} certificate violations, {} LP dominance failures",
            r.violations.len(),
            r.lp_dominance_failures.len()
        );
        Ok(EXIT_FAILED_CHECKS)
    }
}

pub fn verify(loaded: &Loaded) -> Result<i32> {
    let checks = run_battery(loaded.config.seed);
    let mut report = String::from("check,result,detail\n");
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        println!("{verdict}  {}: {}", c.name, c.detail);
        let _ = writeln!(report, "{},{verdict},{}", c.name.replace(",", ";"), c.detail.replace(',', ";"));
    }
    let mut out = Output::new(&loaded.config.output_dir, "verify", loaded)?;
    out.text("verify.csv", &report)?;
    out.commit(loaded)?;
    Ok(if checks.iter().all(|c| c.passed) { 0 } else { EXIT_FAILED_CHECKS })
}
