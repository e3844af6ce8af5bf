//! Parallel vs sequential execution of the data-parallel stages.
//!
//! Without the `parallel` feature both variants run sequentially.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fxarb::backtest::build_state_book;
use fxarb::fx_graph::{LookbackWindows, MarketHistory};
use fxarb::fxrp::{make_splits, stitch_predictions, train_fxrp, FxrpConfig, FxrpData, ScheduleConfig, Stage};
use fxarb::market_data::{generate_synthetic, CleaningConfig, Market, SyntheticConfig};
use fxarb::neural::{GridPoint, HyperGrid, TrainKnobs};
use fxarb::par::Exec;

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn market(n_days: usize) -> Market {
    let s = generate_synthetic(&SyntheticConfig {
        n_days,
        ..Default::default()
    })
    .unwrap();
    Market::prepare(s.calendar, s.fx, s.ir, &CleaningConfig::default()).unwrap()
}

fn history_and_features(c: &mut Criterion) {
    let m = market(2000);
    let h = MarketHistory::new(&m);
    let windows = LookbackWindows::default();
    let mut g = c.benchmark_group("preprocessing");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("currency_values", name), &exec, |b, &e| {
            b.iter(|| black_box(MarketHistory::with_exec(&m, e)))
        });
        g.bench_with_input(BenchmarkId::new("feature_graphs", name), &exec, |b, &e| {
            b.iter(|| black_box(FxrpData::build(&h, &windows, e).unwrap()))
        });
    }
    g.finish();
}

fn grid_training_and_states(c: &mut Criterion) {
    let m = market(2000);
    let h = MarketHistory::new(&m);
    let cfg = FxrpConfig {
        grid: HyperGrid::new(vec![
            GridPoint { budget: 1000, layers: 1 },
            GridPoint { budget: 1000, layers: 2 },
            GridPoint { budget: 2000, layers: 2 },
            GridPoint { budget: 2000, layers: 3 },
        ])
        .unwrap(),
        knobs: TrainKnobs {
            lr: 3e-3,
            max_epochs: 2,
            patience: 2,
            batch_size: 32,
            max_steps_per_epoch: Some(4),
        },
        windows: LookbackWindows::default(),
    };
    let data = FxrpData::build(&h, &cfg.windows, Exec::default()).unwrap();
    let cal = &m.calendar;
    let schedule = fxarb::fxrp::build_schedule(cal, &ScheduleConfig::default()).unwrap();
    let split = make_splits(&schedule, Stage::Prediction, 3).unwrap();

    let mut g = c.benchmark_group("stages");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("fxrp_grid_4_points", name), &exec, |b, &e| {
            b.iter(|| black_box(train_fxrp(3, &data, &split, &cfg, 0, e).unwrap()))
        });
    }
    let model = train_fxrp(3, &data, &split, &cfg, 0, Exec::default()).unwrap();
    let models: Vec<_> = (0..schedule.n_fit()).map(|_| Some(&model.params)).collect();
    let store = stitch_predictions(&schedule, &models, &data, m.n_currencies()).unwrap();
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::new("state_book", name), &exec, |b, &e| {
            b.iter(|| black_box(build_state_book(&store, &h, 0, e).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, history_and_features, grid_training_and_states);
criterion_main!(benches);
