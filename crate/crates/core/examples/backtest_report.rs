//! Backtest DeepGB against seasonal naive and linear AR on the synthetic
//! suite and print the report table.

use deepgb::eval::{backtest, render_table, BaselineSpec, DeepGbSpec, ModelSpec};
use deepgb::series::{FeatureName, SplitSpec};
use deepgb::synthetic::benchmark_suite;
use deepgb::{BoostConfig, GbdtConfig};

fn main() -> deepgb::Result<()> {
    let series: Vec<_> = benchmark_suite(7)?.into_iter().map(|g| g.series).collect();
    let models = [
        ModelSpec::DeepGb(Box::new(DeepGbSpec {
            features: vec![FeatureName::DayOfWeek, FeatureName::Hour],
            boost: BoostConfig::default(),
            gbdt: GbdtConfig::default(),
        })),
        ModelSpec::Baseline(BaselineSpec::SeasonalNaive { period: 24 }),
        ModelSpec::Baseline(BaselineSpec::LinearAr { order: 24 }),
    ];
    let report = backtest(&series, &models, SplitSpec::default());
    print!("{}", render_table(&report)?);
    println!();
    print!("{}", report.to_csv());
    Ok(())
}
