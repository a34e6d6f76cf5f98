//! Regenerates the bundled files in `data/`.
//!
//! ```text
//! cargo run --example make_fixtures
//! ```

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use deepgb::series::{write_long_csv, write_wide_csv};
use deepgb::synthetic::{benchmark_suite, WeeklyHourly};

const FIT_CONF: &str = "\
# Fit on the bundled hourly synthetic series.
data = synthetic_hourly.csv
layout = long
features = dayofweek,hour
seed = 7
out_dir = out
";

const BENCHMARK_CONF: &str = "\
# Backtest DeepGB against the baselines on the three-series suite.
data = suite.csv
layout = wide
features = dayofweek,hour
seed = 7
out_dir = out
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    std::fs::create_dir_all(&dir)?;

    let hourly = WeeklyHourly {
        name: "synthetic_hourly".into(),
        ..WeeklyHourly::default()
    }
    .generate()?;
    write_long_csv(
        BufWriter::new(File::create(dir.join("synthetic_hourly.csv"))?),
        &hourly.series,
    )?;

    let suite: Vec<_> = benchmark_suite(7)?.into_iter().map(|g| g.series).collect();
    write_wide_csv(BufWriter::new(File::create(dir.join("suite.csv"))?), &suite)?;

    std::fs::write(dir.join("fit.conf"), FIT_CONF)?;
    std::fs::write(dir.join("benchmark.conf"), BENCHMARK_CONF)?;
    println!("fixtures written to {}", dir.display());
    Ok(())
}
