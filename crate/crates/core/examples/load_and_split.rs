//! Load the bundled hourly series, derive calendar codes and cut the
//! 30-day / 3-day backtest windows.

use std::path::PathBuf;

use deepgb::series::{
    extract_calendar_features, load_csv, standardize, train_test_split, CsvLayout, FeatureName,
    MissingPolicy, SplitSpec,
};

fn main() -> deepgb::Result<()> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/synthetic_hourly.csv");
    let series = load_csv(&path, CsvLayout::Long, MissingPolicy::Interpolate)?;
    let ts = &series[0];
    println!("{}: {} points, step {} s", ts.name(), ts.len(), ts.step());

    let fm = extract_calendar_features(ts, &FeatureName::ALL)?;
    for f in fm.features() {
        println!(
            "{:<10} cardinality {:>2}, first codes {:?}",
            f.name(),
            f.cardinality(),
            &f.codes()[..6]
        );
    }

    let (train, test) = train_test_split(ts, &fm, SplitSpec::default())?;
    println!("train rows {:?}, test rows {:?}", train.range, test.range);

    let (scaler, z) = standardize(train.series.values());
    println!(
        "scaler mean {:.3} std {:.3}; first z {:.3}",
        scaler.mean, scaler.std, z[0]
    );
    Ok(())
}
