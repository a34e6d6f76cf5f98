//! Fit through the command layer, reload the saved model and forecast the
//! next day.

use std::path::PathBuf;

use deepgb::cli::{cmd_fit, forecast_csv, load_series};
use deepgb::config::RunConfig;
use deepgb::format::load_model;

fn main() -> deepgb::Result<()> {
    let conf = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fit.conf");
    let mut cfg = RunConfig::load(&conf)?;
    cfg.out_dir = std::env::temp_dir().join("deepgb-save-and-forecast");

    let fit = cmd_fit(&cfg, None)?;
    println!(
        "wrote {} ({} stages)",
        fit.model_path.display(),
        fit.model.stages.len()
    );

    let model = load_model(&fit.model_path)?;
    assert_eq!(model, fit.model);
    let ts = load_series(&cfg)?;
    print!("{}", forecast_csv(&model, &ts, 24)?);
    Ok(())
}
