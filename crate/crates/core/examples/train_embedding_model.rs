//! Train one embedding table plus dense head on a weekday-only target, then
//! freeze the table and check that further training leaves it alone.

use deepgb::nn::{CompositeEmbeddingModel, EmbeddingTable, RmsProp, TrainConfig};
use deepgb::series::{extract_calendar_features, standardize, FeatureName};
use deepgb::synthetic::weekday_lookup;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> deepgb::Result<()> {
    let table = [1.0, 2.0, 3.0, 4.0, 5.0, -2.0, -3.0];
    let ts = weekday_lookup("weekday", table, 1_598_918_400, 3600, 24 * 28)?;
    let fm = extract_calendar_features(&ts, &[FeatureName::DayOfWeek])?;
    let (_, y) = standardize(ts.values());

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let embedding = EmbeddingTable::new("dayofweek", 7, 4, &mut rng);
    let mut model = CompositeEmbeddingModel::new(vec![embedding], &[32; 4], 0.1, None, &mut rng)?;
    println!("{} parameters", model.parameter_count());

    let config = TrainConfig {
        epochs: 30,
        optimizer: RmsProp {
            learning_rate: 0.001,
            ..RmsProp::default()
        },
        ..TrainConfig::default()
    };
    let losses = model.fit(&fm, &y, &config)?;
    println!(
        "loss: first {:.4}, last {:.4}",
        losses[0],
        losses[losses.len() - 1]
    );

    model.freeze_embedding(0)?;
    let snapshot = model.embeddings()[0].weights().clone();
    model.fit(
        &fm,
        &y,
        &TrainConfig {
            epochs: 5,
            ..config
        },
    )?;
    println!(
        "frozen table unchanged: {}",
        model.embeddings()[0].weights() == &snapshot
    );
    Ok(())
}
