//! Fit the tree ensemble directly on integer codes and inspect the first tree.

use deepgb::gbdt::{GbdtConfig, GbdtModel, Node};

fn main() -> deepgb::Result<()> {
    let hour: Vec<u32> = (0..240).map(|i| i % 24).collect();
    let weekday: Vec<u32> = (0..240).map(|i| (i / 24) % 7).collect();
    let target: Vec<f64> = hour
        .iter()
        .zip(&weekday)
        .map(|(&h, &d)| if (8..18).contains(&h) { 2.0 } else { 0.0 } - if d >= 5 { 1.0 } else { 0.0 })
        .collect();

    let config = GbdtConfig {
        n_trees: 100,
        ..GbdtConfig::default()
    };
    let model = GbdtModel::fit(&[&hour, &weekday], &target, &config)?;
    for node in model.trees()[0].nodes() {
        match node {
            Node::Split {
                feature, threshold, ..
            } => println!("split feature {feature} at {threshold}"),
            Node::Leaf { value } => println!("leaf {value:.4}"),
        }
    }
    let pred = model.predict(&[&hour, &weekday])?;
    let max_err = pred
        .iter()
        .zip(&target)
        .map(|(p, t)| (p - t).abs())
        .fold(0.0, f64::max);
    println!("{} trees, max abs error {max_err:.2e}", model.trees().len());
    Ok(())
}
