//! The generic boosting loop with a hand-written weak learner: a regression
//! stump on a single numeric input.

use deepgb::boosting::{gradient_boost, BoostConfig, Learner};

#[derive(Debug, Default)]
struct Stump {
    threshold: f64,
    left: f64,
    right: f64,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

impl Learner<[f64]> for Stump {
    fn fit(&mut self, x: &[f64], target: &[f64]) -> deepgb::Result<()> {
        let mut best = f64::INFINITY;
        for &t in x {
            let (l, r): (Vec<_>, Vec<_>) = x
                .iter()
                .copied()
                .zip(target.iter().copied())
                .partition(|p| p.0 <= t);
            let (ml, mr) = (
                mean(&l.iter().map(|p| p.1).collect::<Vec<_>>()),
                mean(&r.iter().map(|p| p.1).collect::<Vec<_>>()),
            );
            let sse: f64 = l.iter().map(|p| (p.1 - ml).powi(2)).sum::<f64>()
                + r.iter().map(|p| (p.1 - mr).powi(2)).sum::<f64>();
            if sse < best {
                best = sse;
                *self = Stump {
                    threshold: t,
                    left: ml,
                    right: mr,
                };
            }
        }
        Ok(())
    }

    fn predict(&self, x: &[f64]) -> deepgb::Result<Vec<f64>> {
        Ok(x.iter()
            .map(|&v| {
                if v <= self.threshold {
                    self.left
                } else {
                    self.right
                }
            })
            .collect())
    }
}

fn main() -> deepgb::Result<()> {
    let x: Vec<f64> = (0..40).map(f64::from).collect();
    let y: Vec<f64> = x.iter().map(|v| (v / 6.0).sin() * 3.0 + v / 10.0).collect();
    let models: Vec<Stump> = (0..25).map(|_| Stump::default()).collect();
    let config = BoostConfig {
        rho: 0.5,
        ..BoostConfig::default()
    };
    let ensemble = gradient_boost(&x[..], &y, models, &config)?;
    for (m, d) in ensemble.deltas.iter().enumerate().step_by(5) {
        println!("stage {:>2}: delta {d:.5}", m + 1);
    }
    let fit = ensemble.predict(&x[..])?;
    let mse = fit
        .iter()
        .zip(&y)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        / y.len() as f64;
    println!(
        "{} stages kept, stop: {}, train MSE {mse:.4}",
        ensemble.models.len(),
        ensemble.stop.as_str()
    );
    Ok(())
}
