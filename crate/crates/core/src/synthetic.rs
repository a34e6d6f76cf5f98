//! Seeded synthetic series with known calendar structure.

use chrono::{DateTime, Datelike, Timelike, Utc};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// 2020-09-01T00:00:00Z, a Tuesday.
pub const DEFAULT_START: i64 = 1_598_918_400;

/// `base + amplitude·sin(2π·hour/24) − weekend_dip·[Sat or Sun] + N(0, noise_std²)`, hourly.
#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyHourly {
    pub name: String,
    pub base: f64,
    pub amplitude: f64,
    pub weekend_dip: f64,
    pub noise_std: f64,
    pub days: usize,
    pub start: i64,
    pub seed: u64,
}

impl Default for WeeklyHourly {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            base: 10.0,
            amplitude: 5.0,
            weekend_dip: 3.0,
            noise_std: 0.5,
            days: 33,
            start: DEFAULT_START,
            seed: 7,
        }
    }
}

/// A generated series with its noiseless parts kept for checking fits.
#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub series: TimeSeries,
    /// `-weekend_dip` on weekends, 0 otherwise.
    pub weekly: Vec<f64>,
    pub hourly: Vec<f64>,
    pub noise: Vec<f64>,
}

impl Generated {
    /// Signal without noise.
    pub fn clean(&self) -> Vec<f64> {
        let values = self.series.values();
        values.iter().zip(&self.noise).map(|(v, n)| v - n).collect()
    }
}

fn utc(t: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(t, 0).expect("timestamp in chrono range")
}

fn is_weekend(t: i64) -> bool {
    utc(t).weekday().num_days_from_monday() >= 5
}

impl WeeklyHourly {
    pub fn generate(&self) -> Result<Generated> {
        if self.days == 0 {
            return Err(Error::Config(
                "synthetic series needs at least one day".into(),
            ));
        }
        let normal = Normal::new(0.0, self.noise_std)
            .map_err(|e| Error::Config(format!("noise_std {}: {e}", self.noise_std)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.days * 24;
        let timestamps: Vec<i64> = (0..n as i64).map(|i| self.start + i * 3600).collect();
        let mut weekly = Vec::with_capacity(n);
        let mut hourly = Vec::with_capacity(n);
        let mut noise = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        for &t in &timestamps {
            let hour = f64::from(utc(t).hour());
            let w = if is_weekend(t) {
                -self.weekend_dip
            } else {
                0.0
            };
            let h = self.amplitude * (2.0 * std::f64::consts::PI * hour / 24.0).sin();
            let e = if self.noise_std > 0.0 {
                normal.sample(&mut rng)
            } else {
                0.0
            };
            weekly.push(w);
            hourly.push(h);
            noise.push(e);
            values.push(self.base + w + h + e);
        }
        Ok(Generated {
            series: TimeSeries::new(self.name.clone(), timestamps, values)?,
            weekly,
            hourly,
            noise,
        })
    }
}

/// Daily-or-finer series whose value depends only on the weekday (Monday = 0).
pub fn weekday_lookup(
    name: &str,
    table: [f64; 7],
    start: i64,
    step: i64,
    len: usize,
) -> Result<TimeSeries> {
    let timestamps: Vec<i64> = (0..len as i64).map(|i| start + i * step).collect();
    let values = timestamps
        .iter()
        .map(|&t| table[utc(t).weekday().num_days_from_monday() as usize])
        .collect();
    TimeSeries::new(name, timestamps, values)
}

/// Three hourly series on a shared 33-day grid with different levels,
/// amplitudes, weekend effects and noise.
pub fn benchmark_suite(seed: u64) -> Result<Vec<Generated>> {
    let specs = [
        ("suite_a", 10.0, 5.0, 3.0, 0.5),
        ("suite_b", 40.0, 12.0, 8.0, 1.5),
        ("suite_c", 100.0, 20.0, 25.0, 3.0),
    ];
    specs
        .iter()
        .enumerate()
        .map(|(i, &(name, base, amplitude, weekend_dip, noise_std))| {
            WeeklyHourly {
                name: name.into(),
                base,
                amplitude,
                weekend_dip,
                noise_std,
                seed: seed.wrapping_add(i as u64),
                ..WeeklyHourly::default()
            }
            .generate()
        })
        .collect()
}
