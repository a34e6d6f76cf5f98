use deepgb::boosting::{deepgb_fit, deepgb_predict, BoostConfig, StopReason};
use deepgb::gbdt::{GbdtConfig, GbdtModel, Node, RegressionTree};
use deepgb::nn::{RmsProp, TrainConfig};
use deepgb::series::{
    calendar_features_at, extract_calendar_features, standardize, FeatureMatrix, FeatureName,
};
use deepgb::synthetic::{weekday_lookup, WeeklyHourly, DEFAULT_START};
use deepgb::Error;

const CAL: [FeatureName; 2] = [FeatureName::DayOfWeek, FeatureName::Hour];

fn weekly_hourly() -> (deepgb::TimeSeries, FeatureMatrix, Vec<f64>) {
    let g = WeeklyHourly::default().generate().unwrap();
    let fm = extract_calendar_features(&g.series, &CAL).unwrap();
    (g.series, fm, g.weekly)
}

fn quick_trees() -> GbdtConfig {
    GbdtConfig {
        n_trees: 50,
        ..GbdtConfig::default()
    }
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64
}

#[test]
fn weekday_only_target_stops_after_one_stage() {
    let ts = weekday_lookup(
        "w",
        [1.0, 2.0, 3.0, 4.0, 5.0, -2.0, -3.0],
        DEFAULT_START,
        3600,
        720,
    )
    .unwrap();
    let fm = extract_calendar_features(&ts, &CAL).unwrap();
    // The default step size leaves RMSProp jitter around 1e-2; a smaller
    // step with more epochs gets the residual under epsilon.
    let config = BoostConfig {
        train: TrainConfig {
            epochs: 1000,
            batch_size: 16,
            dropout_rate: 0.0,
            optimizer: RmsProp {
                learning_rate: 5e-5,
                ..RmsProp::default()
            },
            ..TrainConfig::default()
        },
        ..BoostConfig::default()
    };
    let model = deepgb_fit(&ts, &fm, &config, &quick_trees()).unwrap();
    assert_eq!(model.stages.len(), 1);
    assert_eq!(model.stop, StopReason::ResidualBelowEpsilon);
    assert!(model.stages[0].residual_mean_abs() < config.epsilon);
    let (_, trees) = model.predict_components(&fm).unwrap();
    let max = trees.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(max < 0.01, "tree output {max}");
}

#[test]
fn stages_follow_the_calendar_components() {
    let (ts, fm, weekly) = weekly_hourly();
    let model = deepgb_fit(&ts, &fm, &BoostConfig::default(), &quick_trees()).unwrap();
    assert_eq!(model.stages.len(), 2);
    let first = &model.stages[0];
    assert_eq!(first.feature, "dayofweek");
    let corr = correlation(&first.prediction, &weekly);
    assert!(corr > 0.9, "stage 1 vs weekly: {corr}");
    assert!(variance(&model.stages[1].residual) < variance(&first.residual));
    assert_eq!(model.stages[1].model.embeddings().len(), 2);
}

#[test]
fn bookkeeping_and_stopping_rule() {
    let (ts, fm, _) = weekly_hourly();
    let config = BoostConfig::default();
    let model = deepgb_fit(&ts, &fm, &config, &quick_trees()).unwrap();
    let (_, y) = standardize(ts.values());
    let mut previous = y.clone();
    for (i, s) in model.stages.iter().enumerate() {
        assert_eq!(s.stage, i + 1);
        assert_eq!(s.prediction.len(), y.len());
        for ((r, p), yk) in s.residual.iter().zip(&s.prediction).zip(&y) {
            assert!((r + p - yk).abs() < 1e-9);
        }
        let delta = s
            .residual
            .iter()
            .zip(&previous)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / y.len() as f64;
        assert_eq!(s.delta, delta);
        let last = i + 1 == model.stages.len();
        if !last || model.stop != StopReason::DeltaBelowEpsilon {
            assert!(s.delta >= config.epsilon);
        } else {
            assert!(s.delta < config.epsilon);
        }
        previous = s.residual.clone();
    }
}

#[test]
fn prediction_is_the_sum_of_components() {
    let (ts, fm, _) = weekly_hourly();
    let model = deepgb_fit(&ts, &fm, &BoostConfig::default(), &quick_trees()).unwrap();
    let (net, trees) = model.predict_components(&fm).unwrap();
    let pred = deepgb_predict(&model, &fm).unwrap();
    for k in 0..pred.len() {
        assert_eq!(pred[k], model.scaler.inverse_one(net[k] + trees[k]));
    }
    // On training rows: standardized prediction = y - F_last + trees.
    let (_, y) = standardize(ts.values());
    let last = model.stages.last().unwrap();
    for k in 0..y.len() {
        assert!((net[k] + trees[k] - (y[k] - last.residual[k] + trees[k])).abs() < 1e-9);
    }
}

#[test]
fn additive_identities() {
    let (ts, fm, _) = weekly_hourly();
    let mut model = deepgb_fit(
        &ts,
        &fm,
        &BoostConfig {
            max_stages: Some(1),
            ..BoostConfig::default()
        },
        &quick_trees(),
    )
    .unwrap();
    assert_eq!(model.stages.len(), 1);

    // Zero-leaf trees: forecast is the network alone.
    let zero_tree = RegressionTree::from_nodes(vec![Node::Leaf { value: 0.0 }]).unwrap();
    model.residual_model = GbdtModel::from_parts(0.0, vec![zero_tree], 0.1, 2).unwrap();
    let net = model.composite.predict(&fm).unwrap();
    let pred = deepgb_predict(&model, &fm).unwrap();
    for k in 0..pred.len() {
        assert_eq!(pred[k], model.scaler.inverse_one(net[k]));
    }

    // Zero network, constant trees: forecast is that constant, de-standardized.
    for id in model.composite.param_ids() {
        model
            .composite
            .param_mut(id)
            .iter_mut()
            .for_each(|p| *p = 0.0);
    }
    model.residual_model = GbdtModel::from_parts(0.75, Vec::new(), 0.1, 2).unwrap();
    let pred = deepgb_predict(&model, &fm).unwrap();
    assert!(pred.iter().all(|&p| p == model.scaler.inverse_one(0.75)));
}

#[test]
fn cardinality_mismatch_names_the_feature() {
    let (ts, fm, _) = weekly_hourly();
    let model = deepgb_fit(
        &ts,
        &fm,
        &BoostConfig {
            max_stages: Some(1),
            ..BoostConfig::default()
        },
        &quick_trees(),
    )
    .unwrap();
    let hour = fm.feature("hour").unwrap();
    let wider = deepgb::series::CategoricalFeature::new("hour", 30, hour.codes().to_vec()).unwrap();
    let bad = FeatureMatrix::new(
        vec![fm.feature("dayofweek").unwrap().clone(), wider],
        fm.time_index().to_vec(),
        fm.time_scale(),
    )
    .unwrap();
    match deepgb_predict(&model, &bad) {
        Err(Error::Shape(msg)) => assert!(msg.contains("'hour'"), "{msg}"),
        other => panic!("expected a shape error, got {other:?}"),
    }
}

#[test]
fn refit_is_bit_reproducible_and_frozen_prefix_holds() {
    let (ts, fm, _) = weekly_hourly();
    let config = BoostConfig {
        train: TrainConfig {
            epochs: 20,
            ..TrainConfig::default()
        },
        ..BoostConfig::default()
    };
    let a = deepgb_fit(&ts, &fm, &config, &quick_trees()).unwrap();
    let b = deepgb_fit(&ts, &fm, &config, &quick_trees()).unwrap();
    assert_eq!(a, b);
    assert_eq!(
        a.composite.embeddings()[0].weights(),
        a.stages[0].model.embeddings()[0].weights()
    );
    assert!(a.composite.embeddings().iter().all(|t| t.is_frozen()));
}

#[test]
fn empty_feature_list_is_a_config_error() {
    let (ts, fm, _) = weekly_hourly();
    let empty = FeatureMatrix::new(Vec::new(), fm.time_index().to_vec(), fm.time_scale()).unwrap();
    let err = deepgb_fit(&ts, &empty, &BoostConfig::default(), &quick_trees()).unwrap_err();
    assert!(matches!(err, Error::Config(_)), "{err}");
}

#[test]
fn divergence_propagates() {
    let (ts, fm, _) = weekly_hourly();
    let config = BoostConfig {
        train: TrainConfig {
            epochs: 3,
            optimizer: RmsProp {
                learning_rate: 1e300,
                ..RmsProp::default()
            },
            ..TrainConfig::default()
        },
        ..BoostConfig::default()
    };
    let err = deepgb_fit(&ts, &fm, &config, &quick_trees()).unwrap_err();
    assert!(matches!(err, Error::Divergence { .. }), "{err}");
}

#[test]
fn future_features_come_from_timestamps() {
    let (ts, fm, _) = weekly_hourly();
    let model = deepgb_fit(
        &ts,
        &fm,
        &BoostConfig {
            max_stages: Some(1),
            ..BoostConfig::default()
        },
        &quick_trees(),
    )
    .unwrap();
    let future = ts.future_timestamps(5);
    let via_model = model.features_for(&future).unwrap();
    let direct = calendar_features_at(&future, &CAL, fm.time_scale()).unwrap();
    assert_eq!(via_model, direct);
}
