use parity_core::dataset::{synth_gen, SynthConfig};
use parity_core::models::linear::loss_and_gradient;
use parity_core::models::{
    importance, predict, raw_importance, train, Algorithm, ModelConfig, Parameters, TrainedModel,
};
use parity_core::seed;
use rand::Rng as _;

#[test]
fn importance_matches_recomputation_from_saved_trees() {
    let mut cfg = SynthConfig::two_groups(1500, [0.6, 0.4], [0.7, 0.3], 3);
    cfg.leakage = 0.7;
    let ds = synth_gen(&cfg).unwrap();
    let model = train(&ds, &ModelConfig::default_for(Algorithm::Gbt, 5)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let loaded = TrainedModel::load(&path).unwrap();
    assert_eq!(predict(&model, &ds).unwrap(), predict(&loaded, &ds).unwrap());

    let text = std::fs::read_to_string(&path).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    let trees = json["parameters"]["trees"].as_array().unwrap();
    let sources = loaded.encoder.column_sources();
    let mut by_feature = vec![0.0; loaded.encoder.features.len()];
    for tree in trees {
        for node in tree["nodes"].as_array().unwrap() {
            if let Some(col) = node["feature"].as_u64() {
                let gain = node["gain"].as_f64().unwrap();
                let fraction = node["sample_fraction"].as_f64().unwrap();
                by_feature[sources[col as usize]] += gain * fraction;
            }
        }
    }
    let raw = raw_importance(&loaded).unwrap();
    for ((name, value), expected) in raw.iter().zip(&by_feature) {
        assert!((value - expected).abs() <= 1e-12 * expected.abs().max(1.0), "{name}");
    }
    let ranking = importance(&loaded).unwrap();
    let total: f64 = ranking.entries.iter().map(|e| e.1).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(ranking.entries.windows(2).all(|w| w[0].1 >= w[1].1));
    assert!(matches!(loaded.parameters, Parameters::Boosted { .. }));
}

#[test]
fn logreg_gradient_matches_central_differences() {
    let mut rng = seed::rng(11);
    for _ in 0..20 {
        let n = rng.random_range(5..30);
        let p = rng.random_range(1..5);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let x = parity_core::models::encoding::Matrix::from_rows(&rows);
        let y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        let w: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b = rng.random_range(-1.0..1.0);
        let l2 = 0.01;
        let (_, gw, gb) = loss_and_gradient(&x, &y, &w, b, l2);
        let h = 1e-6;
        for j in 0..p {
            let mut up = w.clone();
            up[j] += h;
            let mut down = w.clone();
            down[j] -= h;
            let fd = (loss_and_gradient(&x, &y, &up, b, l2).0 - loss_and_gradient(&x, &y, &down, b, l2).0) / (2.0 * h);
            assert!((fd - gw[j]).abs() <= 1e-5 * gw[j].abs().max(1e-3));
        }
        let fd = (loss_and_gradient(&x, &y, &w, b + h, l2).0 - loss_and_gradient(&x, &y, &w, b - h, l2).0) / (2.0 * h);
        assert!((fd - gb).abs() <= 1e-5 * gb.abs().max(1e-3));
    }
}

#[test]
fn every_learner_beats_chance_on_separable_data() {
    let ds = synth_gen(&SynthConfig::two_groups(800, [0.5, 0.5], [0.5, 0.5], 8)).unwrap();
    for algo in Algorithm::ALL {
        let model = train(&ds, &ModelConfig::default_for(algo, 2)).unwrap();
        let auc = parity_core::metrics::auc(&predict(&model, &ds).unwrap());
        assert!(auc.get().unwrap() > 0.75, "{algo}");
    }
}
