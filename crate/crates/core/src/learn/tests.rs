use super::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

/// Gaussian blobs in `n_features` dimensions, class `c` centred at `c * sep`.
fn blobs(n_per_class: usize, n_classes: usize, n_features: usize, sep: f64, seed: u64) -> LabeledDataset {
    let mut rng = rng_from_seed(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let mut ds = LabeledDataset {
        plot_ids: Vec::new(),
        n_features,
        x: Vec::new(),
        labels: Vec::new(),
        planting_days: Vec::new(),
        window: None,
    };
    for i in 0..n_per_class * n_classes {
        let c = i % n_classes;
        ds.plot_ids.push(format!("p{i}"));
        for _ in 0..n_features {
            ds.x.push(c as f64 * sep + noise.sample(&mut rng));
        }
        ds.labels.push(PracticeLabel::ALL[c]);
        ds.planting_days.push(None);
    }
    ds
}

fn accuracy(m: &EnsembleModel, ds: &LabeledDataset) -> f64 {
    let y = ds.y(m.task);
    (0..ds.len()).filter(|&i| m.predict_row(ds.row(i)).class == y[i]).count() as f64 / ds.len() as f64
}

fn rf_hp(n_trees: usize, max_depth: usize, min_leaf: usize) -> Hyperparams {
    Hyperparams { n_trees, max_depth, min_leaf, learning_rate: None, max_features: None }
}

fn gb_hp(n_trees: usize, max_depth: usize, lr: f64) -> Hyperparams {
    Hyperparams { n_trees, max_depth, min_leaf: 5, learning_rate: Some(lr), max_features: None }
}

#[test]
fn collapse_examples() {
    assert_eq!(Task::Sowing.class_name(Task::Sowing.collapse(PracticeLabel::Control)), "PTR");
    assert_eq!(Task::Irrigation.class_name(Task::Irrigation.collapse(PracticeLabel::Dsr)), "CF");
    assert_eq!(Task::Combined.class_name(Task::Combined.collapse(PracticeLabel::Awd)), "AWD");
}

#[test]
fn collapse_is_surjective_and_keeps_positive_class() {
    for task in Task::ALL {
        let image: std::collections::BTreeSet<usize> = PracticeLabel::ALL.iter().map(|&l| task.collapse(l)).collect();
        assert_eq!(image.len(), task.n_classes());
    }
    assert_eq!(Task::Sowing.class_name(Task::Sowing.collapse(PracticeLabel::Dsr)), "DSR");
    assert_eq!(Task::Irrigation.class_name(Task::Irrigation.collapse(PracticeLabel::Awd)), "AWD");
}

#[test]
fn quotas_for_full_scene() {
    // Class order CONTROL, DSR, AWD.
    let q = stratified_quotas(&[411, 420, 452], 0.10).unwrap();
    assert_eq!(q, vec![41, 42, 46]);
    assert_eq!(q.iter().sum::<usize>(), 129);
    assert_eq!(stratified_quotas(&[2, 2], 0.5).unwrap(), vec![1, 1]);
    assert!(matches!(stratified_quotas(&[1, 5], 0.5), Err(Error::Stratification(_))));
}

#[test]
fn split_is_disjoint_and_exhaustive() {
    let labels: Vec<usize> = (0..1283).map(|i| [0, 1, 2][(i * 7 + i / 3) % 3]).collect();
    for seed in 0..100 {
        let (train, test) = stratified_split(&labels, 0.1, seed).unwrap();
        let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..1283).collect::<Vec<_>>());
        assert_eq!(stratified_split(&labels, 0.1, seed).unwrap().1, test);
    }
}

#[test]
fn rf_separates_blobs() {
    let ds = blobs(100, 2, 2, 4.0, 1);
    let m = train_rf(&ds, Task::Sowing, &rf_hp(50, 10, 1), 7).unwrap();
    assert!(accuracy(&m, &ds) >= 0.99);
}

#[test]
fn gb_separates_blobs_binary_and_three_class() {
    let ds = blobs(100, 2, 2, 4.0, 2);
    let m = train_gb(&ds, Task::Sowing, &gb_hp(100, 3, 0.3), 7).unwrap();
    assert!(accuracy(&m, &ds) >= 0.99);
    let ds3 = blobs(100, 3, 2, 6.0, 3);
    let m3 = train_gb(&ds3, Task::Combined, &gb_hp(100, 3, 0.3), 7).unwrap();
    assert_eq!(m3.trees.len(), 3);
    assert!(accuracy(&m3, &ds3) >= 0.99);
}

#[test]
fn rf_memorises_one_sample_per_class() {
    let ds = blobs(1, 2, 3, 5.0, 4);
    let m = train_rf(&ds, Task::Sowing, &rf_hp(101, 10, 1), 9).unwrap();
    assert!(m.trees[0].iter().all(|t| t.depth() <= 1));
    assert_eq!(accuracy(&m, &ds), 1.0);
}

#[test]
fn training_is_deterministic() {
    let ds = blobs(60, 3, 5, 1.0, 5);
    for kind in [ModelKind::Rf, ModelKind::Gb] {
        let hp = if kind == ModelKind::Rf { rf_hp(30, 8, 2) } else { gb_hp(30, 3, 0.1) };
        let a = train(&ds, kind, Task::Combined, &hp, 11).unwrap();
        let b = train(&ds, kind, Task::Combined, &hp, 11).unwrap();
        assert_eq!(a.to_bytes(), b.to_bytes());
    }
}

#[test]
fn zero_learning_rate_predicts_prior() {
    let ds = blobs(30, 2, 2, 1.0, 6);
    let mut skewed = ds.subset(&(0..45).collect::<Vec<_>>());
    skewed.labels[0] = PracticeLabel::Dsr;
    let y = skewed.y(Task::Sowing);
    let prior = y.iter().filter(|c| **c == 1).count() as f64 / y.len() as f64;
    let m = train_gb(&skewed, Task::Sowing, &gb_hp(20, 3, 0.0), 1).unwrap();
    assert!((m.init[0] - (prior / (1.0 - prior)).ln()).abs() < 1e-12);
    for i in 0..skewed.len() {
        assert!((m.predict_row(skewed.row(i)).scores[1] - prior).abs() < 1e-12);
    }
}

#[test]
fn scores_sum_to_one_on_random_inputs() {
    let ds = blobs(50, 3, 4, 2.0, 8);
    let rf = train_rf(&ds, Task::Combined, &rf_hp(25, 6, 1), 1).unwrap();
    let gb = train_gb(&ds, Task::Combined, &gb_hp(25, 3, 0.2), 1).unwrap();
    let gb2 = train_gb(&ds, Task::Irrigation, &gb_hp(25, 3, 0.2), 1).unwrap();
    let mut rng = rng_from_seed(3);
    for _ in 0..1000 {
        let row: Vec<f64> = (0..4).map(|_| rng.random_range(-10.0..10.0)).collect();
        for m in [&rf, &gb, &gb2] {
            let p = m.predict_row(&row);
            assert!((p.scores.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert_eq!(p.class, (0..p.scores.len()).fold(0, |b, c| if p.scores[c] > p.scores[b] { c } else { b }));
        }
    }
    let sentinel = vec![-9999.0; 4];
    assert!(rf.predict_row(&sentinel).class < 3);
}

#[test]
fn rf_vote_ignores_tree_order() {
    let ds = blobs(40, 3, 3, 1.0, 12);
    let m = train_rf(&ds, Task::Combined, &rf_hp(31, 6, 1), 2).unwrap();
    let mut rev = m.clone();
    rev.trees[0].reverse();
    for i in 0..ds.len() {
        assert_eq!(m.predict_row(ds.row(i)), rev.predict_row(ds.row(i)));
    }
}

#[test]
fn model_roundtrip_is_bit_exact() {
    let ds = blobs(40, 3, 4, 1.5, 13);
    for m in [
        train_rf(&ds, Task::Combined, &rf_hp(10, 5, 1), 3).unwrap(),
        train_gb(&ds, Task::Combined, &gb_hp(10, 3, 0.137), 3).unwrap(),
        train_gb(&ds, Task::Irrigation, &gb_hp(10, 3, 0.137), 3).unwrap(),
    ] {
        let bytes = m.to_bytes();
        let back = EnsembleModel::from_reader(&bytes[..]).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_bytes(), bytes);
    }
}

#[test]
fn single_class_is_degenerate() {
    let mut ds = blobs(10, 1, 2, 0.0, 1);
    ds.labels = vec![PracticeLabel::Control; ds.len()];
    assert!(matches!(train_rf(&ds, Task::Combined, &rf_hp(5, 3, 1), 0), Err(Error::DegenerateTraining(_))));
    assert!(matches!(train_gb(&ds, Task::Sowing, &gb_hp(5, 3, 0.1), 0), Err(Error::DegenerateTraining(_))));
}

#[test]
fn search_budget_one_matches_direct_training() {
    let ds = blobs(40, 3, 3, 1.0, 21);
    let one = hyperparam_search(&ds, ModelKind::Gb, Task::Combined, 1, 5).unwrap();
    let hp = sample_configs(ModelKind::Gb, 1, 5)[0];
    let mut direct = train(&ds, ModelKind::Gb, Task::Combined, &hp, crate::rng::derive_named(5, "refit")).unwrap();
    direct.validation_f1 = one.model.validation_f1;
    assert_eq!(one.model, direct);
    let many = hyperparam_search(&ds, ModelKind::Gb, Task::Combined, 4, 5).unwrap();
    assert_eq!(many.trials[0], one.trials[0]);
    assert!(many.trials[many.best].score >= one.trials[0].score);
}

#[test]
fn search_space_bounds() {
    for hp in sample_configs(ModelKind::Rf, 200, 1) {
        assert!((100..=800).contains(&hp.n_trees) && (3..=20).contains(&hp.max_depth) && (1..=10).contains(&hp.min_leaf));
    }
    for hp in sample_configs(ModelKind::Gb, 200, 1) {
        let lr = hp.learning_rate.unwrap();
        assert!((50..=500).contains(&hp.n_trees) && (2..=8).contains(&hp.max_depth) && (0.01..=0.3).contains(&lr));
    }
}

#[test]
fn baseline_expectations() {
    assert!((expected_baseline_accuracy(&[863, 420]) - 0.5600).abs() < 5e-4);
    assert!((expected_baseline_accuracy(&[831, 452]) - 0.5436).abs() < 5e-4);
    assert!((expected_baseline_accuracy(&[1, 1, 1]) - 1.0 / 3.0).abs() < 1e-15);
    let train: Vec<usize> = (0..900).map(|i| i % 3).collect();
    let test = vec![0usize; 3000];
    let pred = baseline_proportional(&train, &test, 4);
    let acc = pred.iter().filter(|p| **p == 0).count() as f64 / pred.len() as f64;
    assert!((acc - 1.0 / 3.0).abs() < 0.03);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn gb_loss_never_increases(seed in 0u64..10_000, lr in 0.01f64..1.0, depth in 1usize..6) {
        let ds = blobs(30, 3, 3, 0.5, seed);
        for task in [Task::Sowing, Task::Combined] {
            let m = train_gb(&ds, task, &gb_hp(15, depth, lr), seed).unwrap();
            for w in m.training_loss.windows(2) {
                prop_assert!(w[1] <= w[0]);
            }
        }
    }
}
