//! End-to-end paths through the public API: scene on disk, rasters, features,
//! models and batch inference.

use std::fs::File;
use std::io::BufReader;

use paddy_core::eval::window_dataset;
use paddy_core::features::{extract_features, TemporalWindow};
use paddy_core::learn::{train, EnsembleModel, Hyperparams, ModelKind, Task};
use paddy_core::scale::{batch_predict, Ensemble, PlotOutcome};
use paddy_core::synth::{
    generate_scene, render_grids, write_scene, ClassCounts, Scene, SynthConfig, LABELS_FILE, POLYGONS_FILE, SERIES_FILE,
};
use paddy_core::timeseries::{read_labels_csv, SeriesCsvReader};
use paddy_core::zonal::{read_polygons, reduce_polygon, DEFAULT_BUFFER_PX};

fn scene(per_class: usize, seed: u64) -> Scene {
    let cfg = SynthConfig::default();
    let counts = ClassCounts { control: per_class, dsr: per_class, awd: per_class };
    generate_scene(&counts, &cfg, seed).unwrap()
}

fn hp(kind: ModelKind) -> Hyperparams {
    Hyperparams {
        n_trees: 15,
        max_depth: 4,
        min_leaf: 2,
        learning_rate: (kind == ModelKind::Gb).then_some(0.2),
        max_features: None,
    }
}

#[test]
fn scene_files_reload_to_same_features() {
    let s = scene(6, 3);
    let dir = tempfile::tempdir().unwrap();
    write_scene(dir.path(), &s).unwrap();

    let labels = read_labels_csv(File::open(dir.path().join(LABELS_FILE)).unwrap()).unwrap();
    let reader = SeriesCsvReader::new(BufReader::new(File::open(dir.path().join(SERIES_FILE)).unwrap())).unwrap();
    let reloaded: Vec<_> = reader.map(Result::unwrap).collect();
    assert_eq!(reloaded.len(), s.plots.len());
    let window = TemporalWindow::full_season(7).unwrap();
    for (orig, back) in s.plots.iter().zip(&reloaded) {
        assert_eq!(orig.plot_id(), back.plot_id());
        assert_eq!(labels[orig.plot_id()].label, orig.label.unwrap());
        assert_eq!(extract_features(orig, &window).unwrap(), extract_features(back, &window).unwrap());
    }
    let polys = read_polygons(File::open(dir.path().join(POLYGONS_FILE)).unwrap()).unwrap();
    assert_eq!(polys.len(), s.plots.len());
}

#[test]
fn rasterised_scene_reduces_to_series_features() {
    let s = scene(4, 9);
    let stack = render_grids(&s, 10.0).unwrap();
    let window = TemporalWindow::full_season(4).unwrap();
    for (plot, poly) in s.plots.iter().zip(&s.polygons) {
        let reduced = reduce_polygon(poly, &stack, DEFAULT_BUFFER_PX).unwrap();
        assert_eq!(reduced.plot_id(), plot.plot_id());
        assert_eq!(extract_features(&reduced, &window).unwrap().values, extract_features(plot, &window).unwrap().values);
    }
}

#[test]
fn saved_model_predicts_identically() {
    let s = scene(15, 4);
    let window = TemporalWindow::full_season(7).unwrap();
    let ds = window_dataset(&s.plots, &window).unwrap();
    let dir = tempfile::tempdir().unwrap();
    for kind in [ModelKind::Rf, ModelKind::Gb] {
        let model = train(&ds, kind, Task::Combined, &hp(kind), 5).unwrap();
        let path = dir.path().join(format!("{}.json", kind.as_str()));
        model.save(&path).unwrap();
        let back = EnsembleModel::load(&path).unwrap();
        assert_eq!(back, model);
        for i in 0..ds.len() {
            assert_eq!(back.predict_row(ds.row(i)), model.predict_row(ds.row(i)));
        }
    }
}

#[test]
fn mixed_ensemble_batch_is_worker_independent() {
    let train_scene = scene(20, 6);
    let window = TemporalWindow::full_season(7).unwrap();
    let ds = window_dataset(&train_scene.plots, &window).unwrap();
    let models = [ModelKind::Rf, ModelKind::Gb, ModelKind::Rf]
        .iter()
        .enumerate()
        .map(|(i, &k)| train(&ds, k, Task::Sowing, &hp(k), i as u64).unwrap())
        .collect();
    let ensemble = Ensemble::new(models).unwrap();
    let target = scene(25, 7);

    let run = |workers: usize| {
        let mut out = Vec::new();
        let stats = batch_predict(&ensemble, target.plots.iter().cloned().map(Ok), &window, workers, |o| {
            match o {
                PlotOutcome::Predicted(p) => out.push((p.plot_id, p.class, p.score.to_bits())),
                PlotOutcome::Failed(e) => panic!("{}: {}", e.plot_id, e.error),
            }
            Ok(())
        })
        .unwrap();
        assert_eq!(stats.predicted, target.plots.len());
        out
    };
    let one = run(1);
    let ids: Vec<&str> = target.plots.iter().map(|p| p.plot_id()).collect();
    assert_eq!(one.iter().map(|r| r.0.as_str()).collect::<Vec<_>>(), ids);
    assert_eq!(run(4), one);
}
