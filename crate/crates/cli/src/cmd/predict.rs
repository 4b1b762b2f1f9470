use anyhow::{Context, Result};
use paddy_core::learn::EnsembleModel;
use paddy_core::scale::{batch_predict, write_districts_csv, write_errors_csv, DistrictAggregator, Ensemble, PlotOutcome, PredictionWriter};
use paddy_core::timeseries::SeriesCsvReader;

use crate::inputs::{create, open, window};
use crate::manifest::{beside, RunManifest};
use crate::PredictArgs;

pub fn run(a: PredictArgs, workers: usize) -> Result<()> {
    let models = a
        .model
        .iter()
        .map(|p| EnsembleModel::load(p).with_context(|| format!("loading model {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let shared = models.first().and_then(|m| m.window).filter(|w| models.iter().all(|m| m.window == Some(*w)));
    let w = window(&a.window, shared)?;
    let ensemble = Ensemble::new(models)?;
    let task = ensemble.task();
    let config = format!("window={w} models={}", a.model.len());
    let mut manifest = RunManifest::start("predict", &config, None);
    manifest.input(&a.series)?;
    for m in &a.model {
        manifest.input(m)?;
    }

    let reader = SeriesCsvReader::new(open(&a.series)?).with_context(|| format!("reading {}", a.series.display()))?;
    let mut writer = PredictionWriter::new(create(&a.out)?, task)?;
    let mut errors = Vec::new();
    let mut agg = DistrictAggregator::new(task.positive_class());
    let stats = batch_predict(&ensemble, reader, &w, workers, |o| {
        match o {
            PlotOutcome::Predicted(p) => {
                agg.add(&p);
                writer.write(&p)?;
            }
            PlotOutcome::Failed(e) => errors.push(e),
        }
        Ok(())
    })?;
    writer.finish()?;
    manifest.output(&a.out)?;
    manifest.stage("predict", format!("{} predicted, {} failed, {workers} workers", stats.predicted, stats.failed));

    let errors_path = a.errors.clone().unwrap_or_else(|| {
        let mut name = a.out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(".errors.csv");
        a.out.with_file_name(name)
    });
    let mut ew = create(&errors_path)?;
    write_errors_csv(&mut ew, &errors)?;
    std::io::Write::flush(&mut ew)?;
    manifest.output(&errors_path)?;
    if let Some(path) = &a.districts {
        let mut dw = create(path)?;
        write_districts_csv(&mut dw, &agg.finish())?;
        std::io::Write::flush(&mut dw)?;
        manifest.output(path)?;
    }
    manifest.finish(&beside(&a.out))?;
    if stats.predicted + stats.failed == 0 {
        return Err(crate::UsageError(format!("{} contains no plots", a.series.display())).into());
    }
    println!("predicted {} plots ({} failed, see {})", stats.predicted, stats.failed, errors_path.display());
    Ok(())
}
