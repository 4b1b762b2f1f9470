use anyhow::Result;
use paddy_core::eval::{run_ablation, write_ablation_csv};
use paddy_core::features::preset_windows;
use paddy_core::features::DEFAULT_STEP;
use paddy_core::learn::{ModelKind, Task};

use crate::inputs::{create, load_plots, window};
use crate::manifest::{beside, RunManifest};
use crate::{AblateArgs, Preset};

pub fn run(a: AblateArgs) -> Result<()> {
    let windows = match a.preset {
        Some(Preset::Table2) => preset_windows(a.window.step.unwrap_or(DEFAULT_STEP))?,
        None => vec![window(&a.window, None)?],
    };
    let tasks: Vec<Task> = if a.task.is_empty() { Task::ALL.to_vec() } else { a.task.iter().map(|&t| t.into()).collect() };
    let kinds: Vec<ModelKind> =
        if a.kind.is_empty() { vec![ModelKind::Rf, ModelKind::Gb] } else { a.kind.iter().map(|&k| k.into()).collect() };
    let names = |v: &[String]| v.join(",");
    let config = format!(
        "windows={} tasks={} kinds={} budget={} test_frac={}",
        windows.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(";"),
        names(&tasks.iter().map(|t| t.to_string()).collect::<Vec<_>>()),
        names(&kinds.iter().map(|k| k.to_string()).collect::<Vec<_>>()),
        a.budget,
        a.test_frac
    );
    let mut manifest = RunManifest::start("ablate", &config, Some(a.seed));
    manifest.input(&a.series)?;
    manifest.input(&a.labels)?;
    let plots = load_plots(&a.series, Some(&a.labels))?;
    let grid = run_ablation(&plots, &windows, &tasks, &kinds, a.budget as usize, a.test_frac, a.seed)?;
    manifest.stage("ablate", format!("{} windows x {} tasks on {} plots", windows.len(), tasks.len(), plots.len()));
    let mut out = create(&a.out)?;
    write_ablation_csv(&mut out, &[config, format!("seed={}", a.seed)], &grid)?;
    std::io::Write::flush(&mut out)?;
    manifest.output(&a.out)?;
    manifest.finish(&beside(&a.out))?;
    for c in &grid.cells {
        println!("{:>2} {:<16} {:<10} {} F1 {:.4}", c.row, c.window.to_string(), c.task.to_string(), c.kind, c.metrics.f1_weighted);
    }
    Ok(())
}
