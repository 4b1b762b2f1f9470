use std::path::Path;

use anyhow::{Context, Result};
use paddy_core::synth::{
    generate_scene, render_grids, write_scene, ClassCounts, RevisitSchedule, SynthConfig, LABELS_FILE, POLYGONS_FILE,
    SERIES_FILE,
};
use paddy_core::zonal::write_grid;

use crate::inputs::create;
use crate::manifest::RunManifest;
use crate::SynthArgs;

pub const CONFIG_FILE: &str = "config.toml";
pub const GRIDS_DIR: &str = "grids";

fn resolve_config(a: &SynthArgs) -> Result<SynthConfig> {
    let mut cfg = match &a.config {
        Some(path) => SynthConfig::from_path(path).with_context(|| format!("loading config {}", path.display()))?,
        None => SynthConfig::default(),
    };
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    if a.align_planting {
        cfg.align_planting_dates = true;
    }
    if let Some(p) = a.revisit_days {
        cfg.schedule = RevisitSchedule::every(p);
    }
    if let Some(c) = a.awd_cycle_days {
        cfg.awd.fixed_cycle_days = Some(c);
    }
    if let Some(n) = a.plots_per_class {
        cfg.counts = ClassCounts::uniform(n);
    }
    cfg.validate().context("invalid scene configuration")?;
    Ok(cfg)
}

pub fn run(a: SynthArgs) -> Result<()> {
    let cfg = resolve_config(&a)?;
    let text = cfg.to_toml_string();
    let mut manifest = RunManifest::start("synth", &text, Some(cfg.seed));
    if let Some(path) = &a.config {
        manifest.input(path)?;
    }
    let scene = generate_scene(&cfg.counts, &cfg, cfg.seed)?;
    manifest.stage("generate", format!("{} plots", scene.plots.len()));
    write_scene(&a.out, &scene).with_context(|| format!("writing scene to {}", a.out.display()))?;
    std::fs::write(a.out.join(CONFIG_FILE), &text)?;
    for f in [SERIES_FILE, LABELS_FILE, POLYGONS_FILE, CONFIG_FILE] {
        manifest.output(&a.out.join(f))?;
    }
    if a.grids {
        let stack = render_grids(&scene, a.pixel_size)?;
        let dir = a.out.join(GRIDS_DIR);
        let mut n = 0;
        for (band, layers) in &stack {
            for (day, grid) in layers {
                let path = dir.join(format!("{band}_{day}.zgrd"));
                let mut w = create(&path)?;
                write_grid(&mut w, grid)?;
                std::io::Write::flush(&mut w)?;
                manifest.output(&path)?;
                n += 1;
            }
        }
        manifest.stage("render", format!("{n} grids"));
    }
    manifest.finish(&a.out.join("manifest.json"))?;
    println!("wrote {} plots to {}", scene.plots.len(), Path::new(&a.out).display());
    Ok(())
}
