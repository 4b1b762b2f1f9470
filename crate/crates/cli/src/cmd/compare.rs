use anyhow::{Context, Result};
use paddy_core::scale::{compare_records, read_districts_csv, read_records_csv, write_paired_csv, write_scatter_data};

use crate::inputs::{create, open};
use crate::manifest::RunManifest;
use crate::CompareArgs;

pub const REPORT_FILE: &str = "report.json";
pub const PAIRED_FILE: &str = "paired.csv";
pub const SCATTER_FILE: &str = "scatter.dat";

pub fn run(a: CompareArgs) -> Result<()> {
    let mut manifest = RunManifest::start("compare", &format!("p={}", a.p), None);
    manifest.input(&a.districts)?;
    manifest.input(&a.records)?;
    let summaries = read_districts_csv(open(&a.districts)?).with_context(|| format!("reading {}", a.districts.display()))?;
    let records = read_records_csv(open(&a.records)?).with_context(|| format!("reading {}", a.records.display()))?;
    let report = compare_records(&summaries, &records, a.p)?;
    manifest.stage("compare", format!("{} common districts", report.pairs.len()));

    let write = |name: &str, f: &dyn Fn(&mut dyn std::io::Write) -> Result<()>| -> Result<std::path::PathBuf> {
        let path = a.out_dir.join(name);
        let mut w = create(&path)?;
        f(&mut w)?;
        w.flush()?;
        Ok(path)
    };
    use std::io::Write;
    let outputs = [
        write(REPORT_FILE, &|w| {
            serde_json::to_writer_pretty(&mut *w, &report)?;
            Ok(w.write_all(b"\n")?)
        })?,
        write(PAIRED_FILE, &|w| Ok(write_paired_csv(w, &report)?))?,
        write(SCATTER_FILE, &|w| Ok(write_scatter_data(w, &report)?))?,
    ];
    for p in &outputs {
        manifest.output(p)?;
    }
    manifest.finish(&a.out_dir.join("manifest.json"))?;
    println!("districts {}", report.pairs.len());
    println!("pearson {:.6}", report.pearson);
    println!("rbo {:.6} (p={})", report.rbo, report.rbo_p);
    if !report.unmatched.is_empty() {
        println!("unmatched {}", report.unmatched.join(", "));
    }
    Ok(())
}
