//! Recorded per-district acreage and the comparison of predicted district
//! totals against it.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::DistrictSummary;
use crate::error::{Error, Result};
use crate::eval::{pearson, rbo};

pub const SQ_METERS_PER_ACRE: f64 = 4046.8564224;

/// District name to recorded positive acreage.
pub type RecordsTable = BTreeMap<String, f64>;

#[derive(Debug, Deserialize)]
struct RecordRow {
    district: String,
    acres: f64,
}

pub fn read_records_csv<R: Read>(reader: R) -> Result<RecordsTable> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = RecordsTable::new();
    for row in rdr.deserialize::<RecordRow>() {
        let row = row?;
        if !(row.acres >= 0.0) {
            return Err(Error::Input(format!("district {} has invalid acreage {}", row.district, row.acres)));
        }
        if out.insert(row.district.clone(), row.acres).is_some() {
            return Err(Error::Input(format!("district {} is listed twice", row.district)));
        }
    }
    Ok(out)
}

pub fn write_records_csv<W: Write>(writer: W, records: &RecordsTable) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["district", "acres"])?;
    for (d, a) in records {
        w.write_record([d.as_str(), &a.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedDistrict {
    pub district: String,
    pub predicted_acres: f64,
    pub recorded_acres: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    /// Common districts in descending order of recorded acreage.
    pub pairs: Vec<PairedDistrict>,
    pub pearson: f64,
    pub rbo: f64,
    pub rbo_p: f64,
    /// Districts present on only one side.
    pub unmatched: Vec<String>,
}

/// Districts by descending value, ties by name.
fn ranking(pairs: &[PairedDistrict], value: impl Fn(&PairedDistrict) -> f64) -> Vec<&str> {
    let mut idx: Vec<&PairedDistrict> = pairs.iter().collect();
    idx.sort_by(|a, b| value(b).total_cmp(&value(a)).then_with(|| a.district.cmp(&b.district)));
    idx.into_iter().map(|p| p.district.as_str()).collect()
}

/// Pearson correlation of predicted vs recorded acreage over the common
/// districts, and RBO between the two district rankings.
pub fn compare_records(summaries: &[DistrictSummary], records: &RecordsTable, p: f64) -> Result<ComparisonReport> {
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for s in summaries {
        match records.get(&s.district) {
            Some(&recorded_acres) => pairs.push(PairedDistrict {
                district: s.district.clone(),
                predicted_acres: s.positive_acres(),
                recorded_acres,
            }),
            None => unmatched.push(s.district.clone()),
        }
    }
    unmatched.extend(records.keys().filter(|d| !summaries.iter().any(|s| &s.district == *d)).cloned());
    unmatched.sort();
    if pairs.len() < 3 {
        return Err(Error::Input(format!("need at least 3 districts in common with the records, found {}", pairs.len())));
    }
    pairs.sort_by(|a, b| b.recorded_acres.total_cmp(&a.recorded_acres).then_with(|| a.district.cmp(&b.district)));
    let x: Vec<f64> = pairs.iter().map(|q| q.predicted_acres).collect();
    let y: Vec<f64> = pairs.iter().map(|q| q.recorded_acres).collect();
    let r = pearson(&x, &y)?;
    let o = rbo(&ranking(&pairs, |q| q.predicted_acres), &ranking(&pairs, |q| q.recorded_acres), p)?;
    Ok(ComparisonReport { pairs, pearson: r, rbo: o, rbo_p: p, unmatched })
}

pub fn write_paired_csv<W: Write>(writer: W, report: &ComparisonReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["district", "predicted_acres", "recorded_acres"])?;
    for q in &report.pairs {
        w.write_record([q.district.clone(), format!("{:.6}", q.predicted_acres), format!("{:.6}", q.recorded_acres)])?;
    }
    w.flush()?;
    Ok(())
}

/// Whitespace-separated `recorded predicted district` triples for plotting.
pub fn write_scatter_data<W: Write>(mut w: W, report: &ComparisonReport) -> Result<()> {
    writeln!(w, "# pearson={:.6} rbo={:.6} p={}", report.pearson, report.rbo, report.rbo_p)?;
    writeln!(w, "# recorded_acres predicted_acres district")?;
    for q in &report.pairs {
        writeln!(w, "{:.6} {:.6} {}", q.recorded_acres, q.predicted_acres, q.district.replace(char::is_whitespace, "_"))?;
    }
    Ok(())
}
