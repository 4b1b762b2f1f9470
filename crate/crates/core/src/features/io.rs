//! Feature matrix CSV: metadata columns followed by the schema names.

use std::io::{Read, Write};

use super::{feature_names, FeatureVector, TemporalWindow, FEATURE_COUNT, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::timeseries::PracticeLabel;

pub const FEATURE_META_COLUMNS: [&str; 5] = ["plot_id", "label", "window_start", "window_end", "step"];

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub vector: FeatureVector,
    pub label: Option<PracticeLabel>,
}

/// Write rows after `#`-prefixed comment lines.
pub fn write_features_csv<'a, W: Write>(
    mut w: W,
    comments: &[String],
    rows: impl IntoIterator<Item = &'a FeatureRow>,
) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    writeln!(w, "# schema_version={SCHEMA_VERSION}")?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(FEATURE_META_COLUMNS.iter().copied().chain(feature_names().iter().map(String::as_str)))?;
    for row in rows {
        let v = &row.vector;
        let mut rec = vec![
            v.plot_id.clone(),
            row.label.map(|l| l.as_str().to_owned()).unwrap_or_default(),
            v.window.start_day.to_string(),
            v.window.end_day.to_string(),
            v.window.step_days.to_string(),
        ];
        rec.extend(v.values.iter().map(|x| x.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(r: R) -> Result<Vec<FeatureRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r);
    let headers = rdr.headers()?.clone();
    let expected: Vec<&str> = FEATURE_META_COLUMNS.iter().copied().chain(feature_names().iter().map(String::as_str)).collect();
    let found: Vec<&str> = headers.iter().collect();
    if found != expected {
        let first_diff = expected.iter().zip(&found).position(|(a, b)| a != b).unwrap_or(expected.len().min(found.len()));
        return Err(Error::Schema {
            expected: format!("{SCHEMA_VERSION} ({} columns)", expected.len()),
            found: format!("{} columns, first difference at column {}", found.len(), first_diff + 1),
        });
    }
    let mut rows = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::Input(format!("feature row {}: bad {what}", line + 1));
        let int = |i: usize, what: &str| rec[i].parse::<i32>().map_err(|_| bad(what));
        let label = match &rec[1] {
            "" => None,
            s => Some(s.parse::<PracticeLabel>()?),
        };
        let window = TemporalWindow { start_day: int(2, "window_start")?, end_day: int(3, "window_end")?, step_days: int(4, "step")? };
        let values = (5..5 + FEATURE_COUNT)
            .map(|i| rec[i].parse::<f64>().map_err(|_| bad(&headers[i])))
            .collect::<Result<Vec<_>>>()?;
        rows.push(FeatureRow { vector: FeatureVector { plot_id: rec[0].to_owned(), window, values }, label });
    }
    Ok(rows)
}
