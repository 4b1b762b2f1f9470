//! Ingestion CSV: `plot_id,district,area_m2,band,day,value_db`, one row per
//! band and acquisition. Rows of one plot must be contiguous; the reader
//! streams one [`PlotSeries`] at a time.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{Acquisition, Band, Day, PlotSeries, PracticeLabel};

pub const SERIES_HEADER: [&str; 6] = ["plot_id", "district", "area_m2", "band", "day", "value_db"];

#[derive(Debug, Deserialize)]
struct SeriesRow {
    plot_id: String,
    district: String,
    area_m2: f64,
    band: String,
    day: Day,
    value_db: f64,
}

struct Pending {
    plot_id: String,
    district: String,
    area_m2: f64,
    bands: BTreeMap<Band, Vec<Acquisition>>,
}

impl Pending {
    fn finish(mut self) -> Result<PlotSeries> {
        for acqs in self.bands.values_mut() {
            acqs.sort_by_key(|a| a.day);
        }
        PlotSeries::new(self.plot_id, self.district, self.area_m2, self.bands)
    }
}

/// Streaming reader over an ingestion CSV.
pub struct SeriesCsvReader<R: Read> {
    records: csv::DeserializeRecordsIntoIter<R, SeriesRow>,
    pending: Option<Pending>,
    row: u64,
    done: bool,
}

impl<R: Read> SeriesCsvReader<R> {
    pub fn new(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
        let headers = rdr.headers()?.clone();
        let found: Vec<&str> = headers.iter().collect();
        if found != SERIES_HEADER {
            return Err(Error::Input(format!("series CSV header must be {}, found {}", SERIES_HEADER.join(","), found.join(","))));
        }
        Ok(Self { records: rdr.into_deserialize(), pending: None, row: 1, done: false })
    }

    fn absorb(&mut self, row: SeriesRow) -> Result<Option<Pending>> {
        let band: Band = row.band.parse()?;
        if band.is_derived() {
            return Err(Error::Input(format!("line {}: band {band} is derived and cannot be ingested", self.row)));
        }
        let acq = Acquisition::new(row.day, row.value_db).map_err(|e| Error::Input(format!("line {}: {e}", self.row)))?;
        let same = self.pending.as_ref().is_some_and(|p| p.plot_id == row.plot_id);
        let finished = if same { None } else { self.pending.take() };
        let pending = self.pending.get_or_insert_with(|| Pending {
            plot_id: row.plot_id.clone(),
            district: row.district.clone(),
            area_m2: row.area_m2,
            bands: BTreeMap::new(),
        });
        pending.bands.entry(band).or_default().push(acq);
        Ok(finished)
    }
}

impl<R: Read> Iterator for SeriesCsvReader<R> {
    type Item = Result<PlotSeries>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.row += 1;
            match self.records.next() {
                Some(Ok(row)) => match self.absorb(row) {
                    Ok(Some(finished)) => return Some(finished.finish()),
                    Ok(None) => continue,
                    Err(e) => return Some(Err(e)),
                },
                Some(Err(e)) => return Some(Err(e.into())),
                None => {
                    self.done = true;
                    return self.pending.take().map(Pending::finish);
                }
            }
        }
    }
}

pub fn write_series_csv<'a, W: Write>(writer: W, plots: impl IntoIterator<Item = &'a PlotSeries>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(SERIES_HEADER)?;
    for plot in plots {
        for (band, acqs) in plot.bands() {
            for a in acqs {
                w.write_record([
                    plot.plot_id(),
                    plot.district(),
                    &plot.area_m2().to_string(),
                    band.as_str(),
                    &a.day.to_string(),
                    &a.value_db.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Ground-truth side file: `plot_id,label,planting_day`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub plot_id: String,
    pub label: PracticeLabel,
    pub planting_day: Option<Day>,
}

pub fn read_labels_csv<R: Read>(reader: R) -> Result<BTreeMap<String, LabelRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(reader);
    let mut out = BTreeMap::new();
    for rec in rdr.deserialize::<LabelRecord>() {
        let rec = rec?;
        if out.insert(rec.plot_id.clone(), rec.clone()).is_some() {
            return Err(Error::Input(format!("duplicate label for plot {}", rec.plot_id)));
        }
    }
    Ok(out)
}

pub fn write_labels_csv<'a, W: Write>(writer: W, plots: impl IntoIterator<Item = &'a PlotSeries>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for plot in plots {
        if let Some(label) = plot.label {
            w.serialize(LabelRecord { plot_id: plot.plot_id().to_string(), label, planting_day: plot.planting_day })?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CSV: &str = "plot_id,district,area_m2,band,day,value_db
A,Moga,2500,VV,12,-10.5
A,Moga,2500,VV,0,-11
A,Moga,2500,VH,0,-17
A,Moga,2500,VH,12,-16.5
B,Mansa,4000,VV,0,-9
B,Mansa,4000,VH,0,-15
";

    #[test]
    fn streams_contiguous_plots() {
        let plots: Vec<PlotSeries> = SeriesCsvReader::new(CSV.as_bytes()).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(plots.len(), 2);
        assert_eq!(plots[0].plot_id(), "A");
        assert_eq!(plots[0].days(), vec![0, 12]);
        assert_eq!(plots[0].band(Band::Vv).unwrap()[1].value_db, -10.5);
        assert_eq!(plots[1].district(), "Mansa");
    }

    #[test]
    fn rejects_derived_band_and_bad_header() {
        let bad = "plot_id,district,area_m2,band,day,value_db\nA,X,1,RATIO,0,1\n";
        let res: Vec<Result<PlotSeries>> = SeriesCsvReader::new(bad.as_bytes()).unwrap().collect();
        assert!(res[0].is_err());
        assert!(SeriesCsvReader::new("a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn write_then_read() {
        let plots: Vec<PlotSeries> = SeriesCsvReader::new(CSV.as_bytes()).unwrap().collect::<Result<_>>().unwrap();
        let mut buf = Vec::new();
        write_series_csv(&mut buf, &plots).unwrap();
        let again: Vec<PlotSeries> = SeriesCsvReader::new(buf.as_slice()).unwrap().collect::<Result<_>>().unwrap();
        assert_eq!(plots, again);
    }

    #[test]
    fn labels_roundtrip() {
        let text = "plot_id,label,planting_day\nA,DSR,31\nB,AWD,\n";
        let labels = read_labels_csv(text.as_bytes()).unwrap();
        assert_eq!(labels["A"].label, PracticeLabel::Dsr);
        assert_eq!(labels["A"].planting_day, Some(31));
        assert_eq!(labels["B"].planting_day, None);
    }
}
