//! Calendar dates on the command line. Internally every date is a day offset
//! from May 1 of the season year.

use chrono::{Datelike, NaiveDate};
use paddy_core::timeseries::Day;

use crate::UsageError;

/// Accepts `YYYY-MM-DD` or a bare day offset.
pub fn parse_day(s: &str) -> Result<Day, UsageError> {
    if let Ok(d) = s.parse::<Day>() {
        return Ok(d);
    }
    let date = NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .map_err(|_| UsageError(format!("{s:?} is neither a YYYY-MM-DD date nor a day offset")))?;
    let may1 = NaiveDate::from_ymd_opt(date.year(), 5, 1).expect("May 1 exists");
    let offset = (date - may1).num_days();
    if offset < 0 {
        return Err(UsageError(format!("{s} falls before May 1 of its season")));
    }
    Day::try_from(offset).map_err(|_| UsageError(format!("{s} is out of range")))
}
