//! Plain-text series input: one decimal observation per line.

use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::TimeSeries;

/// Parses a series from a reader. Blank lines are skipped; any other line
/// that does not parse as a finite number is an error.
pub fn read_series<R: BufRead>(reader: R) -> Result<TimeSeries> {
    let mut values = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let v: f64 = text.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            message: format!("not a number: {text:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("non-finite value: {text:?}"),
            });
        }
        values.push(v);
    }
    TimeSeries::new(values)
}

pub fn read_series_file(path: impl AsRef<Path>) -> Result<TimeSeries> {
    let file = std::fs::File::open(path)?;
    read_series(std::io::BufReader::new(file))
}

/// Writes one observation per line using the shortest round-trip decimal.
pub fn write_series<W: std::io::Write>(mut w: W, series: &TimeSeries) -> Result<()> {
    for v in series.values() {
        writeln!(w, "{v}")?;
    }
    Ok(())
}
