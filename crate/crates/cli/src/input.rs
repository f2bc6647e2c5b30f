//! CSV ingestion.
//!
//! Rows in error messages are 1-based line numbers of the file, so they can
//! be looked up directly in an editor. Columns are 1-based as well.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use cpdetect_core::MultivariateSample;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InputError {
    #[error("cannot open {path}: {source}")]
    Open {
        path: String,
        source: std::io::Error,
    },

    #[error("row {row}: {message}")]
    Malformed { row: u64, message: String },

    #[error("row {row} has {found} fields, expected {expected}")]
    Ragged {
        row: u64,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    NotNumeric { row: u64, col: usize, value: String },

    #[error("row {row}, column {col}: value {value:?} is not finite")]
    NotFinite { row: u64, col: usize, value: String },

    #[error("need at least 2 data rows, found {0}")]
    TooFewRows(usize),

    #[error("need at least 2 columns, found {0}")]
    TooFewColumns(usize),

    #[error(transparent)]
    Sample(#[from] cpdetect_core::Error),
}

impl InputError {
    /// File line of the offending record, when there is one.
    pub fn row(&self) -> Option<u64> {
        match self {
            Self::Malformed { row, .. }
            | Self::Ragged { row, .. }
            | Self::NotNumeric { row, .. }
            | Self::NotFinite { row, .. } => Some(*row),
            _ => None,
        }
    }
}

/// Reads a numeric CSV file. `has_header = None` treats the first record as a
/// header when any of its fields fails to parse as a number.
pub fn read_csv(path: impl AsRef<Path>, has_header: Option<bool>) -> Result<MultivariateSample, InputError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| InputError::Open {
        path: path.display().to_string(),
        source,
    })?;
    read_csv_from(file, has_header)
}

pub fn read_csv_from<R: Read>(reader: R, has_header: Option<bool>) -> Result<MultivariateSample, InputError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = None;
    let mut data = Vec::new();
    let mut width = None;
    let mut n = 0usize;
    let mut first = true;

    for record in rdr.records() {
        let record = record.map_err(|e| InputError::Malformed {
            row: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let row = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            let header = match has_header {
                Some(h) => h,
                None => record.iter().any(|f| f.parse::<f64>().is_err()),
            };
            if header {
                names = Some(record.iter().map(str::to_string).collect());
                width = Some(record.len());
                continue;
            }
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() != expected {
            return Err(InputError::Ragged {
                row,
                expected,
                found: record.len(),
            });
        }
        for (j, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| InputError::NotNumeric {
                row,
                col: j + 1,
                value: field.to_string(),
            })?;
            if !value.is_finite() {
                return Err(InputError::NotFinite {
                    row,
                    col: j + 1,
                    value: field.to_string(),
                });
            }
            data.push(value);
        }
        n += 1;
    }

    let d = width.unwrap_or(0);
    if d < 2 {
        return Err(InputError::TooFewColumns(d));
    }
    if n < 2 {
        return Err(InputError::TooFewRows(n));
    }
    let sample = MultivariateSample::from_row_major(data, n, d)?;
    Ok(match names {
        Some(names) => sample.with_names(names)?,
        None => sample,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, header: Option<bool>) -> Result<MultivariateSample, InputError> {
        read_csv_from(text.as_bytes(), header)
    }

    #[test]
    fn header_detection() {
        let s = parse("a,b\n1,2\n3,4\n", None).unwrap();
        assert_eq!(s.names().unwrap(), ["a", "b"]);
        let s = parse("1,2\n3,4\n", None).unwrap();
        assert!(s.names().is_none());
        assert_eq!(s.n(), 2);
        // Forced header on a numeric first line drops it.
        let s = parse("1,2\n3,4\n5,6\n", Some(true)).unwrap();
        assert_eq!(s.n(), 2);
        assert!(parse("a,b\n1,2\n3,4\n", Some(false)).is_err());
    }

    #[test]
    fn whitespace_and_blank_lines() {
        let s = parse(" 1 , 2\n\n3,4 \n", Some(false)).unwrap();
        assert_eq!(s.as_row_major(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn structured_errors() {
        let e = parse("1,2\n3\n", None).unwrap_err();
        assert!(matches!(e, InputError::Ragged { row: 2, expected: 2, found: 1 }));
        let e = parse("1,2\n3,inf\n", None).unwrap_err();
        assert!(matches!(e, InputError::NotFinite { row: 2, col: 2, .. }));
        let e = parse("1,2\n3,\n", None).unwrap_err();
        assert!(matches!(e, InputError::NotNumeric { row: 2, col: 2, .. }));
        assert!(matches!(parse("1,2\n", None).unwrap_err(), InputError::TooFewRows(1)));
        assert!(matches!(parse("1\n2\n", None).unwrap_err(), InputError::TooFewColumns(1)));
    }
}
