//! CSV reading and writing shared by recordings, feature tables and cohorts.
//! Fields are trimmed and blank lines skipped.

use crate::error::{Error, Result};

pub(crate) struct Records {
    pub header: Vec<String>,
    pub rows: Vec<csv::StringRecord>,
}

pub(crate) fn read(text: &str) -> Result<Records> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(convert)?.iter().map(str::to_string).collect();
    let rows = rdr.records().collect::<std::result::Result<Vec<_>, _>>().map_err(convert)?;
    Ok(Records { header, rows })
}

fn convert(e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::UnequalLengths { pos, expected_len, len } => Error::RaggedRow {
            // the header is record 0
            row: pos.as_ref().map_or(0, |p| p.record().saturating_sub(1) as usize),
            expected: *expected_len as usize,
            found: *len as usize,
        },
        _ => Error::MalformedCsv(e.to_string()),
    }
}

/// Serialises rows of already formatted fields, quoting where needed.
pub(crate) fn write<I, R>(rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        // writes into memory cannot fail
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("in-memory csv write");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv output is utf-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ragged_rows_report_the_data_row() {
        let e = read("a,b\n1,2\n\n3\n").err().unwrap();
        assert!(matches!(e, Error::RaggedRow { row: 1, expected: 2, found: 1 }));
    }

    #[test]
    fn round_trip_quotes_commas() {
        let text = write([vec!["id".to_string(), "v".into()], vec!["a,b".into(), " 1.5".into()]]);
        let r = read(&text).unwrap();
        assert_eq!(r.header, ["id", "v"]);
        assert_eq!(&r.rows[0][0], "a,b");
        assert_eq!(&r.rows[0][1], "1.5");
    }
}
