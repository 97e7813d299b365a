//! Feature table: one row per (subject, session) with named feature columns.
//!
//! CSV layout: `subject_id,session,group,<feature columns...>,label`, rows
//! sorted by subject then session. Values use shortest round-trip decimals.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::clinical::ResponseLabel;
use crate::error::{Error, Result};
use crate::signal::{Session, TrialArm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject_id: String,
    pub session: Session,
    pub group: TrialArm,
    pub label: ResponseLabel,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureTable {
    pub columns: Vec<String>,
    pub rows: Vec<FeatureRow>,
}

impl FeatureTable {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: FeatureRow) -> Result<()> {
        if row.values.len() != self.columns.len() {
            return Err(Error::DimensionMismatch {
                expected: self.columns.len(),
                found: row.values.len(),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn sort(&mut self) {
        self.rows
            .sort_by(|a, b| (&a.subject_id, a.session).cmp(&(&b.subject_id, b.session)));
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    pub fn value(&self, row: &FeatureRow, name: &str) -> Result<f64> {
        Ok(row.values[self.column_index(name)?])
    }

    /// Rows of one session keyed by subject id.
    pub fn by_subject(&self, session: Session) -> BTreeMap<&str, &FeatureRow> {
        self.rows
            .iter()
            .filter(|r| r.session == session)
            .map(|r| (r.subject_id.as_str(), r))
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let header = ["subject_id", "session", "group"]
            .into_iter()
            .map(String::from)
            .chain(self.columns.iter().cloned())
            .chain([String::from("label")])
            .collect::<Vec<_>>();
        let rows = self.rows.iter().map(|r| {
            [r.subject_id.clone(), r.session.to_string(), r.group.to_string()]
                .into_iter()
                .chain(r.values.iter().map(|v| v.to_string()))
                .chain([r.label.to_string()])
                .collect::<Vec<_>>()
        });
        crate::csvio::write(std::iter::once(header).chain(rows))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let csv = crate::csvio::read(text)?;
        let cols = &csv.header;
        let n = cols.len();
        if n < 4 || cols[..3] != ["subject_id", "session", "group"] || cols[n - 1] != "label" {
            return Err(Error::MalformedCsv(format!("bad feature table header `{}`", cols.join(","))));
        }
        let mut table = FeatureTable::new(cols[3..n - 1].to_vec());
        for (row, cells) in csv.rows.iter().enumerate() {
            let values = (3..n - 1)
                .map(|i| {
                    cells[i]
                        .parse::<f64>()
                        .map_err(|_| Error::MalformedCsv(format!("row {row}: cannot parse `{}`", &cells[i])))
                })
                .collect::<Result<Vec<_>>>()?;
            table.push(FeatureRow {
                subject_id: cells[0].to_string(),
                session: cells[1].parse()?,
                group: cells[2].parse()?,
                label: cells[n - 1].parse()?,
                values,
            })?;
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_csv(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv_string()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn csv_round_trip(values in proptest::collection::vec(proptest::collection::vec(-1e6f64..1e6, 3), 1..6)) {
            let mut t = FeatureTable::new(vec!["a".into(), "b".into(), "c".into()]);
            for (i, v) in values.iter().enumerate() {
                t.push(FeatureRow {
                    subject_id: format!("S{i:02}"),
                    session: if i % 2 == 0 { Session::Baseline } else { Session::Post240 },
                    group: TrialArm::BKet02,
                    label: ResponseLabel::NonResponder,
                    values: v.clone(),
                }).unwrap();
            }
            let back = FeatureTable::parse_csv(&t.to_csv_string()).unwrap();
            prop_assert_eq!(back, t);
        }
    }

    #[test]
    fn rejects_wrong_width() {
        let mut t = FeatureTable::new(vec!["a".into()]);
        let row = FeatureRow {
            subject_id: "S".into(),
            session: Session::Baseline,
            group: TrialArm::AKet05,
            label: ResponseLabel::Responder,
            values: vec![1.0, 2.0],
        };
        assert!(matches!(t.push(row), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(t.column_index("zz"), Err(Error::UnknownFeature(_))));
    }
}
