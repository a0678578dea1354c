//! Feature matrix CSV and its schema sidecar.

use std::io::{Read, Write};

use serde::Serialize;

use super::features::FeatureVector;
use super::registry::{FeatureSpec, REGISTRY, N_FEATURES};
use super::CohortError;

/// Rows of the feature registry, one per repo.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureTable {
    pub rows: Vec<FeatureVector>,
}

impl FeatureTable {
    pub fn new(rows: Vec<FeatureVector>) -> Self {
        FeatureTable { rows }
    }

    /// Rows without any masked entry (the modeling set).
    pub fn complete(&self) -> FeatureTable {
        FeatureTable { rows: self.rows.iter().filter(|r| r.is_complete()).cloned().collect() }
    }

    pub fn repo_ids(&self) -> Vec<String> {
        self.rows.iter().map(|r| r.repo_id.clone()).collect()
    }

    /// Model-space values of the named columns, one inner vector per row.
    pub fn model_matrix(&self, names: &[&str]) -> Result<Vec<Vec<f64>>, CohortError> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| REGISTRY.iter().position(|s| s.name == *n).ok_or_else(|| CohortError::UnknownFeature(n.to_string())))
            .collect::<Result<_, _>>()?;
        Ok(self
            .rows
            .iter()
            .map(|r| {
                let all = r.model_values();
                idx.iter().map(|&i| all[i]).collect()
            })
            .collect())
    }

    /// CSV with a `repo_id` column followed by the registry names; masked
    /// entries are empty cells.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), CohortError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["repo_id"];
        header.extend(REGISTRY.iter().map(|s| s.name));
        w.write_record(&header)?;
        for row in &self.rows {
            let mut rec = vec![row.repo_id.clone()];
            rec.extend((0..N_FEATURES).map(|i| if row.missing[i] { String::new() } else { row.values[i].to_string() }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<FeatureTable, CohortError> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let expected: Vec<&str> = std::iter::once("repo_id").chain(REGISTRY.iter().map(|s| s.name)).collect();
        if header != expected {
            return Err(CohortError::BadHeader);
        }
        let mut rows = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let mut fv = FeatureVector::empty(&rec[0]);
            for i in 0..N_FEATURES {
                let cell = rec[i + 1].trim();
                if !cell.is_empty() {
                    let v: f64 = cell
                        .parse()
                        .map_err(|_| CohortError::BadValue { line: line + 2, column: REGISTRY[i].name.to_string() })?;
                    fv.set(REGISTRY[i].id, Some(v));
                }
            }
            rows.push(fv);
        }
        Ok(FeatureTable { rows })
    }
}

#[derive(Serialize)]
struct Schema {
    id_column: &'static str,
    missing: &'static str,
    features: &'static [FeatureSpec],
}

/// JSON sidecar documenting each column's label, unit and transforms.
pub fn schema_json() -> String {
    let s = Schema { id_column: "repo_id", missing: "empty cell", features: &REGISTRY };
    serde_json::to_string_pretty(&s).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::registry::FeatureId;
    use proptest::prelude::*;

    #[test]
    fn header_matches_registry() {
        let mut buf = Vec::new();
        FeatureTable::default().write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header: Vec<&str> = text.trim_end().split(',').collect();
        assert_eq!(header[0], "repo_id");
        assert_eq!(&header[1..], crate::cohort::feature_names().as_slice());
        assert!(schema_json().contains("\"Len. off segment (TH=16)\""));
    }

    #[test]
    fn bad_header_rejected() {
        assert!(matches!(FeatureTable::read_csv("repo_id,x\nr,1\n".as_bytes()), Err(CohortError::BadHeader)));
    }

    proptest! {
        #[test]
        fn csv_round_trip(vals in proptest::collection::vec(proptest::option::of(-1e9f64..1e9), N_FEATURES)) {
            let mut fv = FeatureVector::empty("org/repo,with comma");
            for (i, v) in vals.iter().enumerate() {
                fv.set(REGISTRY[i].id, *v);
            }
            let table = FeatureTable::new(vec![fv.clone()]);
            let mut buf = Vec::new();
            table.write_csv(&mut buf).unwrap();
            let back = FeatureTable::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(&back.rows[0].missing, &fv.missing);
            prop_assert_eq!(&back.rows[0].repo_id, &fv.repo_id);
            for i in 0..N_FEATURES {
                if !fv.missing[i] {
                    prop_assert_eq!(back.rows[0].values[i].to_bits(), fv.values[i].to_bits());
                }
            }
            prop_assert_eq!(back.rows[0].get(FeatureId::NMembers), fv.get(FeatureId::NMembers));
        }
    }
}
