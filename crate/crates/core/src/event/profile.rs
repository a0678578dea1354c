use std::collections::HashMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("row {row}: {source}")]
    Csv { row: usize, source: csv::Error },
    #[error("row {row}: bad date `{value}`")]
    Date { row: usize, value: String },
    #[error("row {row}: empty actor_id")]
    EmptyActor { row: usize },
    #[error("row {row}: duplicate actor `{actor}`")]
    Duplicate { row: usize, actor: String },
}

/// Self-reported account metadata. A missing country is kept as `None`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorProfile {
    pub actor_id: String,
    pub account_created_at: NaiveDate,
    pub country: Option<String>,
    pub follower_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActorLanguage {
    pub actor_id: String,
    pub primary_language: Option<String>,
}

pub type ProfileTable = HashMap<String, ActorProfile>;
pub type LanguageTable = HashMap<String, ActorLanguage>;

#[derive(Deserialize)]
struct ProfileRow {
    actor_id: String,
    account_created_at: String,
    #[serde(default)]
    country: Option<String>,
    follower_count: u64,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.map(|v| v.trim().to_string()).filter(|v| !v.is_empty())
}

/// Reads `actor_id,account_created_at,country,follower_count` (header required).
pub fn read_profiles<R: Read>(reader: R) -> Result<ProfileTable, TableError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = ProfileTable::new();
    for (i, row) in rdr.deserialize::<ProfileRow>().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|source| TableError::Csv { row: row_no, source })?;
        if row.actor_id.is_empty() {
            return Err(TableError::EmptyActor { row: row_no });
        }
        let created = NaiveDate::parse_from_str(&row.account_created_at, "%Y-%m-%d")
            .map_err(|_| TableError::Date { row: row_no, value: row.account_created_at.clone() })?;
        if out.contains_key(&row.actor_id) {
            return Err(TableError::Duplicate { row: row_no, actor: row.actor_id });
        }
        out.insert(
            row.actor_id.clone(),
            ActorProfile {
                actor_id: row.actor_id,
                account_created_at: created,
                country: non_empty(row.country),
                follower_count: row.follower_count,
            },
        );
    }
    Ok(out)
}

#[derive(Deserialize)]
struct LanguageRow {
    actor_id: String,
    #[serde(default)]
    primary_language: Option<String>,
}

/// Reads `actor_id,primary_language`; at most one row per actor.
pub fn read_languages<R: Read>(reader: R) -> Result<LanguageTable, TableError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = LanguageTable::new();
    for (i, row) in rdr.deserialize::<LanguageRow>().enumerate() {
        let row_no = i + 2;
        let row = row.map_err(|source| TableError::Csv { row: row_no, source })?;
        if row.actor_id.is_empty() {
            return Err(TableError::EmptyActor { row: row_no });
        }
        if out.contains_key(&row.actor_id) {
            return Err(TableError::Duplicate { row: row_no, actor: row.actor_id });
        }
        out.insert(
            row.actor_id.clone(),
            ActorLanguage { actor_id: row.actor_id, primary_language: non_empty(row.primary_language) },
        );
    }
    Ok(out)
}

/// Writes profiles in the ingestion schema, sorted by actor id.
pub(crate) fn write_profiles<W: std::io::Write>(w: W, profiles: &[ActorProfile]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["actor_id", "account_created_at", "country", "follower_count"])?;
    for p in profiles {
        wtr.write_record([
            p.actor_id.as_str(),
            &p.account_created_at.format("%Y-%m-%d").to_string(),
            p.country.as_deref().unwrap_or(""),
            &p.follower_count.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

pub(crate) fn write_languages<W: std::io::Write>(w: W, langs: &[ActorLanguage]) -> csv::Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["actor_id", "primary_language"])?;
    for l in langs {
        wtr.write_record([l.actor_id.as_str(), l.primary_language.as_deref().unwrap_or("")])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profiles_with_missing_country() {
        let csv = "actor_id,account_created_at,country,follower_count\na,2015-03-01,US,10\nb,2016-01-01,,0\n";
        let t = read_profiles(csv.as_bytes()).unwrap();
        assert_eq!(t["a"].country.as_deref(), Some("US"));
        assert_eq!(t["b"].country, None);
        assert_eq!(t["b"].follower_count, 0);
    }

    #[test]
    fn rejects_bad_rows() {
        let bad_date = "actor_id,account_created_at,country,follower_count\na,03/01/2015,US,1\n";
        assert!(matches!(read_profiles(bad_date.as_bytes()), Err(TableError::Date { row: 2, .. })));
        let negative = "actor_id,account_created_at,country,follower_count\na,2015-03-01,US,-1\n";
        assert!(matches!(read_profiles(negative.as_bytes()), Err(TableError::Csv { .. })));
        let dup = "actor_id,primary_language\na,Rust\na,Go\n";
        assert!(matches!(read_languages(dup.as_bytes()), Err(TableError::Duplicate { row: 3, .. })));
    }

    #[test]
    fn writer_round_trip() {
        let profiles = vec![ActorProfile {
            actor_id: "x".into(),
            account_created_at: NaiveDate::from_ymd_opt(2012, 5, 6).unwrap(),
            country: None,
            follower_count: 3,
        }];
        let mut buf = Vec::new();
        write_profiles(&mut buf, &profiles).unwrap();
        let back = read_profiles(buf.as_slice()).unwrap();
        assert_eq!(back["x"], profiles[0]);
        let langs = vec![ActorLanguage { actor_id: "x".into(), primary_language: Some("Rust".into()) }];
        let mut buf = Vec::new();
        write_languages(&mut buf, &langs).unwrap();
        assert_eq!(read_languages(buf.as_slice()).unwrap()["x"], langs[0]);
    }
}
