use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{parse_event_line, Event, EventType, ParseError};

const MAX_KEPT_ERRORS: usize = 20;

/// Side report of a scan. `accepted + skipped() == records`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    /// Non-blank input lines.
    pub records: usize,
    pub accepted: usize,
    pub malformed: usize,
    /// Valid records rejected by the predicate.
    pub filtered: usize,
    /// Valid records whose type token was not recognised (they are still emitted, as excluded).
    pub unknown_types: usize,
    /// The first few parse errors, for diagnostics.
    pub errors: Vec<ParseError>,
}

impl ScanReport {
    pub fn skipped(&self) -> usize {
        self.malformed + self.filtered
    }

    /// Merges a report from a later shard.
    pub fn merge(&mut self, other: ScanReport) {
        self.records += other.records;
        self.accepted += other.accepted;
        self.malformed += other.malformed;
        self.filtered += other.filtered;
        self.unknown_types += other.unknown_types;
        for e in other.errors {
            if self.errors.len() < MAX_KEPT_ERRORS {
                self.errors.push(e);
            }
        }
    }
}

/// Streaming parser over a line source. Yields only valid events matching the
/// predicate; I/O failures are returned as errors and end the stream.
pub struct EventScanner<R, P> {
    lines: io::Lines<R>,
    predicate: P,
    line_no: usize,
    report: ScanReport,
    failed: bool,
}

pub fn scan_events<R: BufRead, P: FnMut(&Event) -> bool>(source: R, predicate: P) -> EventScanner<R, P> {
    EventScanner { lines: source.lines(), predicate, line_no: 0, report: ScanReport::default(), failed: false }
}

impl<R, P> EventScanner<R, P> {
    pub fn report(&self) -> &ScanReport {
        &self.report
    }

    pub fn into_report(self) -> ScanReport {
        self.report
    }
}

impl<R: BufRead, P: FnMut(&Event) -> bool> Iterator for EventScanner<R, P> {
    type Item = io::Result<Event>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            self.report.records += 1;
            match parse_event_line(&line, self.line_no) {
                Ok(event) => {
                    if !(self.predicate)(&event) {
                        self.report.filtered += 1;
                        continue;
                    }
                    if event.event_type == EventType::Unknown {
                        self.report.unknown_types += 1;
                    }
                    self.report.accepted += 1;
                    return Some(Ok(event));
                }
                Err(e) => {
                    self.report.malformed += 1;
                    if self.report.errors.len() < MAX_KEPT_ERRORS {
                        self.report.errors.push(e);
                    }
                }
            }
        }
    }
}

fn scan_file<P: Fn(&Event) -> bool>(path: &Path, predicate: &P) -> io::Result<(Vec<Event>, ScanReport)> {
    let file = File::open(path).map_err(|e| io::Error::new(e.kind(), format!("{}: {e}", path.display())))?;
    let mut scanner = scan_events(BufReader::new(file), |e: &Event| predicate(e));
    let events = scanner.by_ref().collect::<io::Result<Vec<_>>>()?;
    Ok((events, scanner.into_report()))
}

/// Scans several shard files in parallel. Events and counters are merged in
/// the order the paths are given, so the result does not depend on scheduling.
pub fn scan_files<P>(paths: &[PathBuf], predicate: P) -> io::Result<(Vec<Event>, ScanReport)>
where
    P: Fn(&Event) -> bool + Sync,
{
    let shards: Vec<io::Result<(Vec<Event>, ScanReport)>> = paths.par_iter().map(|p| scan_file(p, &predicate)).collect();
    let mut events = Vec::new();
    let mut report = ScanReport::default();
    for shard in shards {
        let (ev, rep) = shard?;
        events.extend(ev);
        report.merge(rep);
    }
    Ok((events, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    const VALID: &str = r#"{"type":"PushEvent","repo":"R1","actor":"a","ts":"2019-01-02T10:00:00Z"}"#;

    #[test]
    fn counts_malformed_records() {
        let src = format!(
            "{VALID}\n{}\n{{broken\n{}\n",
            VALID.replace("R1", "R2"),
            VALID.replace("PushEvent", "IssuesEvent")
        );
        let mut scanner = scan_events(src.as_bytes(), |_: &Event| true);
        let events: Vec<_> = scanner.by_ref().map(Result::unwrap).collect();
        assert_eq!(events.len(), 3);
        let report = scanner.into_report();
        assert_eq!(report.skipped(), 1);
        assert_eq!(report.records, 4);
        assert_eq!(report.errors[0].line, 3);
    }

    #[test]
    fn predicate_filters_repos() {
        let src = format!("{VALID}\n{}\n{VALID}\n", VALID.replace("R1", "R2"));
        let mut scanner = scan_events(src.as_bytes(), |e: &Event| e.repo_id == "R1");
        let events: Vec<_> = scanner.by_ref().map(Result::unwrap).collect();
        assert_eq!(events.len(), 2);
        assert!(events.iter().all(|e| e.repo_id == "R1"));
        let report = scanner.into_report();
        assert_eq!(report.accepted + report.skipped(), report.records);
    }

    #[test]
    fn empty_source() {
        let mut scanner = scan_events("".as_bytes(), |_: &Event| true);
        assert!(scanner.next().is_none());
        assert_eq!(scanner.report().skipped(), 0);
        assert_eq!(scanner.report().records, 0);
    }

    #[test]
    fn unknown_types_are_counted_and_kept() {
        let src = VALID.replace("PushEvent", "FancyNewEvent");
        let mut scanner = scan_events(src.as_bytes(), |_: &Event| true);
        assert_eq!(scanner.by_ref().count(), 1);
        assert_eq!(scanner.report().unknown_types, 1);
    }

    #[test]
    fn shards_merge_in_path_order() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.jsonl");
        let b = dir.path().join("b.jsonl");
        std::fs::write(&a, format!("{VALID}\nbad\n")).unwrap();
        std::fs::write(&b, VALID.replace("R1", "R9")).unwrap();
        let (events, report) = scan_files(&[a, b], |_| true).unwrap();
        assert_eq!(events.iter().map(|e| e.repo_id.as_str()).collect::<Vec<_>>(), ["R1", "R9"]);
        assert_eq!(report.records, 3);
        assert_eq!(report.malformed, 1);
        assert!(scan_files(&[dir.path().join("missing")], |_| true).is_err());
    }
}
