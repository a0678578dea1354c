//! Collaboration event logs: record schema, activity taxonomy, streaming
//! scanner, actor side tables and the interned in-memory corpus.
//!
//! Events arrive as newline-delimited JSON objects:
//!
//! ```text
//! {"type":"PushEvent","repo":"acme/web","actor":"alice","ts":"2019-11-02T10:00:00Z"}
//! {"type":"IssueCommentEvent","repo":"acme/web","actor":"bob","ts":"2019-11-02T11:00:00Z","body":"thanks :tada:"}
//! {"type":"PullRequestEvent","repo":"acme/web","actor":"bob","ts":"2019-11-03T09:12:44Z","action":"opened"}
//! ```
//!
//! `type`, `repo`, `actor` and `ts` are required; `action` and `body` are
//! optional and any other field is ignored. See `docs/schema.md` for the full
//! token table.

mod corpus;
pub mod emoji;
pub(crate) mod profile;
mod scan;

use std::fmt;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub use corpus::{CommentKind, CompactEvent, Corpus};
pub use profile::{
    read_languages, read_profiles, ActorLanguage, ActorProfile, LanguageTable, ProfileTable, TableError,
};
pub use scan::{scan_events, scan_files, EventScanner, ScanReport};

/// How an event counts towards team activity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ActivityClass {
    Contribution,
    Attention,
    Excluded,
}

/// Canonical event kinds. The archive token each one is parsed from is listed
/// in [`EventType::from_token`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[repr(u8)]
pub enum EventType {
    Push,
    PullRequestOpen,
    PullRequest,
    Issue,
    IssueComment,
    PrReviewComment,
    PrReview,
    CommitComment,
    Create,
    Delete,
    Release,
    Member,
    Public,
    Gollum,
    Watch,
    Fork,
    Star,
    Unknown,
}

impl EventType {
    pub const ALL: [EventType; 18] = [
        EventType::Push,
        EventType::PullRequestOpen,
        EventType::PullRequest,
        EventType::Issue,
        EventType::IssueComment,
        EventType::PrReviewComment,
        EventType::PrReview,
        EventType::CommitComment,
        EventType::Create,
        EventType::Delete,
        EventType::Release,
        EventType::Member,
        EventType::Public,
        EventType::Gollum,
        EventType::Watch,
        EventType::Fork,
        EventType::Star,
        EventType::Unknown,
    ];

    /// Maps an archive `type` token (plus the optional `action`) to a kind.
    /// Unrecognised tokens become [`EventType::Unknown`].
    pub fn from_token(token: &str, action: Option<&str>) -> EventType {
        match token {
            "PushEvent" => EventType::Push,
            "PullRequestEvent" => match action {
                Some("opened") | Some("reopened") => EventType::PullRequestOpen,
                _ => EventType::PullRequest,
            },
            "IssuesEvent" => EventType::Issue,
            "IssueCommentEvent" => EventType::IssueComment,
            "PullRequestReviewCommentEvent" => EventType::PrReviewComment,
            "PullRequestReviewEvent" => EventType::PrReview,
            "CommitCommentEvent" => EventType::CommitComment,
            "CreateEvent" => EventType::Create,
            "DeleteEvent" => EventType::Delete,
            "ReleaseEvent" => EventType::Release,
            "MemberEvent" => EventType::Member,
            "PublicEvent" => EventType::Public,
            "GollumEvent" => EventType::Gollum,
            "WatchEvent" => EventType::Watch,
            "ForkEvent" => EventType::Fork,
            "StarEvent" => EventType::Star,
            _ => EventType::Unknown,
        }
    }

    /// Archive token and action written back out by the serializer.
    pub fn token(self) -> (&'static str, Option<&'static str>) {
        match self {
            EventType::Push => ("PushEvent", None),
            EventType::PullRequestOpen => ("PullRequestEvent", Some("opened")),
            EventType::PullRequest => ("PullRequestEvent", None),
            EventType::Issue => ("IssuesEvent", None),
            EventType::IssueComment => ("IssueCommentEvent", None),
            EventType::PrReviewComment => ("PullRequestReviewCommentEvent", None),
            EventType::PrReview => ("PullRequestReviewEvent", None),
            EventType::CommitComment => ("CommitCommentEvent", None),
            EventType::Create => ("CreateEvent", None),
            EventType::Delete => ("DeleteEvent", None),
            EventType::Release => ("ReleaseEvent", None),
            EventType::Member => ("MemberEvent", None),
            EventType::Public => ("PublicEvent", None),
            EventType::Gollum => ("GollumEvent", None),
            EventType::Watch => ("WatchEvent", None),
            EventType::Fork => ("ForkEvent", None),
            EventType::Star => ("StarEvent", None),
            EventType::Unknown => ("UnknownEvent", None),
        }
    }

    pub fn is_comment(self) -> bool {
        matches!(self, EventType::IssueComment | EventType::PrReviewComment | EventType::CommitComment)
    }

    pub fn class(self) -> ActivityClass {
        classify_event(self)
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// Watch and fork are attention; star and unknown tokens are excluded;
/// everything else is a contribution.
pub fn classify_event(event_type: EventType) -> ActivityClass {
    match event_type {
        EventType::Watch | EventType::Fork => ActivityClass::Attention,
        EventType::Star | EventType::Unknown => ActivityClass::Excluded,
        _ => ActivityClass::Contribution,
    }
}

/// One timestamped actor action on a repository.
#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub repo_id: String,
    pub actor_id: String,
    pub event_type: EventType,
    /// Original token, kept only for [`EventType::Unknown`] so it survives a round trip.
    pub raw_type: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub body: Option<String>,
}

impl Event {
    pub fn class(&self) -> ActivityClass {
        classify_event(self.event_type)
    }

    /// Serializes the event as one line of the ingestion schema (no newline).
    pub fn to_json_line(&self) -> String {
        let (token, action) = self.event_type.token();
        let token = match (&self.raw_type, self.event_type) {
            (Some(raw), EventType::Unknown) => raw.as_str(),
            _ => token,
        };
        let record = RawRecord {
            kind: token.to_string(),
            repo: self.repo_id.clone(),
            actor: self.actor_id.clone(),
            ts: self.timestamp.to_rfc3339_opts(SecondsFormat::Secs, true),
            action: action.map(str::to_string),
            body: self.body.clone(),
        };
        serde_json::to_string(&record).expect("event serializes")
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct RawRecord {
    #[serde(rename = "type")]
    kind: String,
    repo: String,
    actor: String,
    ts: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    action: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    body: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
pub enum ParseErrorKind {
    #[error("malformed record: {0}")]
    Malformed(String),
    #[error("empty `{0}` field")]
    EmptyField(String),
    #[error("bad timestamp `{0}`")]
    Timestamp(String),
}

/// Recoverable per-line parse failure.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

/// Parses one record. `line_no` is only used for error reporting.
pub fn parse_event_line(line: &str, line_no: usize) -> Result<Event, ParseError> {
    let err = |kind| ParseError { line: line_no, kind };
    let raw: RawRecord = serde_json::from_str(line).map_err(|e| err(ParseErrorKind::Malformed(e.to_string())))?;
    if raw.repo.trim().is_empty() {
        return Err(err(ParseErrorKind::EmptyField("repo".into())));
    }
    if raw.actor.trim().is_empty() {
        return Err(err(ParseErrorKind::EmptyField("actor".into())));
    }
    let timestamp = DateTime::parse_from_rfc3339(raw.ts.trim())
        .map_err(|_| err(ParseErrorKind::Timestamp(raw.ts.clone())))?
        .with_timezone(&Utc);
    // second resolution
    let timestamp = DateTime::from_timestamp(timestamp.timestamp(), 0).ok_or_else(|| err(ParseErrorKind::Timestamp(raw.ts.clone())))?;
    let event_type = EventType::from_token(&raw.kind, raw.action.as_deref());
    let raw_type = (event_type == EventType::Unknown).then(|| raw.kind.clone());
    Ok(Event { repo_id: raw.repo, actor_id: raw.actor, event_type, raw_type, timestamp, body: raw.body })
}
