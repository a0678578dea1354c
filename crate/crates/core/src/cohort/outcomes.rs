//! Monthly team outcomes: pushes and active members.

use serde::{Deserialize, Serialize};

use crate::calendar::YearMonth;
use crate::event::{Corpus, EventType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct MonthCounts {
    pub pushes: u64,
    /// Distinct actors with at least one contribution event.
    pub active_members: u64,
}

impl MonthCounts {
    pub fn log_pushes(&self) -> f64 {
        (self.pushes as f64).ln_1p()
    }

    pub fn log_members(&self) -> f64 {
        (self.active_members as f64).ln_1p()
    }
}

pub fn month_counts(corpus: &Corpus, repo: u32, month: YearMonth) -> MonthCounts {
    let events = corpus.repo_events(repo);
    let lo = events.partition_point(|e| e.ts < month.start_ts());
    let hi = events.partition_point(|e| e.ts < month.end_ts());
    let mut actors = Vec::new();
    let mut pushes = 0;
    for e in events[lo..hi].iter().filter(|e| e.is_contribution()) {
        actors.push(e.actor);
        if e.kind == EventType::Push {
            pushes += 1;
        }
    }
    actors.sort_unstable();
    actors.dedup();
    MonthCounts { pushes, active_members: actors.len() as u64 }
}
