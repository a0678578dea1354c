//! Stable-team selection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::CohortError;
use crate::calendar::{year_end_ts, Quarter};
use crate::event::{Corpus, EventType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionCriteria {
    pub year: i32,
    #[serde(default = "default_min_members")]
    pub min_active_members_per_quarter: u32,
    #[serde(default = "default_true")]
    pub require_push_by_year_end: bool,
}

fn default_min_members() -> u32 {
    3
}

fn default_true() -> bool {
    true
}

impl SelectionCriteria {
    pub fn new(year: i32) -> Self {
        SelectionCriteria { year, min_active_members_per_quarter: 3, require_push_by_year_end: true }
    }

    pub fn validate(&self) -> Result<(), CohortError> {
        if self.min_active_members_per_quarter < 1 {
            return Err(CohortError::InvalidCriteria("min_active_members_per_quarter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Distinct actors with at least one contribution event in each quarter of `year`.
pub fn quarterly_active_members(corpus: &Corpus, repo: u32, year: i32) -> [usize; 4] {
    let quarters = Quarter::of_year(year);
    let mut out = [0usize; 4];
    let events = corpus.repo_events(repo);
    for (qi, q) in quarters.iter().enumerate() {
        let lo = events.partition_point(|e| e.ts < q.start_ts());
        let hi = events.partition_point(|e| e.ts < q.end_ts());
        let mut actors: Vec<u32> = events[lo..hi].iter().filter(|e| e.is_contribution()).map(|e| e.actor).collect();
        actors.sort_unstable();
        actors.dedup();
        out[qi] = actors.len();
    }
    out
}

/// Repos (corpus indices, ascending) active in every quarter of the year with
/// enough members and, optionally, with a push on record by year end.
pub fn select_teams(corpus: &Corpus, criteria: &SelectionCriteria) -> Result<Vec<u32>, CohortError> {
    criteria.validate()?;
    let min = criteria.min_active_members_per_quarter as usize;
    let year_end = year_end_ts(criteria.year);
    let selected = (0..corpus.n_repos() as u32)
        .into_par_iter()
        .filter(|&repo| {
            if criteria.require_push_by_year_end
                && !corpus.repo_events(repo).iter().any(|e| e.kind == EventType::Push && e.ts < year_end)
            {
                return false;
            }
            quarterly_active_members(corpus, repo, criteria.year).iter().all(|&n| n >= min)
        })
        .collect();
    Ok(selected)
}
