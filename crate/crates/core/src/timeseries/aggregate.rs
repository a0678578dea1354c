use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TimeSeriesError;
use crate::calendar::YearMonth;
use crate::event::{Corpus, EventType};

/// Platform-level monthly metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Repositories with at least one contribution event in the month.
    ActiveRepos,
    /// Platform total of opened pull requests.
    OpenedPullRequests,
    /// Mean pushes over active repositories.
    PushesPerRepo,
    /// Mean number of contributing actors over active repositories.
    ActiveMembersPerRepo,
    /// Platform total of pushes.
    TotalPushes,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::ActiveRepos,
        Metric::OpenedPullRequests,
        Metric::PushesPerRepo,
        Metric::ActiveMembersPerRepo,
        Metric::TotalPushes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::ActiveRepos => "active_repos",
            Metric::OpenedPullRequests => "opened_pull_requests",
            Metric::PushesPerRepo => "pushes_per_repo",
            Metric::ActiveMembersPerRepo => "active_members_per_repo",
            Metric::TotalPushes => "total_pushes",
        }
    }

    pub fn from_name(s: &str) -> Option<Metric> {
        Metric::ALL.into_iter().find(|m| m.name() == s)
    }
}

/// One value per consecutive calendar month.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    pub metric: Metric,
    pub start_month: YearMonth,
    pub values: Vec<f64>,
}

impl MonthlySeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month(&self, i: usize) -> YearMonth {
        self.start_month.plus(i as i64)
    }

    pub fn end_month(&self) -> Option<YearMonth> {
        (!self.values.is_empty()).then(|| self.month(self.values.len() - 1))
    }

    /// Sub-series covering `[from, to]`, clipped to the available range.
    pub fn window(&self, from: YearMonth, to: YearMonth) -> MonthlySeries {
        let lo = self.start_month.months_until(from).max(0) as usize;
        let hi = (self.start_month.months_until(to) + 1).clamp(0, self.values.len() as i64) as usize;
        let lo = lo.min(hi);
        MonthlySeries { metric: self.metric, start_month: self.month(lo), values: self.values[lo..hi].to_vec() }
    }
}

#[derive(Debug, Default, Clone)]
struct RepoMonth {
    pushes: u64,
    prs_opened: u64,
    contributors: HashSet<u32>,
}

/// Associative monthly counters; partial results from event partitions merge by union.
#[derive(Debug, Default, Clone)]
struct MonthAcc {
    repos: HashMap<u32, RepoMonth>,
}

impl MonthAcc {
    fn merge(&mut self, other: MonthAcc) {
        for (repo, rm) in other.repos {
            let slot = self.repos.entry(repo).or_default();
            slot.pushes += rm.pushes;
            slot.prs_opened += rm.prs_opened;
            slot.contributors.extend(rm.contributors);
        }
    }
}

/// Computes all metrics over `[first, last]` in one pass.
pub fn aggregate_all(corpus: &Corpus, first: YearMonth, last: YearMonth) -> Result<Vec<MonthlySeries>, TimeSeriesError> {
    if last < first {
        return Err(TimeSeriesError::EmptyRange { first, last });
    }
    let n = (first.months_until(last) + 1) as usize;
    let (lo, hi) = (first.start_ts(), last.end_ts());
    let merge = |mut a: Vec<MonthAcc>, b: Vec<MonthAcc>| {
        for (x, y) in a.iter_mut().zip(b) {
            x.merge(y);
        }
        a
    };
    let accs = corpus
        .events()
        .par_chunks(1 << 16)
        .map(|chunk| {
            let mut acc = vec![MonthAcc::default(); n];
            for e in chunk {
                if e.ts < lo || e.ts >= hi || !e.is_contribution() {
                    continue;
                }
                let idx = first.months_until(YearMonth::of_timestamp(e.ts)) as usize;
                let rm = acc[idx].repos.entry(e.repo).or_default();
                rm.contributors.insert(e.actor);
                match e.kind {
                    EventType::Push => rm.pushes += 1,
                    EventType::PullRequestOpen => rm.prs_opened += 1,
                    _ => {}
                }
            }
            acc
        })
        .reduce(|| vec![MonthAcc::default(); n], merge);

    let mut out: Vec<MonthlySeries> =
        Metric::ALL.iter().map(|&metric| MonthlySeries { metric, start_month: first, values: Vec::with_capacity(n) }).collect();
    for acc in &accs {
        let active = acc.repos.len() as f64;
        let pushes: u64 = acc.repos.values().map(|r| r.pushes).sum();
        let prs: u64 = acc.repos.values().map(|r| r.prs_opened).sum();
        let members: usize = acc.repos.values().map(|r| r.contributors.len()).sum();
        let per_repo = |total: f64| if active > 0.0 { total / active } else { 0.0 };
        for s in out.iter_mut() {
            let v = match s.metric {
                Metric::ActiveRepos => active,
                Metric::OpenedPullRequests => prs as f64,
                Metric::PushesPerRepo => per_repo(pushes as f64),
                Metric::ActiveMembersPerRepo => per_repo(members as f64),
                Metric::TotalPushes => pushes as f64,
            };
            s.values.push(v);
        }
    }
    Ok(out)
}

/// Monthly series of one metric over `[first, last]`.
pub fn aggregate_monthly(
    corpus: &Corpus,
    metric: Metric,
    first: YearMonth,
    last: YearMonth,
) -> Result<MonthlySeries, TimeSeriesError> {
    let all = aggregate_all(corpus, first, last)?;
    Ok(all.into_iter().find(|s| s.metric == metric).expect("every metric is aggregated"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{parse_event_line, Event};

    fn ev(kind: &str, repo: &str, actor: &str, ts: &str) -> Event {
        parse_event_line(&format!(r#"{{"type":"{kind}","repo":"{repo}","actor":"{actor}","ts":"{ts}"}}"#), 1).unwrap()
    }

    fn ym(s: &str) -> YearMonth {
        s.parse().unwrap()
    }

    #[test]
    fn single_repo_pushes() {
        let c = Corpus::from_events(&[
            ev("PushEvent", "r", "a", "2019-01-03T00:00:00Z"),
            ev("PushEvent", "r", "b", "2019-01-04T00:00:00Z"),
        ]);
        let all = aggregate_all(&c, ym("2019-01"), ym("2019-01")).unwrap();
        let get = |m: Metric| all.iter().find(|s| s.metric == m).unwrap().values[0];
        assert_eq!(get(Metric::ActiveRepos), 1.0);
        assert_eq!(get(Metric::PushesPerRepo), 2.0);
        assert_eq!(get(Metric::ActiveMembersPerRepo), 2.0);
    }

    #[test]
    fn watch_only_repo_is_inactive() {
        let c = Corpus::from_events(&[
            ev("WatchEvent", "w", "a", "2019-01-03T00:00:00Z"),
            ev("ForkEvent", "w", "b", "2019-01-03T00:00:00Z"),
            ev("PushEvent", "r", "a", "2019-02-03T00:00:00Z"),
        ]);
        let s = aggregate_monthly(&c, Metric::ActiveRepos, ym("2019-01"), ym("2019-02")).unwrap();
        assert_eq!(s.values, vec![0.0, 1.0]);
    }

    #[test]
    fn per_repo_mean() {
        let mut events = vec![];
        for i in 0..2 {
            events.push(ev("PushEvent", "r1", "a", &format!("2019-03-0{}T00:00:00Z", i + 1)));
        }
        for i in 0..4 {
            events.push(ev("PushEvent", "r2", "a", &format!("2019-03-0{}T00:00:00Z", i + 1)));
        }
        events.push(ev("PullRequestEvent", "r2", "b", "2019-03-09T00:00:00Z"));
        let s = aggregate_monthly(&Corpus::from_events(&events), Metric::PushesPerRepo, ym("2019-03"), ym("2019-03")).unwrap();
        assert_eq!(s.values, vec![3.0]);
    }

    #[test]
    fn empty_range_is_an_error() {
        let c = Corpus::default();
        assert!(aggregate_monthly(&c, Metric::ActiveRepos, ym("2019-03"), ym("2019-02")).is_err());
    }

    #[test]
    fn window_clips() {
        let s = MonthlySeries { metric: Metric::ActiveRepos, start_month: ym("2019-01"), values: (0..12).map(f64::from).collect() };
        let w = s.window(ym("2018-06"), ym("2019-03"));
        assert_eq!(w.values, vec![0.0, 1.0, 2.0]);
        assert_eq!(w.start_month, ym("2019-01"));
        let w = s.window(ym("2019-11"), ym("2020-05"));
        assert_eq!(w.values, vec![10.0, 11.0]);
    }
}
