//! Per-quarter team properties.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernels::{off_segment_length, shannon_entropy, DistStats, HourActivityVector};
use super::registry::{FeatureId, REGISTRY, N_FEATURES};
use super::CohortError;
use crate::calendar::{day_number, day_start_ts, hour_of_day, utc, weekday, Quarter, YearMonth};
use crate::event::{CommentKind, CompactEvent, Corpus, EventType, LanguageTable, ProfileTable};

/// Corpus-wide actor index for one quarter: the distinct repos each actor
/// contributed to.
#[derive(Debug, Clone)]
pub struct ActorIndex {
    pub quarter: Quarter,
    repos: Vec<Vec<u32>>,
}

impl ActorIndex {
    pub fn build(corpus: &Corpus, quarter: Quarter) -> ActorIndex {
        let (lo, hi) = (quarter.start_ts(), quarter.end_ts());
        let mut pairs: Vec<(u32, u32)> = corpus
            .events()
            .par_chunks(1 << 14)
            .fold(Vec::new, |mut acc, chunk| {
                acc.extend(
                    chunk.iter().filter(|e| e.ts >= lo && e.ts < hi && e.is_contribution()).map(|e| (e.actor, e.repo)),
                );
                acc
            })
            .reduce(Vec::new, |mut a, mut b| {
                a.append(&mut b);
                a
            });
        pairs.par_sort_unstable();
        pairs.dedup();
        let mut repos = vec![Vec::new(); corpus.n_actors()];
        for (actor, repo) in pairs {
            repos[actor as usize].push(repo);
        }
        ActorIndex { quarter, repos }
    }

    /// Sorted distinct repos the actor contributed to in the quarter.
    pub fn repos_of(&self, actor: u32) -> &[u32] {
        &self.repos[actor as usize]
    }
}

/// One row of the team-property registry plus its missingness mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub repo_id: String,
    /// Stored values in registry order; NaN where masked.
    pub values: Vec<f64>,
    pub missing: Vec<bool>,
}

impl FeatureVector {
    pub fn empty(repo_id: impl Into<String>) -> FeatureVector {
        FeatureVector { repo_id: repo_id.into(), values: vec![f64::NAN; N_FEATURES], missing: vec![true; N_FEATURES] }
    }

    pub fn set(&mut self, id: FeatureId, value: Option<f64>) {
        let i = id as usize;
        match value.filter(|v| v.is_finite()) {
            Some(v) => {
                self.values[i] = v;
                self.missing[i] = false;
            }
            None => {
                self.values[i] = f64::NAN;
                self.missing[i] = true;
            }
        }
    }

    pub fn get(&self, id: FeatureId) -> Option<f64> {
        let i = id as usize;
        (!self.missing[i]).then_some(self.values[i])
    }

    pub fn get_named(&self, name: &str) -> Option<f64> {
        let i = REGISTRY.iter().position(|s| s.name == name)?;
        (!self.missing[i]).then_some(self.values[i])
    }

    pub fn is_complete(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    /// Value after the registry's model transform.
    pub fn model_value(&self, id: FeatureId) -> Option<f64> {
        self.get(id).map(|v| id.spec().model_transform.apply(v))
    }

    /// Model-space values in registry order (NaN where masked).
    pub fn model_values(&self) -> Vec<f64> {
        REGISTRY.iter().map(|s| self.model_value(s.id).unwrap_or(f64::NAN)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TenureKind {
    /// Days since account creation.
    Platform,
    /// Days since the actor's first push anywhere in the corpus.
    Coding,
    /// Days since the actor's first contribution to this repo.
    Team,
}

fn days_between(ts: i64, as_of: NaiveDate) -> f64 {
    (as_of - utc(ts).date_naive()).num_days() as f64
}

/// Tenure statistics over members with a defined value as of `as_of`
/// (inclusive). Events after `as_of` are ignored.
pub fn tenure_stats(
    corpus: &Corpus,
    repo: u32,
    members: &[u32],
    profiles: &ProfileTable,
    kind: TenureKind,
    as_of: NaiveDate,
) -> DistStats {
    let cutoff = day_start_ts(as_of) + 86_400;
    let values: Vec<f64> = match kind {
        TenureKind::Platform => members
            .iter()
            .filter_map(|&a| profiles.get(corpus.actor_name(a)))
            .map(|p| (as_of - p.account_created_at).num_days() as f64)
            .collect(),
        TenureKind::Coding => members
            .iter()
            .filter_map(|&a| corpus.first_push(a).filter(|&t| t < cutoff))
            .map(|t| days_between(t, as_of))
            .collect(),
        TenureKind::Team => {
            let mut first: HashMap<u32, i64> = HashMap::new();
            for e in corpus.repo_events(repo).iter().take_while(|e| e.ts < cutoff) {
                if e.is_contribution() {
                    first.entry(e.actor).or_insert(e.ts);
                }
            }
            members.iter().filter_map(|a| first.get(a)).map(|&t| days_between(t, as_of)).collect()
        }
    };
    DistStats::of(&values)
}

fn quarter_slice(events: &[CompactEvent], quarter: Quarter) -> &[CompactEvent] {
    let lo = events.partition_point(|e| e.ts < quarter.start_ts());
    let hi = events.partition_point(|e| e.ts < quarter.end_ts());
    &events[lo..hi]
}

/// Days in the quarter with at least one contribution in each UTC hour.
pub fn hour_vector(corpus: &Corpus, repo: u32, quarter: Quarter) -> HourActivityVector {
    let mut cells: Vec<(i64, usize)> = quarter_slice(corpus.repo_events(repo), quarter)
        .iter()
        .filter(|e| e.is_contribution())
        .map(|e| (day_number(e.ts), hour_of_day(e.ts)))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let mut v = HourActivityVector::default();
    for (_, h) in cells {
        v.counts[h] += 1;
    }
    v
}

/// Entropy of active days per weekday; `None` without contributions.
pub fn weekday_entropy(corpus: &Corpus, repo: u32, quarter: Quarter) -> Option<f64> {
    let mut days: Vec<i64> = quarter_slice(corpus.repo_events(repo), quarter)
        .iter()
        .filter(|e| e.is_contribution())
        .map(|e| day_number(e.ts))
        .collect();
    days.dedup();
    let mut counts = [0f64; 7];
    for d in days {
        counts[weekday(d * 86_400)] += 1.0;
    }
    shannon_entropy(&counts).ok()
}

fn category_features(labels: impl Iterator<Item = String>) -> (f64, Option<f64>) {
    let mut counts: BTreeMap<String, f64> = BTreeMap::new();
    for l in labels {
        *counts.entry(l).or_default() += 1.0;
    }
    let c: Vec<f64> = counts.values().copied().collect();
    (c.len() as f64, shannon_entropy(&c).ok())
}

/// Computes every registry entry for one repo and quarter.
pub fn extract_features(
    corpus: &Corpus,
    repo_id: &str,
    quarter: Quarter,
    index: &ActorIndex,
    profiles: &ProfileTable,
    languages: &LanguageTable,
) -> Result<FeatureVector, CohortError> {
    let repo = corpus.repo_index(repo_id).ok_or_else(|| CohortError::UnknownRepo(repo_id.to_string()))?;
    extract_features_idx(corpus, repo, quarter, index, profiles, languages)
}

pub fn extract_features_idx(
    corpus: &Corpus,
    repo: u32,
    quarter: Quarter,
    index: &ActorIndex,
    profiles: &ProfileTable,
    languages: &LanguageTable,
) -> Result<FeatureVector, CohortError> {
    use FeatureId::*;
    if index.quarter != quarter {
        return Err(CohortError::IndexMismatch { index: index.quarter.to_string(), requested: quarter.to_string() });
    }
    let all = corpus.repo_events(repo);
    let in_q = quarter_slice(all, quarter);
    let as_of = quarter.last_day();
    let mut fv = FeatureVector::empty(corpus.repo_name(repo));

    let mut members: Vec<u32> = in_q.iter().filter(|e| e.is_contribution()).map(|e| e.actor).collect();
    members.sort_unstable();
    members.dedup();
    let n = members.len();
    fv.set(NMembers, Some(n as f64));
    let dedicated = members.iter().filter(|&&a| index.repos_of(a) == [repo]).count();
    fv.set(NDedicatedMembers, Some(dedicated as f64));
    let avg_repos = (n > 0).then(|| members.iter().map(|&a| index.repos_of(a).len() as f64).sum::<f64>() / n as f64);
    fv.set(AvgContributedRepos, avg_repos);

    let tenure_ids = [
        (TenureKind::Platform, [PlatformTenureMax, PlatformTenureMedian, PlatformTenureSd, PlatformTenureCv]),
        (TenureKind::Coding, [CodingTenureMax, CodingTenureMedian, CodingTenureSd, CodingTenureCv]),
        (TenureKind::Team, [TeamTenureMax, TeamTenureMedian, TeamTenureSd, TeamTenureCv]),
    ];
    for (kind, ids) in tenure_ids {
        set_dist(&mut fv, ids, tenure_stats(corpus, repo, &members, profiles, kind, as_of));
    }
    let followers: Vec<f64> = members
        .iter()
        .filter_map(|&a| profiles.get(corpus.actor_name(a)))
        .map(|p| (p.follower_count as f64).ln_1p())
        .collect();
    set_dist(&mut fv, [FollowersMax, FollowersMedian, FollowersSd, FollowersCv], DistStats::of(&followers));

    let (nc, hc) = category_features(
        members.iter().filter_map(|&a| profiles.get(corpus.actor_name(a)).and_then(|p| p.country.clone())),
    );
    fv.set(NCountries, Some(nc));
    fv.set(CountryEntropy, hc);
    let (nl, hl) = category_features(
        members.iter().filter_map(|&a| languages.get(corpus.actor_name(a)).and_then(|l| l.primary_language.clone())),
    );
    fv.set(NLanguages, Some(nl));
    fv.set(LanguageEntropy, hl);

    let hours = hour_vector(corpus, repo, quarter);
    fv.set(HourEntropy, hours.entropy());
    let active = n > 0;
    for (id, th) in [(OffSegment16, 16), (OffSegment32, 32), (OffSegment64, 64)] {
        fv.set(id, active.then(|| f64::from(off_segment_length(&hours, th))));
    }
    fv.set(WeekdayEntropy, weekday_entropy(corpus, repo, quarter));

    let comments: Vec<CommentKind> = in_q.iter().filter(|e| e.kind.is_comment()).map(|e| e.comment).collect();
    fv.set(NComments, Some((comments.len() as f64).ln_1p()));
    let with_body = comments.iter().filter(|c| matches!(c, CommentKind::Plain | CommentKind::Emoji)).count();
    let emoji = comments.iter().filter(|c| **c == CommentKind::Emoji).count();
    fv.set(EmojiProportion, (with_body > 0).then(|| emoji as f64 / with_body as f64));

    let upto_end = &all[..all.partition_point(|e| e.ts < quarter.end_ts())];
    let created = upto_end.first().map(|e| e.ts);
    fv.set(RepoAgeDays, created.map(|t| days_between(t, as_of)));

    let count = |evs: &[CompactEvent], k: EventType| evs.iter().filter(|e| e.kind == k).count() as f64;
    fv.set(QuarterPushes, Some(count(in_q, EventType::Push).ln_1p()));
    fv.set(QuarterPullRequests, Some(count(in_q, EventType::PullRequestOpen).ln_1p()));
    fv.set(QuarterIssues, Some(count(in_q, EventType::Issue).ln_1p()));
    fv.set(QuarterWatches, Some(count(in_q, EventType::Watch).ln_1p()));
    fv.set(QuarterForks, Some(count(in_q, EventType::Fork).ln_1p()));
    fv.set(AllWatches, Some(count(upto_end, EventType::Watch).ln_1p()));
    fv.set(AllForks, Some(count(upto_end, EventType::Fork).ln_1p()));

    fv.set(
        AvgMonthlyPushes,
        created.map(|t| {
            let start = YearMonth::of_timestamp(t).max(YearMonth { year: quarter.year, month: 1 });
            let months = start.months_until(quarter.last_month()) + 1;
            let from = start.start_ts();
            let pushes = upto_end.iter().filter(|e| e.ts >= from && e.kind == EventType::Push).count();
            (pushes as f64 / months as f64).ln_1p()
        }),
    );
    Ok(fv)
}

fn set_dist(fv: &mut FeatureVector, ids: [FeatureId; 4], d: DistStats) {
    fv.set(ids[0], d.max);
    fv.set(ids[1], d.median);
    fv.set(ids[2], d.sd);
    fv.set(ids[3], d.cv);
}

/// Features for many repos (parallel, output in input order).
pub fn extract_all(
    corpus: &Corpus,
    repos: &[u32],
    quarter: Quarter,
    profiles: &ProfileTable,
    languages: &LanguageTable,
) -> Vec<FeatureVector> {
    let index = ActorIndex::build(corpus, quarter);
    repos
        .par_iter()
        .map(|&r| extract_features_idx(corpus, r, quarter, &index, profiles, languages).expect("index built for quarter"))
        .collect()
}
