//! Seeded synthetic corpora with an injected shock and known ground truth.
//!
//! Teams have a latent activity level, a fixed roster with per-member
//! activity probabilities, working-hour and weekday habits, comment and emoji
//! propensities, and outside watchers. Months up to the end of the target
//! year are untreated. In the outcome year every repo also gets a treated
//! version of each month:
//!
//! * pushes: `round((P + 1) * exp(ate + sum_f beta_f * z_f) - 1)`
//! * active members (from `start + lag`): `round((U + 1) * exp(ate) - 1)`,
//!   keeping the first members of the roster.
//!
//! `z_f` is the standardized model value of planted feature `f` over the
//! target cohort, computed from the pre-shock events. The truth file records
//! both versions of every team-month and their difference.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDate, Utc};
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::calendar::{Quarter, YearMonth};
use crate::cohort::{self, lookup, FeatureTable, SelectionCriteria};
use crate::counterfactual::Outcome;
use crate::event::profile::{write_languages, write_profiles};
use crate::pipeline::PipelineConfig;
use crate::event::{ActorLanguage, ActorProfile, Corpus, Event, EventType, LanguageTable, ProfileTable};
use crate::seed::{self, derive_labeled, derive_seed, Rng};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShockSpec {
    /// First shocked month of the outcome year (1-based).
    pub start_month: u32,
    /// Effect on ln(1 + pushes).
    pub productivity_ate: f64,
    /// Effect on ln(1 + active members).
    pub size_ate: f64,
    /// Months after `start_month` before the size effect begins.
    pub size_onset_lag: u32,
}

impl Default for ShockSpec {
    fn default() -> Self {
        ShockSpec { start_month: 1, productivity_ate: -0.3, size_ate: -0.2, size_onset_lag: 3 }
    }
}

impl ShockSpec {
    pub fn none() -> Self {
        ShockSpec { productivity_ate: 0.0, size_ate: 0.0, ..ShockSpec::default() }
    }

    /// Nominal effect in outcome-year month `month`.
    pub fn nominal(&self, outcome: Outcome, month: u32) -> f64 {
        match outcome {
            Outcome::Productivity if month >= self.start_month => self.productivity_ate,
            Outcome::TeamSize if month >= self.start_month + self.size_onset_lag => self.size_ate,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    /// Teams with a stable roster.
    pub n_repos: usize,
    /// Small one- or two-person repos that make up the rest of the platform.
    pub n_background: usize,
    pub members_min: usize,
    pub members_max: usize,
    /// Chance that a roster slot is filled from a pool of people shared across teams.
    pub shared_member_prob: f64,
    pub reference_year: i32,
    pub target_year: i32,
    /// Years of history generated before the reference year.
    pub history_years: i32,
    /// Teams present at the window start were created up to this many years
    /// earlier; creation, each member's first push and the watches and forks
    /// of that period appear as single dated events.
    pub prior_years: f64,
    /// Months of the outcome year that are generated.
    pub outcome_months: u32,
    /// Mean of the latent ln(monthly pushes).
    pub base_log_pushes: f64,
    /// Cross-sectional standard deviation of the latent level.
    pub level_sd: f64,
    /// Amplitude of the annual cycle in ln(pushes).
    pub seasonal_amplitude: f64,
    /// Relative monthly growth in the creation rate of background repos.
    pub trend_slope: f64,
    /// Month-to-month standard deviation of ln(push rate).
    pub noise_scale: f64,
    /// Fraction of teams created during the generated window instead of before it.
    pub late_start_fraction: f64,
    pub shock: ShockSpec,
    /// Planted effect of each registry feature (standardized) on the productivity ITE.
    pub planted: BTreeMap<String, f64>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_repos: 400,
            n_background: 300,
            members_min: 4,
            members_max: 10,
            shared_member_prob: 0.15,
            reference_year: 2018,
            target_year: 2019,
            history_years: 1,
            prior_years: 5.0,
            outcome_months: 6,
            base_log_pushes: 20f64.ln(),
            level_sd: 0.5,
            seasonal_amplitude: 0.1,
            trend_slope: 0.02,
            noise_scale: 0.15,
            late_start_fraction: 0.1,
            shock: ShockSpec::default(),
            planted: BTreeMap::new(),
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::Invalid(m));
        let scales = [
            ("base_log_pushes", self.base_log_pushes),
            ("level_sd", self.level_sd),
            ("seasonal_amplitude", self.seasonal_amplitude),
            ("trend_slope", self.trend_slope),
            ("noise_scale", self.noise_scale),
            ("productivity_ate", self.shock.productivity_ate),
            ("size_ate", self.shock.size_ate),
        ];
        for (name, v) in scales {
            if !v.is_finite() {
                return bad(format!("{name} must be finite"));
            }
        }
        if self.level_sd < 0.0 || self.noise_scale < 0.0 {
            return bad("scales must be non-negative".into());
        }
        if self.members_min == 0 || self.members_min > self.members_max {
            return bad(format!("members range {}..={}", self.members_min, self.members_max));
        }
        for (name, p) in [("shared_member_prob", self.shared_member_prob), ("late_start_fraction", self.late_start_fraction)] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.target_year <= self.reference_year {
            return bad("target_year must be after reference_year".into());
        }
        if self.history_years < 0 {
            return bad("history_years must be >= 0".into());
        }
        if !(self.prior_years >= 0.0 && self.prior_years.is_finite()) {
            return bad("prior_years must be finite and >= 0".into());
        }
        if !(1..=12).contains(&self.outcome_months) || !(1..=12).contains(&self.shock.start_month) {
            return bad("outcome_months and shock.start_month must lie in 1..=12".into());
        }
        for (name, beta) in &self.planted {
            if lookup(name).is_none() {
                return bad(format!("planted feature {name:?} is not in the registry"));
            }
            if !beta.is_finite() {
                return bad(format!("planted coefficient for {name:?} must be finite"));
            }
        }
        Ok(())
    }

    pub fn start_month(&self) -> YearMonth {
        YearMonth { year: self.reference_year - self.history_years, month: 1 }
    }

    /// Last untreated month.
    pub fn boundary(&self) -> YearMonth {
        YearMonth { year: self.target_year, month: 12 }
    }

    pub fn outcome_month(&self, i: u32) -> YearMonth {
        YearMonth { year: self.target_year + 1, month: i }
    }
}

/// One team-month of the outcome year in both worlds (log1p space).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthRecord {
    pub repo_id: String,
    pub month: u32,
    pub outcome: Outcome,
    pub untreated: f64,
    pub treated: f64,
    pub ite: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub spec: SyntheticSpec,
    pub records: Vec<TruthRecord>,
    /// Standardized planted-feature values per repo of the target cohort.
    pub planted_scores: BTreeMap<String, BTreeMap<String, f64>>,
}

impl GroundTruth {
    /// Mean true ITE over `repos` (all teams when `None`).
    pub fn mean_ite(&self, outcome: Outcome, month: u32, repos: Option<&[String]>) -> Option<f64> {
        let keep: Option<std::collections::HashSet<&str>> = repos.map(|r| r.iter().map(String::as_str).collect());
        let v: Vec<f64> = self
            .records
            .iter()
            .filter(|r| r.outcome == outcome && r.month == month)
            .filter(|r| keep.as_ref().map_or(true, |k| k.contains(r.repo_id.as_str())))
            .map(|r| r.ite)
            .collect();
        crate::stats::mean(&v)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("truth serializes")
    }

    pub fn from_json(s: &str) -> Result<GroundTruth, SynthError> {
        Ok(serde_json::from_str(s)?)
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub events: Vec<Event>,
    pub profiles: Vec<ActorProfile>,
    pub languages: Vec<ActorLanguage>,
    pub truth: GroundTruth,
}

pub const EVENTS_FILE: &str = "events.jsonl";
pub const PROFILES_FILE: &str = "profiles.csv";
pub const LANGUAGES_FILE: &str = "languages.csv";
pub const TRUTH_FILE: &str = "truth.json";
pub const CONFIG_FILE: &str = "run.toml";

impl SyntheticCorpus {
    pub fn corpus(&self) -> Corpus {
        Corpus::from_events(&self.events)
    }

    pub fn profile_table(&self) -> ProfileTable {
        self.profiles.iter().map(|p| (p.actor_id.clone(), p.clone())).collect()
    }

    pub fn language_table(&self) -> LanguageTable {
        self.languages.iter().map(|l| (l.actor_id.clone(), l.clone())).collect()
    }

    /// Writes the four files into `dir` and returns their paths.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, SynthError> {
        std::fs::create_dir_all(dir)?;
        let events = dir.join(EVENTS_FILE);
        let mut w = BufWriter::new(File::create(&events)?);
        for e in &self.events {
            w.write_all(e.to_json_line().as_bytes())?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        let profiles = dir.join(PROFILES_FILE);
        write_profiles(BufWriter::new(File::create(&profiles)?), &self.profiles)?;
        let languages = dir.join(LANGUAGES_FILE);
        write_languages(BufWriter::new(File::create(&languages)?), &self.languages)?;
        let truth = dir.join(TRUTH_FILE);
        std::fs::write(&truth, self.truth.to_json())?;
        let config = dir.join(CONFIG_FILE);
        std::fs::write(&config, self.run_config().to_toml())?;
        Ok(vec![events, profiles, languages, truth, config])
    }

    /// Pipeline configuration matching the generated calendar, with paths
    /// relative to the corpus directory. The platform series starts at the
    /// generated window; earlier months hold only the dated history events.
    pub fn run_config(&self) -> PipelineConfig {
        let spec = &self.truth.spec;
        PipelineConfig {
            events: vec![PathBuf::from(EVENTS_FILE)],
            profiles: PathBuf::from(PROFILES_FILE),
            languages: PathBuf::from(LANGUAGES_FILE),
            output: PathBuf::from("out"),
            seed: self.truth.seed,
            reference_year: spec.reference_year,
            target_year: spec.target_year,
            shock_boundary: spec.boundary(),
            months: (1..=spec.outcome_months).collect(),
            series_start: Some(spec.start_month()),
            ..PipelineConfig::default()
        }
    }
}

const COUNTRIES: [&str; 8] = ["US", "DE", "CN", "IN", "BR", "GB", "FR", "JP"];
const LANGUAGES: [&str; 7] = ["JavaScript", "Python", "Java", "Go", "Rust", "C++", "Ruby"];

#[derive(Debug, Clone)]
struct Member {
    actor: String,
    activity: f64,
    hour_center: f64,
}

#[derive(Debug, Clone)]
struct Team {
    repo_id: String,
    created: YearMonth,
    level: f64,
    members: Vec<Member>,
    hour_spread: f64,
    weekend: f64,
    comment_rate: f64,
    emoji: f64,
    issue_rate: f64,
    pr_rate: f64,
    watch_rate: f64,
    fork_rate: f64,
    seed: u64,
    background: bool,
}

/// Counts drawn for one untreated team-month.
#[derive(Debug, Clone)]
struct MonthDraw {
    active: Vec<usize>,
    pushes: u64,
    issues: u64,
    prs: u64,
    comments: u64,
    watches: u64,
    forks: u64,
}

fn poisson(rng: &mut Rng, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("positive mean").sample(rng) as u64
}

fn normal(rng: &mut Rng, mean: f64, sd: f64) -> f64 {
    if sd == 0.0 {
        return mean;
    }
    Normal::new(mean, sd).expect("finite normal").sample(rng)
}

fn date_in(rng: &mut Rng, lo: NaiveDate, hi: NaiveDate) -> NaiveDate {
    let span = (hi - lo).num_days();
    lo + chrono::Duration::days(rng.gen_range(0..=span))
}

struct Builder<'a> {
    spec: &'a SyntheticSpec,
    teams: Vec<Team>,
    profiles: BTreeMap<String, ActorProfile>,
    languages: BTreeMap<String, ActorLanguage>,
    n_watchers: usize,
}

impl<'a> Builder<'a> {
    fn new(spec: &'a SyntheticSpec, master: u64) -> Self {
        let mut b = Builder {
            spec,
            teams: Vec::new(),
            profiles: BTreeMap::new(),
            languages: BTreeMap::new(),
            n_watchers: (spec.n_repos + spec.n_background).max(10) * 2,
        };
        let start = spec.start_month();
        let last_start = spec.boundary().plus(-6);
        let span = start.months_until(last_start).max(0);
        let mut rng = seed::rng(derive_labeled(master, "teams"));
        let n_shared = (spec.n_repos / 2).max(1);
        let shared: Vec<String> = (0..n_shared).map(|k| format!("shared-{k:05}")).collect();
        for k in 0..n_shared {
            b.add_actor(&mut rng, &shared[k], None, None);
        }
        for j in 0..spec.n_repos {
            let repo_id = format!("team-{j:05}");
            let created = if rng.gen_bool(spec.late_start_fraction) {
                start.plus(rng.gen_range(1..=span.max(1)))
            } else {
                start
            };
            let home = COUNTRIES[rng.gen_range(0..COUNTRIES.len())];
            let lang = LANGUAGES[rng.gen_range(0..LANGUAGES.len())];
            let base_hour = rng.gen_range(0.0..24.0);
            let n_members = rng.gen_range(spec.members_min..=spec.members_max);
            let mut members = Vec::with_capacity(n_members);
            for k in 0..n_members {
                let actor = if rng.gen_bool(spec.shared_member_prob) {
                    shared[rng.gen_range(0..n_shared)].clone()
                } else {
                    let id = format!("dev-{j:05}-{k:02}");
                    b.add_actor(&mut rng, &id, Some(home), Some(lang));
                    id
                };
                if members.iter().any(|m: &Member| m.actor == actor) {
                    continue;
                }
                members.push(Member {
                    actor,
                    activity: rng.gen_range(0.75..0.97),
                    hour_center: (base_hour + normal(&mut rng, 0.0, 3.0)).rem_euclid(24.0),
                });
            }
            let watch_rate = normal(&mut rng, 0.5, 1.0).exp();
            b.teams.push(Team {
                repo_id,
                created,
                level: normal(&mut rng, spec.base_log_pushes, spec.level_sd),
                members,
                hour_spread: rng.gen_range(1.5..5.0),
                weekend: rng.gen_range(0.02..0.3),
                comment_rate: rng.gen_range(1.0..8.0),
                emoji: Beta::new(1.0, 4.0).expect("beta").sample(&mut rng),
                issue_rate: rng.gen_range(0.5..3.0),
                pr_rate: rng.gen_range(0.5..3.0),
                watch_rate,
                fork_rate: watch_rate / 5.0,
                seed: derive_seed(derive_labeled(master, "team-months"), j as u64),
                background: false,
            });
        }
        // background repos: creation density grows linearly over the window
        let total = start.months_until(spec.boundary()).max(1);
        let weights: Vec<f64> = (0..=total).map(|t| (1.0 + spec.trend_slope * t as f64).max(0.0)).collect();
        let wsum: f64 = weights.iter().sum();
        for j in 0..spec.n_background {
            let mut u = rng.gen_range(0.0..wsum);
            let mut t = 0usize;
            while t < weights.len() - 1 && u >= weights[t] {
                u -= weights[t];
                t += 1;
            }
            let n_members = rng.gen_range(1..=2);
            let members = (0..n_members)
                .map(|k| {
                    let id = format!("solo-{j:05}-{k}");
                    b.add_actor(&mut rng, &id, None, None);
                    Member { actor: id, activity: rng.gen_range(0.4..0.8), hour_center: rng.gen_range(0.0..24.0) }
                })
                .collect();
            b.teams.push(Team {
                repo_id: format!("misc-{j:05}"),
                created: start.plus(t as i64),
                level: normal(&mut rng, 1.0, 0.5),
                members,
                hour_spread: 4.0,
                weekend: 0.3,
                comment_rate: 0.3,
                emoji: 0.1,
                issue_rate: 0.2,
                pr_rate: 0.1,
                watch_rate: 0.2,
                fork_rate: 0.05,
                seed: derive_seed(derive_labeled(master, "background-months"), j as u64),
                background: true,
            });
        }
        b
    }

    fn add_actor(&mut self, rng: &mut Rng, id: &str, home: Option<&str>, lang: Option<&str>) {
        let lo = NaiveDate::from_ymd_opt(2008, 1, 1).expect("date");
        let hi = NaiveDate::from_ymd_opt(self.spec.reference_year - 1, 12, 31).expect("date");
        let country = if rng.gen_bool(0.2) {
            None
        } else {
            Some(match home {
                Some(h) if rng.gen_bool(0.6) => h.to_string(),
                _ => COUNTRIES[rng.gen_range(0..COUNTRIES.len())].to_string(),
            })
        };
        let followers = normal(rng, 2.0, 1.5).exp().floor() as u64;
        self.profiles.insert(
            id.to_string(),
            ActorProfile { actor_id: id.to_string(), account_created_at: date_in(rng, lo, hi), country, follower_count: followers },
        );
        let primary_language = if rng.gen_bool(0.1) {
            None
        } else {
            Some(match lang {
                Some(l) if rng.gen_bool(0.7) => l.to_string(),
                _ => LANGUAGES[rng.gen_range(0..LANGUAGES.len())].to_string(),
            })
        };
        self.languages.insert(id.to_string(), ActorLanguage { actor_id: id.to_string(), primary_language });
    }

    fn draw(&self, team: &Team, month: YearMonth) -> (MonthDraw, Rng) {
        let mut rng = seed::stream_rng(team.seed, month.ordinal() as u64);
        let season = self.spec.seasonal_amplitude * (2.0 * std::f64::consts::PI * (month.month - 1) as f64 / 12.0).sin();
        let rate = (team.level + season + normal(&mut rng, 0.0, self.spec.noise_scale)).exp();
        let active: Vec<usize> = (0..team.members.len()).filter(|&k| rng.gen_bool(team.members[k].activity)).collect();
        let any = !active.is_empty();
        let count = |rng: &mut Rng, mean: f64| if any { poisson(rng, mean) } else { 0 };
        let pushes = count(&mut rng, rate);
        let issues = count(&mut rng, team.issue_rate);
        let prs = count(&mut rng, team.pr_rate);
        let comments = count(&mut rng, team.comment_rate);
        let watches = poisson(&mut rng, team.watch_rate);
        let forks = poisson(&mut rng, team.fork_rate);
        (MonthDraw { active, pushes, issues, prs, comments, watches, forks }, rng)
    }

    fn timestamp(&self, rng: &mut Rng, team: &Team, month: YearMonth, member: Option<&Member>) -> DateTime<Utc> {
        let days = month.days() as i64;
        let first = month.first_day();
        let day = loop {
            let d = first + chrono::Duration::days(rng.gen_range(0..days));
            let weekend = matches!(chrono::Datelike::weekday(&d), chrono::Weekday::Sat | chrono::Weekday::Sun);
            if !weekend || rng.gen_bool((team.weekend * 3.5).min(1.0)) {
                break d;
            }
        };
        self.at_day(rng, team, day, member)
    }

    fn at_day(&self, rng: &mut Rng, team: &Team, day: NaiveDate, member: Option<&Member>) -> DateTime<Utc> {
        let hour = match member {
            Some(m) => (m.hour_center + normal(rng, 0.0, team.hour_spread)).round().rem_euclid(24.0) as i64,
            None => rng.gen_range(0..24),
        };
        let secs = crate::calendar::day_start_ts(day) + hour * 3600 + rng.gen_range(0..3600);
        DateTime::from_timestamp(secs, 0).expect("valid timestamp")
    }

    /// Creation, first pushes and accumulated attention of a team that
    /// predates the generated window.
    fn emit_history(&self, out: &mut Vec<Event>, team: &Team) {
        let window = self.spec.start_month();
        if team.background || team.created > window || self.spec.prior_years <= 0.0 || team.members.is_empty() {
            return;
        }
        let mut rng = seed::stream_rng(derive_labeled(team.seed, "history"), 0);
        let last = window.first_day() - chrono::Duration::days(1);
        let first = window.first_day() - chrono::Duration::days((self.spec.prior_years * 365.25).round() as i64);
        let created = date_in(&mut rng, first, last);
        let mk = |kind: EventType, actor: &str, ts: DateTime<Utc>| Event {
            repo_id: team.repo_id.clone(),
            actor_id: actor.to_string(),
            event_type: kind,
            raw_type: None,
            timestamp: ts,
            body: None,
        };
        let founder = &team.members[0];
        out.push(mk(EventType::Create, &founder.actor, self.at_day(&mut rng, team, created, Some(founder))));
        for m in &team.members {
            let account = self.profiles.get(&m.actor).map_or(created, |p| p.account_created_at);
            let joined = date_in(&mut rng, created.max(account).min(last), last);
            out.push(mk(EventType::Push, &m.actor, self.at_day(&mut rng, team, joined, Some(m))));
        }
        let months = (last - created).num_days() as f64 / 30.44;
        for (kind, rate) in [(EventType::Watch, team.watch_rate), (EventType::Fork, team.fork_rate)] {
            for _ in 0..poisson(&mut rng, rate * months) {
                let who = format!("watcher-{:06}", rng.gen_range(0..self.n_watchers));
                let day = date_in(&mut rng, created, last);
                out.push(mk(kind, &who, self.at_day(&mut rng, team, day, None)));
            }
        }
    }

    /// Events for a month given the (possibly treated) counts.
    fn emit(&self, out: &mut Vec<Event>, team: &Team, month: YearMonth, d: &MonthDraw, mut rng: Rng) {
        let mk = |kind: EventType, actor: &str, ts: DateTime<Utc>, body: Option<String>| Event {
            repo_id: team.repo_id.clone(),
            actor_id: actor.to_string(),
            event_type: kind,
            raw_type: None,
            timestamp: ts,
            body,
        };
        if !d.active.is_empty() {
            // every active member contributes at least once
            let mut authors: Vec<usize> = d.active.clone();
            let extra = d.pushes + d.issues + d.prs + d.comments;
            let extra = extra.saturating_sub(authors.len() as u64);
            for _ in 0..extra {
                authors.push(d.active[rng.gen_range(0..d.active.len())]);
            }
            authors.shuffle(&mut rng);
            let mut kinds: Vec<EventType> = Vec::new();
            kinds.extend(std::iter::repeat(EventType::Push).take(d.pushes as usize));
            kinds.extend(std::iter::repeat(EventType::Issue).take(d.issues as usize));
            kinds.extend(std::iter::repeat(EventType::PullRequestOpen).take(d.prs as usize));
            kinds.extend(std::iter::repeat(EventType::IssueComment).take(d.comments as usize));
            // members beyond the drawn activity contribute an issue comment
            while kinds.len() < authors.len() {
                kinds.push(EventType::IssueComment);
            }
            for (kind, &who) in kinds.iter().zip(&authors) {
                let m = &team.members[who];
                let ts = self.timestamp(&mut rng, team, month, Some(m));
                let body = (*kind == EventType::IssueComment).then(|| {
                    if rng.gen_bool(team.emoji) {
                        "Looks good to me \u{1F389}".to_string()
                    } else {
                        "Looks good to me".to_string()
                    }
                });
                out.push(mk(*kind, &m.actor, ts, body));
            }
        }
        for (kind, n) in [(EventType::Watch, d.watches), (EventType::Fork, d.forks)] {
            for _ in 0..n {
                let who = format!("watcher-{:06}", rng.gen_range(0..self.n_watchers));
                let ts = self.timestamp(&mut rng, team, month, None);
                out.push(mk(kind, &who, ts, None));
            }
        }
    }
}

fn treat_count(count: u64, effect: f64) -> u64 {
    ((count as f64 + 1.0) * effect.exp() - 1.0).round().max(0.0) as u64
}

/// Standardized planted-feature values over the target cohort.
fn planted_scores(
    spec: &SyntheticSpec,
    events: &[Event],
    profiles: &ProfileTable,
    languages: &LanguageTable,
) -> BTreeMap<String, BTreeMap<String, f64>> {
    let mut out = BTreeMap::new();
    if spec.planted.is_empty() {
        return out;
    }
    let corpus = Corpus::from_events(events);
    let repos = cohort::select_teams(&corpus, &SelectionCriteria::new(spec.target_year)).expect("default criteria");
    let quarter = Quarter { year: spec.target_year, q: 4 };
    let table = FeatureTable::new(cohort::extract_all(&corpus, &repos, quarter, profiles, languages)).complete();
    let ids = table.repo_ids();
    for name in spec.planted.keys() {
        let col: Vec<f64> = table.rows.iter().map(|r| r.model_value(lookup(name).expect("validated").id).expect("complete")).collect();
        let m = crate::stats::mean(&col).unwrap_or(0.0);
        let s = crate::stats::sample_sd(&col).filter(|s| *s > 0.0);
        for (id, v) in ids.iter().zip(&col) {
            let z = s.map_or(0.0, |s| (v - m) / s);
            out.entry(id.clone()).or_insert_with(BTreeMap::new).insert(name.clone(), z);
        }
    }
    out
}

/// Generates a corpus in the ingestion schema plus its ground truth.
pub fn generate_synthetic(spec: &SyntheticSpec, seed: u64) -> Result<SyntheticCorpus, SynthError> {
    spec.validate()?;
    let b = Builder::new(spec, seed);
    let start = spec.start_month();
    let boundary = spec.boundary();

    let mut events = Vec::new();
    for team in &b.teams {
        b.emit_history(&mut events, team);
        for month in team.created.max(start).range_inclusive(boundary) {
            let (d, rng) = b.draw(team, month);
            b.emit(&mut events, team, month, &d, rng);
        }
    }
    let profiles: Vec<ActorProfile> = b.profiles.values().cloned().collect();
    let languages: Vec<ActorLanguage> = b.languages.values().cloned().collect();
    let ptable: ProfileTable = profiles.iter().map(|p| (p.actor_id.clone(), p.clone())).collect();
    let ltable: LanguageTable = languages.iter().map(|l| (l.actor_id.clone(), l.clone())).collect();
    let scores = planted_scores(spec, &events, &ptable, &ltable);

    let mut records = Vec::new();
    for team in &b.teams {
        let shift: f64 = scores
            .get(&team.repo_id)
            .map(|z| spec.planted.iter().map(|(f, beta)| beta * z.get(f).copied().unwrap_or(0.0)).sum())
            .unwrap_or(0.0);
        for i in 1..=spec.outcome_months {
            let month = spec.outcome_month(i);
            if month < team.created {
                continue;
            }
            let (untreated, rng) = b.draw(team, month);
            let mut treated = untreated.clone();
            let p_effect = spec.shock.nominal(Outcome::Productivity, i);
            if i >= spec.shock.start_month {
                treated.pushes = treat_count(untreated.pushes, p_effect + if team.background { 0.0 } else { shift });
            }
            let s_effect = spec.shock.nominal(Outcome::TeamSize, i);
            if s_effect != 0.0 {
                let u = untreated.active.len() as u64;
                let mut t = treat_count(u, s_effect).min(u);
                if t == 0 && u > 0 && treated.pushes > 0 {
                    t = 1;
                }
                treated.active.truncate(t as usize);
            }
            if treated.active.is_empty() {
                treated.pushes = 0;
            }
            if !team.background {
                let pairs = [
                    (Outcome::Productivity, untreated.pushes, treated.pushes),
                    (Outcome::TeamSize, untreated.active.len() as u64, treated.active.len() as u64),
                ];
                for (outcome, u, t) in pairs {
                    let (y0, y1) = ((u as f64).ln_1p(), (t as f64).ln_1p());
                    records.push(TruthRecord { repo_id: team.repo_id.clone(), month: i, outcome, untreated: y0, treated: y1, ite: y1 - y0 });
                }
            }
            b.emit(&mut events, team, month, &treated, rng);
        }
    }
    events.sort_by(|a, b| {
        (a.timestamp, &a.repo_id, &a.actor_id, a.event_type).cmp(&(b.timestamp, &b.repo_id, &b.actor_id, b.event_type))
    });
    Ok(SyntheticCorpus { events, profiles, languages, truth: GroundTruth { seed, spec: spec.clone(), records, planted_scores: scores } })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cohort::month_counts;

    fn small(shock: ShockSpec) -> SyntheticSpec {
        SyntheticSpec { n_repos: 40, n_background: 20, shock, ..SyntheticSpec::default() }
    }

    #[test]
    fn truth_matches_generated_events() {
        let spec = small(ShockSpec::default());
        let s = generate_synthetic(&spec, 5).unwrap();
        let corpus = s.corpus();
        for r in &s.truth.records {
            assert_eq!(r.ite, r.treated - r.untreated);
            let repo = corpus.repo_index(&r.repo_id).unwrap();
            let c = month_counts(&corpus, repo, spec.outcome_month(r.month));
            let observed = match r.outcome {
                Outcome::Productivity => c.log_pushes(),
                Outcome::TeamSize => c.log_members(),
            };
            assert_eq!(observed, r.treated, "{r:?}");
        }
        let m1 = s.truth.mean_ite(Outcome::Productivity, 1, None).unwrap();
        assert!((m1 + 0.3).abs() < 0.03, "{m1}");
        assert_eq!(s.truth.mean_ite(Outcome::TeamSize, 2, None).unwrap(), 0.0);
        assert!(s.truth.mean_ite(Outcome::TeamSize, 5, None).unwrap() < -0.1);
    }

    #[test]
    fn null_shock_has_zero_ite_and_is_deterministic() {
        let spec = small(ShockSpec::none());
        let a = generate_synthetic(&spec, 9).unwrap();
        assert!(a.truth.records.iter().all(|r| r.ite == 0.0));
        let b = generate_synthetic(&spec, 9).unwrap();
        assert_eq!(a.events, b.events);
        assert_eq!(a.truth, b.truth);
        let c = generate_synthetic(&spec, 10).unwrap();
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn files_round_trip_through_ingestion() {
        let spec = SyntheticSpec { n_repos: 8, n_background: 4, ..SyntheticSpec::default() };
        let s = generate_synthetic(&spec, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = s.write_to(dir.path()).unwrap();
        assert_eq!(paths.len(), 5);
        let (events, report) = crate::event::scan_files(&paths[..1], |_| true).unwrap();
        assert_eq!(report.skipped(), 0);
        assert_eq!(events, s.events);
        let p = crate::event::read_profiles(File::open(&paths[1]).unwrap()).unwrap();
        assert_eq!(p, s.profile_table());
        let t = GroundTruth::from_json(&std::fs::read_to_string(&paths[3]).unwrap()).unwrap();
        assert_eq!(t, s.truth);
        let cfg = crate::pipeline::PipelineConfig::load(&paths[4]).unwrap();
        assert_eq!(cfg.events, vec![dir.path().join(EVENTS_FILE)]);
        assert_eq!(cfg.series_start, Some(spec.start_month()));
        assert_eq!(cfg.shock_boundary, spec.boundary());
        cfg.validate().unwrap();
    }

    #[test]
    fn history_predates_the_window() {
        let spec = SyntheticSpec { n_repos: 30, n_background: 5, late_start_fraction: 0.0, ..SyntheticSpec::default() };
        let s = generate_synthetic(&spec, 4).unwrap();
        let window = spec.start_month().start_ts();
        let earliest = window - (spec.prior_years * 365.25 * 86_400.0) as i64 - 86_400;
        let before: Vec<&Event> = s.events.iter().filter(|e| e.timestamp.timestamp() < window).collect();
        assert!(before.iter().all(|e| e.timestamp.timestamp() >= earliest));
        let creates = before.iter().filter(|e| e.event_type == EventType::Create).count();
        assert_eq!(creates, 30);
        assert!(before.iter().all(|e| e.repo_id.starts_with("team-")));
        let none = generate_synthetic(&SyntheticSpec { prior_years: 0.0, ..spec.clone() }, 4).unwrap();
        assert!(none.events.iter().all(|e| e.timestamp.timestamp() >= window));
    }

    #[test]
    fn planted_scores_are_standardized() {
        let mut spec = small(ShockSpec::default());
        spec.planted.insert("emoji_post_proportion".into(), 0.2);
        let s = generate_synthetic(&spec, 3).unwrap();
        let z: Vec<f64> = s.truth.planted_scores.values().map(|m| m["emoji_post_proportion"]).collect();
        assert!(z.len() > 20);
        assert!(crate::stats::mean(&z).unwrap().abs() < 1e-12);
        assert!((crate::stats::sample_sd(&z).unwrap() - 1.0).abs() < 1e-12);
        let bad = SyntheticSpec { planted: [("nope".to_string(), 1.0)].into(), ..SyntheticSpec::default() };
        assert!(matches!(generate_synthetic(&bad, 0), Err(SynthError::Invalid(_))));
    }
}
