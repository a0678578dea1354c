//! The canonical team-property registry.
//!
//! Every entry has a stable snake_case name (the CSV header), the label used
//! in regression tables, a unit, the transform applied when the value is
//! stored, and an optional extra transform applied when the value enters a
//! model (clustering, regression).

use serde::Serialize;

/// Transform applied to a stored value before modeling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelTransform {
    Identity,
    Log1p,
}

impl ModelTransform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            ModelTransform::Identity => x,
            ModelTransform::Log1p => x.ln_1p(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(usize)]
pub enum FeatureId {
    NMembers,
    NDedicatedMembers,
    AvgContributedRepos,
    PlatformTenureMax,
    PlatformTenureMedian,
    PlatformTenureSd,
    PlatformTenureCv,
    CodingTenureMax,
    CodingTenureMedian,
    CodingTenureSd,
    CodingTenureCv,
    TeamTenureMax,
    TeamTenureMedian,
    TeamTenureSd,
    TeamTenureCv,
    FollowersMax,
    FollowersMedian,
    FollowersSd,
    FollowersCv,
    NCountries,
    CountryEntropy,
    NLanguages,
    LanguageEntropy,
    HourEntropy,
    OffSegment16,
    OffSegment32,
    OffSegment64,
    WeekdayEntropy,
    NComments,
    EmojiProportion,
    RepoAgeDays,
    QuarterPushes,
    QuarterPullRequests,
    QuarterIssues,
    AvgMonthlyPushes,
    AllWatches,
    AllForks,
    QuarterWatches,
    QuarterForks,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FeatureSpec {
    #[serde(skip)]
    pub id: FeatureId,
    pub name: &'static str,
    pub label: &'static str,
    pub unit: &'static str,
    /// How the stored value was derived from the raw quantity.
    pub transform: &'static str,
    pub model_transform: ModelTransform,
}

pub const N_FEATURES: usize = 39;

macro_rules! spec {
    ($id:ident, $name:literal, $label:literal, $unit:literal, $tr:literal) => {
        spec!($id, $name, $label, $unit, $tr, Identity)
    };
    ($id:ident, $name:literal, $label:literal, $unit:literal, $tr:literal, $mt:ident) => {
        FeatureSpec {
            id: FeatureId::$id,
            name: $name,
            label: $label,
            unit: $unit,
            transform: $tr,
            model_transform: ModelTransform::$mt,
        }
    };
}

pub const REGISTRY: [FeatureSpec; N_FEATURES] = [
    spec!(NMembers, "n_members", "log(members+1)", "members", "count", Log1p),
    spec!(NDedicatedMembers, "n_dedicated_members", "log(dedicated members+1)", "members", "count", Log1p),
    spec!(AvgContributedRepos, "avg_contributed_repos", "Avg. contributed repositories", "repos", "mean"),
    spec!(PlatformTenureMax, "platform_tenure_max", "Max. of platform tenures", "days", "max"),
    spec!(PlatformTenureMedian, "platform_tenure_median", "Med. of platform tenures", "days", "median"),
    spec!(PlatformTenureSd, "platform_tenure_sd", "SD of platform tenures", "days", "sample sd"),
    spec!(PlatformTenureCv, "platform_tenure_cv", "CV of platform tenures", "ratio", "sample sd / mean"),
    spec!(CodingTenureMax, "coding_tenure_max", "Max. of coding tenures", "days", "max"),
    spec!(CodingTenureMedian, "coding_tenure_median", "Med. of coding tenures", "days", "median"),
    spec!(CodingTenureSd, "coding_tenure_sd", "SD of coding tenures", "days", "sample sd"),
    spec!(CodingTenureCv, "coding_tenure_cv", "CV of coding tenures", "ratio", "sample sd / mean"),
    spec!(TeamTenureMax, "team_tenure_max", "Max. of team tenures", "days", "max"),
    spec!(TeamTenureMedian, "team_tenure_median", "Med. of team tenures", "days", "median"),
    spec!(TeamTenureSd, "team_tenure_sd", "SD of team tenures", "days", "sample sd"),
    spec!(TeamTenureCv, "team_tenure_cv", "CV of team tenures", "ratio", "sample sd / mean"),
    spec!(FollowersMax, "followers_log1p_max", "Max. of log(followers+1)", "log followers", "max of ln(1+x)"),
    spec!(FollowersMedian, "followers_log1p_median", "Med. of log(followers+1)", "log followers", "median of ln(1+x)"),
    spec!(FollowersSd, "followers_log1p_sd", "SD of log(followers+1)", "log followers", "sample sd of ln(1+x)"),
    spec!(FollowersCv, "followers_log1p_cv", "CV of log(followers+1)", "ratio", "cv of ln(1+x)"),
    spec!(NCountries, "n_countries", "Unique countries", "countries", "count"),
    spec!(CountryEntropy, "country_entropy", "Entropy of countries", "nats", "shannon entropy"),
    spec!(NLanguages, "n_languages", "Unique program. lang.", "languages", "count"),
    spec!(LanguageEntropy, "language_entropy", "Entropy of program. lang.", "nats", "shannon entropy"),
    spec!(HourEntropy, "hour_entropy", "Entropy of working hours", "nats", "shannon entropy"),
    spec!(OffSegment16, "off_segment_len_16", "Len. off segment (TH=16)", "hours", "longest circular run"),
    spec!(OffSegment32, "off_segment_len_32", "Len. off segment (TH=32)", "hours", "longest circular run"),
    spec!(OffSegment64, "off_segment_len_64", "Len. off segment (TH=64)", "hours", "longest circular run"),
    spec!(WeekdayEntropy, "weekday_entropy", "Entropy of working days", "nats", "shannon entropy"),
    spec!(NComments, "n_comments_log1p", "log(comments+1)", "log count", "ln(1+x)"),
    spec!(EmojiProportion, "emoji_post_proportion", "Prop. emoji posts", "ratio", "fraction"),
    spec!(RepoAgeDays, "repo_age_days", "Days since created", "days", "count"),
    spec!(QuarterPushes, "q4_pushes_log1p", "log(pushes+1)", "log count", "ln(1+x)"),
    spec!(QuarterPullRequests, "q4_pull_requests_log1p", "log(pull requests+1)", "log count", "ln(1+x)"),
    spec!(QuarterIssues, "q4_issues_log1p", "log(issues+1)", "log count", "ln(1+x)"),
    spec!(AvgMonthlyPushes, "avg_monthly_pushes_log", "Avg. monthly push, log scale", "log count", "ln(1+pushes/months)"),
    spec!(AllWatches, "all_watches_log1p", "log(all watches+1)", "log count", "ln(1+x)"),
    spec!(AllForks, "all_forks_log1p", "log(all forks+1)", "log count", "ln(1+x)"),
    spec!(QuarterWatches, "q4_watches_log1p", "log(Q4 watches+1)", "log count", "ln(1+x)"),
    spec!(QuarterForks, "q4_forks_log1p", "log(Q4 forks+1)", "log count", "ln(1+x)"),
];

impl FeatureId {
    pub fn spec(self) -> &'static FeatureSpec {
        &REGISTRY[self as usize]
    }

    pub fn name(self) -> &'static str {
        self.spec().name
    }
}

pub fn feature_names() -> Vec<&'static str> {
    REGISTRY.iter().map(|s| s.name).collect()
}

pub fn lookup(name: &str) -> Option<&'static FeatureSpec> {
    REGISTRY.iter().find(|s| s.name == name)
}

pub fn lookup_label(label: &str) -> Option<&'static FeatureSpec> {
    REGISTRY.iter().find(|s| s.label == label)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn ids_follow_registry_order() {
        for (i, s) in REGISTRY.iter().enumerate() {
            assert_eq!(s.id as usize, i, "{}", s.name);
        }
    }

    #[test]
    fn names_and_labels_unique() {
        let names: HashSet<_> = REGISTRY.iter().map(|s| s.name).collect();
        let labels: HashSet<_> = REGISTRY.iter().map(|s| s.label).collect();
        assert_eq!(names.len(), N_FEATURES);
        assert_eq!(labels.len(), N_FEATURES);
    }

    #[test]
    fn regression_table_rows_have_exactly_one_entry() {
        let rows = [
            "log(members+1)",
            "log(dedicated members+1)",
            "Avg. contributed repositories",
            "Max. of platform tenures",
            "Med. of platform tenures",
            "CV of platform tenures",
            "Max. of coding tenures",
            "Med. of coding tenures",
            "CV of coding tenures",
            "Med. of team tenures",
            "Max. of log(followers+1)",
            "Med. of log(followers+1)",
            "CV of log(followers+1)",
            "Unique countries",
            "Unique program. lang.",
            "Len. off segment (TH=16)",
            "Len. off segment (TH=32)",
            "Len. off segment (TH=64)",
            "Entropy of working days",
            "Prop. emoji posts",
            "Avg. monthly push, log scale",
            "log(pushes+1)",
            "log(issues+1)",
            "log(pull requests+1)",
            "log(all watches+1)",
            "Days since created",
        ];
        assert_eq!(rows.len(), 26);
        for r in rows {
            assert_eq!(REGISTRY.iter().filter(|s| s.label == r).count(), 1, "{r}");
        }
    }
}
