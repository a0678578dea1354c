//! Scalar kernels used by the team features.

use super::CohortError;

/// Shannon entropy (natural log) of a count vector; zero entries are ignored.
pub fn shannon_entropy(counts: &[f64]) -> Result<f64, CohortError> {
    if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
        return Err(CohortError::InvalidCounts);
    }
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return Err(CohortError::InvalidCounts);
    }
    Ok(-counts
        .iter()
        .filter(|&&c| c > 0.0)
        .map(|&c| {
            let p = c / total;
            p * p.ln()
        })
        .sum::<f64>())
}

/// Sample standard deviation over the mean. `None` when n < 2 or mean <= 0.
pub fn coefficient_of_variation(values: &[f64]) -> Option<f64> {
    let m = crate::stats::mean(values)?;
    if values.len() < 2 || m <= 0.0 {
        return None;
    }
    Some(crate::stats::sample_sd(values)? / m)
}

/// Max / median / sd / cv of a member-level quantity.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DistStats {
    pub max: Option<f64>,
    pub median: Option<f64>,
    pub sd: Option<f64>,
    pub cv: Option<f64>,
}

impl DistStats {
    /// Statistics over the defined values. A single value has sd = cv = 0.
    pub fn of(values: &[f64]) -> DistStats {
        match values.len() {
            0 => DistStats::default(),
            1 => DistStats { max: Some(values[0]), median: Some(values[0]), sd: Some(0.0), cv: Some(0.0) },
            _ => DistStats {
                max: values.iter().copied().reduce(f64::max),
                median: crate::stats::median(values),
                sd: crate::stats::sample_sd(values),
                cv: coefficient_of_variation(values),
            },
        }
    }
}

/// Days-with-activity for each UTC hour of the day within a quarter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HourActivityVector {
    pub counts: [u32; 24],
}

impl HourActivityVector {
    pub fn entropy(&self) -> Option<f64> {
        let c: Vec<f64> = self.counts.iter().map(|&v| f64::from(v)).collect();
        shannon_entropy(&c).ok()
    }
}

/// Longest circular run of hours whose day count is below `threshold`.
/// Runs may wrap midnight; 24 when every hour is below the threshold.
pub fn off_segment_length(v: &HourActivityVector, threshold: u32) -> u32 {
    let below = |h: usize| v.counts[h % 24] < threshold;
    if (0..24).all(below) {
        return 24;
    }
    // start scanning right after an hour that is not below the threshold, so
    // a single linear pass of 24 covers wrapped runs
    let anchor = (0..24).find(|&h| !below(h)).expect("some hour at or above threshold");
    let mut best = 0;
    let mut run = 0;
    for step in 1..=24 {
        if below(anchor + step) {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_cases() {
        assert_eq!(shannon_entropy(&[5.0]).unwrap(), 0.0);
        assert!((shannon_entropy(&[1.0, 1.0, 1.0, 1.0]).unwrap() - 4f64.ln()).abs() < 1e-12);
        // direct summation: -(3/4 ln 3/4 + 1/4 ln 1/4)
        let oracle = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((shannon_entropy(&[3.0, 1.0]).unwrap() - oracle).abs() < 1e-12);
        assert!(shannon_entropy(&[0.0, 0.0]).is_err());
        assert!(shannon_entropy(&[]).is_err());
        assert!(shannon_entropy(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn cv_cases() {
        assert_eq!(coefficient_of_variation(&[5.0, 5.0, 5.0]), Some(0.0));
        let cv = coefficient_of_variation(&[1.0, 3.0]).unwrap();
        assert!((cv - 2f64.sqrt() / 2.0).abs() < 1e-12);
        // [2,4,6,8]: mean 5, s^2 = (9+1+1+9)/3
        let oracle = (20.0f64 / 3.0).sqrt() / 5.0;
        assert!((coefficient_of_variation(&[2.0, 4.0, 6.0, 8.0]).unwrap() - oracle).abs() < 1e-12);
        assert_eq!(coefficient_of_variation(&[4.0]), None);
        assert_eq!(coefficient_of_variation(&[-1.0, 1.0]), None);
    }

    #[test]
    fn dist_stats_singleton_and_pair() {
        let s = DistStats::of(&[100.0]);
        assert_eq!((s.max, s.median, s.sd, s.cv), (Some(100.0), Some(100.0), Some(0.0), Some(0.0)));
        let s = DistStats::of(&[100.0, 300.0]);
        assert_eq!(s.max, Some(300.0));
        assert_eq!(s.median, Some(200.0));
        assert_eq!(DistStats::of(&[]), DistStats::default());
    }

    #[test]
    fn off_segment_wraps_midnight() {
        // below threshold from 21:00 through 06:00 (ten hours)
        let mut counts = [40u32; 24];
        for h in (21..24).chain(0..7) {
            counts[h] = 3;
        }
        let v = HourActivityVector { counts };
        assert_eq!(off_segment_length(&v, 8), 10);
        assert_eq!(off_segment_length(&HourActivityVector { counts: [50; 24] }, 16), 0);
        assert_eq!(off_segment_length(&HourActivityVector { counts: [0; 24] }, 1), 24);
    }

    fn brute_force(v: &HourActivityVector, threshold: u32) -> u32 {
        let doubled: Vec<u32> = v.counts.iter().chain(v.counts.iter()).copied().collect();
        let mut best = 0;
        for start in 0..24 {
            let mut len = 0;
            while len < 24 && doubled[start + len] < threshold {
                len += 1;
            }
            best = best.max(len as u32);
        }
        best
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn off_segment_matches_brute_force(counts in proptest::array::uniform24(0u32..92), threshold in 1u32..92) {
            let v = HourActivityVector { counts };
            prop_assert_eq!(off_segment_length(&v, threshold), brute_force(&v, threshold));
        }
    }

    proptest! {
        #[test]
        fn off_segment_rotation_invariant(counts in proptest::array::uniform24(0u32..40), threshold in 1u32..40, r in 0usize..24) {
            let mut rotated = counts;
            rotated.rotate_left(r);
            prop_assert_eq!(
                off_segment_length(&HourActivityVector { counts }, threshold),
                off_segment_length(&HourActivityVector { counts: rotated }, threshold)
            );
        }

        #[test]
        fn off_segment_monotone_in_threshold(counts in proptest::array::uniform24(0u32..92)) {
            let v = HourActivityVector { counts };
            let (a, b, c) = (off_segment_length(&v, 16), off_segment_length(&v, 32), off_segment_length(&v, 64));
            prop_assert!(a <= b && b <= c);
        }
    }
}
