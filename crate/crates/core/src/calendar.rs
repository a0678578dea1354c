//! Calendar months and quarters, always in UTC.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, NaiveDate, TimeZone, Timelike, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("invalid calendar value `{0}`")]
pub struct CalendarError(pub String);

/// A calendar month, e.g. `2019-12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct YearMonth {
    pub year: i32,
    /// 1..=12
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Result<Self, CalendarError> {
        if (1..=12).contains(&month) {
            Ok(YearMonth { year, month })
        } else {
            Err(CalendarError(format!("{year}-{month}")))
        }
    }

    /// Months since year 0, used for arithmetic.
    pub fn ordinal(self) -> i64 {
        i64::from(self.year) * 12 + i64::from(self.month) - 1
    }

    pub fn from_ordinal(ord: i64) -> Self {
        YearMonth { year: ord.div_euclid(12) as i32, month: ord.rem_euclid(12) as u32 + 1 }
    }

    pub fn plus(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Number of months from `self` to `other` (negative if `other` is earlier).
    pub fn months_until(self, other: YearMonth) -> i64 {
        other.ordinal() - self.ordinal()
    }

    pub fn of_timestamp(ts: i64) -> Self {
        let dt = utc(ts);
        YearMonth { year: dt.year(), month: dt.month() }
    }

    pub fn first_day(self) -> NaiveDate {
        NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month")
    }

    pub fn start_ts(self) -> i64 {
        day_start_ts(self.first_day())
    }

    /// Exclusive end.
    pub fn end_ts(self) -> i64 {
        self.plus(1).start_ts()
    }

    pub fn days(self) -> u32 {
        (self.plus(1).first_day() - self.first_day()).num_days() as u32
    }

    /// Inclusive range iterator.
    pub fn range_inclusive(self, last: YearMonth) -> impl Iterator<Item = YearMonth> {
        (self.ordinal()..=last.ordinal()).map(YearMonth::from_ordinal)
    }
}

impl fmt::Display for YearMonth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for YearMonth {
    type Err = CalendarError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, m) = s.trim().split_once('-').ok_or_else(|| CalendarError(s.to_string()))?;
        let year = y.parse().map_err(|_| CalendarError(s.to_string()))?;
        let month = m.parse().map_err(|_| CalendarError(s.to_string()))?;
        YearMonth::new(year, month)
    }
}

impl TryFrom<String> for YearMonth {
    type Error = CalendarError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<YearMonth> for String {
    fn from(ym: YearMonth) -> String {
        ym.to_string()
    }
}

/// A calendar quarter (`q` in 1..=4).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Quarter {
    pub year: i32,
    pub q: u32,
}

impl Quarter {
    pub fn new(year: i32, q: u32) -> Result<Self, CalendarError> {
        if (1..=4).contains(&q) {
            Ok(Quarter { year, q })
        } else {
            Err(CalendarError(format!("{year}Q{q}")))
        }
    }

    pub fn of_timestamp(ts: i64) -> Self {
        let ym = YearMonth::of_timestamp(ts);
        Quarter { year: ym.year, q: (ym.month - 1) / 3 + 1 }
    }

    pub fn first_month(self) -> YearMonth {
        YearMonth { year: self.year, month: (self.q - 1) * 3 + 1 }
    }

    pub fn last_month(self) -> YearMonth {
        self.first_month().plus(2)
    }

    pub fn start_ts(self) -> i64 {
        self.first_month().start_ts()
    }

    pub fn end_ts(self) -> i64 {
        self.last_month().end_ts()
    }

    pub fn contains(self, ts: i64) -> bool {
        ts >= self.start_ts() && ts < self.end_ts()
    }

    pub fn days(self) -> u32 {
        ((self.end_ts() - self.start_ts()) / 86_400) as u32
    }

    /// Last calendar day of the quarter.
    pub fn last_day(self) -> NaiveDate {
        self.last_month().plus(1).first_day().pred_opt().expect("valid date")
    }

    pub fn of_year(year: i32) -> [Quarter; 4] {
        [1, 2, 3, 4].map(|q| Quarter { year, q })
    }
}

impl fmt::Display for Quarter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.q)
    }
}

pub fn utc(ts: i64) -> DateTime<Utc> {
    Utc.timestamp_opt(ts, 0).single().expect("timestamp in chrono range")
}

pub fn day_start_ts(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0).expect("midnight").and_utc().timestamp()
}

/// Days since the unix epoch (floor).
pub fn day_number(ts: i64) -> i64 {
    ts.div_euclid(86_400)
}

pub fn hour_of_day(ts: i64) -> usize {
    utc(ts).hour() as usize
}

/// 0 = Monday .. 6 = Sunday.
pub fn weekday(ts: i64) -> usize {
    utc(ts).weekday().num_days_from_monday() as usize
}

/// Last day of a calendar year, 23:59:59 excluded; returned as exclusive end timestamp.
pub fn year_end_ts(year: i32) -> i64 {
    YearMonth { year, month: 12 }.end_ts()
}

pub fn last_day_of_year(year: i32) -> NaiveDate {
    NaiveDate::from_ymd_opt(year, 12, 31).expect("valid date")
}
