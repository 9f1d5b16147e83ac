//! ISO-8601 epidemiological weeks (`YYYY-Www`).

use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

/// A week identified by ISO year and week number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EpiWeek {
    year: i32,
    week: u32,
}

impl EpiWeek {
    pub fn new(year: i32, week: u32) -> Result<Self, Error> {
        match NaiveDate::from_isoywd_opt(year, week, Weekday::Mon) {
            Some(_) => Ok(EpiWeek { year, week }),
            None => Err(Error::Week(format!("{year}-W{week:02}"))),
        }
    }

    pub fn year(&self) -> i32 {
        self.year
    }

    pub fn week(&self) -> u32 {
        self.week
    }

    fn monday(&self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon)
            .expect("validated on construction")
    }

    /// Number of weeks from `self` to `other` (negative when `other` is earlier).
    pub fn weeks_until(&self, other: EpiWeek) -> i64 {
        (other.monday() - self.monday()).num_days() / 7
    }

    /// The week `n` weeks after this one (`n` may be negative).
    pub fn offset(&self, n: i64) -> EpiWeek {
        let date = self.monday() + chrono::Duration::weeks(n);
        let iso = date.iso_week();
        EpiWeek {
            year: iso.year(),
            week: iso.week(),
        }
    }
}

impl fmt::Display for EpiWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for EpiWeek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Week(s.to_string());
        let (year, week) = s.trim().split_once("-W").ok_or_else(bad)?;
        if year.len() != 4 || week.len() != 2 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let week: u32 = week.parse().map_err(|_| bad())?;
        EpiWeek::new(year, week).map_err(|_| bad())
    }
}

impl Serialize for EpiWeek {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for EpiWeek {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of weeks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeekRange {
    pub start: EpiWeek,
    pub end: EpiWeek,
}

impl WeekRange {
    pub fn new(start: EpiWeek, end: EpiWeek) -> Result<Self, Error> {
        if end < start {
            return Err(Error::Config(format!("week range {start}..{end} is reversed")));
        }
        Ok(WeekRange { start, end })
    }

    pub fn len(&self) -> usize {
        self.start.weeks_until(self.end) as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, week: EpiWeek) -> bool {
        self.start <= week && week <= self.end
    }
}
