//! UTC instants and spans with millisecond resolution.
//!
//! All grid arithmetic (5-minute windows, session gaps, merge gaps) is done
//! on integer milliseconds since the Unix epoch, so bucketing and interval
//! boundaries are exact and platform independent.

use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

const MS_PER_SEC: i64 = 1_000;
const MS_PER_MIN: i64 = 60 * MS_PER_SEC;
const MS_PER_DAY: i64 = 86_400 * MS_PER_SEC;

/// A span of time, in milliseconds. Negative spans are never produced by
/// this crate but the representation allows them for subtraction results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimeDelta(i64);

impl TimeDelta {
    pub const fn from_ms(ms: i64) -> Self {
        TimeDelta(ms)
    }

    pub const fn from_secs(secs: i64) -> Self {
        TimeDelta(secs * MS_PER_SEC)
    }

    pub const fn from_minutes(minutes: i64) -> Self {
        TimeDelta(minutes * MS_PER_MIN)
    }

    pub const fn as_ms(self) -> i64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / MS_PER_SEC as f64
    }

    pub const fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl Add for TimeDelta {
    type Output = TimeDelta;
    fn add(self, rhs: TimeDelta) -> TimeDelta {
        TimeDelta(self.0 + rhs.0)
    }
}

/// An instant in UTC, stored as milliseconds since 1970-01-01T00:00:00Z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix_ms(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub const fn from_unix_secs(secs: i64) -> Self {
        Timestamp(secs * MS_PER_SEC)
    }

    pub const fn unix_ms(self) -> i64 {
        self.0
    }

    /// Floors onto the UTC grid spanned by `dt` (epoch-aligned).
    pub fn floor_to(self, dt: TimeDelta) -> Timestamp {
        debug_assert!(dt.is_positive());
        Timestamp(self.0.div_euclid(dt.0) * dt.0)
    }

    /// Index of the UTC calendar day containing this instant.
    pub fn day_index(self) -> i64 {
        self.0.div_euclid(MS_PER_DAY)
    }

    /// Parses a strict `YYYY-MM-DDTHH:MM:SS[.fff]Z` string. Fractional
    /// seconds beyond millisecond precision are truncated.
    pub fn parse_iso8601(s: &str) -> Option<Timestamp> {
        let b = s.as_bytes();
        if b.len() < 20 {
            return None;
        }
        if b[4] != b'-' || b[7] != b'-' || b[10] != b'T' || b[13] != b':' || b[16] != b':' {
            return None;
        }
        let year = parse_digits(&b[0..4])?;
        let month = parse_digits(&b[5..7])?;
        let day = parse_digits(&b[8..10])?;
        let hour = parse_digits(&b[11..13])?;
        let minute = parse_digits(&b[14..16])?;
        let second = parse_digits(&b[17..19])?;

        let mut ms: i64 = 0;
        let mut idx = 19;
        if b[idx] == b'.' {
            idx += 1;
            let frac_start = idx;
            while idx < b.len() && b[idx].is_ascii_digit() {
                idx += 1;
            }
            let frac = &b[frac_start..idx];
            if frac.is_empty() || frac.len() > 9 {
                return None;
            }
            for (i, &d) in frac.iter().take(3).enumerate() {
                ms += ((d - b'0') as i64) * 10_i64.pow(2 - i as u32);
            }
        }
        if idx + 1 != b.len() || b[idx] != b'Z' {
            return None;
        }

        if !(1970..=9999).contains(&year)
            || !(1..=12).contains(&month)
            || day < 1
            || day > days_in_month(year, month as u32) as i64
            || hour > 23
            || minute > 59
            || second > 59
        {
            return None;
        }

        let days = days_from_civil(year, month as u32, day as u32);
        let secs = days * 86_400 + hour * 3_600 + minute * 60 + second;
        Some(Timestamp(secs * MS_PER_SEC + ms))
    }
}

fn parse_digits(b: &[u8]) -> Option<i64> {
    let mut v: i64 = 0;
    for &d in b {
        if !d.is_ascii_digit() {
            return None;
        }
        v = v * 10 + (d - b'0') as i64;
    }
    Some(v)
}

fn is_leap(year: i64) -> bool {
    year % 4 == 0 && (year % 100 != 0 || year % 400 == 0)
}

fn days_in_month(year: i64, month: u32) -> u32 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap(year) => 29,
        _ => 28,
    }
}

// Civil-date conversions via the standard era/year-of-era decomposition of
// the proleptic Gregorian calendar (valid for all years of interest here).
fn days_from_civil(y: i64, m: u32, d: u32) -> i64 {
    let y = if m <= 2 { y - 1 } else { y };
    let era = if y >= 0 { y } else { y - 399 } / 400;
    let yoe = y - era * 400;
    let mp = if m > 2 { m - 3 } else { m + 9 } as i64;
    let doy = (153 * mp + 2) / 5 + d as i64 - 1;
    let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    era * 146_097 + doe - 719_468
}

fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = z - era * 146_097;
    let yoe = (doe - doe / 1_460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}

impl Add<TimeDelta> for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: TimeDelta) -> Timestamp {
        Timestamp(self.0 + rhs.0)
    }
}

impl Sub<TimeDelta> for Timestamp {
    type Output = Timestamp;
    fn sub(self, rhs: TimeDelta) -> Timestamp {
        Timestamp(self.0 - rhs.0)
    }
}

impl Sub for Timestamp {
    type Output = TimeDelta;
    fn sub(self, rhs: Timestamp) -> TimeDelta {
        TimeDelta(self.0 - rhs.0)
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0.div_euclid(MS_PER_SEC);
        let ms = self.0.rem_euclid(MS_PER_SEC);
        let days = secs.div_euclid(86_400);
        let sod = secs.rem_euclid(86_400);
        let (y, m, d) = civil_from_days(days);
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:{:02}",
            y,
            m,
            d,
            sod / 3_600,
            (sod / 60) % 60,
            sod % 60
        )?;
        if ms != 0 {
            write!(f, ".{:03}", ms)?;
        }
        write!(f, "Z")
    }
}

impl FromStr for Timestamp {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Timestamp::parse_iso8601(s).ok_or(())
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Timestamp::parse_iso8601(&s).ok_or_else(|| D::Error::custom("invalid ISO 8601 timestamp"))
    }
}
