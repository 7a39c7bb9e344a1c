//! Two-decimal fixed-point values for reported averages and percentages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A non-negative-or-negative decimal with exactly two fractional digits,
/// stored as an integer number of hundredths.
///
/// Tables of accuracies and corpus averages are printed with two decimals;
/// keeping them as integers makes comparisons and round trips exact.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed2(i64);

impl Fixed2 {
    pub const ZERO: Fixed2 = Fixed2(0);
    pub const HUNDRED: Fixed2 = Fixed2(10_000);

    pub const fn from_hundredths(h: i64) -> Self {
        Fixed2(h)
    }

    pub const fn hundredths(self) -> i64 {
        self.0
    }

    /// `numerator / denominator` rounded half-up to two decimals.
    ///
    /// Returns `None` when `denominator` is zero.
    pub fn ratio(numerator: u64, denominator: u64) -> Option<Self> {
        if denominator == 0 {
            return None;
        }
        let num = numerator as u128 * 200 + denominator as u128;
        let den = 2 * denominator as u128;
        Some(Fixed2((num / den) as i64))
    }

    /// `100 * part / whole` rounded half-up to two decimals.
    pub fn percentage(part: u64, whole: u64) -> Option<Self> {
        if whole == 0 {
            return None;
        }
        let num = part as u128 * 20_000 + whole as u128;
        let den = 2 * whole as u128;
        Some(Fixed2((num / den) as i64))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Fixed2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let s = format!("{sign}{}.{:02}", abs / 100, abs % 100);
        f.pad(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid two-decimal value {0:?}")]
pub struct ParseFixed2Error(pub String);

impl FromStr for Fixed2 {
    type Err = ParseFixed2Error;

    /// Accepts at most two fractional digits; `"27.1"` and `"27"` are fine,
    /// `"27.123"` is rejected rather than silently rounded.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseFixed2Error(s.to_string());
        let t = s.trim();
        let (neg, t) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (int, frac) = match t.split_once('.') {
            Some((i, f)) => (i, f),
            None => (t, ""),
        };
        if int.is_empty() || frac.len() > 2 {
            return Err(err());
        }
        if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let int: i64 = int.parse().map_err(|_| err())?;
        let frac_val: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().map_err(|_| err())? * 10,
            _ => frac.parse().map_err(|_| err())?,
        };
        let v = int.checked_mul(100).and_then(|x| x.checked_add(frac_val)).ok_or_else(err)?;
        Ok(Fixed2(if neg { -v } else { v }))
    }
}

impl Serialize for Fixed2 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fixed2 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Str(String),
            Float(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Str(s) => s.parse().map_err(serde::de::Error::custom),
            // TOML/JSON floats such as 27.12 are read through their shortest
            // decimal representation.
            Repr::Float(x) => format!("{x}")
                .parse()
                .or_else(|_| format!("{x:.2}").parse())
                .map_err(serde::de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rounds_half_up() {
        assert_eq!(Fixed2::ratio(895, 33).unwrap().to_string(), "27.12");
        assert_eq!(Fixed2::ratio(7189, 389).unwrap().to_string(), "18.48");
        assert_eq!(Fixed2::ratio(390_819, 7289).unwrap().to_string(), "53.62");
        // 1/8 = 0.125 -> 0.13
        assert_eq!(Fixed2::ratio(1, 8).unwrap().to_string(), "0.13");
        assert_eq!(Fixed2::ratio(7, 1).unwrap().to_string(), "7.00");
        assert!(Fixed2::ratio(1, 0).is_none());
    }

    #[test]
    fn percentage_rounds_half_up() {
        assert_eq!(Fixed2::percentage(1, 2).unwrap().to_string(), "50.00");
        // 2/3 = 66.666.. -> 66.67
        assert_eq!(Fixed2::percentage(2, 3).unwrap().to_string(), "66.67");
        // 1/80000 = 0.00125% -> 0.00
        assert_eq!(Fixed2::percentage(1, 80_000).unwrap().to_string(), "0.00");
        // 1/1600 = 0.0625% -> 0.06
        assert_eq!(Fixed2::percentage(1, 1600).unwrap().to_string(), "0.06");
        // 1/400 = 0.25%
        assert_eq!(Fixed2::percentage(1, 400).unwrap().to_string(), "0.25");
    }

    #[test]
    fn parse_and_display() {
        for s in ["0.00", "27.12", "96.10", "100.00", "-3.05"] {
            assert_eq!(s.parse::<Fixed2>().unwrap().to_string(), s);
        }
        assert_eq!("27.1".parse::<Fixed2>().unwrap().hundredths(), 2710);
        assert_eq!("27".parse::<Fixed2>().unwrap().hundredths(), 2700);
        assert!("27.123".parse::<Fixed2>().is_err());
        assert!("abc".parse::<Fixed2>().is_err());
        assert!(".5".parse::<Fixed2>().is_err());
    }

    #[test]
    fn deserializes_floats_and_strings() {
        let v: Vec<Fixed2> = serde_json::from_str(r#"[27.12, "16.48", 30.1, 7]"#).unwrap();
        let h: Vec<i64> = v.iter().map(|x| x.hundredths()).collect();
        assert_eq!(h, vec![2712, 1648, 3010, 700]);
    }
}
