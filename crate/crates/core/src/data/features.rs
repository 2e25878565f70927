//! Twelve engineered numeric features per tweet.

use chrono::{Datelike, Timelike};
use serde::{Deserialize, Serialize};

use super::record::{split_sentiment, Timestamp, TweetRecord, EMPTY_MARKER};
use super::DataError;

pub const NUM_FEATURES: usize = 12;

/// Serialization order of [`NumericFeatures::to_array`].
pub const FEATURE_NAMES: [&str; NUM_FEATURES] = [
    "month",
    "iso_week",
    "day",
    "hour",
    "minute",
    "day_of_week",
    "followers",
    "friends",
    "favorites",
    "sentiment_pos",
    "sentiment_neg",
    "mention_count",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeParts {
    pub month: u32,
    pub iso_week: u32,
    pub day: u32,
    pub hour: u32,
    pub minute: u32,
    /// Monday = 0.
    pub day_of_week: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumericFeatures {
    pub time: TimeParts,
    pub followers: u64,
    pub friends: u64,
    pub favorites: u64,
    pub sentiment_pos: i64,
    pub sentiment_neg: i64,
    pub mention_count: u64,
}

impl NumericFeatures {
    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        let t = &self.time;
        [
            t.month as f64,
            t.iso_week as f64,
            t.day as f64,
            t.hour as f64,
            t.minute as f64,
            t.day_of_week as f64,
            self.followers as f64,
            self.friends as f64,
            self.favorites as f64,
            self.sentiment_pos as f64,
            self.sentiment_neg as f64,
            self.mention_count as f64,
        ]
    }
}

/// Wall-clock calendar fields with ISO-8601 week numbering.
pub fn decompose_timestamp(ts: &Timestamp) -> TimeParts {
    let dt = ts.local;
    TimeParts {
        month: dt.month(),
        iso_week: dt.iso_week().week(),
        day: dt.day(),
        hour: dt.hour(),
        minute: dt.minute(),
        day_of_week: dt.weekday().num_days_from_monday(),
    }
}

/// `"3 -1"` to `(3, -1)`; positive must be in 1..=5, negative in -5..=-1.
pub fn parse_sentiment(s: &str) -> Result<(i64, i64), DataError> {
    let (pos, neg) = split_sentiment(s).ok_or_else(|| DataError::Sentiment(format!("cannot parse `{s}`")))?;
    if !(1..=5).contains(&pos) {
        return Err(DataError::Sentiment(format!("positive score {pos} outside 1..=5")));
    }
    if !(-5..=-1).contains(&neg) {
        return Err(DataError::Sentiment(format!("negative score {neg} outside -5..=-1")));
    }
    Ok((pos, neg))
}

pub fn count_mentions(s: &str) -> u64 {
    if s.trim() == EMPTY_MARKER {
        return 0;
    }
    s.split_whitespace().count() as u64
}

pub fn engineer_features(r: &TweetRecord) -> Result<NumericFeatures, DataError> {
    let (sentiment_pos, sentiment_neg) = parse_sentiment(&r.sentiment_raw)?;
    Ok(NumericFeatures {
        time: decompose_timestamp(&r.timestamp),
        followers: r.followers,
        friends: r.friends,
        favorites: r.favorites,
        sentiment_pos,
        sentiment_neg,
        mention_count: count_mentions(&r.mentions_raw),
    })
}
