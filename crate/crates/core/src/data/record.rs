//! TweetsCOV19 TSV records.

use std::fmt;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use serde::{Deserialize, Serialize};

use super::DataError;

/// Marker the dataset uses for an empty list-valued field.
pub const EMPTY_MARKER: &str = "null;";

const TEXT_FORMAT: &str = "%a %b %d %H:%M:%S %Y";

/// A tweet timestamp as written in the source file.
///
/// The dataset form `"Thu Oct 03 21:12:56 CEST 2019"` keeps its wall-clock
/// fields and zone label; integer epoch seconds are read as UTC.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Timestamp {
    pub local: NaiveDateTime,
    /// Zone label for the textual form; `None` for epoch input.
    pub zone: Option<String>,
}

impl Timestamp {
    pub fn parse(s: &str) -> Option<Self> {
        let s = s.trim();
        if !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit()) {
            let secs: i64 = s.parse().ok()?;
            let dt = DateTime::from_timestamp(secs, 0)?;
            return Some(Self {
                local: dt.naive_utc(),
                zone: None,
            });
        }
        let parts: Vec<&str> = s.split_whitespace().collect();
        let [wd, mon, day, time, zone, year] = parts[..] else {
            return None;
        };
        if !zone.chars().all(|c| c.is_ascii_alphanumeric() || c == '+' || c == '-') {
            return None;
        }
        let joined = format!("{wd} {mon} {day} {time} {year}");
        let local = NaiveDateTime::parse_from_str(&joined, TEXT_FORMAT).ok()?;
        Some(Self {
            local,
            zone: Some(zone.to_string()),
        })
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.zone {
            None => write!(f, "{}", self.local.and_utc().timestamp()),
            Some(zone) => write!(
                f,
                "{} {} {}",
                self.local.format("%a %b %d %H:%M:%S"),
                zone,
                self.local.format("%Y")
            ),
        }
    }
}

/// One parsed TSV row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TweetRecord {
    pub tweet_id: String,
    pub username: String,
    pub timestamp: Timestamp,
    pub followers: u64,
    pub friends: u64,
    pub favorites: u64,
    pub entities: String,
    pub sentiment_raw: String,
    pub mentions_raw: String,
    pub hashtags_raw: String,
    pub urls_raw: String,
    /// Retweet count, the regression label. Absent in unlabeled prediction input.
    pub retweets: Option<u64>,
    pub text: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Column {
    TweetId,
    Username,
    Timestamp,
    Followers,
    Friends,
    Favorites,
    Entities,
    Sentiment,
    Mentions,
    Hashtags,
    Urls,
    Retweets,
    Text,
}

impl Column {
    pub fn name(self) -> &'static str {
        match self {
            Column::TweetId => "tweet_id",
            Column::Username => "username",
            Column::Timestamp => "timestamp",
            Column::Followers => "followers",
            Column::Friends => "friends",
            Column::Favorites => "favorites",
            Column::Entities => "entities",
            Column::Sentiment => "sentiment",
            Column::Mentions => "mentions",
            Column::Hashtags => "hashtags",
            Column::Urls => "urls",
            Column::Retweets => "retweets",
            Column::Text => "text",
        }
    }
}

/// Field order of a TSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub columns: Vec<Column>,
}

impl Default for Schema {
    /// Dataset order with the label after the eleven source fields, then the crawled text.
    fn default() -> Self {
        use Column::*;
        Self {
            columns: vec![
                TweetId, Username, Timestamp, Followers, Friends, Favorites, Entities, Sentiment, Mentions, Hashtags,
                Urls, Retweets, Text,
            ],
        }
    }
}

impl Schema {
    /// Default order without the text column.
    pub fn without_text() -> Self {
        let mut s = Self::default();
        s.columns.retain(|c| *c != Column::Text);
        s
    }

    pub fn new(columns: Vec<Column>) -> Result<Self, DataError> {
        use Column::*;
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(DataError::Schema(format!("column `{}` listed twice", c.name())));
            }
        }
        for required in [
            TweetId, Username, Timestamp, Followers, Friends, Favorites, Entities, Sentiment, Mentions, Hashtags, Urls,
            Retweets,
        ] {
            if !columns.contains(&required) {
                return Err(DataError::Schema(format!("missing column `{}`", required.name())));
            }
        }
        Ok(Self { columns })
    }

    /// Read a one-line JSON sidecar: `{"columns": ["tweet_id", ...]}`.
    pub fn from_sidecar(path: &Path) -> Result<Self, DataError> {
        let raw = std::fs::read_to_string(path).map_err(|e| DataError::Io(path.display().to_string(), e))?;
        let parsed: Schema =
            serde_json::from_str(raw.trim()).map_err(|e| DataError::Schema(format!("{}: {e}", path.display())))?;
        Self::new(parsed.columns)
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn has_text(&self) -> bool {
        self.columns.contains(&Column::Text)
    }
}

fn unmark(s: &str) -> String {
    if s == EMPTY_MARKER {
        String::new()
    } else {
        s.to_string()
    }
}

fn parse_count(field: &str, column: Column, line: usize) -> Result<u64, DataError> {
    field.trim().parse().map_err(|_| DataError::Field {
        line,
        column: column.name(),
        value: field.to_string(),
    })
}

/// Split a sentiment field into its two integer scores without range checks.
pub(crate) fn split_sentiment(s: &str) -> Option<(i64, i64)> {
    let mut it = s.split_whitespace();
    let pos = it.next()?.parse().ok()?;
    let neg = it.next()?.parse().ok()?;
    if it.next().is_some() {
        return None;
    }
    Some((pos, neg))
}

/// Parse one tab-separated line; `line` is the 1-based line number for error messages.
pub fn parse_tsv_line(line_text: &str, schema: &Schema, line: usize) -> Result<TweetRecord, DataError> {
    let trimmed = line_text.strip_suffix('\n').unwrap_or(line_text);
    let trimmed = trimmed.strip_suffix('\r').unwrap_or(trimmed);
    let fields: Vec<&str> = trimmed.split('\t').collect();
    if fields.len() != schema.len() {
        return Err(DataError::Format {
            line,
            expected: schema.len(),
            found: fields.len(),
        });
    }
    let mut rec = TweetRecord {
        tweet_id: String::new(),
        username: String::new(),
        timestamp: Timestamp {
            local: NaiveDateTime::default(),
            zone: None,
        },
        followers: 0,
        friends: 0,
        favorites: 0,
        entities: String::new(),
        sentiment_raw: String::new(),
        mentions_raw: String::new(),
        hashtags_raw: String::new(),
        urls_raw: String::new(),
        retweets: None,
        text: None,
    };
    for (&col, &field) in schema.columns.iter().zip(&fields) {
        match col {
            Column::TweetId => rec.tweet_id = field.to_string(),
            Column::Username => rec.username = field.to_string(),
            Column::Timestamp => {
                rec.timestamp = Timestamp::parse(field).ok_or_else(|| DataError::Field {
                    line,
                    column: col.name(),
                    value: field.to_string(),
                })?
            }
            Column::Followers => rec.followers = parse_count(field, col, line)?,
            Column::Friends => rec.friends = parse_count(field, col, line)?,
            Column::Favorites => rec.favorites = parse_count(field, col, line)?,
            Column::Entities => rec.entities = unmark(field),
            Column::Sentiment => {
                if split_sentiment(field).is_none() {
                    return Err(DataError::Field {
                        line,
                        column: col.name(),
                        value: field.to_string(),
                    });
                }
                rec.sentiment_raw = field.to_string();
            }
            Column::Mentions => rec.mentions_raw = unmark(field),
            Column::Hashtags => rec.hashtags_raw = unmark(field),
            Column::Urls => rec.urls_raw = unmark(field),
            Column::Retweets => {
                rec.retweets = if field.trim().is_empty() {
                    None
                } else {
                    Some(parse_count(field, col, line)?)
                }
            }
            Column::Text => {
                let t = unmark(field);
                rec.text = (!t.is_empty()).then_some(t);
            }
        }
    }
    Ok(rec)
}

/// Inverse of [`parse_tsv_line`] (without the trailing newline).
pub fn to_tsv_line(rec: &TweetRecord, schema: &Schema) -> String {
    let fields: Vec<String> = schema
        .columns
        .iter()
        .map(|col| match col {
            Column::TweetId => rec.tweet_id.clone(),
            Column::Username => rec.username.clone(),
            Column::Timestamp => rec.timestamp.to_string(),
            Column::Followers => rec.followers.to_string(),
            Column::Friends => rec.friends.to_string(),
            Column::Favorites => rec.favorites.to_string(),
            Column::Entities => rec.entities.clone(),
            Column::Sentiment => rec.sentiment_raw.clone(),
            Column::Mentions => rec.mentions_raw.clone(),
            Column::Hashtags => rec.hashtags_raw.clone(),
            Column::Urls => rec.urls_raw.clone(),
            Column::Retweets => rec.retweets.map(|r| r.to_string()).unwrap_or_default(),
            Column::Text => rec.text.clone().unwrap_or_default(),
        })
        .collect();
    fields.join("\t")
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str = "1178791787386814465\tb8e7a2\tThu Oct 03 21:12:56 CEST 2019\t10\t5\t2\tnull;\t3 -1\tnull;\tnull;\tnull;\t7\tHow's self-quarantine going?";

    #[test]
    fn parses_a_dataset_line() {
        let r = parse_tsv_line(LINE, &Schema::default(), 1).unwrap();
        assert_eq!(r.tweet_id, "1178791787386814465");
        assert_eq!(r.followers, 10);
        assert_eq!(r.friends, 5);
        assert_eq!(r.favorites, 2);
        assert_eq!(r.sentiment_raw, "3 -1");
        assert_eq!(r.mentions_raw, "");
        assert_eq!(r.retweets, Some(7));
        assert_eq!(r.text.as_deref(), Some("How's self-quarantine going?"));
        assert_eq!(r.timestamp.zone.as_deref(), Some("CEST"));
    }

    #[test]
    fn wrong_field_count_is_a_format_error() {
        let eleven = "a\tb\tThu Oct 03 21:12:56 CEST 2019\t1\t1\t1\tnull;\t1 -1\tnull;\tnull;\tnull;";
        match parse_tsv_line(eleven, &Schema::without_text(), 4) {
            Err(DataError::Format {
                line: 4,
                expected: 12,
                found: 11,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_integer_names_the_column() {
        let bad = LINE.replace("\t10\t", "\tten\t");
        let err = parse_tsv_line(&bad, &Schema::default(), 2).unwrap_err();
        assert!(
            matches!(
                err,
                DataError::Field {
                    column: "followers",
                    line: 2,
                    ..
                }
            ),
            "{err:?}"
        );
        let bad = LINE.replace("\t3 -1\t", "\t3\t");
        assert!(matches!(
            parse_tsv_line(&bad, &Schema::default(), 2),
            Err(DataError::Field {
                column: "sentiment",
                ..
            })
        ));
    }

    #[test]
    fn timestamp_forms() {
        let t = Timestamp::parse("Mon Jan 06 00:00:00 UTC 2020").unwrap();
        assert_eq!(t.to_string(), "Mon Jan 06 00:00:00 UTC 2020");
        let e = Timestamp::parse("1570129976").unwrap();
        assert_eq!(e.zone, None);
        assert_eq!(e.to_string(), "1570129976");
        assert!(Timestamp::parse("2019-10-03T21:12:56Z").is_none());
        // weekday inconsistent with the date
        assert!(Timestamp::parse("Fri Oct 03 21:12:56 CEST 2019").is_none());
    }

    #[test]
    fn empty_label_is_absent() {
        let unlabeled = LINE.replace("\t7\t", "\t\t");
        assert_eq!(
            parse_tsv_line(&unlabeled, &Schema::default(), 1).unwrap().retweets,
            None
        );
    }

    #[test]
    fn line_round_trips() {
        let r = parse_tsv_line(LINE, &Schema::default(), 1).unwrap();
        let again = parse_tsv_line(&to_tsv_line(&r, &Schema::default()), &Schema::default(), 1).unwrap();
        assert_eq!(r, again);
    }

    #[test]
    fn schema_validation() {
        assert!(Schema::new(vec![Column::TweetId, Column::TweetId]).is_err());
        assert!(Schema::new(Schema::without_text().columns).is_ok());
        let mut cols = Schema::default().columns;
        cols.retain(|c| *c != Column::Retweets);
        assert!(Schema::new(cols).is_err());
    }

    #[test]
    fn sidecar_overrides_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("schema.json");
        let mut cols = Schema::default().columns;
        cols.rotate_left(1);
        let json = serde_json::to_string(&Schema { columns: cols.clone() }).unwrap();
        std::fs::write(&path, format!("{json}\n")).unwrap();
        assert_eq!(Schema::from_sidecar(&path).unwrap().columns, cols);
    }
}
