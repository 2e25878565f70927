#![allow(dead_code)]

use std::path::{Path, PathBuf};

use chrono::DateTime;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use retweet_reg::data::{to_tsv_line, Schema, Timestamp, TweetRecord};
use retweet_reg::pipeline::RunConfig;

pub const KEYWORD: &str = "vaccine";
const FILLER: [&str; 16] = [
    "stay", "home", "safe", "covid", "lockdown", "masks", "news", "update", "cases", "today", "health", "please",
    "share", "school", "family", "week",
];
const NAMES: [&str; 4] = ["alice", "bob", "carol", "dave"];

pub fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tweets_120.tsv")
}

/// Synthetic tweets whose label is `round(exp(z)) + 20 * [keyword in text]`,
/// with `z` linear in favorites, followers and mention count. Timestamps vary;
/// friends and sentiment are held fixed.
pub fn synthetic_records(n: usize, seed: u64) -> Vec<TweetRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let favorites: u64 = rng.gen_range(0..40);
            let followers: u64 = rng.gen_range(0..10_000);
            let mentions = rng.gen_range(0..4usize);
            let keyword = rng.gen_bool(0.5);
            let z = 0.5 + 0.05 * favorites as f64 + 1e-4 * followers as f64 + 0.3 * mentions as f64;
            let label = z.exp().round() as u64 + if keyword { 20 } else { 0 };

            let mut words: Vec<&str> = (0..rng.gen_range(6..20))
                .map(|_| FILLER[rng.gen_range(0..FILLER.len())])
                .collect();
            if keyword {
                let at = rng.gen_range(0..=words.len());
                words.insert(at, KEYWORD);
            }
            let secs = 1_583_020_800 + rng.gen_range(0..15_000_000i64);
            TweetRecord {
                tweet_id: format!("{}", 1_000_000 + i),
                username: format!("user{i}"),
                timestamp: Timestamp {
                    local: DateTime::from_timestamp(secs, 0).unwrap().naive_utc(),
                    zone: None,
                },
                followers,
                friends: 100,
                favorites,
                entities: String::new(),
                sentiment_raw: "2 -2".into(),
                mentions_raw: NAMES[..mentions].join(" "),
                hashtags_raw: String::new(),
                urls_raw: String::new(),
                retweets: Some(label),
                text: Some(words.join(" ")),
            }
        })
        .collect()
}

pub fn write_tsv(path: &Path, records: &[TweetRecord]) {
    let schema = Schema::default();
    let body: String = records.iter().map(|r| to_tsv_line(r, &schema) + "\n").collect();
    std::fs::write(path, body).unwrap();
}

pub fn run_config(data: &Path, out: &Path) -> RunConfig {
    RunConfig {
        data: data.to_path_buf(),
        out_dir: out.to_path_buf(),
        ..RunConfig::default()
    }
}
