//! Post ingestion: JSONL parsing, keyword matching, language filtering and
//! bucketing by day or month.

use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::{clean_text, StopwordList};
use crate::text::fold;

pub const DEFAULT_LANG_THRESHOLD: f64 = 0.12;

/// Lines handed to the worker pool at once while parsing.
const PARSE_CHUNK: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub timestamp: DateTime<Utc>,
    pub text: String,
    #[serde(default)]
    pub keywords: Vec<String>,
    #[serde(default)]
    pub lang_score: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineError {
    pub line_no: usize,
    pub reason: String,
}

/// Collection keywords, case and diacritic folded. Single-word keywords match
/// any word starting with them; multi-word keywords match as a phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeywordSet {
    keywords: Vec<String>,
    patterns: Vec<String>,
}

/// Folds and replaces every character other than letters, digits and `-`
/// with a single space.
fn normalize_for_match(text: &str) -> String {
    let folded = fold(text);
    let mut out = String::with_capacity(folded.len() + 2);
    out.push(' ');
    for c in folded.chars() {
        if c.is_alphanumeric() || c == '-' {
            out.push(c);
        } else if !out.ends_with(' ') {
            out.push(' ');
        }
    }
    out
}

impl KeywordSet {
    pub fn new<I, S>(keywords: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut out = KeywordSet {
            keywords: Vec::new(),
            patterns: Vec::new(),
        };
        for kw in keywords {
            let folded = fold(kw.as_ref())
                .split_whitespace()
                .collect::<Vec<_>>()
                .join(" ");
            if folded.is_empty() {
                return Err(Error::KeywordSet("blank keyword".into()));
            }
            if !seen.insert(folded.clone()) {
                return Err(Error::KeywordSet(format!("duplicate keyword {folded:?}")));
            }
            let pattern = normalize_for_match(&folded).trim_end().to_string();
            out.keywords.push(folded);
            out.patterns.push(pattern);
        }
        if out.keywords.is_empty() {
            return Err(Error::KeywordSet("no keywords".into()));
        }
        Ok(out)
    }

    pub fn keywords(&self) -> &[String] {
        &self.keywords
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    fn position(&self, keyword: &str) -> Option<usize> {
        let folded = fold(keyword);
        self.keywords.iter().position(|k| *k == folded)
    }
}

/// Keywords found in `text`, in keyword-set order.
pub fn match_keywords(text: &str, ks: &KeywordSet) -> Vec<String> {
    // leading space marks a word boundary for the first word
    let norm = normalize_for_match(text);
    ks.patterns
        .iter()
        .zip(&ks.keywords)
        .filter(|(pattern, _)| norm.contains(pattern.as_str()) || {
            // a pattern starts with ' ', so containment already implies a
            // boundary; words glued by '-' need the second check
            let bare = &pattern[1..];
            norm.match_indices(bare)
                .any(|(i, _)| norm[..i].ends_with('-'))
        })
        .map(|(_, kw)| kw.clone())
        .collect()
}

#[derive(Deserialize)]
struct RawPost {
    id: String,
    timestamp: String,
    text: String,
    #[serde(default)]
    keywords: Option<Vec<String>>,
    #[serde(default)]
    lang_score: Option<f64>,
}

/// Accepts RFC 3339 (any offset, normalized to UTC) and naive date-times,
/// which are taken as UTC.
pub fn parse_timestamp(s: &str) -> std::result::Result<DateTime<Utc>, String> {
    let s = s.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%d %H:%M"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Ok(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc());
    }
    Err(format!("unparseable timestamp {s:?}"))
}

pub fn parse_post_line(line: &str, ks: &KeywordSet) -> std::result::Result<Post, String> {
    let raw: RawPost = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if raw.id.is_empty() {
        return Err("empty id".into());
    }
    let timestamp = parse_timestamp(&raw.timestamp)?;
    let keywords = match raw.keywords {
        Some(given) => {
            let mut idx: Vec<usize> = given.iter().filter_map(|k| ks.position(k)).collect();
            idx.sort_unstable();
            idx.dedup();
            idx.into_iter().map(|i| ks.keywords[i].clone()).collect()
        }
        None => match_keywords(&raw.text, ks),
    };
    let lang_score = raw.lang_score.unwrap_or(0.0);
    if !(0.0..=1.0).contains(&lang_score) {
        return Err(format!("lang_score {lang_score} outside [0, 1]"));
    }
    Ok(Post {
        id: raw.id,
        timestamp,
        text: raw.text,
        keywords,
        lang_score,
    })
}

fn parse_chunk(chunk: Vec<(usize, Vec<u8>)>, ks: &KeywordSet, posts: &mut Vec<Post>, errors: &mut Vec<LineError>) {
    let parsed: Vec<(usize, std::result::Result<Post, String>)> = chunk
        .into_par_iter()
        .map(|(line_no, bytes)| {
            let res = std::str::from_utf8(&bytes)
                .map_err(|e| format!("invalid UTF-8: {e}"))
                .and_then(|l| parse_post_line(l, ks));
            (line_no, res)
        })
        .collect();
    for (line_no, res) in parsed {
        match res {
            Ok(p) => posts.push(p),
            Err(reason) => errors.push(LineError { line_no, reason }),
        }
    }
}

/// Parses newline-delimited JSON posts. Bad lines are reported with their
/// 1-based line number and never stop the stream; blank lines are skipped.
pub fn parse_posts<R: BufRead>(mut reader: R, ks: &KeywordSet) -> Result<(Vec<Post>, Vec<LineError>)> {
    let mut posts = Vec::new();
    let mut errors = Vec::new();
    let mut chunk = Vec::with_capacity(PARSE_CHUNK);
    let mut line_no = 0;
    loop {
        let mut buf = Vec::new();
        let n = reader.read_until(b'\n', &mut buf)?;
        if n == 0 {
            break;
        }
        line_no += 1;
        while matches!(buf.last(), Some(b'\n' | b'\r')) {
            buf.pop();
        }
        if buf.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        chunk.push((line_no, buf));
        if chunk.len() == PARSE_CHUNK {
            parse_chunk(std::mem::take(&mut chunk), ks, &mut posts, &mut errors);
        }
    }
    parse_chunk(chunk, ks, &mut posts, &mut errors);
    Ok((posts, errors))
}

pub fn write_posts<W: Write>(mut w: W, posts: &[Post]) -> Result<()> {
    for p in posts {
        serde_json::to_writer(&mut w, p)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

/// Keeps the first post for every id.
pub fn dedup_by_id(posts: Vec<Post>) -> Vec<Post> {
    let mut seen = HashSet::new();
    posts.into_iter().filter(|p| seen.insert(p.id.clone())).collect()
}

/// Share of word tokens that are stopwords, after cleaning. Zero for text
/// without tokens.
pub fn language_score(text: &str, stopwords: &StopwordList) -> f64 {
    let (hits, total) = stopword_coverage(text, stopwords);
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

fn stopword_coverage(text: &str, stopwords: &StopwordList) -> (usize, usize) {
    let cleaned = clean_text(text);
    let mut total = 0usize;
    let mut hits = 0usize;
    for tok in cleaned.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
        total += 1;
        if stopwords.contains(tok) {
            hits += 1;
        }
    }
    (hits, total)
}

/// Sets `lang_score` on every post and keeps those at or above `threshold`.
/// Posts without tokens score 0 and are always dropped.
pub fn filter_language(posts: Vec<Post>, stopwords: &StopwordList, threshold: f64) -> Vec<Post> {
    posts
        .into_par_iter()
        .filter_map(|mut p| {
            let (hits, total) = stopword_coverage(&p.text, stopwords);
            if total == 0 {
                p.lang_score = 0.0;
                return None;
            }
            p.lang_score = hits as f64 / total as f64;
            (p.lang_score >= threshold).then_some(p)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Granularity {
    Day,
    Month,
}

impl Granularity {
    pub fn key(self, t: &DateTime<Utc>) -> String {
        match self {
            Granularity::Day => t.format("%Y-%m-%d").to_string(),
            Granularity::Month => t.format("%Y-%m").to_string(),
        }
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "day" => Ok(Granularity::Day),
            "month" => Ok(Granularity::Month),
            other => Err(format!("unknown granularity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeriodBucket {
    pub period: String,
    pub posts: Vec<String>,
}

/// Groups post ids by UTC day or month, ascending by period.
pub fn bucket_by_period(posts: &[Post], granularity: Granularity) -> Vec<PeriodBucket> {
    let mut buckets: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for p in posts {
        buckets
            .entry(granularity.key(&p.timestamp))
            .or_default()
            .push(p.id.clone());
    }
    buckets
        .into_iter()
        .map(|(period, posts)| PeriodBucket { period, posts })
        .collect()
}
