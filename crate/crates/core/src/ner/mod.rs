//! Four-category entity recognition (DIS, DRUG, PER, ORG) as BIO sequence
//! labeling: an averaged perceptron over sparse features with greedy,
//! BIO-constrained decoding, evaluated by exact span match.

mod eval;
mod features;
mod model;

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use eval::{evaluate, evaluate_spans, evaluate_tags, f1_score, macro_f1, EvalReport, LabelScores};
pub use features::{featurize, word_shape, Gazetteers};
pub use model::{predict, train, NerModel, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "DIS")]
    Dis,
    #[serde(rename = "DRUG")]
    Drug,
    #[serde(rename = "PER")]
    Per,
    #[serde(rename = "ORG")]
    Org,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::Dis, Label::Drug, Label::Per, Label::Org];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Dis => "DIS",
            Label::Drug => "DRUG",
            Label::Per => "PER",
            Label::Org => "ORG",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Label::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or_else(|| format!("unknown entity label {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    O,
    B(Label),
    I(Label),
}

pub const NUM_TAGS: usize = 9;

impl Tag {
    /// Fixed tag order; `O` comes first so it wins score ties.
    pub const ALL: [Tag; NUM_TAGS] = [
        Tag::O,
        Tag::B(Label::Dis),
        Tag::I(Label::Dis),
        Tag::B(Label::Drug),
        Tag::I(Label::Drug),
        Tag::B(Label::Per),
        Tag::I(Label::Per),
        Tag::B(Label::Org),
        Tag::I(Label::Org),
    ];

    pub fn index(self) -> usize {
        match self {
            Tag::O => 0,
            Tag::B(l) => 1 + 2 * l.index(),
            Tag::I(l) => 2 + 2 * l.index(),
        }
    }

    pub fn from_index(i: usize) -> Tag {
        Tag::ALL[i]
    }

    /// `I-X` may only follow `B-X` or `I-X`.
    pub fn may_follow(self, prev: Option<Tag>) -> bool {
        match self {
            Tag::I(l) => matches!(prev, Some(Tag::B(p) | Tag::I(p)) if p == l),
            _ => true,
        }
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::O => f.write_str("O"),
            Tag::B(l) => write!(f, "B-{l}"),
            Tag::I(l) => write!(f, "I-{l}"),
        }
    }
}

impl FromStr for Tag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "O" {
            return Ok(Tag::O);
        }
        match s.split_once('-') {
            Some(("B", l)) => Ok(Tag::B(l.parse()?)),
            Some(("I", l)) => Ok(Tag::I(l.parse()?)),
            _ => Err(format!("unknown tag {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaggedSentence {
    pub tokens: Vec<String>,
    pub tags: Vec<Tag>,
}

/// Token range `[start, end)` with its category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub label: Label,
}

/// Maximal `B-X I-X*` runs. An `I-X` that does not continue an `X` span
/// opens a new one.
pub fn spans_from_bio(tags: &[Tag]) -> Vec<EntitySpan> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, Label)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::I(l) if open.is_some_and(|(_, ol)| ol == l) => {}
            Tag::B(l) | Tag::I(l) => {
                if let Some((s, ol)) = open.take() {
                    spans.push(EntitySpan { start: s, end: i, label: ol });
                }
                open = Some((i, l));
            }
            Tag::O => {
                if let Some((s, ol)) = open.take() {
                    spans.push(EntitySpan { start: s, end: i, label: ol });
                }
            }
        }
    }
    if let Some((s, l)) = open {
        spans.push(EntitySpan { start: s, end: tags.len(), label: l });
    }
    spans
}

/// Inverse of [`spans_from_bio`] for non-overlapping spans.
pub fn bio_from_spans(spans: &[EntitySpan], len: usize) -> Vec<Tag> {
    let mut tags = vec![Tag::O; len];
    for s in spans {
        tags[s.start] = Tag::B(s.label);
        for t in &mut tags[s.start + 1..s.end] {
            *t = Tag::I(s.label);
        }
    }
    tags
}

/// Reads `token<TAB>tag` lines with blank lines between sentences.
/// `-DOCSTART-` lines are skipped.
pub fn parse_conll<R: BufRead>(reader: R) -> Result<Vec<TaggedSentence>> {
    let mut out = Vec::new();
    let mut cur = TaggedSentence { tokens: vec![], tags: vec![] };
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            if !cur.tokens.is_empty() {
                out.push(std::mem::replace(&mut cur, TaggedSentence { tokens: vec![], tags: vec![] }));
            }
            continue;
        }
        if line.starts_with("-DOCSTART-") {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                line: i + 1,
                reason: format!("expected token and tag, found {} fields", fields.len()),
            });
        }
        let tag = fields[1].parse::<Tag>().map_err(|reason| Error::Parse { line: i + 1, reason })?;
        cur.tokens.push(fields[0].to_string());
        cur.tags.push(tag);
    }
    if !cur.tokens.is_empty() {
        out.push(cur);
    }
    Ok(out)
}

pub fn write_conll<W: Write>(mut w: W, data: &[TaggedSentence]) -> Result<()> {
    for (i, s) in data.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        for (tok, tag) in s.tokens.iter().zip(&s.tags) {
            writeln!(w, "{tok}\t{tag}")?;
        }
    }
    Ok(())
}

/// Seeded shuffle, then the first `floor(ratio * n)` items train.
pub fn split<T: Clone>(data: &[T], train_ratio: f64, seed: u64) -> (Vec<T>, Vec<T>) {
    assert!(train_ratio > 0.0 && train_ratio < 1.0, "train ratio must lie in (0, 1)");
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_ratio * data.len() as f64).floor() as usize;
    let pick = |ids: &[usize]| ids.iter().map(|&i| data[i].clone()).collect::<Vec<_>>();
    (pick(&idx[..n_train]), pick(&idx[n_train..]))
}

/// A tagged span with its surface text, as emitted by `ner-apply`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanRecord {
    pub start: usize,
    pub end: usize,
    pub label: Label,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyRecord {
    pub doc_id: String,
    pub spans: Vec<SpanRecord>,
}

/// Tokenizes raw text, tags it and returns spans with their source text.
/// Span boundaries are token indices; `text` is the original slice.
pub fn tag_text(model: &NerModel, doc_id: &str, text: &str) -> ApplyRecord {
    let toks = tokenize_for_tagging(text);
    let words: Vec<&str> = toks.iter().map(|t| t.0.as_str()).collect();
    let spans = spans_from_bio(&model.predict(&words))
        .into_iter()
        .map(|s| SpanRecord {
            start: s.start,
            end: s.end,
            label: s.label,
            text: text[toks[s.start].1..toks[s.end - 1].2].to_string(),
        })
        .collect();
    ApplyRecord { doc_id: doc_id.to_string(), spans }
}

/// Word-level tokens for tagging raw text: runs of letters and digits
/// (with inner hyphens) or single punctuation marks, with byte offsets.
pub fn tokenize_for_tagging(text: &str) -> Vec<(String, usize, usize)> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_end = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if c.is_whitespace() {
            i += 1;
        } else if c.is_alphanumeric() {
            let start = i;
            while i < chars.len()
                && (chars[i].1.is_alphanumeric()
                    || (chars[i].1 == '-' && chars.get(i + 1).is_some_and(|n| n.1.is_alphanumeric())))
            {
                i += 1;
            }
            let (s, e) = (chars[start].0, byte_end(i));
            out.push((text[s..e].to_string(), s, e));
        } else {
            let (s, e) = (chars[i].0, byte_end(i + 1));
            out.push((text[s..e].to_string(), s, e));
            i += 1;
        }
    }
    out
}
