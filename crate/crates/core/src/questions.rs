//! Sentence segmentation and the question rule: a sentence is a question
//! when its final run of terminators contains a `?`.

use std::io::{BufRead, Write};

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Post;
use crate::error::{Error, Result};
use crate::preprocess::clean_text;

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?' | '…')
}

fn is_closer(c: char) -> bool {
    matches!(c, '»' | '"' | '\'' | ')' | ']' | '}' | '”' | '’')
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sentence {
    pub post_id: String,
    pub index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub post_id: String,
    pub index: usize,
    pub timestamp: DateTime<Utc>,
    pub text: String,
}

impl Question {
    pub fn sentence(&self) -> Sentence {
        Sentence {
            post_id: self.post_id.clone(),
            index: self.index,
            text: self.text.clone(),
        }
    }

    /// Stable document id used by the later stages.
    pub fn doc_id(&self) -> String {
        format!("{}:{}", self.post_id, self.index)
    }
}

/// Splits after each run of `.`, `!`, `?` or `…`, with trailing closing
/// quotes and brackets attached to the left sentence. A run made only of
/// periods splits only when followed by whitespace or the end of text, so
/// "3.5" stays in one piece.
pub fn segment_sentences(text: &str) -> Vec<&str> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |c| c.0);
    let mut out = Vec::new();
    let mut start = 0;
    let mut i = 0;
    fn push<'a>(piece: &'a str, out: &mut Vec<&'a str>) {
        let s = piece.trim();
        if !s.is_empty() {
            out.push(s);
        }
    }
    while i < chars.len() {
        if !is_terminator(chars[i].1) {
            i += 1;
            continue;
        }
        let mut j = i;
        let mut strong = false;
        while j < chars.len() && is_terminator(chars[j].1) {
            strong |= chars[j].1 != '.';
            j += 1;
        }
        let mut k = j;
        while k < chars.len() && is_closer(chars[k].1) {
            k += 1;
        }
        if strong || k == chars.len() || chars[k].1.is_whitespace() {
            push(&text[start..byte_at(k)], &mut out);
            start = byte_at(k);
            i = k;
        } else {
            i = j;
        }
    }
    push(&text[start..], &mut out);
    out
}

pub fn sentences(post_id: &str, text: &str) -> Vec<Sentence> {
    segment_sentences(text)
        .into_iter()
        .enumerate()
        .map(|(index, s)| Sentence {
            post_id: post_id.to_string(),
            index,
            text: s.to_string(),
        })
        .collect()
}

/// True when the last terminator run, ignoring trailing whitespace and
/// closing quotes or brackets, contains a `?`.
pub fn is_question(sentence: &str) -> bool {
    sentence
        .trim_end()
        .trim_end_matches(is_closer)
        .chars()
        .rev()
        .take_while(|c| is_terminator(*c))
        .any(|c| c == '?')
}

/// Question sentences of a post, in order. The text is cleaned first so
/// that link query strings cannot produce false questions.
pub fn extract_questions(post: &Post) -> Vec<Question> {
    if !post.text.contains('?') {
        return Vec::new();
    }
    let cleaned = clean_text(&post.text);
    segment_sentences(&cleaned)
        .into_iter()
        .enumerate()
        .filter(|(_, s)| is_question(s))
        .map(|(index, s)| Question {
            post_id: post.id.clone(),
            index,
            timestamp: post.timestamp,
            text: s.to_string(),
        })
        .collect()
}

pub fn extract_all(posts: &[Post]) -> Vec<Question> {
    posts
        .par_iter()
        .map(extract_questions)
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

pub fn write_questions<W: Write>(mut w: W, questions: &[Question]) -> Result<()> {
    for q in questions {
        serde_json::to_writer(&mut w, q)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_questions<R: BufRead>(reader: R) -> Result<Vec<Question>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(out)
}
