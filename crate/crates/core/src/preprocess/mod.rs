//! Turns question text into bag-of-words token lists.
//!
//! The stages run in a fixed order: [`clean_text`], [`tokenize`],
//! [`StopwordList::remove`], phrase promotion ([`phrases`]), then
//! lemmatization with part-of-speech filtering ([`lexicon`]).

pub mod lexicon;
pub mod phrases;

use std::collections::HashSet;
use std::path::Path;
use std::sync::LazyLock;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use regex::Regex;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::Result;
use crate::text::{fold, parse_list, read_list};

pub use lexicon::{lemmatize_filter, Lexicon, Pos};
pub use phrases::{apply_phrases, train_phrases, PhraseModel};

/// One document after preprocessing. Phrase tokens are joined with `_`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessedDoc {
    pub doc_id: String,
    pub tokens: Vec<String>,
    /// Carried through so documents can be bucketed by month downstream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<Utc>>,
}

/// Stopwords, compared after case and diacritic folding so that "nao"
/// and "não" are both filtered.
#[derive(Debug, Clone, Default)]
pub struct StopwordList {
    folded: HashSet<String>,
}

impl StopwordList {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        StopwordList {
            folded: words.into_iter().map(|w| fold(w.as_ref().trim())).collect(),
        }
    }

    pub fn parse(content: &str) -> Self {
        Self::new(parse_list(content))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(Self::new(read_list(path)?))
    }

    pub fn len(&self) -> usize {
        self.folded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folded.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        if token.is_ascii() {
            if token.bytes().any(|b| b.is_ascii_uppercase()) {
                self.folded.contains(&token.to_ascii_lowercase())
            } else {
                self.folded.contains(token)
            }
        } else {
            self.folded.contains(&fold(token))
        }
    }

    /// Order-preserving filter.
    pub fn remove(&self, tokens: Vec<String>) -> Vec<String> {
        tokens.into_iter().filter(|t| !self.contains(t)).collect()
    }
}

pub fn remove_stopwords(tokens: Vec<String>, stopwords: &StopwordList) -> Vec<String> {
    stopwords.remove(tokens)
}

static URL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:https?://|www\.)\S+").unwrap());
static EMAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[\w.+-]+@[\w-]+(?:\.[\w-]+)+").unwrap());
static MENTION: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\w])@\w+").unwrap());
static HASHTAG: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\w])#\w+").unwrap());

/// Strips links and e-mail addresses only. Sentence segmentation runs on
/// text that has at least been through this.
pub fn strip_links(text: &str) -> String {
    let text = URL.replace_all(text, " ");
    EMAIL.replace_all(&text, " ").into_owned()
}

fn clean_once(text: &str) -> String {
    let text = strip_links(text);
    let text = MENTION.replace_all(&text, "${1} ");
    let text = HASHTAG.replace_all(&text, "${1} ");
    let mut out = String::with_capacity(text.len());
    for tok in text.split_whitespace() {
        if tok == "RT" || tok == "RT:" {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(tok);
    }
    out
}

/// Removes URLs, e-mail addresses, hashtags, mentions and the retweet
/// marker `RT`, then collapses whitespace. Applied to a fixpoint, so the
/// result is idempotent.
pub fn clean_text(text: &str) -> String {
    let mut cur = clean_once(text);
    loop {
        let next = clean_once(&cur);
        if next == cur {
            return cur;
        }
        cur = next;
    }
}

/// Lowercased word tokens. Hyphens survive only between two letters or
/// digits; fragments shorter than two characters are dropped.
pub fn tokenize(text: &str) -> Vec<String> {
    let chars: Vec<char> = text.nfc().flat_map(char::to_lowercase).collect();
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<String>| {
        if cur.chars().count() >= 2 {
            out.push(std::mem::take(cur));
        } else {
            cur.clear();
        }
    };
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            cur.push(c);
        } else if c == '-'
            && !cur.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric())
        {
            cur.push(c);
        } else {
            flush(&mut cur, &mut out);
        }
    }
    flush(&mut cur, &mut out);
    out
}

/// A raw document handed to the pipeline.
#[derive(Debug, Clone)]
pub struct RawDoc {
    pub doc_id: String,
    pub text: String,
    pub timestamp: Option<DateTime<Utc>>,
}

/// The full preprocessing chain with its resources and phrase settings.
#[derive(Debug, Clone)]
pub struct Preprocessor {
    pub stopwords: StopwordList,
    pub lexicon: Lexicon,
    pub allowed_pos: Vec<Pos>,
    pub min_count: u64,
    pub threshold: f64,
    pub passes: usize,
}

impl Preprocessor {
    pub fn new(stopwords: StopwordList, lexicon: Lexicon) -> Self {
        Preprocessor {
            stopwords,
            lexicon,
            allowed_pos: Pos::CONTENT.to_vec(),
            min_count: 5,
            threshold: 10.0,
            passes: 2,
        }
    }

    /// Cleaning, tokenization and stopword removal for a single text.
    pub fn base_tokens(&self, text: &str) -> Vec<String> {
        self.stopwords.remove(tokenize(&clean_text(text)))
    }

    /// Runs the whole chain. Phrase models are trained on the corpus itself,
    /// one layer per pass, each on the output of the previous layer.
    pub fn run(&self, docs: &[RawDoc]) -> (Vec<ProcessedDoc>, Vec<PhraseModel>) {
        let mut streams: Vec<Vec<String>> =
            docs.par_iter().map(|d| self.base_tokens(&d.text)).collect();

        let mut layers = Vec::with_capacity(self.passes);
        for _ in 0..self.passes {
            let model = train_phrases(&streams, self.min_count, self.threshold);
            streams = streams
                .into_par_iter()
                .map(|t| apply_phrases(&t, &model, 1))
                .collect();
            layers.push(model);
        }

        let processed = docs
            .par_iter()
            .zip(streams.into_par_iter())
            .map(|(doc, tokens)| {
                let tokens = lemmatize_filter(tokens, &self.lexicon, &self.allowed_pos);
                // a lemma can itself be a stopword ("é" -> "ser")
                let tokens = self.stopwords.remove(tokens);
                ProcessedDoc {
                    doc_id: doc.doc_id.clone(),
                    tokens,
                    timestamp: doc.timestamp,
                }
            })
            .collect();
        (processed, layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn clean_examples() {
        assert_eq!(
            clean_text("RT quarentena http://t.co/x acabou?"),
            "quarentena acabou?"
        );
        assert_eq!(clean_text("#covid é sério?"), "é sério?");
        assert_eq!(clean_text("sem ruído"), "sem ruído");
        assert_eq!(
            clean_text("fale com a@b.com ou @ministerio  hoje www.x.org"),
            "fale com ou hoje"
        );
        assert_eq!(clean_text("RT: @user: vai?"), ": vai?");
        assert_eq!(clean_text("C# e R#x"), "C# e R#x");
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("Cloroquina funciona?"), toks(&["cloroquina", "funciona"]));
        assert_eq!(tokenize("covid-19"), toks(&["covid-19"]));
        assert!(tokenize("?").is_empty());
        assert_eq!(tokenize("-x- a-b- é"), toks(&["a-b"]));
        // decomposed input is recomposed before splitting
        assert_eq!(tokenize("vi\u{301}rus"), toks(&["vírus"]));
    }

    #[test]
    fn stopword_examples() {
        let sw = StopwordList::new(["que", "vai"]);
        assert_eq!(
            remove_stopwords(toks(&["que", "dia", "vai", "acabar"]), &sw),
            toks(&["dia", "acabar"])
        );
        assert!(remove_stopwords(vec![], &sw).is_empty());
        assert!(remove_stopwords(toks(&["que", "vai", "Que"]), &sw).is_empty());
        let sw = StopwordList::new(["não"]);
        assert!(sw.contains("nao") && sw.contains("NÃO"));
    }

    #[test]
    fn pipeline_has_no_stopwords() {
        let sw = StopwordList::new(["ser", "de"]);
        let lex = Lexicon::parse("é\tser\tVERB\nmorreu\tmorrer\tVERB\n").unwrap();
        let pre = Preprocessor::new(sw.clone(), lex);
        let (docs, layers) = pre.run(&[RawDoc {
            doc_id: "d".into(),
            text: "É verdade que ele morreu de covid?".into(),
            timestamp: None,
        }]);
        assert_eq!(layers.len(), 2);
        assert_eq!(docs[0].tokens, toks(&["verdade", "que", "ele", "morrer", "covid"]));
        assert!(docs[0].tokens.iter().all(|t| !sw.contains(t)));
    }

    proptest! {
        #[test]
        fn clean_is_idempotent(s in "[ a-zA-Z#@:/.wRT?é_-]{0,40}") {
            let once = clean_text(&s);
            prop_assert_eq!(clean_text(&once), once);
        }

        #[test]
        fn stopword_removal_is_idempotent(v in proptest::collection::vec("(que|a|de|dia|vai|sol)", 0..12)) {
            let sw = StopwordList::new(["que", "a", "de"]);
            let once = sw.remove(v);
            prop_assert_eq!(sw.remove(once.clone()), once);
        }

        #[test]
        fn tokens_are_lowercase_without_whitespace(s in "\\PC{0,40}") {
            for t in tokenize(&s) {
                prop_assert!(t.chars().count() >= 2);
                prop_assert!(!t.chars().any(char::is_whitespace));
                prop_assert_eq!(t.to_lowercase(), t.clone());
            }
        }
    }
}
