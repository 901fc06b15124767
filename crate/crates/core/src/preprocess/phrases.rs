//! Collocation detection for bigram and trigram promotion.
//!
//! A pair `(a, b)` is promoted when it occurs at least `min_count` times and
//! `(count(ab) - min_count) * vocab_size / (count(a) * count(b)) > threshold`.

use std::collections::HashMap;

pub const JOINER: char = '_';

#[derive(Debug, Clone)]
pub struct PhraseModel {
    unigram_counts: HashMap<String, u64>,
    bigram_counts: HashMap<String, HashMap<String, u64>>,
    pub vocab_size: usize,
    pub min_count: u64,
    pub threshold: f64,
}

impl PhraseModel {
    /// An untrained model; counts are added with [`PhraseModel::add_doc`].
    pub fn new(min_count: u64, threshold: f64) -> Self {
        assert!(min_count >= 1, "min_count must be at least 1");
        PhraseModel {
            unigram_counts: HashMap::new(),
            bigram_counts: HashMap::new(),
            vocab_size: 0,
            min_count,
            threshold,
        }
    }

    pub fn add_doc(&mut self, tokens: &[String]) {
        for t in tokens {
            let c = self.unigram_counts.entry(t.clone()).or_insert(0);
            if *c == 0 {
                self.vocab_size += 1;
            }
            *c += 1;
        }
        for pair in tokens.windows(2) {
            *self
                .bigram_counts
                .entry(pair[0].clone())
                .or_default()
                .entry(pair[1].clone())
                .or_insert(0) += 1;
        }
    }

    pub fn unigram_count(&self, term: &str) -> u64 {
        self.unigram_counts.get(term).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, a: &str, b: &str) -> u64 {
        self.bigram_counts
            .get(a)
            .and_then(|m| m.get(b))
            .copied()
            .unwrap_or(0)
    }

    /// Iterates all counted adjacent pairs.
    pub fn bigrams(&self) -> impl Iterator<Item = (&str, &str, u64)> {
        self.bigram_counts
            .iter()
            .flat_map(|(a, m)| m.iter().map(move |(b, c)| (a.as_str(), b.as_str(), *c)))
    }

    /// Collocation score, or `None` when the pair is below `min_count`.
    pub fn score(&self, a: &str, b: &str) -> Option<f64> {
        let ab = self.bigram_count(a, b);
        if ab < self.min_count {
            return None;
        }
        let ca = self.unigram_count(a) as f64;
        let cb = self.unigram_count(b) as f64;
        Some((ab - self.min_count) as f64 * self.vocab_size as f64 / (ca * cb))
    }

    pub fn is_promotable(&self, a: &str, b: &str) -> bool {
        self.score(a, b).is_some_and(|s| s > self.threshold)
    }
}

/// Counts unigrams and adjacent pairs over the corpus.
pub fn train_phrases(docs: &[Vec<String>], min_count: u64, threshold: f64) -> PhraseModel {
    let mut model = PhraseModel::new(min_count, threshold);
    for doc in docs {
        model.add_doc(doc);
    }
    model
}

/// Greedy left-to-right merging, repeated `passes` times over its own output.
pub fn apply_phrases(tokens: &[String], model: &PhraseModel, passes: usize) -> Vec<String> {
    assert!(passes >= 1, "passes must be at least 1");
    let mut cur = tokens.to_vec();
    for _ in 0..passes {
        let mut out = Vec::with_capacity(cur.len());
        let mut i = 0;
        while i < cur.len() {
            if i + 1 < cur.len() && model.is_promotable(&cur[i], &cur[i + 1]) {
                out.push(format!("{}{JOINER}{}", cur[i], cur[i + 1]));
                i += 2;
            } else {
                out.push(std::mem::take(&mut cur[i]));
                i += 1;
            }
        }
        cur = out;
    }
    cur
}
