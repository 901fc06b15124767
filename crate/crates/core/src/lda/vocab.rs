use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::preprocess::ProcessedDoc;

/// Dense term ids in `[0, V)`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    term_to_id: HashMap<String, usize>,
    id_to_term: Vec<String>,
}

impl From<Vec<String>> for Vocabulary {
    fn from(terms: Vec<String>) -> Self {
        let mut v = Vocabulary::default();
        for t in terms {
            v.intern(&t);
        }
        v
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Self {
        v.id_to_term
    }
}

impl Vocabulary {
    pub fn intern(&mut self, term: &str) -> usize {
        if let Some(&id) = self.term_to_id.get(term) {
            return id;
        }
        let id = self.id_to_term.len();
        self.term_to_id.insert(term.to_string(), id);
        self.id_to_term.push(term.to_string());
        id
    }

    pub fn id(&self, term: &str) -> Option<usize> {
        self.term_to_id.get(term).copied()
    }

    pub fn term(&self, id: usize) -> &str {
        &self.id_to_term[id]
    }

    pub fn terms(&self) -> &[String] {
        &self.id_to_term
    }

    pub fn len(&self) -> usize {
        self.id_to_term.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_term.is_empty()
    }
}

/// A document as vocabulary ids, repetitions kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowDoc {
    pub doc_id: String,
    pub token_ids: Vec<usize>,
}

/// Keeps terms whose document frequency lies in `[min_df, max_df_ratio * D]`.
/// Ids follow first appearance; documents emptied by the filter are kept.
pub fn build_vocabulary(docs: &[ProcessedDoc], min_df: usize, max_df_ratio: f64) -> (Vocabulary, Vec<BowDoc>) {
    assert!(min_df >= 1, "min_df must be at least 1");
    assert!(max_df_ratio > 0.0 && max_df_ratio <= 1.0, "max_df_ratio must lie in (0, 1]");
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
        seen.sort_unstable();
        seen.dedup();
        for t in seen {
            *df.entry(t).or_insert(0) += 1;
        }
    }
    let max_df = max_df_ratio * docs.len() as f64;
    let keep = |t: &str| {
        let n = df[t];
        n >= min_df && n as f64 <= max_df
    };

    let mut vocab = Vocabulary::default();
    let bows = docs
        .iter()
        .map(|doc| BowDoc {
            doc_id: doc.doc_id.clone(),
            token_ids: doc
                .tokens
                .iter()
                .filter(|t| keep(t))
                .map(|t| vocab.intern(t))
                .collect(),
        })
        .collect();
    (vocab, bows)
}
