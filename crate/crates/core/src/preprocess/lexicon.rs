use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::phrases::JOINER;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pos {
    Noun,
    Adj,
    Verb,
    Adv,
    Other,
}

impl Pos {
    /// Nouns, adjectives, verbs and adverbs: the classes kept for topic modeling.
    pub const CONTENT: [Pos; 4] = [Pos::Noun, Pos::Adj, Pos::Verb, Pos::Adv];
}

impl FromStr for Pos {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_uppercase().as_str() {
            "NOUN" => Ok(Pos::Noun),
            "ADJ" => Ok(Pos::Adj),
            "VERB" => Ok(Pos::Verb),
            "ADV" => Ok(Pos::Adv),
            "OTHER" => Ok(Pos::Other),
            other => Err(format!("unknown part of speech {other:?}")),
        }
    }
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pos::Noun => "NOUN",
            Pos::Adj => "ADJ",
            Pos::Verb => "VERB",
            Pos::Adv => "ADV",
            Pos::Other => "OTHER",
        })
    }
}

/// Surface form to (lemma, part of speech). Keys are lowercased on load and
/// on lookup; diacritics are kept.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, (String, Pos)>,
}

impl Lexicon {
    pub fn insert(&mut self, form: &str, lemma: &str, pos: Pos) {
        self.entries
            .insert(form.to_lowercase(), (lemma.to_lowercase(), pos));
    }

    pub fn lookup(&self, form: &str) -> Option<(&str, Pos)> {
        let hit = match self.entries.get(form) {
            Some(e) => Some(e),
            None => self.entries.get(&form.to_lowercase()),
        };
        hit.map(|(l, p)| (l.as_str(), *p))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `form<TAB>lemma<TAB>pos` lines; `#` comments and blank lines skipped.
    pub fn parse(content: &str) -> Result<Self> {
        let mut lex = Lexicon::default();
        for (i, line) in content.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Parse {
                    line: i + 1,
                    reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
                });
            }
            let pos = fields[2].parse::<Pos>().map_err(|reason| Error::Parse {
                line: i + 1,
                reason,
            })?;
            lex.insert(fields[0].trim(), fields[1].trim(), pos);
        }
        Ok(lex)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&content)
    }
}

/// Replaces known forms by their lemma and drops those whose part of speech
/// is not allowed. Unknown tokens are treated as nouns; phrase tokens pass
/// through untouched.
pub fn lemmatize_filter(tokens: Vec<String>, lexicon: &Lexicon, allowed: &[Pos]) -> Vec<String> {
    tokens
        .into_iter()
        .filter_map(|tok| {
            if tok.contains(JOINER) {
                return Some(tok);
            }
            match lexicon.lookup(&tok) {
                Some((lemma, pos)) => allowed.contains(&pos).then(|| lemma.to_string()),
                None => allowed.contains(&Pos::Noun).then_some(tok),
            }
        })
        .collect()
}
