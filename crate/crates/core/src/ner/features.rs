use std::collections::BTreeSet;

use crate::text::fold;

use super::Tag;

/// Term lists consulted as binary features. Entries are stored folded;
/// lookups fold the token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Gazetteers {
    pub drugs: BTreeSet<String>,
    pub diseases: BTreeSet<String>,
    pub keywords: BTreeSet<String>,
}

impl Gazetteers {
    pub fn new<I, J, K>(drugs: I, diseases: J, keywords: K) -> Self
    where
        I: IntoIterator,
        I::Item: AsRef<str>,
        J: IntoIterator,
        J::Item: AsRef<str>,
        K: IntoIterator,
        K::Item: AsRef<str>,
    {
        let f = |x: &str| fold(x.trim());
        Gazetteers {
            drugs: drugs.into_iter().map(|s| f(s.as_ref())).collect(),
            diseases: diseases.into_iter().map(|s| f(s.as_ref())).collect(),
            keywords: keywords.into_iter().map(|s| f(s.as_ref())).collect(),
        }
    }

    fn flags(&self, folded: &str) -> impl Iterator<Item = &'static str> + '_ {
        [
            (self.drugs.contains(folded), "gaz=drug"),
            (self.diseases.contains(folded), "gaz=dis"),
            (self.keywords.contains(folded), "gaz=kw"),
        ]
        .into_iter()
        .filter_map(|(hit, name)| hit.then_some(name))
    }
}

/// Character classes with repeats collapsed: "Cloroquina" is `Xx+`,
/// "COVID-19" is `X+-d+`.
pub fn word_shape(word: &str) -> String {
    let mut out = String::new();
    let mut last: Option<char> = None;
    let mut repeated = false;
    for c in word.chars() {
        let class = if c.is_uppercase() {
            'X'
        } else if c.is_lowercase() {
            'x'
        } else if c.is_numeric() {
            'd'
        } else if c == '-' {
            '-'
        } else {
            '.'
        };
        if Some(class) == last {
            if !repeated {
                out.push('+');
                repeated = true;
            }
        } else {
            out.push(class);
            last = Some(class);
            repeated = false;
        }
    }
    out
}

fn prefix(s: &str, n: usize) -> Option<&str> {
    s.char_indices().nth(n).map(|(i, _)| &s[..i]).or((s.chars().count() == n).then_some(s))
}

fn suffix(s: &str, n: usize) -> Option<&str> {
    let len = s.chars().count();
    (len >= n).then(|| {
        let skip = s.char_indices().nth(len - n).map_or(s.len(), |(i, _)| i);
        &s[skip..]
    })
}

/// Sparse features for token `i` given the previously assigned tag (`None`
/// at sentence start).
pub fn featurize<S: AsRef<str>>(tokens: &[S], i: usize, prev: Option<Tag>, gaz: &Gazetteers) -> Vec<String> {
    let word = tokens[i].as_ref();
    let lower = word.to_lowercase();
    let folded = fold(word);
    let prev = prev.map_or_else(|| "<BOS>".to_string(), |t| t.to_string());
    let ctx = |offset: isize| -> String {
        let j = i as isize + offset;
        if j < 0 {
            "<BOS>".into()
        } else if j as usize >= tokens.len() {
            "<EOS>".into()
        } else {
            tokens[j as usize].as_ref().to_lowercase()
        }
    };

    let mut f = Vec::with_capacity(24);
    f.push("bias".to_string());
    f.push(format!("w={lower}"));
    for n in 1..=3 {
        if let Some(p) = prefix(&lower, n) {
            f.push(format!("p{n}={p}"));
        }
        if let Some(s) = suffix(&lower, n) {
            f.push(format!("s{n}={s}"));
        }
    }
    f.push(format!("shape={}", word_shape(word)));
    f.push(format!("w-1={}", ctx(-1)));
    f.push(format!("w-2={}", ctx(-2)));
    f.push(format!("w+1={}", ctx(1)));
    f.push(format!("w+2={}", ctx(2)));
    f.push(format!("prev_w={prev}|{lower}"));
    f.push(format!("prev={prev}"));
    f.extend(gaz.flags(&folded).map(str::to_string));
    if i + 1 < tokens.len() {
        let next = fold(tokens[i + 1].as_ref());
        f.extend(gaz.flags(&next).map(|g| format!("next_{g}")));
    }
    if i == 0 {
        f.push("first".to_string());
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ner::Label;

    fn gaz() -> Gazetteers {
        Gazetteers::new(["cloroquina"], ["covid"], ["cloroquina", "covid"])
    }

    #[test]
    fn shapes() {
        assert_eq!(word_shape("Cloroquina"), "Xx+");
        assert_eq!(word_shape("COVID-19"), "X+-d+");
        assert_eq!(word_shape("a"), "x");
        assert_eq!(word_shape("OMS?"), "X+.");
        assert_eq!(word_shape(""), "");
    }

    #[test]
    fn prefixes_and_suffixes_count_chars() {
        assert_eq!(prefix("chá", 3), Some("chá"));
        assert_eq!(prefix("chá", 4), None);
        assert_eq!(suffix("chá", 2), Some("há"));
        assert_eq!(suffix("é", 2), None);
    }

    #[test]
    fn first_token_features() {
        let f = featurize(&["Cloroquina", "funciona"], 0, None, &gaz());
        assert!(f.contains(&"prev=<BOS>".to_string()));
        assert!(f.contains(&"first".to_string()));
        assert!(f.contains(&"shape=Xx+".to_string()));
        assert!(f.contains(&"gaz=drug".to_string()));
        assert!(f.contains(&"gaz=kw".to_string()));
        assert!(f.contains(&"w-1=<BOS>".to_string()));
        assert!(f.contains(&"w+1=funciona".to_string()));
        assert!(f.contains(&"w+2=<EOS>".to_string()));
    }

    #[test]
    fn previous_tag_features() {
        let f = featurize(&["a", "Covid"], 1, Some(Tag::B(Label::Dis)), &gaz());
        assert!(f.contains(&"prev=B-DIS".to_string()));
        assert!(f.contains(&"prev_w=B-DIS|covid".to_string()));
        assert!(f.contains(&"gaz=dis".to_string()));
        assert!(!f.contains(&"first".to_string()));
    }

    #[test]
    fn featurize_is_deterministic() {
        let toks = ["Chá", "de", "alho", "cura", "coronavírus", "?"];
        for i in 0..toks.len() {
            assert_eq!(featurize(&toks, i, Some(Tag::O), &gaz()), featurize(&toks, i, Some(Tag::O), &gaz()));
        }
    }
}
