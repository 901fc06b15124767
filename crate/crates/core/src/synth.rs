//! Seeded synthetic corpora with known ground truth, used by the test
//! suites and to regenerate the bundled fixtures.

use chrono::{DateTime, Duration, TimeZone, Utc};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Post;
use crate::ner::{bio_from_spans, EntitySpan, Label, TaggedSentence};
use crate::preprocess::ProcessedDoc;

const FILLER: &[&str] = &[
    "o", "a", "de", "que", "não", "vírus", "remédio", "governo", "escola", "vacina", "casa", "hoje",
    "amanhã", "quando", "como", "ninguém", "Brasil", "São", "Paulo", "máscara", "hospital", "teste",
    "3.5", "10", "mil", "pessoas", "cura", "funciona", "vai", "acabar", "quarentena", "covid",
    "cloroquina", "isolamento", "pandemia", "é", "para", "com", "um", "mais",
];

const QUESTION_ENDS: &[&str] = &["?", "??", "?!", "!?", "?...", "...?", "?”", "?)"];
const STATEMENT_ENDS: &[&str] = &[".", "!", "...", "…", "!!", ".”"];

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2020, 3, 1, 0, 0, 0).unwrap()
}

fn body(rng: &mut ChaCha8Rng, min: usize, max: usize) -> String {
    let n = rng.gen_range(min..=max);
    let mut words: Vec<String> = (0..n).map(|_| FILLER.choose(rng).unwrap().to_string()).collect();
    words[0] = capitalize(&words[0]);
    words.join(" ")
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

/// A post together with the questions planted in it, as `(sentence index,
/// sentence text)`.
#[derive(Debug, Clone)]
pub struct PlantedPost {
    pub post: Post,
    pub questions: Vec<(usize, String)>,
}

/// Posts of one to five sentences totalling `n_sentences`. Roughly 40% of
/// sentences end in a terminator run containing `?`; the last sentence of a
/// post sometimes has no terminator at all.
pub fn question_corpus(n_sentences: usize, seed: u64) -> Vec<PlantedPost> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut left = n_sentences;
    while left > 0 {
        let n = rng.gen_range(1..=5).min(left);
        left -= n;
        let mut sents = Vec::with_capacity(n);
        let mut questions = Vec::new();
        for i in 0..n {
            let b = body(&mut rng, 1, 9);
            let s = if rng.gen_bool(0.4) {
                let end = QUESTION_ENDS.choose(&mut rng).unwrap();
                questions.push(i);
                match *end {
                    "?”" => format!("“{b}?”"),
                    "?)" => format!("({b}?)"),
                    e => format!("{b}{e}"),
                }
            } else if i + 1 == n && rng.gen_bool(0.2) {
                b
            } else {
                match *STATEMENT_ENDS.choose(&mut rng).unwrap() {
                    ".”" => format!("“{b}.”"),
                    e => format!("{b}{e}"),
                }
            };
            sents.push(s);
        }
        let id = out.len().to_string();
        let post = Post {
            id,
            timestamp: base_time() + Duration::minutes(out.len() as i64),
            text: sents.join(" "),
            keywords: Vec::new(),
            lang_score: 0.0,
        };
        let questions = questions.into_iter().map(|i| (i, sents[i].clone())).collect();
        out.push(PlantedPost { post, questions });
    }
    out
}

/// Vocabulary of one theme in [`theme_corpus`].
pub fn theme_words(theme: usize, size: usize) -> Vec<String> {
    (0..size).map(|j| format!("tema{theme}x{j}")).collect()
}

/// Documents drawn from `themes` disjoint vocabularies of `theme_size`
/// words each; document `i` belongs to theme `i % themes`.
pub fn theme_corpus(themes: usize, theme_size: usize, docs_per_theme: usize, doc_len: usize, seed: u64) -> Vec<ProcessedDoc> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<Vec<String>> = (0..themes).map(|t| theme_words(t, theme_size)).collect();
    (0..themes * docs_per_theme)
        .map(|i| ProcessedDoc {
            doc_id: format!("d{i}"),
            tokens: (0..doc_len).map(|_| vocab[i % themes].choose(&mut rng).unwrap().clone()).collect(),
            timestamp: None,
        })
        .collect()
}

const DRUGS: &[&[&str]] = &[
    &["cloroquina"],
    &["hidroxicloroquina"],
    &["ivermectina"],
    &["tamiflu"],
    &["azitromicina"],
    &["chá", "de", "alho"],
    &["vitamina", "D"],
];
const DISEASES: &[&[&str]] = &[&["covid"], &["covid-19"], &["coronavírus"], &["dengue"], &["H1N1"], &["gripe", "espanhola"]];
const PEOPLE: &[&[&str]] = &[&["Bolsonaro"], &["Mandetta"], &["Doria"], &["Teich"], &["Luiz", "Henrique", "Mandetta"]];
const ORGS: &[&[&str]] = &[&["OMS"], &["Anvisa"], &["Fiocruz"], &["SUS"], &["Ministério", "da", "Saúde"]];

/// Templates for [`ner_corpus`]. Slots are `{DRUG}`, `{DIS}`, `{PER}` and
/// `{ORG}`; every other word is outside any entity.
const TEMPLATES: &[&str] = &[
    "{DRUG} cura {DIS} ?",
    "o {PER} disse que {DRUG} funciona contra {DIS} ?",
    "a {ORG} recomenda {DRUG} para {DIS} ?",
    "por que o {PER} defende {DRUG} ?",
    "a {ORG} aprovou {DRUG} ?",
    "{DIS} mata mais que {DIS} ?",
    "quem manda na {ORG} agora , o {PER} ?",
    "alguém sabe se {DRUG} previne {DIS} ?",
    "o {PER} vai falar com a {ORG} sobre {DIS} ?",
    "tomar {DRUG} e {DRUG} junto faz mal ?",
    "é verdade que {DIS} tem cura ?",
    "o que a {ORG} acha do {PER} ?",
    "quando o comércio vai reabrir com {DIS} ?",
    "o lockdown e a quarentena ajudam contra {DIS} ?",
    "o teste e o exame detectam {DIS} ?",
    "a vacina contra {DIS} sai quando ?",
    "a escola e o trabalho param por causa do {DIS} segundo o {PER} ?",
];

fn slot_fillers(slot: &str) -> Option<(Label, &'static [&'static [&'static str]])> {
    match slot {
        "{DRUG}" => Some((Label::Drug, DRUGS)),
        "{DIS}" => Some((Label::Dis, DISEASES)),
        "{PER}" => Some((Label::Per, PEOPLE)),
        "{ORG}" => Some((Label::Org, ORGS)),
        _ => None,
    }
}

/// Template sentences whose tags follow from the filler lists: no word is
/// used both inside and outside an entity.
pub fn ner_corpus(n: usize, seed: u64) -> Vec<TaggedSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let template = TEMPLATES.choose(&mut rng).unwrap();
            let mut tokens = Vec::new();
            let mut spans = Vec::new();
            for part in template.split_whitespace() {
                match slot_fillers(part) {
                    Some((label, fillers)) => {
                        let words = fillers.choose(&mut rng).unwrap();
                        let start = tokens.len();
                        tokens.extend(words.iter().map(|w| w.to_string()));
                        spans.push(EntitySpan { start, end: tokens.len(), label });
                    }
                    None => tokens.push(part.to_string()),
                }
            }
            let tags = bio_from_spans(&spans, tokens.len());
            TaggedSentence { tokens, tags }
        })
        .collect()
}

/// `n` JSONL posts without a `keywords` field, each mentioning one
/// collection keyword, about half of them containing a question.
pub fn bulk_posts_jsonl(n: usize, seed: u64) -> String {
    const KEYWORDS: &[&str] = &["covid", "quarentena", "cloroquina", "isolamento", "pandemia", "coronavírus"];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::with_capacity(n * 140);
    for i in 0..n {
        let kw = KEYWORDS.choose(&mut rng).unwrap();
        let mut text = format!("{} {kw} {}", body(&mut rng, 2, 6), body(&mut rng, 1, 4).to_lowercase());
        text.push_str(if rng.gen_bool(0.5) { "?" } else { "." });
        if rng.gen_bool(0.5) {
            text.push(' ');
            text.push_str(&body(&mut rng, 2, 8));
            text.push_str(if rng.gen_bool(0.3) { "?!" } else { "!" });
        }
        let ts = base_time() + Duration::seconds((i as i64 * 7) % (86_400 * 120));
        out.push_str(&format!(
            "{{\"id\":\"{i}\",\"timestamp\":\"{}\",\"text\":{}}}\n",
            ts.format("%Y-%m-%dT%H:%M:%SZ"),
            serde_json::to_string(&text).expect("string serializes")
        ));
    }
    out
}

const FIXTURE_THEMES: &[&[&str]] = &[
    &["cloroquina", "tratamento", "remédio", "médico", "receita", "ivermectina", "dose", "farmácia"],
    &["quarentena", "escola", "aula", "comércio", "reabrir", "lockdown", "shopping", "trabalho"],
    &["vacina", "teste", "exame", "sintoma", "febre", "tosse", "covid", "laboratório"],
];
const FIXTURE_GLUE: &[&str] = &["a", "o", "de", "que", "para", "com", "não", "é", "vai", "quando", "será", "se"];
const FIXTURE_ENGLISH: &[&str] = &[
    "is the lockdown over yet?",
    "covid numbers look bad today.",
    "why is quarantine taking so long?",
    "does hydroxychloroquine work against covid?",
];

/// Small two-month corpus with three question themes, some statements,
/// English posts the language filter should drop, a duplicate id and two
/// malformed lines. Returned as JSONL text.
pub fn fixture_posts_jsonl(n: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut lines = Vec::with_capacity(n + 3);
    let sentence = |rng: &mut ChaCha8Rng, theme: &[&str], end: &str| {
        let mut words = Vec::new();
        for _ in 0..rng.gen_range(3..=6) {
            words.push(*FIXTURE_GLUE.choose(rng).unwrap());
            words.push(*theme.choose(rng).unwrap());
        }
        capitalize(&(words.join(" ") + end))
    };
    for i in 0..n {
        let ts = base_time() + Duration::minutes(i as i64 * (61 * 24 * 60) / n as i64);
        let text = if i % 17 == 5 {
            FIXTURE_ENGLISH[i % FIXTURE_ENGLISH.len()].to_string()
        } else {
            let theme = FIXTURE_THEMES[rng.gen_range(0..FIXTURE_THEMES.len())];
            let mut parts = Vec::new();
            if rng.gen_bool(0.4) {
                parts.push(sentence(&mut rng, theme, "."));
            }
            if rng.gen_bool(0.35) {
                let t = ner_corpus(1, rng.gen()).remove(0);
                parts.push(capitalize(&t.tokens.join(" ").replace(" ?", "?").replace(" ,", ",")));
            } else {
                let end = if rng.gen_bool(0.85) { "?" } else { "!" };
                parts.push(sentence(&mut rng, theme, end));
            }
            if rng.gen_bool(0.3) {
                parts.push(format!("https://t.co/x{i}?s=1"));
            }
            if rng.gen_bool(0.2) {
                parts.insert(0, "RT @usuario:".to_string());
            }
            parts.join(" ")
        };
        lines.push(format!(
            "{{\"id\":\"p{i}\",\"timestamp\":\"{}\",\"text\":{}}}",
            ts.format("%Y-%m-%dT%H:%M:%SZ"),
            serde_json::to_string(&text).expect("string serializes")
        ));
    }
    lines.insert(n / 3, "{\"id\":\"broken\",\"timestamp\":\"2020-03-10T10:00:00Z\"}".to_string());
    lines.insert(n / 2, "not json at all".to_string());
    lines.push(lines[1].clone());
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
