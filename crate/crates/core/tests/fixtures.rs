//! The bundled fixtures are generator output. Set `QMINE_BLESS=1` to
//! rewrite them after changing a generator.

use std::path::PathBuf;

use qmine::ner::write_conll;
use qmine::synth::{fixture_posts_jsonl, ner_corpus};

pub const FIXTURE_POSTS: usize = 400;
pub const FIXTURE_NER_SENTENCES: usize = 250;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn check(name: &str, expected: &str) {
    let path = fixture(name);
    if std::env::var_os("QMINE_BLESS").is_some() {
        std::fs::write(&path, expected).unwrap();
    }
    let actual = std::fs::read_to_string(&path).unwrap_or_default();
    assert!(actual == expected, "{name} differs from its generator; rerun with QMINE_BLESS=1");
}

#[test]
fn posts_fixture_matches_generator() {
    check("posts.jsonl", &fixture_posts_jsonl(FIXTURE_POSTS, 2020));
}

#[test]
fn ner_fixture_matches_generator() {
    let mut out = Vec::new();
    write_conll(&mut out, &ner_corpus(FIXTURE_NER_SENTENCES, 2020)).unwrap();
    check("ner.conll", &String::from_utf8(out).unwrap());
}
