//! Default resource files bundled into the binary. Every one of them can be
//! replaced from the command line or the run configuration.

use crate::corpus::KeywordSet;
use crate::ner::Gazetteers;
use crate::preprocess::{Lexicon, StopwordList};
use crate::text::parse_list;

pub const STOPWORDS_PT: &str = include_str!("../data/stopwords_pt.txt");
pub const LEXICON_PT: &str = include_str!("../data/lexicon_pt.tsv");
pub const KEYWORDS_PT: &str = include_str!("../data/keywords_pt.txt");
pub const DRUGS_PT: &str = include_str!("../data/drugs_pt.txt");
pub const DISEASES_PT: &str = include_str!("../data/diseases_pt.txt");

pub fn stopwords() -> StopwordList {
    StopwordList::parse(STOPWORDS_PT)
}

pub fn lexicon() -> Lexicon {
    Lexicon::parse(LEXICON_PT).expect("bundled lexicon is well formed")
}

pub fn keywords() -> KeywordSet {
    KeywordSet::new(parse_list(KEYWORDS_PT)).expect("bundled keyword list is valid")
}

pub fn gazetteers() -> Gazetteers {
    Gazetteers::new(
        parse_list(DRUGS_PT),
        parse_list(DISEASES_PT),
        parse_list(KEYWORDS_PT),
    )
}
