use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::features::{featurize, Gazetteers};
use super::{Tag, TaggedSentence, NUM_TAGS};

const MODEL_HEADER: &str = "#qmine-ner\tv1";

type Row = [f64; NUM_TAGS];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 10, seed: 0 }
    }
}

/// Averaged weights plus the gazetteers the features were computed with.
#[derive(Debug, Clone, PartialEq)]
pub struct NerModel {
    pub weights: HashMap<String, Row>,
    pub gazetteers: Gazetteers,
    pub epochs: usize,
    pub seed: u64,
    /// Decoding mistakes in each epoch that ran; training stops after the
    /// first epoch without mistakes.
    pub mistakes_per_epoch: Vec<usize>,
}

/// Perceptron weights with lazily maintained running sums. The average is
/// over training steps: one step per token visited, whether or not it
/// triggered an update.
struct Averaged {
    index: HashMap<String, usize>,
    w: Vec<Row>,
    totals: Vec<Row>,
    stamps: Vec<[u64; NUM_TAGS]>,
    steps: u64,
}

impl Averaged {
    fn new() -> Self {
        Averaged {
            index: HashMap::new(),
            w: Vec::new(),
            totals: Vec::new(),
            stamps: Vec::new(),
            steps: 0,
        }
    }

    fn scores(&self, feats: &[String]) -> Row {
        let mut s = [0.0; NUM_TAGS];
        for f in feats {
            if let Some(&i) = self.index.get(f) {
                for (acc, w) in s.iter_mut().zip(&self.w[i]) {
                    *acc += w;
                }
            }
        }
        s
    }

    fn bump(&mut self, feat: &str, tag: usize, delta: f64) {
        let i = match self.index.get(feat) {
            Some(&i) => i,
            None => {
                let i = self.w.len();
                self.index.insert(feat.to_string(), i);
                self.w.push([0.0; NUM_TAGS]);
                self.totals.push([0.0; NUM_TAGS]);
                self.stamps.push([0; NUM_TAGS]);
                i
            }
        };
        self.totals[i][tag] += (self.steps - self.stamps[i][tag]) as f64 * self.w[i][tag];
        self.stamps[i][tag] = self.steps;
        self.w[i][tag] += delta;
    }

    fn update(&mut self, feats: &[String], gold: Tag, guess: Tag) {
        for f in feats {
            self.bump(f, gold.index(), 1.0);
            self.bump(f, guess.index(), -1.0);
        }
    }

    fn tick(&mut self) {
        self.steps += 1;
    }

    fn finish(self) -> HashMap<String, Row> {
        let c = self.steps;
        let mut out = HashMap::new();
        for (feat, i) in self.index {
            let mut row = [0.0; NUM_TAGS];
            for t in 0..NUM_TAGS {
                row[t] = if c == 0 {
                    self.w[i][t]
                } else {
                    (self.totals[i][t] + (c - self.stamps[i][t]) as f64 * self.w[i][t]) / c as f64
                };
            }
            if row.iter().any(|&x| x != 0.0) {
                out.insert(feat, row);
            }
        }
        out
    }
}

/// Highest-scoring tag allowed after `prev`; ties go to the earlier tag.
fn best_tag(scores: &Row, prev: Option<Tag>) -> Tag {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !Tag::from_index(i).may_follow(prev) {
            continue;
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    Tag::from_index(best.expect("O is always allowed").0)
}

fn decode<S: AsRef<str>>(tokens: &[S], gaz: &Gazetteers, scores: impl Fn(&[String]) -> Row) -> Vec<Tag> {
    let mut tags = Vec::with_capacity(tokens.len());
    let mut prev = None;
    for i in 0..tokens.len() {
        let feats = featurize(tokens, i, prev, gaz);
        let tag = best_tag(&scores(&feats), prev);
        tags.push(tag);
        prev = Some(tag);
    }
    tags
}

/// Averaged structured perceptron. Each epoch visits the sentences in a
/// seeded random order and decodes greedily with the current weights; at a
/// wrong tag the gold tag's features gain 1 and the guess's lose 1.
pub fn train(data: &[TaggedSentence], cfg: TrainConfig, gazetteers: Gazetteers) -> Result<NerModel> {
    if data.is_empty() {
        return Err(Error::EmptyCorpus("no training sentences".into()));
    }
    if cfg.epochs < 1 {
        return Err(Error::InvalidParam("epochs must be at least 1".into()));
    }
    if let Some(s) = data.iter().find(|s| s.tokens.len() != s.tags.len()) {
        return Err(Error::InvalidParam(format!(
            "sentence with {} tokens has {} tags",
            s.tokens.len(),
            s.tags.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut model = Averaged::new();
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut mistakes_per_epoch = Vec::new();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &s in &order {
            let sent = &data[s];
            let mut prev = None;
            for i in 0..sent.tokens.len() {
                let feats = featurize(&sent.tokens, i, prev, &gazetteers);
                let guess = best_tag(&model.scores(&feats), prev);
                let gold = sent.tags[i];
                if guess != gold {
                    model.update(&feats, gold, guess);
                    mistakes += 1;
                }
                model.tick();
                prev = Some(guess);
            }
        }
        mistakes_per_epoch.push(mistakes);
        if mistakes == 0 {
            break;
        }
    }
    Ok(NerModel {
        weights: model.finish(),
        gazetteers,
        epochs: cfg.epochs,
        seed: cfg.seed,
        mistakes_per_epoch,
    })
}

/// Greedy left-to-right tagging. `I-X` is never emitted unless the previous
/// tag is `B-X` or `I-X`.
pub fn predict<S: AsRef<str>>(model: &NerModel, tokens: &[S]) -> Vec<Tag> {
    model.predict(tokens)
}

impl NerModel {
    pub fn scores(&self, feats: &[String]) -> Row {
        let mut s = [0.0; NUM_TAGS];
        for f in feats {
            if let Some(row) = self.weights.get(f) {
                for (acc, w) in s.iter_mut().zip(row) {
                    *acc += w;
                }
            }
        }
        s
    }

    pub fn predict<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Tag> {
        decode(tokens, &self.gazetteers, |f| self.scores(f))
    }

    /// Tab-separated listing of metadata, gazetteers and `(feature, tag,
    /// weight)` triples, sorted so the file is byte-stable.
    pub fn save<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{MODEL_HEADER}")?;
        writeln!(w, "epochs\t{}", self.epochs)?;
        writeln!(w, "seed\t{}", self.seed)?;
        let m: Vec<String> = self.mistakes_per_epoch.iter().map(usize::to_string).collect();
        writeln!(w, "mistakes\t{}", m.join(","))?;
        for (name, set) in [
            ("drug", &self.gazetteers.drugs),
            ("disease", &self.gazetteers.diseases),
            ("keyword", &self.gazetteers.keywords),
        ] {
            for entry in set {
                writeln!(w, "gaz\t{name}\t{entry}")?;
            }
        }
        let mut feats: Vec<&String> = self.weights.keys().collect();
        feats.sort();
        for f in feats {
            for (t, &x) in self.weights[f].iter().enumerate() {
                if x != 0.0 {
                    writeln!(w, "w\t{f}\t{}\t{x}", Tag::from_index(t))?;
                }
            }
        }
        Ok(())
    }

    pub fn load<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines().enumerate();
        match lines.next() {
            Some((_, Ok(h))) if h == MODEL_HEADER => {}
            _ => return Err(Error::Model("missing model header".into())),
        }
        let mut model = NerModel {
            weights: HashMap::new(),
            gazetteers: Gazetteers::default(),
            epochs: 0,
            seed: 0,
            mistakes_per_epoch: Vec::new(),
        };
        let (mut drugs, mut diseases, mut keywords) = (BTreeSet::new(), BTreeSet::new(), BTreeSet::new());
        for (i, line) in lines {
            let line = line?;
            let bad = |reason: String| Error::Parse { line: i + 1, reason };
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["epochs", n] => model.epochs = n.parse().map_err(|e| bad(format!("{e}")))?,
                ["seed", n] => model.seed = n.parse().map_err(|e| bad(format!("{e}")))?,
                ["mistakes", list] => {
                    model.mistakes_per_epoch = list
                        .split(',')
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse().map_err(|e| bad(format!("{e}"))))
                        .collect::<Result<_>>()?
                }
                ["gaz", "drug", e] => {
                    drugs.insert(e.to_string());
                }
                ["gaz", "disease", e] => {
                    diseases.insert(e.to_string());
                }
                ["gaz", "keyword", e] => {
                    keywords.insert(e.to_string());
                }
                ["w", feat, tag, x] => {
                    let tag: Tag = tag.parse().map_err(bad)?;
                    let x: f64 = x.parse().map_err(|e| bad(format!("{e}")))?;
                    if !x.is_finite() {
                        return Err(bad("non-finite weight".into()));
                    }
                    model.weights.entry(feat.to_string()).or_insert([0.0; NUM_TAGS])[tag.index()] = x;
                }
                [""] => {}
                _ => return Err(bad(format!("unrecognized line {line:?}"))),
            }
        }
        model.gazetteers = Gazetteers { drugs, diseases, keywords };
        Ok(model)
    }
}
