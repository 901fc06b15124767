//! The end-to-end run behind `qmine run`, writing every artifact under one
//! output directory:
//!
//! ```text
//! out/posts/      posts.jsonl, errors.tsv
//! out/questions/  questions.jsonl, entities.jsonl
//! out/docs/       docs.jsonl
//! out/sweeps/     sweep_<month>.tsv
//! out/models/     lda_<month>.json, ner.tsv
//! out/reports/    keywords.tsv, timeseries.tsv, topics.tsv, topic_terms.tsv,
//!                 entities.tsv, ner_eval.tsv
//! ```
//!
//! Seeds derive from the root seed: the LDA fit for topic count `K` in the
//! `m`-th month (0-based, ascending) uses `root + K * 10007 + m`; the NER
//! split uses `root` and NER training `root + 1`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::coherence::{sweep, SweepConfig};
use crate::config::RunConfig;
use crate::corpus::{dedup_by_id, filter_language, parse_posts, write_posts, KeywordSet, LineError, Post};
use crate::error::{Error, Result};
use crate::lda::{build_vocabulary, derive_seed, fit, LdaModel};
use crate::ner::{self, evaluate, parse_conll, tag_text, ApplyRecord, Gazetteers, NerModel, TrainConfig};
use crate::preprocess::{Lexicon, Preprocessor, ProcessedDoc, RawDoc, StopwordList};
use crate::questions::{extract_all, write_questions, Question};
use crate::report;
use crate::resources;
use crate::text::read_list;

/// Seed offset for NER training relative to the root seed.
pub const NER_TRAIN_SEED_OFFSET: u64 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub posts_read: usize,
    pub line_errors: usize,
    pub posts_kept: usize,
    pub questions: usize,
    pub months: Vec<(String, usize)>,
    pub ner_macro_f1: Option<f64>,
}

/// Stopwords, lexicon, keywords and gazetteers, either bundled or read from
/// the configured files.
pub struct Resources {
    pub stopwords: StopwordList,
    pub lexicon: Lexicon,
    pub keywords: KeywordSet,
    pub gazetteers: Gazetteers,
}

impl Resources {
    pub fn load(cfg: &RunConfig) -> Result<Self> {
        let stopwords = match &cfg.stopwords {
            Some(p) => StopwordList::load(p)?,
            None => resources::stopwords(),
        };
        let lexicon = match &cfg.lexicon {
            Some(p) => Lexicon::load(p)?,
            None => resources::lexicon(),
        };
        let keyword_list = match &cfg.keywords {
            Some(p) => read_list(p)?,
            None => crate::text::parse_list(resources::KEYWORDS_PT),
        };
        let list = |p: &Option<PathBuf>, bundled: &str| match p {
            Some(p) => read_list(p),
            None => Ok(crate::text::parse_list(bundled)),
        };
        let gazetteers = Gazetteers::new(
            list(&cfg.drugs, resources::DRUGS_PT)?,
            list(&cfg.diseases, resources::DISEASES_PT)?,
            &keyword_list,
        );
        Ok(Resources {
            stopwords,
            lexicon,
            keywords: KeywordSet::new(keyword_list)?,
            gazetteers,
        })
    }

    pub fn preprocessor(&self, cfg: &RunConfig) -> Preprocessor {
        let mut p = Preprocessor::new(self.stopwords.clone(), self.lexicon.clone());
        p.min_count = cfg.phrase_min_count;
        p.threshold = cfg.phrase_threshold;
        p.passes = cfg.phrase_passes;
        p
    }
}

pub(crate) fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

pub(crate) fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?))
}

pub(crate) fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parsing, deduplication, keyword and language filtering.
pub fn ingest(reader: impl std::io::BufRead, res: &Resources, lang_threshold: f64) -> Result<(Vec<Post>, Vec<LineError>, usize)> {
    let (posts, errors) = parse_posts(reader, &res.keywords)?;
    let read = posts.len();
    let posts: Vec<Post> = dedup_by_id(posts).into_iter().filter(|p| !p.keywords.is_empty()).collect();
    Ok((filter_language(posts, &res.stopwords, lang_threshold), errors, read))
}

pub fn write_line_errors<W: Write>(mut w: W, errors: &[LineError]) -> Result<()> {
    writeln!(w, "line\treason")?;
    for e in errors {
        writeln!(w, "{}\t{}", e.line_no, e.reason.replace(['\t', '\n'], " "))?;
    }
    Ok(())
}

pub fn preprocess_questions(questions: &[Question], pre: &Preprocessor) -> Vec<ProcessedDoc> {
    let raw: Vec<RawDoc> = questions
        .iter()
        .map(|q| RawDoc { doc_id: q.doc_id(), text: q.text.clone(), timestamp: Some(q.timestamp) })
        .collect();
    pre.run(&raw).0
}

pub fn write_docs<W: Write>(mut w: W, docs: &[ProcessedDoc]) -> Result<()> {
    for d in docs {
        serde_json::to_writer(&mut w, d)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_docs<R: std::io::BufRead>(r: R) -> Result<Vec<ProcessedDoc>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?);
    }
    Ok(out)
}

/// Documents grouped by `YYYY-MM` of their timestamp; undated documents
/// are skipped.
pub fn docs_by_month(docs: &[ProcessedDoc]) -> BTreeMap<String, Vec<ProcessedDoc>> {
    let mut out: BTreeMap<String, Vec<ProcessedDoc>> = BTreeMap::new();
    for d in docs {
        if let Some(t) = d.timestamp {
            out.entry(t.format("%Y-%m").to_string()).or_default().push(d.clone());
        }
    }
    out
}

pub fn sweep_config(cfg: &RunConfig, seed: u64, month_index: usize) -> SweepConfig {
    let mut lda = cfg.lda.clone();
    lda.seed = seed;
    SweepConfig {
        lda,
        top_n: cfg.top_n,
        window: cfg.window,
        min_df: cfg.min_df,
        max_df_ratio: cfg.max_df_ratio,
        month_index,
    }
}

/// Sweeps K for one month, then refits the selected K with the same
/// derived seed, which reproduces the sweep's model exactly.
pub fn model_month(docs: &[ProcessedDoc], cfg: &RunConfig, seed: u64, month_index: usize) -> Result<(crate::coherence::SweepResult, LdaModel)> {
    let sc = sweep_config(cfg, seed, month_index);
    let ks: Vec<usize> = (cfg.k_min..=cfg.k_max).collect();
    let result = sweep(docs, &ks, &sc)?;
    let (vocab, bows) = build_vocabulary(docs, cfg.min_df, cfg.max_df_ratio);
    let mut params = cfg.lda.with_k(result.selected_k);
    params.seed = derive_seed(seed, result.selected_k, month_index);
    let model = fit(&bows, &vocab, &params)?;
    Ok((result, model))
}

pub fn apply_ner(model: &NerModel, questions: &[Question]) -> Vec<ApplyRecord> {
    use rayon::prelude::*;
    questions.par_iter().map(|q| tag_text(model, &q.doc_id(), &q.text)).collect()
}

pub fn write_records<W: Write>(mut w: W, records: &[ApplyRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let seed = cfg.seed.ok_or_else(|| Error::Config("a root seed is required".into()))?;
    let corpus = cfg.corpus.as_ref().ok_or_else(|| Error::Config("[paths] corpus is required".into()))?;
    info!("root seed {seed}");
    let out = &cfg.out_dir;
    let res = Resources::load(cfg)?;

    let (posts, errors, posts_read) = ingest(open(corpus)?, &res, cfg.lang_threshold)?;
    info!("{} posts kept of {posts_read}, {} malformed lines", posts.len(), errors.len());
    write_file(&out.join("posts/posts.jsonl"), |w| write_posts(w, &posts))?;
    write_file(&out.join("posts/errors.tsv"), |w| write_line_errors(w, &errors))?;

    let questions = extract_all(&posts);
    write_file(&out.join("questions/questions.jsonl"), |w| write_questions(w, &questions))?;

    let docs = preprocess_questions(&questions, &res.preprocessor(cfg));
    write_file(&out.join("docs/docs.jsonl"), |w| write_docs(w, &docs))?;

    let mut models = BTreeMap::new();
    let mut months = Vec::new();
    for (m, (month, month_docs)) in docs_by_month(&docs).into_iter().enumerate() {
        match model_month(&month_docs, cfg, seed, m) {
            Ok((sweep, model)) => {
                info!("{month}: selected K = {} (seed {})", sweep.selected_k, model.params.seed);
                write_file(&out.join(format!("sweeps/sweep_{month}.tsv")), |w| sweep.write_tsv(w))?;
                write_file(&out.join(format!("models/lda_{month}.json")), |w| model.save(w))?;
                months.push((month.clone(), sweep.selected_k));
                models.insert(month, model);
            }
            Err(Error::EmptyCorpus(why)) => warn!("{month}: skipped, {why}"),
            Err(e) => return Err(e),
        }
    }

    let mut ner_macro_f1 = None;
    let mut records = Vec::new();
    if let Some(path) = &cfg.ner_data {
        let data = parse_conll(open(path)?)?;
        let (train_set, test_set) = ner::split(&data, cfg.ner_train_ratio, seed);
        let train_seed = seed.wrapping_add(NER_TRAIN_SEED_OFFSET);
        info!("ner: {} train / {} test sentences, split seed {seed}, train seed {train_seed}", train_set.len(), test_set.len());
        let model = ner::train(&train_set, TrainConfig { epochs: cfg.ner_epochs, seed: train_seed }, res.gazetteers.clone())?;
        write_file(&out.join("models/ner.tsv"), |w| model.save(w))?;
        if !test_set.is_empty() {
            let report = evaluate(&model, &test_set);
            ner_macro_f1 = Some(report.macro_f1);
            write_file(&out.join("reports/ner_eval.tsv"), |w| report.write_tsv(w))?;
        }
        records = apply_ner(&model, &questions);
        write_file(&out.join("questions/entities.jsonl"), |w| write_records(w, &records))?;
    } else {
        info!("no NER training data configured, skipping entity recognition");
    }

    let reports = out.join("reports");
    write_file(&reports.join("keywords.tsv"), |w| report::keyword_histogram(&posts).write_tsv(w, "keyword"))?;
    write_file(&reports.join("timeseries.tsv"), |w| {
        report::write_daily_tsv(w, &report::daily_timeseries(&posts, &questions))
    })?;
    write_file(&reports.join("topics.tsv"), |w| {
        report::write_topic_month_tsv(w, &report::topic_month_distribution(&models))
    })?;
    write_file(&reports.join("topic_terms.tsv"), |w| report::write_topic_terms_tsv(w, &models, cfg.top_n))?;
    if cfg.ner_data.is_some() {
        write_file(&reports.join("entities.tsv"), |w| {
            report::write_entity_tsv(w, &report::entity_frequencies(&records))
        })?;
    }

    Ok(RunSummary {
        posts_read,
        line_errors: errors.len(),
        posts_kept: posts.len(),
        questions: questions.len(),
        months,
        ner_macro_f1,
    })
}
