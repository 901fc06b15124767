//! Command-line front end. Every subcommand reads optional settings from
//! `--config`; explicit flags win over the file.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use crate::coherence::sweep;
use crate::config::RunConfig;
use crate::corpus::write_posts;
use crate::error::{Error, Result};
use crate::lda::{build_vocabulary, derive_seed, fit, LdaModel, LdaParams};
use crate::ner::{self, evaluate, parse_conll, write_conll, NerModel, TrainConfig};
use crate::pipeline::{
    self, apply_ner, create, docs_by_month, ingest, open, preprocess_questions, read_docs, sweep_config, write_docs,
    write_file, write_line_errors, write_records, Resources,
};
use crate::questions::{extract_all, read_questions, write_questions};
use crate::report;

#[derive(Debug, Parser)]
#[command(name = "qmine", version, about = "Question mining for social-media posts")]
#[command(arg_required_else_help = true)]
struct Cli {
    /// Configuration file with `key = value` lines under `[section]` headers.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct InOut {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct LdaFlags {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    lag: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_df: Option<usize>,
    #[arg(long)]
    max_df: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportKind {
    Keywords,
    Timeseries,
    Topics,
    Entities,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse JSONL posts, match keywords and keep Portuguese posts.
    Ingest {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        lang_threshold: Option<f64>,
        /// Where to list malformed input lines.
        #[arg(long)]
        errors: Option<PathBuf>,
    },
    /// Extract question sentences from ingested posts.
    Questions {
        #[command(flatten)]
        io: InOut,
    },
    /// Clean, tokenize, promote phrases and lemmatize questions.
    Preprocess {
        #[command(flatten)]
        io: InOut,
    },
    /// Fit one LDA model.
    LdaFit {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        lda: LdaFlags,
        /// Also write the top terms of every topic as TSV.
        #[arg(long)]
        topics_out: Option<PathBuf>,
        #[arg(long)]
        top_n: Option<usize>,
    },
    /// Score a range of topic counts by C_v coherence.
    LdaSweep {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        k_min: Option<usize>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        #[arg(long)]
        top_n: Option<usize>,
        #[command(flatten)]
        lda: LdaFlags,
        /// Sweep each month separately; `--out` is then a directory that
        /// receives `sweep_<month>.tsv` files.
        #[arg(long)]
        by_month: bool,
    },
    /// Train the entity tagger on CoNLL data.
    NerTrain {
        #[command(flatten)]
        io: InOut,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Hold out this share for testing and write it to `--test-out`.
        #[arg(long, requires = "test_out")]
        train_ratio: Option<f64>,
        #[arg(long)]
        test_out: Option<PathBuf>,
    },
    /// Score a tagger against gold CoNLL data.
    NerEval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tag question texts and write entity spans as JSONL.
    NerApply {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        io: InOut,
    },
    /// Write one plot-ready table.
    Report {
        kind: ReportKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        posts: Option<PathBuf>,
        #[arg(long)]
        questions: Option<PathBuf>,
        /// Directory of `lda_<month>.json` models.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Entity spans from `ner-apply`.
        #[arg(long)]
        entities: Option<PathBuf>,
    },
    /// Run the whole pipeline into an output directory.
    Run {
        /// Posts as JSONL; overrides `[paths] corpus`.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Output directory; overrides `[paths] out_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Root seed; overrides the config's `seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// CoNLL sentences for the entity tagger; without them NER is skipped.
        #[arg(long)]
        ner_data: Option<PathBuf>,
    },
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code: 0 on success, 1 on data or configuration errors, 2 on
/// usage errors.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn require_seed(seed: Option<u64>, cfg: &RunConfig) -> Result<u64> {
    seed.or(cfg.seed)
        .ok_or_else(|| Error::Config("this command needs a seed (--seed or `seed` in the config)".into()))
}

fn apply_lda_flags(cfg: &mut RunConfig, f: &LdaFlags) {
    if f.alpha.is_some() {
        cfg.lda.alpha = f.alpha;
    }
    if let Some(b) = f.beta {
        cfg.lda.beta = b;
    }
    if let Some(n) = f.iters {
        cfg.lda.iterations = n;
    }
    if let Some(n) = f.burn_in {
        cfg.lda.burn_in = n;
    }
    if let Some(n) = f.lag {
        cfg.lda.sample_lag = n;
    }
    if let Some(n) = f.min_df {
        cfg.min_df = n;
    }
    if let Some(r) = f.max_df {
        cfg.max_df_ratio = r;
    }
}

fn load_models(dir: &Path) -> Result<BTreeMap<String, LdaModel>> {
    let mut models = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if let Some(month) = name.strip_prefix("lda_").and_then(|n| n.strip_suffix(".json")) {
            models.insert(month.to_string(), LdaModel::load(open(&path)?)?);
        }
    }
    Ok(models)
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };

    match cli.command {
        Command::Ingest { io, lang_threshold, errors } => {
            if let Some(t) = lang_threshold {
                cfg.lang_threshold = t;
            }
            cfg.validate()?;
            let res = Resources::load(&cfg)?;
            let (posts, errs, read) = ingest(open(&io.input)?, &res, cfg.lang_threshold)?;
            for e in &errs {
                log::warn!("line {}: {}", e.line_no, e.reason);
            }
            info!("{} of {read} posts kept, {} malformed lines", posts.len(), errs.len());
            write_file(&io.out, |w| write_posts(w, &posts))?;
            if let Some(p) = errors {
                write_file(&p, |w| write_line_errors(w, &errs))?;
            }
        }
        Command::Questions { io } => {
            let res = Resources::load(&cfg)?;
            let (posts, errs) = crate::corpus::parse_posts(open(&io.input)?, &res.keywords)?;
            if let Some(e) = errs.first() {
                return Err(Error::Parse { line: e.line_no, reason: e.reason.clone() });
            }
            let questions = extract_all(&posts);
            info!("{} questions from {} posts", questions.len(), posts.len());
            write_file(&io.out, |w| write_questions(w, &questions))?;
        }
        Command::Preprocess { io } => {
            let res = Resources::load(&cfg)?;
            let questions = read_questions(open(&io.input)?)?;
            let docs = preprocess_questions(&questions, &res.preprocessor(&cfg));
            write_file(&io.out, |w| write_docs(w, &docs))?;
        }
        Command::LdaFit { io, k, lda, topics_out, top_n } => {
            apply_lda_flags(&mut cfg, &lda);
            let seed = require_seed(lda.seed, &cfg)?;
            cfg.validate()?;
            info!("lda-fit seed {seed}");
            let docs = read_docs(open(&io.input)?)?;
            let (vocab, bows) = build_vocabulary(&docs, cfg.min_df, cfg.max_df_ratio);
            let params = LdaParams { k, seed, ..cfg.lda.clone() };
            let model = fit(&bows, &vocab, &params)?;
            write_file(&io.out, |w| model.save(w))?;
            if let Some(p) = topics_out {
                let models = BTreeMap::from([("all".to_string(), model)]);
                write_file(&p, |w| report::write_topic_terms_tsv(w, &models, top_n.unwrap_or(cfg.top_n)))?;
            }
        }
        Command::LdaSweep { io, k_min, k_max, window, top_n, lda, by_month } => {
            apply_lda_flags(&mut cfg, &lda);
            cfg.k_min = k_min.unwrap_or(cfg.k_min);
            cfg.k_max = k_max.unwrap_or(cfg.k_max);
            cfg.window = window.unwrap_or(cfg.window);
            cfg.top_n = top_n.unwrap_or(cfg.top_n);
            let seed = require_seed(lda.seed, &cfg)?;
            cfg.validate()?;
            info!("lda-sweep root seed {seed}, fit seeds root + K * 10007 + month index");
            let docs = read_docs(open(&io.input)?)?;
            let ks: Vec<usize> = (cfg.k_min..=cfg.k_max).collect();
            if by_month {
                for (m, (month, month_docs)) in docs_by_month(&docs).into_iter().enumerate() {
                    let result = sweep(&month_docs, &ks, &sweep_config(&cfg, seed, m))?;
                    info!("{month}: selected K = {} (seed {})", result.selected_k, derive_seed(seed, result.selected_k, m));
                    write_file(&io.out.join(format!("sweep_{month}.tsv")), |w| result.write_tsv(w))?;
                }
            } else {
                let result = sweep(&docs, &ks, &sweep_config(&cfg, seed, 0))?;
                info!("selected K = {}", result.selected_k);
                write_file(&io.out, |w| result.write_tsv(w))?;
            }
        }
        Command::NerTrain { io, epochs, seed, train_ratio, test_out } => {
            let seed = require_seed(seed, &cfg)?;
            let epochs = epochs.unwrap_or(cfg.ner_epochs);
            let res = Resources::load(&cfg)?;
            let mut data = parse_conll(open(&io.input)?)?;
            let mut train_seed = seed;
            if let (Some(ratio), Some(test_path)) = (train_ratio, test_out) {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::InvalidParam(format!("train ratio {ratio} outside (0, 1)")));
                }
                let (train_set, test_set) = ner::split(&data, ratio, seed);
                write_file(&test_path, |w| write_conll(w, &test_set))?;
                data = train_set;
                train_seed = seed.wrapping_add(pipeline::NER_TRAIN_SEED_OFFSET);
                info!("ner-train split seed {seed}");
            }
            info!("ner-train seed {train_seed}");
            let model = ner::train(&data, TrainConfig { epochs, seed: train_seed }, res.gazetteers)?;
            info!("mistakes per epoch: {:?}", model.mistakes_per_epoch);
            write_file(&io.out, |w| model.save(w))?;
        }
        Command::NerEval { model, input, out } => {
            let model = NerModel::load(open(&model)?)?;
            let gold = parse_conll(open(&input)?)?;
            if gold.is_empty() {
                return Err(Error::EmptyCorpus("no gold sentences".into()));
            }
            let report = evaluate(&model, &gold);
            match out {
                Some(p) => write_file(&p, |w| report.write_tsv(w))?,
                None => report.write_tsv(std::io::stdout().lock())?,
            }
        }
        Command::NerApply { model, io } => {
            let model = NerModel::load(open(&model)?)?;
            let questions = read_questions(open(&io.input)?)?;
            let records = apply_ner(&model, &questions);
            write_file(&io.out, |w| write_records(w, &records))?;
        }
        Command::Report { kind, out, posts, questions, models, entities } => {
            let need = |p: Option<PathBuf>, flag: &str| {
                p.ok_or_else(|| Error::Config(format!("this report needs --{flag}")))
            };
            let read_posts = |p: PathBuf| -> Result<Vec<crate::corpus::Post>> {
                let res = Resources::load(&cfg)?;
                let (posts, errs) = crate::corpus::parse_posts(open(&p)?, &res.keywords)?;
                match errs.first() {
                    Some(e) => Err(Error::Parse { line: e.line_no, reason: e.reason.clone() }),
                    None => Ok(posts),
                }
            };
            match kind {
                ReportKind::Keywords => {
                    let posts = read_posts(need(posts, "posts")?)?;
                    write_file(&out, |w| report::keyword_histogram(&posts).write_tsv(w, "keyword"))?;
                }
                ReportKind::Timeseries => {
                    let posts = read_posts(need(posts, "posts")?)?;
                    let questions = read_questions(open(&need(questions, "questions")?)?)?;
                    write_file(&out, |w| report::write_daily_tsv(w, &report::daily_timeseries(&posts, &questions)))?;
                }
                ReportKind::Topics => {
                    let models = load_models(&need(models, "models")?)?;
                    write_file(&out, |w| {
                        report::write_topic_month_tsv(w, &report::topic_month_distribution(&models))
                    })?;
                }
                ReportKind::Entities => {
                    let path = need(entities, "entities")?;
                    let mut records = Vec::new();
                    for (i, line) in std::io::BufRead::lines(open(&path)?).enumerate() {
                        let line = line?;
                        if !line.trim().is_empty() {
                            records.push(
                                serde_json::from_str(&line)
                                    .map_err(|e| Error::Parse { line: i + 1, reason: e.to_string() })?,
                            );
                        }
                    }
                    write_file(&out, |w| report::write_entity_tsv(w, &report::entity_frequencies(&records)))?;
                }
            }
        }
        Command::Run { corpus, out, seed, ner_data } => {
            if corpus.is_some() {
                cfg.corpus = corpus;
            }
            if let Some(o) = out {
                cfg.out_dir = o;
            }
            if seed.is_some() {
                cfg.seed = seed;
            }
            if ner_data.is_some() {
                cfg.ner_data = ner_data;
            }
            cfg.validate()?;
            let summary = pipeline::run(&cfg)?;
            let mut w = create(&cfg.out_dir.join("summary.txt"))?;
            use std::io::Write;
            writeln!(w, "posts_read\t{}", summary.posts_read)?;
            writeln!(w, "line_errors\t{}", summary.line_errors)?;
            writeln!(w, "posts_kept\t{}", summary.posts_kept)?;
            writeln!(w, "questions\t{}", summary.questions)?;
            for (month, k) in &summary.months {
                writeln!(w, "selected_k\t{month}\t{k}")?;
            }
            if let Some(f) = summary.ner_macro_f1 {
                writeln!(w, "ner_macro_f1\t{f:.6}")?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run_subcommand(["qmine"]), 2);
        assert_eq!(run_subcommand(["qmine", "frobnicate"]), 2);
        assert_eq!(run_subcommand(["qmine", "questions"]), 2);
        assert_eq!(run_subcommand(["qmine", "--help"]), 0);
    }

    #[test]
    fn data_errors_exit_1() {
        assert_eq!(run_subcommand(["qmine", "questions", "--in", "/nonexistent/x.jsonl", "--out", "/tmp/q.jsonl"]), 1);
    }

    #[test]
    fn stochastic_commands_need_a_seed() {
        let dir = tempfile::tempdir().unwrap();
        let docs = dir.path().join("docs.jsonl");
        std::fs::write(&docs, "{\"doc_id\":\"a\",\"tokens\":[\"x\",\"y\"]}\n").unwrap();
        let out = dir.path().join("m.json");
        let argv = ["qmine", "lda-fit", "--in", docs.to_str().unwrap(), "--out", out.to_str().unwrap(), "--k", "2"];
        assert_eq!(run_subcommand(argv), 1);
        assert!(!out.exists());
    }
}
