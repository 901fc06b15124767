//! Run configuration: `key = value` lines grouped under `[section]`
//! headers, `#` comments. Keys before the first header belong to the
//! unnamed top-level section.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::coherence::{DEFAULT_TOP_N, DEFAULT_WINDOW};
use crate::corpus::DEFAULT_LANG_THRESHOLD;
use crate::error::{Error, Result};
use crate::lda::LdaParams;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfigFile {
    sections: BTreeMap<String, BTreeMap<String, String>>,
}

impl ConfigFile {
    pub fn parse(content: &str) -> Result<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        let mut current = String::new();
        for (i, raw) in content.lines().enumerate() {
            let line = raw.split_once('#').map_or(raw, |(l, _)| l).trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::Parse { line: i + 1, reason: reason.to_string() };
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| bad("unterminated section header"))?;
                current = name.trim().to_string();
                sections.entry(current.clone()).or_default();
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| bad("expected key = value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(bad("empty key"));
            }
            if sections.entry(current.clone()).or_default().insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(bad(&format!("duplicate key {k:?}")));
            }
        }
        Ok(ConfigFile { sections })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections.get(section)?.get(key).map(String::as_str)
    }

    pub fn get_parsed<T: FromStr>(&self, section: &str, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.get(section, key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| Error::Config(format!("[{section}] {key} = {v:?}: {e}")))
            })
            .transpose()
    }
}

/// Everything a full pipeline run needs. Unset resource paths mean the
/// bundled Portuguese lists.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub corpus: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub keywords: Option<PathBuf>,
    pub drugs: Option<PathBuf>,
    pub diseases: Option<PathBuf>,
    pub ner_data: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub lang_threshold: f64,
    pub phrase_min_count: u64,
    pub phrase_threshold: f64,
    pub phrase_passes: usize,
    pub min_df: usize,
    pub max_df_ratio: f64,
    pub lda: LdaParams,
    pub k_min: usize,
    pub k_max: usize,
    pub window: usize,
    pub top_n: usize,
    pub ner_epochs: usize,
    pub ner_train_ratio: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            corpus: None,
            stopwords: None,
            lexicon: None,
            keywords: None,
            drugs: None,
            diseases: None,
            ner_data: None,
            out_dir: PathBuf::from("out"),
            lang_threshold: DEFAULT_LANG_THRESHOLD,
            phrase_min_count: 5,
            phrase_threshold: 10.0,
            phrase_passes: 2,
            min_df: 2,
            max_df_ratio: 0.5,
            lda: LdaParams::default(),
            k_min: 1,
            k_max: 60,
            window: DEFAULT_WINDOW,
            top_n: DEFAULT_TOP_N,
            ner_epochs: 10,
            ner_train_ratio: 0.8,
        }
    }
}

impl RunConfig {
    /// Reads a config file. Relative paths are resolved against the file's
    /// directory and must exist.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_file(&ConfigFile::parse(&text)?, base)
    }

    pub fn from_file(f: &ConfigFile, base: &Path) -> Result<Self> {
        let mut c = RunConfig::default();
        let existing = |key: &str| -> Result<Option<PathBuf>> {
            match f.get("paths", key) {
                None => Ok(None),
                Some(p) => {
                    let p = base.join(p);
                    if !p.exists() {
                        return Err(Error::Config(format!("[paths] {key}: {} does not exist", p.display())));
                    }
                    Ok(Some(p))
                }
            }
        };
        c.seed = f.get_parsed("", "seed")?;
        c.corpus = existing("corpus")?;
        c.stopwords = existing("stopwords")?;
        c.lexicon = existing("lexicon")?;
        c.keywords = existing("keywords")?;
        c.drugs = existing("drugs")?;
        c.diseases = existing("diseases")?;
        c.ner_data = existing("ner_data")?;
        if let Some(out) = f.get("paths", "out_dir") {
            c.out_dir = base.join(out);
        }

        macro_rules! set {
            ($field:expr, $section:literal, $key:literal) => {
                if let Some(v) = f.get_parsed($section, $key)? {
                    $field = v;
                }
            };
        }
        set!(c.lang_threshold, "corpus", "lang_threshold");
        set!(c.phrase_min_count, "preprocess", "min_count");
        set!(c.phrase_threshold, "preprocess", "threshold");
        set!(c.phrase_passes, "preprocess", "passes");
        set!(c.min_df, "preprocess", "min_df");
        set!(c.max_df_ratio, "preprocess", "max_df_ratio");
        set!(c.lda.beta, "lda", "beta");
        set!(c.lda.iterations, "lda", "iterations");
        set!(c.lda.burn_in, "lda", "burn_in");
        set!(c.lda.sample_lag, "lda", "lag");
        set!(c.k_min, "lda", "k_min");
        set!(c.k_max, "lda", "k_max");
        if let Some(k) = f.get_parsed::<usize>("lda", "k")? {
            c.k_min = k;
            c.k_max = k;
        }
        match f.get("lda", "alpha") {
            None | Some("auto") => {}
            Some(_) => c.lda.alpha = f.get_parsed("lda", "alpha")?,
        }
        set!(c.window, "coherence", "window");
        set!(c.top_n, "coherence", "top_n");
        set!(c.ner_epochs, "ner", "epochs");
        set!(c.ner_train_ratio, "ner", "train_ratio");
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lang_threshold) {
            return Err(Error::Config(format!("lang_threshold {} outside [0, 1]", self.lang_threshold)));
        }
        if self.k_min < 1 || self.k_min > self.k_max {
            return Err(Error::Config(format!("invalid K range {}..{}", self.k_min, self.k_max)));
        }
        if !(self.ner_train_ratio > 0.0 && self.ner_train_ratio < 1.0) {
            return Err(Error::Config(format!("train_ratio {} outside (0, 1)", self.ner_train_ratio)));
        }
        if self.phrase_min_count < 1 || self.phrase_passes < 1 {
            return Err(Error::Config("phrase min_count and passes must be at least 1".into()));
        }
        if self.min_df < 1 || !(self.max_df_ratio > 0.0 && self.max_df_ratio <= 1.0) {
            return Err(Error::Config(format!(
                "min_df {} must be at least 1 and max_df_ratio {} must lie in (0, 1]",
                self.min_df, self.max_df_ratio
            )));
        }
        if self.window < 1 || self.top_n < 1 {
            return Err(Error::Config("window and top_n must be at least 1".into()));
        }
        Ok(())
    }
}
