//! C_v topic coherence over boolean sliding windows, and selection of the
//! topic count by mean coherence.
//!
//! Every window is a set: a term or a pair of terms counts at most once per
//! window. For a topic's top words `w_1..w_N` each word gets a context vector
//! of NPMI values against all N words; the score is the mean cosine between
//! each word's vector and the vector summed over the whole set.

use std::collections::{HashMap, HashSet};
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lda::{build_vocabulary, derive_seed, fit, LdaParams};
use crate::preprocess::ProcessedDoc;

pub const DEFAULT_WINDOW: usize = 110;
pub const DEFAULT_TOP_N: usize = 20;
pub const DEFAULT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Default)]
pub struct WindowCounts {
    pub window_size: usize,
    pub n_windows: u64,
    terms: HashMap<String, usize>,
    doc_freq: Vec<u64>,
    pair_freq: HashMap<(usize, usize), u64>,
}

impl WindowCounts {
    pub fn doc_freq(&self, term: &str) -> u64 {
        self.terms.get(term).map_or(0, |&i| self.doc_freq[i])
    }

    /// Windows containing both terms; for `a == b` this is the term's own count.
    pub fn pair_freq(&self, a: &str, b: &str) -> u64 {
        match (self.terms.get(a), self.terms.get(b)) {
            (Some(&i), Some(&j)) if i == j => self.doc_freq[i],
            (Some(&i), Some(&j)) => self.pair_freq.get(&(i.min(j), i.max(j))).copied().unwrap_or(0),
            _ => 0,
        }
    }

    pub fn tracked(&self) -> impl Iterator<Item = &str> {
        self.terms.keys().map(String::as_str)
    }

    fn merge(mut self, other: WindowCounts) -> WindowCounts {
        self.n_windows += other.n_windows;
        for (a, b) in self.doc_freq.iter_mut().zip(&other.doc_freq) {
            *a += b;
        }
        for (k, c) in other.pair_freq {
            *self.pair_freq.entry(k).or_insert(0) += c;
        }
        self
    }
}

/// Slides a window of `window_size` tokens, step 1, over every document.
/// A document no longer than the window is one window; an empty document
/// contributes none.
pub fn count_windows<S: AsRef<str> + Sync>(docs: &[ProcessedDoc], tracked: &HashSet<S>, window_size: usize) -> WindowCounts {
    let streams: Vec<&[String]> = docs.iter().map(|d| d.tokens.as_slice()).collect();
    count_token_windows(&streams, tracked, window_size)
}

pub fn count_token_windows<S: AsRef<str> + Sync>(docs: &[&[String]], tracked: &HashSet<S>, window_size: usize) -> WindowCounts {
    assert!(window_size >= 1, "window size must be at least 1");
    let mut names: Vec<&str> = tracked.iter().map(AsRef::as_ref).collect();
    names.sort_unstable();
    let terms: HashMap<String, usize> = names.iter().enumerate().map(|(i, t)| (t.to_string(), i)).collect();
    let empty = || WindowCounts {
        window_size,
        n_windows: 0,
        terms: HashMap::new(),
        doc_freq: vec![0; names.len()],
        pair_freq: HashMap::new(),
    };

    let mut counts = docs
        .par_iter()
        .fold(empty, |mut acc, doc| {
            if doc.is_empty() {
                return acc;
            }
            let ids: Vec<Option<usize>> = doc.iter().map(|t| terms.get(t.as_str()).copied()).collect();
            let n_win = if doc.len() <= window_size { 1 } else { doc.len() - window_size + 1 };
            let mut present = Vec::new();
            for start in 0..n_win {
                let end = (start + window_size).min(doc.len());
                present.clear();
                present.extend(ids[start..end].iter().flatten().copied());
                present.sort_unstable();
                present.dedup();
                for (x, &i) in present.iter().enumerate() {
                    acc.doc_freq[i] += 1;
                    for &j in &present[x + 1..] {
                        *acc.pair_freq.entry((i, j)).or_insert(0) += 1;
                    }
                }
            }
            acc.n_windows += n_win as u64;
            acc
        })
        .reduce(empty, WindowCounts::merge);
    counts.terms = terms;
    counts
}

/// Normalized PMI from window probabilities, smoothed by `eps` inside the
/// logarithms and clamped to `[-1, 1]`. Zero when either term never occurs.
pub fn npmi(a: &str, b: &str, counts: &WindowCounts, eps: f64) -> f64 {
    assert!(counts.n_windows > 0, "npmi needs at least one window");
    let n = counts.n_windows as f64;
    let pa = counts.doc_freq(a) as f64 / n;
    let pb = counts.doc_freq(b) as f64 / n;
    if pa == 0.0 || pb == 0.0 {
        return 0.0;
    }
    let pab = counts.pair_freq(a, b) as f64 / n;
    npmi_from_probs(pa, pb, pab, eps)
}

pub fn npmi_from_probs(pa: f64, pb: f64, pab: f64, eps: f64) -> f64 {
    if pa == 0.0 || pb == 0.0 {
        return 0.0;
    }
    let joint = pab + eps;
    let denom = -joint.ln();
    if denom <= 0.0 {
        // both terms in every window
        return 1.0;
    }
    ((joint / (pa * pb)).ln() / denom).clamp(-1.0, 1.0)
}

fn cosine(x: &[f64], y: &[f64]) -> f64 {
    let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let nx = x.iter().map(|a| a * a).sum::<f64>().sqrt();
    let ny = y.iter().map(|a| a * a).sum::<f64>().sqrt();
    if nx == 0.0 || ny == 0.0 {
        0.0
    } else {
        dot / (nx * ny)
    }
}

/// C_v coherence of a word set. A single word scores 1.
pub fn c_v<S: AsRef<str>>(top_words: &[S], counts: &WindowCounts) -> f64 {
    c_v_eps(top_words, counts, DEFAULT_EPS)
}

pub fn c_v_eps<S: AsRef<str>>(top_words: &[S], counts: &WindowCounts, eps: f64) -> f64 {
    let n = top_words.len();
    assert!(n >= 1, "c_v needs at least one word");
    if n == 1 {
        return 1.0;
    }
    if counts.n_windows == 0 {
        return 0.0;
    }
    let m: Vec<Vec<f64>> = top_words
        .iter()
        .map(|a| top_words.iter().map(|b| npmi(a.as_ref(), b.as_ref(), counts, eps)).collect())
        .collect();
    let total: Vec<f64> = (0..n).map(|j| m.iter().map(|row| row[j]).sum()).collect();
    m.iter().map(|row| cosine(row, &total)).sum::<f64>() / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub k: usize,
    pub mean_coherence: f64,
    pub per_topic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub entries: Vec<SweepEntry>,
    pub selected_k: usize,
}

impl SweepResult {
    /// `K<TAB>mean_coherence` with a header row.
    pub fn write_tsv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "K\tmean_coherence")?;
        for e in &self.entries {
            writeln!(w, "{}\t{:.6}", e.k, e.mean_coherence)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    /// Template for every fit; `k` is overridden and `seed` is the root seed.
    pub lda: LdaParams,
    pub top_n: usize,
    pub window: usize,
    pub min_df: usize,
    pub max_df_ratio: f64,
    /// Mixed into per-fit seeds so months get independent chains.
    pub month_index: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            lda: LdaParams::default(),
            top_n: DEFAULT_TOP_N,
            window: DEFAULT_WINDOW,
            min_df: 2,
            max_df_ratio: 0.5,
            month_index: 0,
        }
    }
}

/// Index of the highest score; ties go to the earliest entry.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &s) in scores.iter().enumerate() {
        if best.is_none_or(|b| s > scores[b]) {
            best = Some(i);
        }
    }
    best
}

/// Fits one model per K and scores each by mean C_v over its topics. Fits
/// run in parallel; results are ordered by K.
pub fn sweep(docs: &[ProcessedDoc], k_values: &[usize], cfg: &SweepConfig) -> Result<SweepResult> {
    if k_values.is_empty() {
        return Err(Error::InvalidParam("empty K range".into()));
    }
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let (vocab, bows) = build_vocabulary(docs, cfg.min_df, cfg.max_df_ratio);
    let entries = ks
        .par_iter()
        .map(|&k| {
            let mut params = cfg.lda.with_k(k);
            params.seed = derive_seed(cfg.lda.seed, k, cfg.month_index);
            let model = fit(&bows, &vocab, &params)?;
            let tops = (0..k)
                .map(|t| {
                    model
                        .top_terms(t, cfg.top_n)
                        .map(|s| s.terms.into_iter().map(|(w, _)| w).collect::<Vec<_>>())
                })
                .collect::<Result<Vec<_>>>()?;
            let tracked: HashSet<&str> = tops.iter().flatten().map(String::as_str).collect();
            let counts = count_windows(docs, &tracked, cfg.window);
            let per_topic: Vec<f64> = tops.iter().map(|t| c_v(t, &counts)).collect();
            let mean_coherence = per_topic.iter().sum::<f64>() / k as f64;
            Ok(SweepEntry { k, mean_coherence, per_topic })
        })
        .collect::<Result<Vec<_>>>()?;
    let scores: Vec<f64> = entries.iter().map(|e| e.mean_coherence).collect();
    let selected_k = entries[argmax_first(&scores).expect("non-empty")].k;
    Ok(SweepResult { entries, selected_k })
}
