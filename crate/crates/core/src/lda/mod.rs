//! Latent Dirichlet Allocation fitted by collapsed Gibbs sampling.
//!
//! Each sweep resamples every token's topic from
//! `p(z = k) ∝ (n_dk + α)(n_kw + β) / (n_k + Vβ)` with the token removed.
//! φ and θ are the means of the per-sample estimates
//! `(n_kw + β) / (n_k + Vβ)` and `(n_dk + α) / (n_d + Kα)` over the
//! post-burn-in samples taken every `sample_lag` sweeps; the averaged counts
//! are kept alongside. Before a sample is added its topics are matched to the
//! running count average by token overlap, so label switching between samples
//! does not blur the estimates.

mod sampler;
mod vocab;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use sampler::SampleSums;
pub use sampler::GibbsSampler;
pub use vocab::{build_vocabulary, BowDoc, Vocabulary};

pub const MODEL_FORMAT: &str = "qmine-lda";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaParams {
    pub k: usize,
    /// Symmetric document-topic prior; `None` means `50 / K`.
    pub alpha: Option<f64>,
    pub beta: f64,
    pub iterations: usize,
    pub burn_in: usize,
    pub sample_lag: usize,
    pub seed: u64,
}

impl Default for LdaParams {
    fn default() -> Self {
        LdaParams {
            k: 20,
            alpha: None,
            beta: 0.01,
            iterations: 1000,
            burn_in: 200,
            sample_lag: 10,
            seed: 0,
        }
    }
}

impl LdaParams {
    pub fn with_k(&self, k: usize) -> Self {
        LdaParams { k, ..self.clone() }
    }

    pub fn effective_alpha(&self) -> f64 {
        self.alpha.unwrap_or(50.0 / self.k.max(1) as f64)
    }

    fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::InvalidParam("K must be at least 1".into()));
        }
        let alpha = self.effective_alpha();
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParam(format!("alpha must be positive, got {alpha}")));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::InvalidParam(format!("beta must be positive, got {}", self.beta)));
        }
        if self.burn_in > self.iterations {
            return Err(Error::InvalidParam(format!(
                "burn-in {} exceeds iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.sample_lag < 1 {
            return Err(Error::InvalidParam("sample lag must be at least 1".into()));
        }
        Ok(())
    }
}

/// Seed for one fit inside a sweep: `root + K * 10007 + month_index`.
pub fn derive_seed(root: u64, k: usize, month_index: usize) -> u64 {
    root.wrapping_add((k as u64).wrapping_mul(10007))
        .wrapping_add(month_index as u64)
}

/// A fitted model. Averaged counts and distributions are kept; the final
/// chain state is available in memory after fitting but is not persisted.
#[derive(Debug, Clone)]
pub struct LdaModel {
    pub params: LdaParams,
    pub vocab: Vocabulary,
    pub doc_ids: Vec<String>,
    pub doc_lengths: Vec<usize>,
    /// Number of samples behind the averaged counts.
    pub samples: usize,
    /// Averaged topic-word counts, K × V row-major.
    topic_word: Vec<f64>,
    /// Averaged document-topic counts, D × K row-major.
    doc_topic: Vec<f64>,
    phi: Vec<f64>,
    theta: Vec<f64>,
    state: Option<GibbsSampler>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TopicSummary {
    pub topic_id: usize,
    pub terms: Vec<(String, f64)>,
}

pub fn fit(docs: &[BowDoc], vocab: &Vocabulary, params: &LdaParams) -> Result<LdaModel> {
    params.validate()?;
    let v = vocab.len();
    if docs.iter().all(|d| d.token_ids.is_empty()) || v == 0 {
        return Err(Error::EmptyCorpus("no document has in-vocabulary tokens".into()));
    }
    if let Some(d) = docs.iter().find(|d| d.token_ids.iter().any(|&w| w >= v)) {
        return Err(Error::InvalidParam(format!("document {} has ids outside the vocabulary", d.doc_id)));
    }
    let k = params.k;
    let mut sampler = GibbsSampler::new(
        docs.iter().map(|d| d.token_ids.clone()).collect(),
        v,
        k,
        params.effective_alpha(),
        params.beta,
        params.seed,
    );

    let mut sums = SampleSums::new(docs.len(), v, k);
    let take_sample = |s: &GibbsSampler, sums: &mut SampleSums| {
        let perm = if sums.samples == 0 {
            (0..k).collect()
        } else {
            s.align_to(&sums.wk)
        };
        s.accumulate(&perm, sums);
    };
    for sweep in 1..=params.iterations {
        sampler.sweep();
        if sweep > params.burn_in && (sweep - params.burn_in).is_multiple_of(params.sample_lag) {
            take_sample(&sampler, &mut sums);
        }
    }
    if sums.samples == 0 {
        take_sample(&sampler, &mut sums);
    }

    let n = sums.samples as f64;
    let mut topic_word = vec![0.0; k * v];
    for w in 0..v {
        for t in 0..k {
            topic_word[t * v + w] = sums.wk[w * k + t] / n;
        }
    }
    let mean = |xs: Vec<f64>| xs.into_iter().map(|x| x / n).collect::<Vec<f64>>();
    Ok(LdaModel {
        params: params.clone(),
        vocab: vocab.clone(),
        doc_ids: docs.iter().map(|d| d.doc_id.clone()).collect(),
        doc_lengths: docs.iter().map(|d| d.token_ids.len()).collect(),
        samples: sums.samples,
        topic_word,
        doc_topic: mean(sums.dk),
        phi: mean(sums.phi),
        theta: mean(sums.theta),
        state: Some(sampler),
    })
}

impl LdaModel {
    pub fn num_topics(&self) -> usize {
        self.params.k
    }

    pub fn num_docs(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn alpha(&self) -> f64 {
        self.params.effective_alpha()
    }

    /// Final chain state, present only on a freshly fitted model.
    pub fn state(&self) -> Option<&GibbsSampler> {
        self.state.as_ref()
    }

    pub fn averaged_topic_word(&self, k: usize, w: usize) -> f64 {
        self.topic_word[k * self.vocab_size() + w]
    }

    pub fn averaged_doc_topic(&self, d: usize, k: usize) -> f64 {
        self.doc_topic[d * self.num_topics() + k]
    }

    pub fn phi_row(&self, k: usize) -> Vec<f64> {
        let v = self.vocab_size();
        self.phi[k * v..(k + 1) * v].to_vec()
    }

    pub fn theta_row(&self, d: usize) -> Vec<f64> {
        let k = self.num_topics();
        self.theta[d * k..(d + 1) * k].to_vec()
    }

    /// K × V topic-word distributions.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        (0..self.num_topics()).map(|k| self.phi_row(k)).collect()
    }

    /// D × K document-topic distributions.
    pub fn theta(&self) -> Vec<Vec<f64>> {
        (0..self.num_docs()).map(|d| self.theta_row(d)).collect()
    }

    /// The `n` most probable terms, ties broken by lower vocabulary id.
    pub fn top_terms(&self, topic: usize, n: usize) -> Result<TopicSummary> {
        if topic >= self.num_topics() {
            return Err(Error::TopicOutOfRange {
                topic,
                k: self.num_topics(),
            });
        }
        let row = self.phi_row(topic);
        let mut ids: Vec<usize> = (0..row.len()).collect();
        ids.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then(a.cmp(&b)));
        Ok(TopicSummary {
            topic_id: topic,
            terms: ids
                .into_iter()
                .take(n)
                .map(|w| (self.vocab.term(w).to_string(), row[w]))
                .collect(),
        })
    }

    /// Argmax of θ for a document; ties go to the lowest topic id.
    pub fn dominant_topic(&self, doc: usize) -> usize {
        let row = self.theta_row(doc);
        let mut best = 0;
        for (k, &p) in row.iter().enumerate() {
            if p > row[best] {
                best = k;
            }
        }
        best
    }

    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let k = self.num_topics();
        let v = self.vocab_size();
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            params: self.params.clone(),
            alpha: self.alpha(),
            samples: self.samples,
            vocabulary: self.vocab.clone(),
            doc_ids: self.doc_ids.clone(),
            doc_lengths: self.doc_lengths.clone(),
            topic_word: (0..k).map(|t| self.topic_word[t * v..(t + 1) * v].to_vec()).collect(),
            doc_topic: (0..self.num_docs())
                .map(|d| self.doc_topic[d * k..(d + 1) * k].to_vec())
                .collect(),
            phi: self.phi(),
            theta: self.theta(),
        };
        serde_json::to_writer(w, &file)?;
        Ok(())
    }

    pub fn load<R: Read>(r: R) -> Result<Self> {
        let file: ModelFile = serde_json::from_reader(r)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Model(format!(
                "unsupported model {} v{}",
                file.format, file.version
            )));
        }
        let k = file.params.k;
        let v = file.vocabulary.len();
        let d = file.doc_lengths.len();
        if file.topic_word.len() != k
            || file.topic_word.iter().any(|r| r.len() != v)
            || file.doc_topic.len() != d
            || file.doc_topic.iter().any(|r| r.len() != k)
            || file.doc_ids.len() != d
            || file.phi.len() != k
            || file.phi.iter().any(|r| r.len() != v)
            || file.theta.len() != d
            || file.theta.iter().any(|r| r.len() != k)
        {
            return Err(Error::Model("matrix shapes disagree with K, V and D".into()));
        }
        Ok(LdaModel {
            params: file.params,
            vocab: file.vocabulary,
            doc_ids: file.doc_ids,
            doc_lengths: file.doc_lengths,
            samples: file.samples,
            topic_word: file.topic_word.into_iter().flatten().collect(),
            doc_topic: file.doc_topic.into_iter().flatten().collect(),
            phi: file.phi.into_iter().flatten().collect(),
            theta: file.theta.into_iter().flatten().collect(),
            state: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    params: LdaParams,
    alpha: f64,
    samples: usize,
    vocabulary: Vocabulary,
    doc_ids: Vec<String>,
    doc_lengths: Vec<usize>,
    topic_word: Vec<Vec<f64>>,
    doc_topic: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(docs: &[&[&str]]) -> (Vocabulary, Vec<BowDoc>) {
        let mut vocab = Vocabulary::default();
        let bows = docs
            .iter()
            .enumerate()
            .map(|(i, d)| BowDoc {
                doc_id: i.to_string(),
                token_ids: d.iter().map(|t| vocab.intern(t)).collect(),
            })
            .collect();
        (vocab, bows)
    }

    fn params(k: usize, seed: u64) -> LdaParams {
        LdaParams {
            k,
            alpha: Some(0.5),
            beta: 0.1,
            iterations: 60,
            burn_in: 20,
            sample_lag: 5,
            seed,
        }
    }

    #[test]
    fn rejects_bad_input() {
        let (v, docs) = corpus(&[&["a"]]);
        assert!(matches!(fit(&docs, &v, &params(0, 1)), Err(Error::InvalidParam(_))));
        let mut p = params(2, 1);
        p.beta = 0.0;
        assert!(fit(&docs, &v, &p).is_err());
        p = params(2, 1);
        p.alpha = Some(-1.0);
        assert!(fit(&docs, &v, &p).is_err());
        p = params(2, 1);
        p.burn_in = 100;
        assert!(fit(&docs, &v, &p).is_err());
        let (v, docs) = corpus(&[&[], &[]]);
        assert!(matches!(fit(&docs, &v, &params(2, 1)), Err(Error::EmptyCorpus(_))));
        assert!(matches!(fit(&[], &Vocabulary::default(), &params(2, 1)), Err(Error::EmptyCorpus(_))));
    }

    #[test]
    fn single_topic_is_closed_form() {
        let (v, docs) = corpus(&[&["a", "a", "b"], &[], &["c", "a"]]);
        let m = fit(&docs, &v, &params(1, 3)).unwrap();
        let phi = m.phi();
        let n = 5.0;
        let vb = 3.0 * 0.1;
        assert!((phi[0][0] - (3.0 + 0.1) / (n + vb)).abs() < 1e-12);
        assert!((phi[0][1] - (1.0 + 0.1) / (n + vb)).abs() < 1e-12);
        assert!(m.theta().iter().all(|r| r == &vec![1.0]));
        assert_eq!(m.top_terms(0, 10).unwrap().terms[0].0, "a");
        assert_eq!(m.top_terms(0, 10).unwrap().terms.len(), 3);
        assert!(m.top_terms(1, 10).is_err());
        assert_eq!(m.dominant_topic(0), 0);
    }

    #[test]
    fn empty_document_gets_uniform_theta() {
        let (v, docs) = corpus(&[&["a", "b"], &[]]);
        let m = fit(&docs, &v, &params(4, 3)).unwrap();
        assert!(m.theta_row(1).iter().all(|p| (p - 0.25).abs() < 1e-12));
        assert_eq!(m.dominant_topic(1), 0);
    }

    #[test]
    fn top_term_ties_go_to_lower_id() {
        let (v, docs) = corpus(&[&["x", "y", "z"]]);
        let m = fit(&docs, &v, &params(1, 0)).unwrap();
        let names: Vec<_> = m.top_terms(0, 2).unwrap().terms.into_iter().map(|t| t.0).collect();
        assert_eq!(names, ["x", "y"]);
    }

    #[test]
    fn burn_in_equal_to_iterations_uses_final_state() {
        let (v, docs) = corpus(&[&["a", "b"]]);
        let mut p = params(2, 3);
        p.burn_in = p.iterations;
        let m = fit(&docs, &v, &p).unwrap();
        assert_eq!(m.samples, 1);
    }

    #[test]
    fn model_file_round_trips() {
        let (v, docs) = corpus(&[&["a", "b", "a"], &["c", "c", "b"], &[]]);
        let m = fit(&docs, &v, &params(2, 11)).unwrap();
        let mut buf = Vec::new();
        m.save(&mut buf).unwrap();
        let back = LdaModel::load(&buf[..]).unwrap();
        assert_eq!(back.phi(), m.phi());
        assert_eq!(back.theta(), m.theta());
        assert_eq!(back.vocab, m.vocab);
        assert!(back.state().is_none());
        let mut again = Vec::new();
        back.save(&mut again).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn seeds_derive_per_k_and_month() {
        assert_eq!(derive_seed(7, 3, 1), 7 + 3 * 10007 + 1);
        assert_ne!(derive_seed(7, 3, 0), derive_seed(7, 4, 0));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn distributions_are_normalized(
            docs in proptest::collection::vec(proptest::collection::vec(0usize..6, 0..8), 1..6),
            k in 1usize..5,
            seed in any::<u64>(),
        ) {
            prop_assume!(docs.iter().any(|d| !d.is_empty()));
            let mut vocab = Vocabulary::default();
            for i in 0..6 { vocab.intern(&format!("t{i}")); }
            let bows: Vec<BowDoc> = docs.into_iter().enumerate()
                .map(|(i, token_ids)| BowDoc { doc_id: i.to_string(), token_ids }).collect();
            let m = fit(&bows, &vocab, &params(k, seed)).unwrap();
            for row in m.phi().iter().chain(m.theta().iter()) {
                prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(row.iter().all(|&p| p > 0.0));
            }
            let s = m.top_terms(0, 3).unwrap();
            prop_assert!(s.terms.windows(2).all(|w| w[0].1 >= w[1].1));
            prop_assert!(s.terms.iter().all(|t| t.1 > 0.0 && t.1 < 1.0));
        }

        #[test]
        fn fitting_is_deterministic(seed in any::<u64>()) {
            let (v, docs) = corpus(&[&["a", "b", "a", "c"], &["c", "c", "d"], &["d", "a"]]);
            let a = fit(&docs, &v, &params(3, seed)).unwrap();
            let b = fit(&docs, &v, &params(3, seed)).unwrap();
            prop_assert_eq!(a.state().unwrap().assignments(), b.state().unwrap().assignments());
            prop_assert_eq!(a.phi(), b.phi());
            prop_assert_eq!(a.theta(), b.theta());
        }
    }
}
