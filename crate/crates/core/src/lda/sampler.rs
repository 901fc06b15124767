//! Collapsed Gibbs sampling state for LDA.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Topic assignments and the count matrices they induce. Topic-word counts
/// are stored word-major (`w * K + k`) so one token's conditional reads a
/// contiguous row.
#[derive(Debug, Clone)]
pub struct GibbsSampler {
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
    n_wk: Vec<u32>,
    n_k: Vec<u32>,
    n_dk: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
    sweeps: usize,
}

impl GibbsSampler {
    /// Assigns every token a uniformly random topic drawn from `seed`.
    pub fn new(docs: Vec<Vec<usize>>, v: usize, k: usize, alpha: f64, beta: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GibbsSampler {
            k,
            v,
            alpha,
            beta,
            z: Vec::with_capacity(docs.len()),
            n_wk: vec![0; v * k],
            n_k: vec![0; k],
            n_dk: vec![0; docs.len() * k],
            docs: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(0),
            weights: vec![0.0; k],
            sweeps: 0,
        };
        for (d, doc) in docs.iter().enumerate() {
            let zd: Vec<usize> = doc
                .iter()
                .map(|&w| {
                    let t = rng.gen_range(0..k);
                    s.n_wk[w * k + t] += 1;
                    s.n_k[t] += 1;
                    s.n_dk[d * k + t] += 1;
                    t
                })
                .collect();
            s.z.push(zd);
        }
        s.docs = docs;
        s.rng = rng;
        s
    }

    pub fn num_topics(&self) -> usize {
        self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.v
    }

    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    pub fn sweeps(&self) -> usize {
        self.sweeps
    }

    pub fn docs(&self) -> &[Vec<usize>] {
        &self.docs
    }

    pub fn assignments(&self) -> &[Vec<usize>] {
        &self.z
    }

    pub fn topic_word(&self, k: usize, w: usize) -> u32 {
        self.n_wk[w * self.k + k]
    }

    pub fn topic_total(&self, k: usize) -> u32 {
        self.n_k[k]
    }

    pub fn doc_topic(&self, d: usize, k: usize) -> u32 {
        self.n_dk[d * self.k + k]
    }

    /// Resamples every token once, in corpus order.
    pub fn sweep(&mut self) {
        let k = self.k;
        let vbeta = self.v as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i];
                let old = self.z[d][i];
                self.n_wk[w * k + old] -= 1;
                self.n_k[old] -= 1;
                self.n_dk[d * k + old] -= 1;

                let word_row = &self.n_wk[w * k..(w + 1) * k];
                let doc_row = &self.n_dk[d * k..(d + 1) * k];
                let mut total = 0.0;
                for t in 0..k {
                    total += (doc_row[t] as f64 + self.alpha) * (word_row[t] as f64 + self.beta)
                        / (self.n_k[t] as f64 + vbeta);
                    self.weights[t] = total;
                }
                let u = self.rng.gen::<f64>() * total;
                let new = self.weights.iter().position(|&c| u < c).unwrap_or(k - 1);

                self.z[d][i] = new;
                self.n_wk[w * k + new] += 1;
                self.n_k[new] += 1;
                self.n_dk[d * k + new] += 1;
            }
        }
        self.sweeps += 1;
    }

    /// Count matrices recomputed from the assignments alone:
    /// `(n_wk, n_k, n_dk)` in the sampler's storage layout.
    pub fn rebuild_counts(&self) -> (Vec<u32>, Vec<u32>, Vec<u32>) {
        let k = self.k;
        let mut n_wk = vec![0; self.v * k];
        let mut n_k = vec![0; k];
        let mut n_dk = vec![0; self.docs.len() * k];
        for (d, (doc, zd)) in self.docs.iter().zip(&self.z).enumerate() {
            for (&w, &t) in doc.iter().zip(zd) {
                n_wk[w * k + t] += 1;
                n_k[t] += 1;
                n_dk[d * k + t] += 1;
            }
        }
        (n_wk, n_k, n_dk)
    }

    /// Checks the conservation laws tying assignments to counts.
    pub fn check_invariants(&self) -> Result<(), String> {
        let k = self.k;
        let total_tokens: usize = self.docs.iter().map(Vec::len).sum();
        let nk_sum: u64 = self.n_k.iter().map(|&c| c as u64).sum();
        if nk_sum != total_tokens as u64 {
            return Err(format!("sum of topic totals {nk_sum} != {total_tokens} tokens"));
        }
        for t in 0..k {
            let col: u64 = (0..self.v).map(|w| self.n_wk[w * k + t] as u64).sum();
            if col != self.n_k[t] as u64 {
                return Err(format!("topic {t}: word counts sum to {col}, total is {}", self.n_k[t]));
            }
        }
        for (d, doc) in self.docs.iter().enumerate() {
            let row: u64 = self.n_dk[d * k..(d + 1) * k].iter().map(|&c| c as u64).sum();
            if row != doc.len() as u64 {
                return Err(format!("doc {d}: topic counts sum to {row}, length is {}", doc.len()));
            }
            if self.z[d].len() != doc.len() || self.z[d].iter().any(|&t| t >= k) {
                return Err(format!("doc {d}: malformed assignments"));
            }
        }
        let (n_wk, n_k, n_dk) = self.rebuild_counts();
        if n_wk != self.n_wk || n_k != self.n_k || n_dk != self.n_dk {
            return Err("counts differ from those rebuilt from assignments".into());
        }
        Ok(())
    }

    /// Overlap between the current labels and a reference labeling given as
    /// word-major topic weights: `m[r * K + c]` sums the reference weight of
    /// every token currently in topic `c` under reference topic `r`.
    fn overlap(&self, reference_wk: &[f64]) -> Vec<f64> {
        let k = self.k;
        let mut m = vec![0.0; k * k];
        for (doc, zd) in self.docs.iter().zip(&self.z) {
            for (&w, &c) in doc.iter().zip(zd) {
                let row = &reference_wk[w * k..(w + 1) * k];
                for r in 0..k {
                    m[r * k + c] += row[r];
                }
            }
        }
        m
    }

    /// Maps each current topic to a reference topic by greedy maximum overlap.
    pub(crate) fn align_to(&self, reference_wk: &[f64]) -> Vec<usize> {
        let k = self.k;
        if k == 1 {
            return vec![0];
        }
        let m = self.overlap(reference_wk);
        let mut cells: Vec<(usize, usize)> = (0..k).flat_map(|r| (0..k).map(move |c| (r, c))).collect();
        cells.sort_by(|a, b| {
            m[b.0 * k + b.1]
                .total_cmp(&m[a.0 * k + a.1])
                .then(a.cmp(b))
        });
        let mut perm = vec![usize::MAX; k];
        let mut taken = vec![false; k];
        for (r, c) in cells {
            if perm[c] == usize::MAX && !taken[r] {
                perm[c] = r;
                taken[r] = true;
            }
        }
        perm
    }

    /// Adds the current counts and the point estimates they imply, relabeled
    /// by `perm`, into running sums.
    pub(crate) fn accumulate(&self, perm: &[usize], sums: &mut SampleSums) {
        let k = self.k;
        let v = self.v;
        let vb = v as f64 * self.beta;
        for w in 0..v {
            for c in 0..k {
                let n = self.n_wk[w * k + c] as f64;
                sums.wk[w * k + perm[c]] += n;
                sums.phi[perm[c] * v + w] += (n + self.beta) / (self.n_k[c] as f64 + vb);
            }
        }
        let ka = k as f64 * self.alpha;
        for (d, doc) in self.docs.iter().enumerate() {
            let denom = doc.len() as f64 + ka;
            for c in 0..k {
                let n = self.n_dk[d * k + c] as f64;
                sums.dk[d * k + perm[c]] += n;
                sums.theta[d * k + perm[c]] += (n + self.alpha) / denom;
            }
        }
        sums.samples += 1;
    }
}

/// Running sums over retained samples.
#[derive(Debug, Clone)]
pub(crate) struct SampleSums {
    /// Topic-word counts, word-major like the sampler.
    pub wk: Vec<f64>,
    /// Document-topic counts, D × K.
    pub dk: Vec<f64>,
    /// Topic-word distributions, K × V.
    pub phi: Vec<f64>,
    /// Document-topic distributions, D × K.
    pub theta: Vec<f64>,
    pub samples: usize,
}

impl SampleSums {
    pub fn new(d: usize, v: usize, k: usize) -> Self {
        SampleSums {
            wk: vec![0.0; v * k],
            dk: vec![0.0; d * k],
            phi: vec![0.0; k * v],
            theta: vec![0.0; d * k],
            samples: 0,
        }
    }
}
