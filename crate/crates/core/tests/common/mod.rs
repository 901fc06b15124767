#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qmine::lda::{BowDoc, Vocabulary};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

/// Compares `actual` with a stored golden file. With `QMINE_BLESS` set the
/// file is rewritten first.
pub fn check_golden(path: &Path, actual: &[u8]) -> Result<(), String> {
    if std::env::var_os("QMINE_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, actual).unwrap();
    }
    match std::fs::read(path) {
        Ok(expected) if expected == actual => Ok(()),
        Ok(_) => Err(format!("{} differs from golden", path.display())),
        Err(e) => Err(format!("{}: {e}", path.display())),
    }
}

/// `Γ(x + n) / Γ(x)`.
fn rising(x: f64, n: u32) -> f64 {
    (0..n).map(|i| x + i as f64).product()
}

/// Exact posterior mean of φ for the corpus {[a, a], [b, b]} by enumerating
/// all 2^4 topic assignments under the collapsed joint
/// p(z) ∝ Π_d Π_k (α)_{n_dk} / (Kα)_{N_d} · Π_k Π_w (β)_{n_kw} / (Vβ)_{n_k}.
/// Each state's E[φ | z] has its rows ordered by the weight on `a`
/// (descending) before averaging, which removes label switching.
pub fn two_doc_phi_oracle(alpha: f64, beta: f64) -> [[f64; 2]; 2] {
    const K: usize = 2;
    const V: usize = 2;
    let docs = [[0usize, 0], [1, 1]];
    let mut total = 0.0;
    let mut acc = [[0.0; V]; K];
    for state in 0u32..16 {
        let z = [[state & 1, (state >> 1) & 1], [(state >> 2) & 1, (state >> 3) & 1]];
        let mut n_dk = [[0u32; K]; 2];
        let mut n_kw = [[0u32; V]; K];
        for d in 0..2 {
            for i in 0..2 {
                let k = z[d][i] as usize;
                n_dk[d][k] += 1;
                n_kw[k][docs[d][i]] += 1;
            }
        }
        let mut p = 1.0;
        for row in &n_dk {
            p *= row.iter().map(|&n| rising(alpha, n)).product::<f64>() / rising(K as f64 * alpha, 2);
        }
        for row in &n_kw {
            let n_k: u32 = row.iter().sum();
            p *= row.iter().map(|&n| rising(beta, n)).product::<f64>() / rising(V as f64 * beta, n_k);
        }
        let mut phi: Vec<[f64; V]> = n_kw
            .iter()
            .map(|row| {
                let n_k: u32 = row.iter().sum();
                [0, 1].map(|w| (row[w] as f64 + beta) / (n_k as f64 + V as f64 * beta))
            })
            .collect();
        phi.sort_by(|x, y| y[0].partial_cmp(&x[0]).unwrap());
        for k in 0..K {
            for w in 0..V {
                acc[k][w] += p * phi[k][w];
            }
        }
        total += p;
    }
    acc.map(|row| row.map(|x| x / total))
}

pub fn two_doc_corpus() -> (Vec<BowDoc>, Vocabulary) {
    let vocab = Vocabulary::from(vec!["a".to_string(), "b".to_string()]);
    let docs = vec![
        BowDoc { doc_id: "0".into(), token_ids: vec![0, 0] },
        BowDoc { doc_id: "1".into(), token_ids: vec![1, 1] },
    ];
    (docs, vocab)
}

/// Rows of a fitted φ ordered like the oracle.
pub fn canonical_rows(phi: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let mut phi = phi;
    phi.sort_by(|x, y| y[0].partial_cmp(&x[0]).unwrap());
    phi
}

pub fn l1(a: &[Vec<f64>], b: &[[f64; 2]; 2]) -> f64 {
    a.iter().zip(b).flat_map(|(x, y)| x.iter().zip(y).map(|(p, q)| (p - q).abs())).sum()
}

/// Random corpus with up to `max_docs` documents over `v` terms; every
/// document has at least one token.
pub fn random_corpus(rng: &mut ChaCha8Rng, max_docs: usize, max_len: usize, v: usize) -> Vec<Vec<usize>> {
    let d = rng.gen_range(1..=max_docs);
    (0..d)
        .map(|_| {
            let n = rng.gen_range(1..=max_len);
            (0..n).map(|_| rng.gen_range(0..v)).collect()
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn bows(docs: &[Vec<usize>]) -> Vec<BowDoc> {
    docs.iter()
        .enumerate()
        .map(|(i, t)| BowDoc { doc_id: i.to_string(), token_ids: t.clone() })
        .collect()
}

pub fn vocab_of(v: usize) -> Vocabulary {
    Vocabulary::from((0..v).map(|i| format!("w{i}")).collect::<Vec<_>>())
}
