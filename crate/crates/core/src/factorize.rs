//! Non-negative factorization of refined embeddings and the mapping of
//! embedding-space topics back to vocabulary terms.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Matrix};
use crate::math;
use crate::seed;
use crate::vectorize::{DocTermMatrix, Weighting};

pub const DEFAULT_TOP_WORDS: usize = 10;
pub const DEFAULT_MAX_REP_DOCS: usize = 100;
const EPSILON: f64 = 1e-12;
const CHECK_EVERY: usize = 10;

/// Elementwise `|x|`.
pub fn absolute_transform(x: &Matrix) -> Matrix {
    x.map(math::abs)
}

/// A matrix NMF can factorize. Dense and sparse inputs share the same
/// multiplicative updates.
pub trait NmfInput {
    fn shape(&self) -> (usize, usize);
    /// First negative entry, if any.
    fn find_negative(&self) -> Option<(usize, usize, f64)>;
    fn sum(&self) -> f64;
    /// `X·Hᵀ` (N×k).
    fn mul_ht(&self, h: &Matrix) -> Matrix;
    /// `Wᵀ·X` (k×D).
    fn wt_mul(&self, w: &Matrix) -> Matrix;
    /// `‖X − W·H‖_F`.
    fn residual_norm(&self, w: &Matrix, h: &Matrix) -> f64;
}

impl NmfInput for Matrix {
    fn shape(&self) -> (usize, usize) {
        Matrix::shape(self)
    }

    fn find_negative(&self) -> Option<(usize, usize, f64)> {
        let c = self.cols();
        self.as_slice().iter().position(|&v| v < 0.0).map(|i| (i / c, i % c, self.as_slice()[i]))
    }

    fn sum(&self) -> f64 {
        Matrix::sum(self)
    }

    fn mul_ht(&self, h: &Matrix) -> Matrix {
        self.matmul_t(h)
    }

    fn wt_mul(&self, w: &Matrix) -> Matrix {
        w.t_matmul(self)
    }

    fn residual_norm(&self, w: &Matrix, h: &Matrix) -> f64 {
        let wh = w.matmul(h);
        math::sqrt(self.as_slice().iter().zip(wh.as_slice()).map(|(a, b)| (a - b) * (a - b)).sum())
    }
}

impl NmfInput for CsrMatrix {
    fn shape(&self) -> (usize, usize) {
        (self.n_rows(), self.n_cols())
    }

    fn find_negative(&self) -> Option<(usize, usize, f64)> {
        (0..self.n_rows()).find_map(|r| self.row_iter(r).find(|(_, v)| *v < 0.0).map(|(c, v)| (r, c, v)))
    }

    fn sum(&self) -> f64 {
        self.values().iter().sum()
    }

    fn mul_ht(&self, h: &Matrix) -> Matrix {
        self.mul_dense(&h.transpose())
    }

    fn wt_mul(&self, w: &Matrix) -> Matrix {
        self.t_mul_dense(w).transpose()
    }

    fn residual_norm(&self, w: &Matrix, h: &Matrix) -> f64 {
        // ‖X‖² − 2⟨X, WH⟩ + ‖WH‖², without materializing WH
        let cross: f64 = (0..self.n_rows())
            .map(|r| self.row_iter(r).map(|(c, v)| v * crate::linalg::dot(w.row(r), &column(h, c))).sum::<f64>())
            .sum();
        let wtw = w.t_matmul(w);
        let hht = h.matmul_t(h);
        let model: f64 = wtw.as_slice().iter().zip(hht.as_slice()).map(|(a, b)| a * b).sum();
        math::sqrt((self.frobenius_sq() - 2.0 * cross + model).max(0.0))
    }
}

fn column(m: &Matrix, c: usize) -> Vec<f64> {
    (0..m.rows()).map(|r| m.get(r, c)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfConfig {
    pub k: usize,
    pub max_iters: usize,
    /// Relative objective change, tested every 10 iterations.
    pub tol: f64,
    pub seed: u64,
    /// Record the objective after every half-update (slow; for tests).
    pub record_trace: bool,
}

impl NmfConfig {
    pub fn new(k: usize) -> Self {
        NmfConfig { k, max_iters: 500, tol: 1e-4, seed: 0, record_trace: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmfResult {
    /// N×k document-topic weights.
    pub w: Matrix,
    /// k×D topic-embedding matrix.
    pub h: Matrix,
    pub iterations: usize,
    /// Final `‖X − WH‖_F`.
    pub objective: f64,
    /// Objective at initialization and after every H and W update.
    pub trace: Vec<f64>,
}

/// Frobenius NMF by multiplicative updates from a seeded uniform start.
pub fn nmf<X: NmfInput + ?Sized>(x: &X, config: &NmfConfig) -> Result<NmfResult> {
    let (n, d) = x.shape();
    let k = config.k;
    if k == 0 || k > n.min(d) {
        return Err(Error::Parameter(alloc::format!("k={k} must be in 1..=min({n}, {d})")));
    }
    if let Some((row, col, value)) = x.find_negative() {
        return Err(Error::NegativeInput { row, col, value });
    }
    let scale = math::sqrt(x.sum() / (n * d) as f64 / k as f64);
    let mut rng = seed::rng(config.seed);
    let mut rand_matrix = |r: usize, c: usize| {
        let data = (0..r * c).map(|_| scale * rng.gen::<f64>()).collect();
        Matrix::from_vec(r, c, data).expect("sized")
    };
    let mut w = rand_matrix(n, k);
    let mut h = rand_matrix(k, d);

    let mut trace = Vec::new();
    let mut last_check = x.residual_norm(&w, &h);
    if config.record_trace {
        trace.push(last_check);
    }
    let mut iterations = 0;
    while iterations < config.max_iters {
        // H ← H ⊙ WᵀX / (WᵀW·H)
        let num = x.wt_mul(&w);
        let den = w.t_matmul(&w).matmul(&h);
        update(&mut h, &num, &den);
        if config.record_trace {
            trace.push(x.residual_norm(&w, &h));
        }
        // W ← W ⊙ XHᵀ / (W·HHᵀ)
        let num = x.mul_ht(&h);
        let den = w.matmul(&h.matmul_t(&h));
        update(&mut w, &num, &den);
        if config.record_trace {
            trace.push(x.residual_norm(&w, &h));
        }
        iterations += 1;
        if iterations % CHECK_EVERY == 0 {
            let current = x.residual_norm(&w, &h);
            if last_check == 0.0 || (last_check - current) / last_check < config.tol {
                break;
            }
            last_check = current;
        }
    }
    let objective = x.residual_norm(&w, &h);
    Ok(NmfResult { w, h, iterations, objective, trace })
}

/// The floor only guards against zero denominators; adding epsilon instead
/// would bias every step and break monotonicity near an exact fit.
fn update(target: &mut Matrix, num: &Matrix, den: &Matrix) {
    for ((t, n), d) in target.as_mut_slice().iter_mut().zip(num.as_slice()).zip(den.as_slice()) {
        *t *= n / d.max(EPSILON);
    }
}

/// Topic words for one topic, with flags for the degraded cases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicWords {
    pub terms: Vec<String>,
    /// Fewer than T terms were available.
    pub short: bool,
    /// No document had this topic as its argmax; the highest-weighted
    /// documents were used instead.
    pub fallback: bool,
}

/// Representative-document topic words: documents are assigned to their
/// argmax topic, the `max_rep_docs` strongest per topic are kept, their raw
/// counts are summed, and the `top_words` most frequent terms are returned
/// (ties broken lexicographically).
pub fn extract_topic_words(
    w: &Matrix,
    counts: &DocTermMatrix,
    vocab: &Vocabulary,
    top_words: usize,
    max_rep_docs: usize,
) -> Result<Vec<TopicWords>> {
    if counts.weighting() != Weighting::RawCount {
        return Err(Error::Parameter("topic words are aggregated from raw counts".into()));
    }
    if counts.n_docs() != w.rows() || counts.n_terms() != vocab.len() {
        return Err(Error::Shape(alloc::format!(
            "W has {} rows, counts are {}x{}, vocabulary has {} terms",
            w.rows(),
            counts.n_docs(),
            counts.n_terms(),
            vocab.len()
        )));
    }
    let k = w.cols();
    let argmax: Vec<usize> = (0..w.rows())
        .map(|d| {
            let row = w.row(d);
            (0..k).fold(0, |best, t| if row[t] > row[best] { t } else { best })
        })
        .collect();
    let by_weight = |t: usize, docs: &mut Vec<usize>| {
        docs.sort_by(|&a, &b| w.get(b, t).total_cmp(&w.get(a, t)).then(a.cmp(&b)));
        docs.truncate(max_rep_docs);
    };
    (0..k)
        .map(|t| {
            let mut docs: Vec<usize> = (0..w.rows()).filter(|&d| argmax[d] == t).collect();
            let fallback = docs.is_empty();
            if fallback {
                docs = (0..w.rows()).collect();
            }
            by_weight(t, &mut docs);
            let mut agg = vec![0.0; vocab.len()];
            for &d in &docs {
                for (j, c) in counts.row(d) {
                    agg[j] += c;
                }
            }
            let terms = top_terms(&agg, vocab, top_words);
            Ok(TopicWords { short: terms.len() < top_words, terms, fallback })
        })
        .collect()
}

/// Highest positive scores first; equal scores resolve to the
/// lexicographically smaller term (vocabulary order).
fn top_terms(scores: &[f64], vocab: &Vocabulary, n: usize) -> Vec<String> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&j| scores[j] > 0.0).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.into_iter().take(n).map(|j| String::from(vocab.term(j))).collect()
}

/// Fitted factors plus extracted topic word lists.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub w: Matrix,
    pub h: Matrix,
    pub topics: Vec<TopicWords>,
}

impl TopicModel {
    pub fn k(&self) -> usize {
        self.topics.len()
    }

    pub fn word_lists(&self) -> Vec<Vec<String>> {
        self.topics.iter().map(|t| t.terms.clone()).collect()
    }
}

/// Absolute-value transform, NMF, then representative-document extraction.
pub fn fit_topics(
    refined: &Matrix,
    counts: &DocTermMatrix,
    vocab: &Vocabulary,
    top_words: usize,
    max_rep_docs: usize,
    config: &NmfConfig,
) -> Result<TopicModel> {
    let fit = nmf(&absolute_transform(refined), config)?;
    let topics = extract_topic_words(&fit.w, counts, vocab, top_words, max_rep_docs)?;
    Ok(TopicModel { w: fit.w, h: fit.h, topics })
}

/// Classical NMF directly on the TF-IDF matrix; topic words are the
/// heaviest columns of each H row.
pub fn baseline_nmf_topics(
    tfidf: &DocTermMatrix,
    vocab: &Vocabulary,
    top_words: usize,
    config: &NmfConfig,
) -> Result<TopicModel> {
    if tfidf.n_terms() != vocab.len() {
        return Err(Error::Shape("TF-IDF columns do not match the vocabulary".into()));
    }
    let fit = nmf(tfidf.matrix(), config)?;
    let topics = (0..config.k)
        .map(|t| {
            let terms = top_terms(fit.h.row(t), vocab, top_words);
            TopicWords { short: terms.len() < top_words, terms, fallback: false }
        })
        .collect();
    Ok(TopicModel { w: fit.w, h: fit.h, topics })
}
