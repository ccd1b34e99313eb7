//! Sparse document-term matrices, the word-embedding table, and the
//! TF-IDF-weighted projection of documents into embedding space.

use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Document, Vocabulary};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, Matrix};
use crate::math;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    RawCount,
    TfIdf,
}

/// N×V document-term matrix in CSR form.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    matrix: CsrMatrix,
    weighting: Weighting,
}

impl DocTermMatrix {
    pub fn n_docs(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_terms(&self) -> usize {
        self.matrix.n_cols()
    }

    pub fn weighting(&self) -> Weighting {
        self.weighting
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn row(&self, doc: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.matrix.row_iter(doc)
    }
}

/// Raw term counts; out-of-vocabulary tokens are skipped.
pub fn compute_counts(docs: &[Document], vocab: &Vocabulary) -> DocTermMatrix {
    let rows = docs
        .iter()
        .map(|d| d.tokens.iter().filter_map(|t| vocab.index(t)).map(|j| (j, 1.0)).collect())
        .collect();
    DocTermMatrix {
        matrix: CsrMatrix::from_rows(vocab.len(), rows).expect("vocabulary indices are in range"),
        weighting: Weighting::RawCount,
    }
}

/// Smoothed inverse document frequency `ln((1+N)/(1+df)) + 1`.
#[inline]
pub fn idf(n_docs: usize, df: usize) -> f64 {
    math::ln((1.0 + n_docs as f64) / (1.0 + df as f64)) + 1.0
}

/// Raw tf × smoothed idf, then L2 normalization of every nonzero row.
/// Document frequencies are taken from the count matrix itself.
pub fn compute_tfidf(counts: &DocTermMatrix) -> Result<DocTermMatrix> {
    if counts.weighting != Weighting::RawCount {
        return Err(Error::Parameter("compute_tfidf expects a raw-count matrix".into()));
    }
    let n = counts.n_docs();
    let mut df = vec![0usize; counts.n_terms()];
    for r in 0..n {
        for (c, _) in counts.row(r) {
            df[c] += 1;
        }
    }
    let idf: Vec<f64> = df.iter().map(|&d| idf(n, d)).collect();
    let mut matrix = counts.matrix.clone();
    let mut offset = 0;
    for r in 0..n {
        let (cols, _) = counts.matrix.row(r);
        let len = cols.len();
        let cols = cols.to_vec();
        let vals = &mut matrix.values_mut()[offset..offset + len];
        for (v, c) in vals.iter_mut().zip(&cols) {
            *v *= idf[*c];
        }
        let norm = math::sqrt(vals.iter().map(|v| v * v).sum());
        if norm > 0.0 {
            vals.iter_mut().for_each(|v| *v /= norm);
        }
        offset += len;
    }
    Ok(DocTermMatrix { matrix, weighting: Weighting::TfIdf })
}

/// V×D embedding rows aligned with vocabulary indices.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    vectors: Matrix,
    oov_count: usize,
}

impl EmbeddingTable {
    /// Assembles a table from optional per-term vectors; `None` rows become
    /// zeros and count as out-of-vocabulary.
    pub fn from_rows(dim: usize, rows: Vec<Option<Vec<f64>>>) -> Result<Self> {
        let mut vectors = Matrix::zeros(rows.len(), dim);
        let mut oov_count = 0;
        for (i, row) in rows.into_iter().enumerate() {
            match row {
                Some(v) if v.len() == dim => vectors.row_mut(i).copy_from_slice(&v),
                Some(v) => {
                    return Err(Error::Shape(alloc::format!(
                        "embedding row {i} has {} components, expected {dim}",
                        v.len()
                    )))
                }
                None => oov_count += 1,
            }
        }
        Ok(EmbeddingTable { vectors, oov_count })
    }

    pub fn dim(&self) -> usize {
        self.vectors.cols()
    }

    pub fn n_terms(&self) -> usize {
        self.vectors.rows()
    }

    pub fn oov_count(&self) -> usize {
        self.oov_count
    }

    pub fn row(&self, term: usize) -> &[f64] {
        self.vectors.row(term)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.vectors
    }
}

/// N×D document vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct DocEmbeddings(pub Matrix);

impl DocEmbeddings {
    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn n_docs(&self) -> usize {
        self.0.rows()
    }

    pub fn dim(&self) -> usize {
        self.0.cols()
    }
}

/// Sparse TF-IDF rows times the dense embedding table.
pub fn project_documents(tfidf: &DocTermMatrix, table: &EmbeddingTable) -> Result<DocEmbeddings> {
    if tfidf.n_terms() != table.n_terms() {
        return Err(Error::Shape(alloc::format!(
            "document-term matrix has {} terms but the embedding table has {} rows",
            tfidf.n_terms(),
            table.n_terms()
        )));
    }
    Ok(DocEmbeddings(tfidf.matrix.mul_dense(&table.vectors)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_vocabulary;
    use alloc::string::String;

    fn doc(id: &str, t: &[&str]) -> Document {
        Document::from_tokens(id, t.iter().map(|s| String::from(*s)).collect())
    }

    #[test]
    fn counts_examples() {
        let docs = [doc("0", &["a", "a", "b"]), doc("1", &["zz", "q"]), doc("2", &[]), doc("3", &["b", "a"])];
        let vocab = build_vocabulary(&docs, 2, 1.0).unwrap();
        let c = compute_counts(&docs, &vocab);
        assert_eq!(c.row(0).collect::<Vec<_>>(), vec![(0, 2.0), (1, 1.0)]);
        assert_eq!(c.row(1).count(), 0);
        assert_eq!(c.row(2).count(), 0);
    }

    #[test]
    fn tfidf_hand_example() {
        let docs = [doc("1", &["a", "b"]), doc("2", &["a", "c"])];
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let t = compute_tfidf(&compute_counts(&docs, &vocab)).unwrap();
        assert_eq!(idf(2, 2), 1.0);
        assert!((idf(2, 1) - 1.4054651081081644).abs() < 1e-12);
        let r: Vec<_> = t.row(0).collect();
        assert_eq!(r[0].0, 0);
        assert!((r[0].1 - 0.5797386715376657).abs() < 1e-12);
        assert!((r[1].1 - 0.8148024746671689).abs() < 1e-12);
        assert_eq!(idf(1, 1), 1.0);
    }

    #[test]
    fn tfidf_keeps_empty_rows_and_rejects_tfidf_input() {
        let docs = [doc("1", &["a"]), doc("2", &[])];
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let t = compute_tfidf(&compute_counts(&docs, &vocab)).unwrap();
        assert_eq!(t.row(1).count(), 0);
        assert_eq!(t.row(0).collect::<Vec<_>>(), vec![(0, 1.0)]);
        assert!(compute_tfidf(&t).is_err());
    }

    #[test]
    fn projection_examples() {
        let table = EmbeddingTable::from_rows(2, vec![Some(vec![1.0, 0.0]), Some(vec![0.0, 1.0])]).unwrap();
        let m = DocTermMatrix {
            matrix: CsrMatrix::from_rows(2, vec![vec![(0, 0.6), (1, 0.8)], vec![], vec![(1, 0.5)]]).unwrap(),
            weighting: Weighting::TfIdf,
        };
        let x = project_documents(&m, &table).unwrap();
        assert_eq!(x.0.row(0), &[0.6, 0.8]);
        assert_eq!(x.0.row(1), &[0.0, 0.0]);
        assert_eq!(x.0.row(2), &[0.0, 0.5]);

        let short = EmbeddingTable::from_rows(2, vec![Some(vec![1.0, 0.0])]).unwrap();
        assert!(matches!(project_documents(&m, &short), Err(Error::Shape(_))));
    }

    #[test]
    fn oov_rows_are_zero() {
        let t = EmbeddingTable::from_rows(2, vec![Some(vec![1.0, 2.0]), None]).unwrap();
        assert_eq!(t.oov_count(), 1);
        assert_eq!(t.row(1), &[0.0, 0.0]);
        assert!(EmbeddingTable::from_rows(2, vec![Some(vec![1.0])]).is_err());
    }
}
