//! Matrix recipes for tabular data and raw text.

mod tabular;
mod text;

pub use tabular::{coattendance, cooccurrence, similarity_matrix, TabularSource};
pub use text::{bow_matrix, tokenize, vocabulary, word_context, Corpus, DOC_TYPE, WORD_TYPE};

use crate::error::Result;
use crate::matrix::RelationMatrix;

/// Treats rows as documents and columns as terms: `w * ln(n_rows / df)`, where
/// `df` is the number of rows with a nonzero entry in the column. Columns
/// present in every row get weight 0 and vanish.
pub fn tfidf_transform(m: &RelationMatrix) -> Result<RelationMatrix> {
    let mut df = vec![0usize; m.n_cols()];
    for c in m.cells() {
        df[c.col] += 1;
    }
    let n = m.n_rows() as f64;
    m.map_weights(|c| c.weight * (n / df[c.col] as f64).ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::registry::Registry;

    fn reg_n(n: usize) -> (Registry, crate::TypeId, crate::TypeId) {
        let mut r = Registry::new();
        let a = r.add_type("doc").unwrap();
        let b = r.add_type("word").unwrap();
        for i in 0..n {
            r.register(a, &i.to_string()).unwrap();
            r.register(b, &i.to_string()).unwrap();
        }
        (r, a, b)
    }

    fn reg() -> (Registry, crate::TypeId, crate::TypeId) {
        reg_n(3)
    }

    #[test]
    fn identity_counts() {
        let (r, a, b) = reg_n(2);
        let m = RelationMatrix::build(&r, a, b, [(0, 0, 1.0), (1, 1, 1.0)]).unwrap();
        let t = tfidf_transform(&m).unwrap();
        assert_eq!(t.nnz(), 2);
        assert!(t.cells().iter().all(|c| (c.weight - std::f64::consts::LN_2).abs() < 1e-12));
    }

    #[test]
    fn ubiquitous_column_dropped() {
        let (r, a, b) = reg();
        let m = RelationMatrix::build(&r, a, b, [(0, 0, 3.0), (1, 0, 1.0), (2, 0, 2.0), (0, 1, 1.0)]).unwrap();
        let t = tfidf_transform(&m).unwrap();
        assert_eq!(t.nnz(), 1);
        assert!((t.get(0, 1) - 3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn all_columns_ubiquitous_is_empty() {
        let (r, a, b) = reg();
        let m = RelationMatrix::build(&r, a, b, (0..3).map(|i| (i, 0, 1.0))).unwrap();
        assert!(matches!(tfidf_transform(&m), Err(Error::EmptyMatrix)));
    }
}
