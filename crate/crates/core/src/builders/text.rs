use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::matrix::RelationMatrix;
use crate::registry::Registry;

pub const WORD_TYPE: &str = "word";
pub const DOC_TYPE: &str = "doc";

/// Lowercases and splits on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Tokenized documents with their entity names.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub names: Vec<String>,
    pub docs: Vec<Vec<String>>,
}

impl Corpus {
    /// One document per line, named by 0-based line index.
    pub fn from_lines(text: &str) -> Self {
        let docs: Vec<Vec<String>> = text.lines().map(tokenize).collect();
        let names = (0..docs.len()).map(|i| i.to_string()).collect();
        Self { names, docs }
    }

    pub fn from_docs(docs: Vec<Vec<String>>) -> Self {
        let names = (0..docs.len()).map(|i| i.to_string()).collect();
        Self { names, docs }
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::from_lines(&text))
    }

    /// One document per file under `root/<label>/`, named `<label>/<file>`.
    /// Returns the corpus and each document's label. Files that are not valid
    /// UTF-8 are decoded lossily.
    pub fn read_labeled_dir(root: &Path) -> Result<(Self, Vec<String>)> {
        let mut groups: Vec<_> = std::fs::read_dir(root)
            .map_err(|e| Error::io(root, e))?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(|e| Error::io(root, e))?
            .into_iter()
            .map(|e| e.path())
            .filter(|p| p.is_dir())
            .collect();
        groups.sort();
        let (mut corpus, mut labels) = (Self::default(), Vec::new());
        for group in groups {
            let label = group.file_name().unwrap_or_default().to_string_lossy().into_owned();
            let mut files: Vec<_> = std::fs::read_dir(&group)
                .map_err(|e| Error::io(&group, e))?
                .collect::<std::io::Result<Vec<_>>>()
                .map_err(|e| Error::io(&group, e))?
                .into_iter()
                .map(|e| e.path())
                .filter(|p| p.is_file())
                .collect();
            files.sort();
            for f in files {
                let bytes = std::fs::read(&f).map_err(|e| Error::io(&f, e))?;
                let name = f.file_name().unwrap_or_default().to_string_lossy();
                corpus.names.push(format!("{label}/{name}"));
                corpus.docs.push(tokenize(&String::from_utf8_lossy(&bytes)));
                labels.push(label.clone());
            }
        }
        if corpus.is_empty() {
            return Err(Error::InvalidArgument(format!("no documents under {}", root.display())));
        }
        Ok((corpus, labels))
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}

/// The `size` most frequent tokens, ties broken by first occurrence.
pub fn vocabulary(docs: &[Vec<String>], size: usize) -> Vec<String> {
    let mut seen: HashMap<&str, (usize, usize)> = HashMap::new();
    for (pos, tok) in docs.iter().flatten().enumerate() {
        seen.entry(tok).or_insert((0, pos)).0 += 1;
    }
    let mut ranked: Vec<(&str, usize, usize)> = seen.into_iter().map(|(t, (n, first))| (t, n, first)).collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    ranked.into_iter().take(size).map(|(t, _, _)| t.to_string()).collect()
}

fn check_corpus(docs: &[Vec<String>]) -> Result<()> {
    if docs.iter().all(Vec::is_empty) {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    Ok(())
}

/// Ordered target/context pairs within `window` positions of each other, rows
/// of type `word` and columns of type `word-ctx`. Out-of-vocabulary tokens keep
/// their positions but form no pairs.
pub fn word_context(
    registry: &mut Registry,
    corpus: &Corpus,
    window: usize,
    vocab_size: usize,
) -> Result<RelationMatrix> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be >= 1".into()));
    }
    check_corpus(&corpus.docs)?;
    let vocab = vocabulary(&corpus.docs, vocab_size);
    let tw = registry.ensure_type(WORD_TYPE)?;
    let tc = registry.ensure_context_of(tw)?;
    let mut row_of = HashMap::with_capacity(vocab.len());
    let mut col_of = HashMap::with_capacity(vocab.len());
    for w in &vocab {
        row_of.insert(w.as_str(), registry.register(tw, w)?);
        col_of.insert(w.as_str(), registry.register(tc, w)?);
    }

    let mut counts: HashMap<(usize, usize), f64> = HashMap::new();
    for doc in &corpus.docs {
        let rows: Vec<Option<usize>> = doc.iter().map(|t| row_of.get(t.as_str()).copied()).collect();
        let cols: Vec<Option<usize>> = doc.iter().map(|t| col_of.get(t.as_str()).copied()).collect();
        for (i, r) in rows.iter().enumerate() {
            let Some(r) = *r else { continue };
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(doc.len() - 1);
            for (j, c) in cols.iter().enumerate().take(hi + 1).skip(lo) {
                if j == i {
                    continue;
                }
                if let Some(c) = *c {
                    *counts.entry((r, c)).or_default() += 1.0;
                }
            }
        }
    }
    RelationMatrix::build(registry, tw, tc, counts.into_iter().map(|((r, c), w)| (r, c, w)))
}

/// Term counts per document, restricted to the `vocab_size` most frequent
/// words. Every document is registered, including ones with no vocabulary hits.
pub fn bow_matrix(registry: &mut Registry, corpus: &Corpus, vocab_size: usize) -> Result<RelationMatrix> {
    check_corpus(&corpus.docs)?;
    let vocab = vocabulary(&corpus.docs, vocab_size);
    let td = registry.ensure_type(DOC_TYPE)?;
    let tw = registry.ensure_type(WORD_TYPE)?;
    let doc_ids: Vec<usize> = corpus.names.iter().map(|n| registry.register(td, n)).collect::<Result<_>>()?;
    let mut word_of = HashMap::with_capacity(vocab.len());
    for w in &vocab {
        word_of.insert(w.as_str(), registry.register(tw, w)?);
    }
    let mut triplets = Vec::new();
    for (d, doc) in doc_ids.iter().zip(&corpus.docs) {
        for tok in doc {
            if let Some(&w) = word_of.get(tok.as_str()) {
                triplets.push((*d, w, 1.0));
            }
        }
    }
    RelationMatrix::build(registry, td, tw, triplets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(lines: &[&str]) -> Corpus {
        Corpus::from_lines(&lines.join("\n"))
    }

    #[test]
    fn tokenizer_lowercases_and_splits() {
        assert_eq!(tokenize("Hello, World! x86-64"), vec!["hello", "world", "x86", "64"]);
    }

    #[test]
    fn vocabulary_ties_by_first_occurrence() {
        let c = corpus(&["b a c a b d"]);
        assert_eq!(vocabulary(&c.docs, 3), vec!["b", "a", "c"]);
    }

    #[test]
    fn two_word_document() {
        let mut reg = Registry::new();
        let m = word_context(&mut reg, &corpus(&["a b"]), 1, 10).unwrap();
        let (_, a) = reg.lookup("word", "a").unwrap();
        let (_, b) = reg.lookup("word-ctx", "b").unwrap();
        let (_, br) = reg.lookup("word", "b").unwrap();
        let (_, ac) = reg.lookup("word-ctx", "a").unwrap();
        assert_eq!(m.get(a, b), 1.0);
        assert_eq!(m.get(br, ac), 1.0);
        assert_eq!(m.total_mass(), 2.0);
    }

    #[test]
    fn repeated_word() {
        let mut reg = Registry::new();
        let m = word_context(&mut reg, &corpus(&["a a a"]), 1, 10).unwrap();
        assert_eq!(m.get(0, 0), 4.0);
    }

    #[test]
    fn oov_tokens_hold_positions() {
        // "z" is out of vocabulary; with window 1 it separates a from b, so
        // only the second line contributes a->b pairs.
        let mut reg = Registry::new();
        let m = word_context(&mut reg, &corpus(&["a z b", "a b a b"]), 1, 2).unwrap();
        let (_, a) = reg.lookup("word", "a").unwrap();
        let (_, b) = reg.lookup("word-ctx", "b").unwrap();
        assert_eq!(m.get(a, b), 3.0);
    }

    #[test]
    fn window_zero_and_empty_corpus_rejected() {
        let mut reg = Registry::new();
        assert!(word_context(&mut reg, &corpus(&["a b"]), 0, 10).is_err());
        assert!(word_context(&mut reg, &corpus(&["", "!!"]), 1, 10).is_err());
        assert!(bow_matrix(&mut reg, &Corpus::default(), 10).is_err());
    }

    #[test]
    fn labeled_directory() {
        let dir = tempfile::tempdir().unwrap();
        for (g, f, text) in [("b", "2", "Hello world"), ("a", "1", "x y"), ("a", "0", "z")] {
            std::fs::create_dir_all(dir.path().join(g)).unwrap();
            std::fs::write(dir.path().join(g).join(f), text).unwrap();
        }
        let (c, labels) = Corpus::read_labeled_dir(dir.path()).unwrap();
        assert_eq!(c.names, vec!["a/0", "a/1", "b/2"]);
        assert_eq!(labels, vec!["a", "a", "b"]);
        assert_eq!(c.docs[2], vec!["hello", "world"]);
        assert!(Corpus::read_labeled_dir(&dir.path().join("a")).is_err());
    }

    #[test]
    fn bow_counts() {
        let mut reg = Registry::new();
        let m = bow_matrix(&mut reg, &corpus(&["a a b"]), 10).unwrap();
        let (_, d) = reg.lookup("doc", "0").unwrap();
        let (_, a) = reg.lookup("word", "a").unwrap();
        let (_, b) = reg.lookup("word", "b").unwrap();
        assert_eq!(m.get(d, a), 2.0);
        assert_eq!(m.get(d, b), 1.0);
    }

    #[test]
    fn bow_respects_vocab_size() {
        let mut reg = Registry::new();
        let m = bow_matrix(&mut reg, &corpus(&["a a b", "a c"]), 1).unwrap();
        assert!(reg.lookup("word", "b").is_err());
        assert_eq!(m.nnz(), 2);
        // documents without vocabulary hits are still registered
        let m = bow_matrix(&mut Registry::new(), &corpus(&["a a", "b"]), 1).unwrap();
        assert_eq!(m.n_rows(), 2);
    }
}
