//! Bag-of-words corpora: vocabulary, documents, loaders and writers.

mod synth;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub use synth::{generate_synthetic, PlantedHierarchy, PlantedSpec};

/// Ordered table of unique surface strings. Term ids are dense `0..len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn new(terms: Vec<String>) -> Result<Self> {
        if terms.len() < 2 {
            return Err(Error::VocabularyTooSmall(terms.len()));
        }
        let mut index = HashMap::with_capacity(terms.len());
        for (id, term) in terms.iter().enumerate() {
            if index.insert(term.clone(), id as u32).is_some() {
                return Err(Error::DuplicateTerm(term.clone()));
            }
        }
        Ok(Self { terms, index })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn term(&self, id: u32) -> &str {
        &self.terms[id as usize]
    }

    pub fn id(&self, term: &str) -> Option<u32> {
        self.index.get(term).copied()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }
}

/// A document as a sequence of term ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    tokens: Vec<u32>,
}

impl Document {
    pub fn new(tokens: Vec<u32>) -> Self {
        Self { tokens }
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// `(term, count)` pairs sorted by term id.
    pub fn term_counts(&self) -> Vec<(u32, u32)> {
        let mut sorted = self.tokens.clone();
        sorted.sort_unstable();
        let mut out: Vec<(u32, u32)> = Vec::new();
        for w in sorted {
            match out.last_mut() {
                Some((last, n)) if *last == w => *n += 1,
                _ => out.push((w, 1)),
            }
        }
        out
    }
}

/// Immutable collection of non-empty documents over a shared vocabulary.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    vocabulary: Vocabulary,
    bags: Vec<Vec<(u32, u32)>>,
    total_tokens: usize,
}

impl Corpus {
    pub fn new(documents: Vec<Document>, vocabulary: Vocabulary) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let w = vocabulary.len();
        for (d, doc) in documents.iter().enumerate() {
            if doc.is_empty() {
                return Err(Error::Dimension(format!("document {d} is empty")));
            }
            if let Some(&bad) = doc.tokens.iter().find(|&&t| t as usize >= w) {
                return Err(Error::IdOutOfRange {
                    what: "term",
                    id: bad as usize,
                    limit: w,
                });
            }
        }
        let bags = documents.iter().map(Document::term_counts).collect();
        let total_tokens = documents.iter().map(Document::len).sum();
        Ok(Self {
            documents,
            vocabulary,
            bags,
            total_tokens,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn document(&self, d: usize) -> &Document {
        &self.documents[d]
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    pub fn num_docs(&self) -> usize {
        self.documents.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn total_tokens(&self) -> usize {
        self.total_tokens
    }

    /// Sparse counts n_d^w of document `d`, sorted by term id.
    pub fn doc_term_counts(&self, d: usize) -> &[(u32, u32)] {
        &self.bags[d]
    }

    /// Corpus-wide occurrence count of every term.
    pub fn term_frequencies(&self) -> Vec<u64> {
        let mut freq = vec![0u64; self.vocab_size()];
        for bag in &self.bags {
            for &(w, n) in bag {
                freq[w as usize] += n as u64;
            }
        }
        freq
    }

    /// SHA-256 over the canonical UCI serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        let mut buf = Vec::new();
        self.write_uci(&mut buf, &mut Vec::new())
            .expect("writing to memory cannot fail");
        hasher.update(&buf);
        for term in self.vocabulary.terms() {
            hasher.update(term.as_bytes());
            hasher.update(b"\n");
        }
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn stats(&self) -> CorpusStats {
        let mut lengths: Vec<usize> = self.documents.iter().map(Document::len).collect();
        lengths.sort_unstable();
        let mut histogram: Vec<(usize, usize)> = Vec::new();
        for len in lengths {
            match histogram.last_mut() {
                Some((l, n)) if *l == len => *n += 1,
                _ => histogram.push((len, 1)),
            }
        }
        CorpusStats {
            documents: self.num_docs(),
            vocabulary: self.vocab_size(),
            total_tokens: self.total_tokens,
            doc_length_histogram: histogram,
        }
    }

    fn write_uci(&self, docword: &mut impl Write, vocab: &mut impl Write) -> std::io::Result<()> {
        let nnz: usize = self.bags.iter().map(Vec::len).sum();
        writeln!(docword, "{}", self.num_docs())?;
        writeln!(docword, "{}", self.vocab_size())?;
        writeln!(docword, "{nnz}")?;
        for (d, bag) in self.bags.iter().enumerate() {
            for &(w, n) in bag {
                writeln!(docword, "{} {} {}", d + 1, w + 1, n)?;
            }
        }
        for term in self.vocabulary.terms() {
            writeln!(vocab, "{term}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub documents: usize,
    pub vocabulary: usize,
    pub total_tokens: usize,
    /// `(document length, number of documents)` pairs, ascending by length.
    pub doc_length_histogram: Vec<(usize, usize)>,
}

/// Result of a loader: the corpus plus the 1-based ids (line numbers for
/// plaintext, document ids for UCI) of documents dropped for being empty.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub corpus: Corpus,
    pub dropped: Vec<usize>,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

/// One document per line, whitespace separated tokens. Tokens occurring fewer
/// than `min_count` times corpus-wide are removed; documents left empty are
/// dropped.
pub fn load_plaintext(path: &Path, min_count: usize) -> Result<Loaded> {
    let reader = open(path)?;
    let mut lines: Vec<Vec<String>> = Vec::new();
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    for line in reader.lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let toks: Vec<String> = line.split_whitespace().map(str::to_owned).collect();
        for t in &toks {
            let n = counts.entry(t.clone()).or_insert(0);
            if *n == 0 {
                order.push(t.clone());
            }
            *n += 1;
        }
        lines.push(toks);
    }

    let kept: Vec<String> = order
        .into_iter()
        .filter(|t| counts[t] >= min_count)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let index: HashMap<&str, u32> = kept
        .iter()
        .enumerate()
        .map(|(i, t)| (t.as_str(), i as u32))
        .collect();

    let mut documents = Vec::new();
    let mut dropped = Vec::new();
    for (lineno, toks) in lines.iter().enumerate() {
        let ids: Vec<u32> = toks
            .iter()
            .filter_map(|t| index.get(t.as_str()).copied())
            .collect();
        if ids.is_empty() {
            dropped.push(lineno + 1);
        } else {
            documents.push(Document::new(ids));
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocabulary = Vocabulary::new(kept)?;
    if !dropped.is_empty() {
        log::warn!("{}: dropped {} empty documents", path.display(), dropped.len());
    }
    Ok(Loaded {
        corpus: Corpus::new(documents, vocabulary)?,
        dropped,
    })
}

fn parse_header(
    path: &Path,
    lines: &mut impl Iterator<Item = (usize, std::io::Result<String>)>,
    name: &str,
) -> Result<usize> {
    loop {
        let Some((no, line)) = lines.next() else {
            return Err(Error::format(path, 0, format!("missing {name} header line")));
        };
        let line = line.map_err(|e| Error::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        return trimmed
            .parse()
            .map_err(|_| Error::format(path, no + 1, format!("bad {name} header {trimmed:?}")));
    }
}

/// UCI bag-of-words: `docword` has header lines D, W, NNZ followed by
/// 1-based `docId termId count` triples; `vocab` lists one term per line.
pub fn load_uci_bow(docword: &Path, vocab: &Path) -> Result<Loaded> {
    let terms: Vec<String> = open(vocab)?
        .lines()
        .map(|l| l.map(|s| s.trim().to_owned()).map_err(|e| Error::io(vocab, e)))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .filter(|s| !s.is_empty())
        .collect();

    let mut lines = open(docword)?.lines().enumerate();
    let num_docs = parse_header(docword, &mut lines, "D")?;
    let num_terms = parse_header(docword, &mut lines, "W")?;
    let nnz = parse_header(docword, &mut lines, "NNZ")?;
    if terms.len() != num_terms {
        return Err(Error::format(
            vocab,
            terms.len(),
            format!("vocabulary has {} terms but header says W={num_terms}", terms.len()),
        ));
    }

    let mut tokens: Vec<Vec<u32>> = vec![Vec::new(); num_docs];
    let mut triples = 0usize;
    for (no, line) in lines {
        let line = line.map_err(|e| Error::io(docword, e))?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 3 {
            return Err(Error::format(docword, no + 1, "expected `docId termId count`"));
        }
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::format(docword, no + 1, format!("not an integer: {s:?}")))
        };
        let (d, w, n) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
        if d == 0 || d > num_docs {
            return Err(Error::IdOutOfRange {
                what: "document",
                id: d,
                limit: num_docs,
            });
        }
        if w == 0 || w > num_terms {
            return Err(Error::IdOutOfRange {
                what: "term",
                id: w,
                limit: num_terms,
            });
        }
        triples += 1;
        tokens[d - 1].extend(std::iter::repeat_n((w - 1) as u32, n));
    }
    if triples != nnz {
        return Err(Error::format(
            docword,
            0,
            format!("header says NNZ={nnz} but found {triples} triples"),
        ));
    }

    let mut documents = Vec::new();
    let mut dropped = Vec::new();
    for (d, toks) in tokens.into_iter().enumerate() {
        if toks.is_empty() {
            dropped.push(d + 1);
        } else {
            documents.push(Document::new(toks));
        }
    }
    if documents.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let vocabulary = Vocabulary::new(terms)?;
    Ok(Loaded {
        corpus: Corpus::new(documents, vocabulary)?,
        dropped,
    })
}

pub fn write_uci_bow(corpus: &Corpus, docword: &Path, vocab: &Path) -> Result<()> {
    let create = |p: &Path| {
        File::create(p)
            .map(BufWriter::new)
            .map_err(|e| Error::io(p, e))
    };
    let mut dw = create(docword)?;
    let mut vw = create(vocab)?;
    corpus
        .write_uci(&mut dw, &mut vw)
        .and_then(|_| dw.flush())
        .and_then(|_| vw.flush())
        .map_err(|e| Error::io(docword, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_tmp(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    #[test]
    fn plaintext_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "c.txt", "a b a\nb c");
        let loaded = load_plaintext(&p, 1).unwrap();
        assert_eq!(loaded.corpus.vocab_size(), 3);
        assert_eq!(loaded.corpus.num_docs(), 2);
        assert_eq!(loaded.corpus.total_tokens(), 5);
        assert!(loaded.dropped.is_empty());
    }

    #[test]
    fn plaintext_min_count_filters() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "c.txt", "a b a\nb c");
        let c = load_plaintext(&p, 2).unwrap().corpus;
        assert_eq!(c.vocabulary().terms(), &["a".to_string(), "b".to_string()]);
        let b = c.vocabulary().id("b").unwrap();
        assert_eq!(c.document(1).tokens(), &[b]);
    }

    #[test]
    fn plaintext_all_filtered_is_empty() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "c.txt", "x x x");
        assert!(matches!(load_plaintext(&p, 4), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn plaintext_reports_dropped_lines() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "c.txt", "a b\nz\n\na b");
        let loaded = load_plaintext(&p, 2).unwrap();
        assert_eq!(loaded.dropped, vec![2, 3]);
        assert_eq!(loaded.corpus.num_docs(), 2);
    }

    #[test]
    fn plaintext_missing_file() {
        let err = load_plaintext(Path::new("/nonexistent/corpus.txt"), 1).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn uci_total_tokens() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write_tmp(&dir, "docword.txt", "2\n3\n2\n1 1 2\n2 3 1\n");
        let v = write_tmp(&dir, "vocab.txt", "x\ny\nz\n");
        let c = load_uci_bow(&dw, &v).unwrap().corpus;
        assert_eq!(c.total_tokens(), 3);
        assert_eq!(c.doc_term_counts(0), &[(0, 2)]);
        assert_eq!(c.doc_term_counts(1), &[(2, 1)]);
    }

    #[test]
    fn uci_term_out_of_range() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write_tmp(&dir, "docword.txt", "2\n3\n2\n1 1 2\n2 4 1\n");
        let v = write_tmp(&dir, "vocab.txt", "x\ny\nz\n");
        assert!(matches!(
            load_uci_bow(&dw, &v),
            Err(Error::IdOutOfRange { what: "term", id: 4, .. })
        ));
    }

    #[test]
    fn uci_nnz_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let dw = write_tmp(&dir, "docword.txt", "2\n3\n5\n1 1 2\n1 2 1\n2 3 1\n2 1 1\n");
        let v = write_tmp(&dir, "vocab.txt", "x\ny\nz\n");
        assert!(matches!(load_uci_bow(&dw, &v), Err(Error::Format { .. })));
    }

    #[test]
    fn vocabulary_rejects_duplicates_and_tiny() {
        assert!(matches!(
            Vocabulary::new(vec!["a".into(), "a".into()]),
            Err(Error::DuplicateTerm(_))
        ));
        assert!(matches!(
            Vocabulary::new(vec!["a".into()]),
            Err(Error::VocabularyTooSmall(1))
        ));
    }

    #[test]
    fn uci_round_trip_and_fingerprint() {
        let dir = tempfile::tempdir().unwrap();
        let p = write_tmp(&dir, "c.txt", "a b a c\nb c c\nd a");
        let c = load_plaintext(&p, 1).unwrap().corpus;
        let dw = dir.path().join("dw.txt");
        let v = dir.path().join("v.txt");
        write_uci_bow(&c, &dw, &v).unwrap();
        let back = load_uci_bow(&dw, &v).unwrap().corpus;
        for d in 0..c.num_docs() {
            assert_eq!(c.doc_term_counts(d), back.doc_term_counts(d));
        }
        assert_eq!(c.fingerprint(), back.fingerprint());
    }
}
