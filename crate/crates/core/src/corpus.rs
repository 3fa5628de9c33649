//! Sparse document-term matrices: loading, validation and preprocessing.
//!
//! Words are rows and documents are columns. Counts are stored column-major
//! (one sorted run of `(word, count)` pairs per document) since every
//! downstream consumer walks documents.
//!
//! All indices in the Rust API are 0-based. The interchange formats (UCI
//! bag-of-words and the triplet CSV) use 1-based ids.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TopicError};

/// Input file layout accepted by [`DocTermMatrix::load`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// Header lines `n`, `p`, `nnz` followed by `nnz` lines `doc word count`.
    Uci,
    /// Header `doc,word,count` followed by 1-based triplets.
    TripletCsv,
}

/// Word-count corpus, `p` words by `n` documents.
#[derive(Debug, Clone, PartialEq)]
pub struct DocTermMatrix {
    p: usize,
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<u64>,
    doc_lengths: Vec<u64>,
    vocab: Vec<String>,
}

impl DocTermMatrix {
    /// Builds a matrix from 0-based `(word, doc, count)` triplets. Duplicate
    /// entries are summed and explicit zeros dropped.
    pub fn from_triplets(
        p: usize,
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        if p == 0 || n == 0 {
            return Err(TopicError::EmptyCorpus(format!(
                "corpus has {p} words and {n} documents"
            )));
        }
        let mut entries = Vec::new();
        for (word, doc, count) in triplets {
            if word >= p {
                return Err(TopicError::InvalidArgument(format!(
                    "word index {word} out of range for p={p}"
                )));
            }
            if doc >= n {
                return Err(TopicError::InvalidArgument(format!(
                    "document index {doc} out of range for n={n}"
                )));
            }
            if count > 0 {
                entries.push((doc, word, count));
            }
        }
        entries.sort_unstable_by_key(|&(doc, word, _)| (doc, word));

        let mut col_ptr = vec![0usize; n + 1];
        let mut row_idx = Vec::with_capacity(entries.len());
        let mut values: Vec<u64> = Vec::with_capacity(entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (doc, word, count) in entries {
            if last == Some((doc, word)) {
                *values.last_mut().unwrap() += count;
                continue;
            }
            last = Some((doc, word));
            row_idx.push(word);
            values.push(count);
            col_ptr[doc + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let doc_lengths = (0..n)
            .map(|i| values[col_ptr[i]..col_ptr[i + 1]].iter().sum())
            .collect();
        Ok(Self {
            p,
            n,
            col_ptr,
            row_idx,
            values,
            doc_lengths,
            vocab: Vec::new(),
        })
    }

    /// Builds a matrix from a dense `p x n` count table.
    pub fn from_dense(counts: &DMatrix<u64>) -> Result<Self> {
        let (p, n) = counts.shape();
        let trip = (0..n).flat_map(|i| (0..p).map(move |j| (j, i, counts[(j, i)])));
        Self::from_triplets(p, n, trip)
    }

    /// Attaches a vocabulary. Its length must equal `p`.
    pub fn with_vocab(mut self, vocab: Vec<String>) -> Result<Self> {
        if !vocab.is_empty() && vocab.len() != self.p {
            return Err(TopicError::DimensionMismatch(format!(
                "vocabulary has {} entries but corpus has {} words",
                vocab.len(),
                self.p
            )));
        }
        self.vocab = vocab;
        Ok(self)
    }

    pub fn load(path: &Path, format: CorpusFormat) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| TopicError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        match format {
            CorpusFormat::Uci => Self::parse_uci(&text),
            CorpusFormat::TripletCsv => Self::parse_triplet_csv(&text),
        }
    }

    /// Parses the UCI bag-of-words layout.
    pub fn parse_uci(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());

        let mut header = [0u64; 3];
        for (slot, name) in header.iter_mut().zip(["n", "p", "nnz"]) {
            let (line, raw) = lines.next().ok_or_else(|| TopicError::Parse {
                line: 0,
                message: format!("missing header line `{name}`"),
            })?;
            *slot = parse_u64(raw, line, name)?;
        }
        let [n, p, nnz] = header;
        if n == 0 || p == 0 || nnz == 0 {
            return Err(TopicError::EmptyCorpus(format!(
                "header declares n={n}, p={p}, nnz={nnz}"
            )));
        }

        let mut triplets = Vec::with_capacity(nnz as usize);
        for (line, raw) in lines {
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(TopicError::Parse {
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let doc = parse_u64(fields[0], line, "docID")?;
            let word = parse_u64(fields[1], line, "wordID")?;
            let count = parse_u64(fields[2], line, "count")?;
            check_index(doc, n, line, "document")?;
            check_index(word, p, line, "word")?;
            triplets.push((word as usize - 1, doc as usize - 1, count));
        }
        if triplets.len() as u64 != nnz {
            return Err(TopicError::Parse {
                line: 0,
                message: format!("header declares {nnz} entries, found {}", triplets.len()),
            });
        }
        Self::from_triplets(p as usize, n as usize, triplets)
    }

    /// Parses the `doc,word,count` triplet CSV layout. Dimensions are the
    /// largest ids present.
    pub fn parse_triplet_csv(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        match lines.next() {
            Some((_, h)) if h.replace(' ', "") == "doc,word,count" => {}
            Some((line, h)) => {
                return Err(TopicError::Parse {
                    line,
                    message: format!("expected header `doc,word,count`, found `{h}`"),
                })
            }
            None => return Err(TopicError::EmptyCorpus("file is empty".into())),
        }
        let mut triplets = Vec::new();
        let (mut n, mut p) = (0u64, 0u64);
        for (line, raw) in lines {
            let fields: Vec<&str> = raw.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(TopicError::Parse {
                    line,
                    message: format!("expected 3 fields, found {}", fields.len()),
                });
            }
            let doc = parse_u64(fields[0], line, "doc")?;
            let word = parse_u64(fields[1], line, "word")?;
            let count = parse_u64(fields[2], line, "count")?;
            check_index(doc, u64::MAX, line, "document")?;
            check_index(word, u64::MAX, line, "word")?;
            n = n.max(doc);
            p = p.max(word);
            triplets.push((word as usize - 1, doc as usize - 1, count));
        }
        if triplets.is_empty() {
            return Err(TopicError::EmptyCorpus("no entries".into()));
        }
        Self::from_triplets(p as usize, n as usize, triplets)
    }

    /// Writes the corpus in UCI bag-of-words layout.
    pub fn to_uci_string(&self) -> String {
        let mut out = format!("{}\n{}\n{}\n", self.n, self.p, self.nnz());
        for i in 0..self.n {
            for (j, c) in self.doc(i) {
                out.push_str(&format!("{} {} {}\n", i + 1, j + 1, c));
            }
        }
        out
    }

    pub fn n_words(&self) -> usize {
        self.p
    }

    pub fn n_docs(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn doc_lengths(&self) -> &[u64] {
        &self.doc_lengths
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Nonzero `(word, count)` pairs of document `i`, ascending by word.
    pub fn doc(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    /// Count of word `j` in document `i`.
    pub fn get(&self, j: usize, i: usize) -> u64 {
        let range = self.col_ptr[i]..self.col_ptr[i + 1];
        match self.row_idx[range.clone()].binary_search(&j) {
            Ok(pos) => self.values[range.start + pos],
            Err(_) => 0,
        }
    }

    /// Total count of every word across the corpus.
    pub fn word_totals(&self) -> Vec<u64> {
        let mut totals = vec![0u64; self.p];
        for (&j, &c) in self.row_idx.iter().zip(&self.values) {
            totals[j] += c;
        }
        totals
    }

    pub fn to_dense(&self) -> DMatrix<u64> {
        let mut m = DMatrix::zeros(self.p, self.n);
        for i in 0..self.n {
            for (j, c) in self.doc(i) {
                m[(j, i)] = c;
            }
        }
        m
    }

    /// Keeps the listed rows and columns (in the given order).
    fn select(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        let mut new_row = vec![usize::MAX; self.p];
        for (new, &old) in rows.iter().enumerate() {
            new_row[old] = new;
        }
        let mut trip = Vec::new();
        for (new_i, &i) in cols.iter().enumerate() {
            for (j, c) in self.doc(i) {
                if new_row[j] != usize::MAX {
                    trip.push((new_row[j], new_i, c));
                }
            }
        }
        let out = Self::from_triplets(rows.len(), cols.len(), trip)?;
        if self.vocab.is_empty() {
            Ok(out)
        } else {
            out.with_vocab(rows.iter().map(|&j| self.vocab[j].clone()).collect())
        }
    }

    /// Drops all-zero word rows. Returns the reduced matrix and the surviving
    /// original row indices.
    pub fn without_zero_rows(&self) -> Result<(Self, Vec<usize>)> {
        let totals = self.word_totals();
        let kept: Vec<usize> = (0..self.p).filter(|&j| totals[j] > 0).collect();
        if kept.is_empty() {
            return Err(TopicError::EmptyCorpus("every word has zero count".into()));
        }
        if kept.len() == self.p {
            return Ok((self.clone(), kept));
        }
        let cols: Vec<usize> = (0..self.n).collect();
        Ok((self.select(&kept, &cols)?, kept))
    }
}

fn parse_u64(raw: &str, line: usize, what: &str) -> Result<u64> {
    raw.trim().parse::<u64>().map_err(|e| TopicError::Parse {
        line,
        message: format!("invalid {what} `{raw}`: {e}"),
    })
}

fn check_index(index: u64, max: u64, line: usize, what: &'static str) -> Result<()> {
    if index == 0 || index > max {
        return Err(TopicError::IndexOutOfRange {
            line,
            what,
            index,
            max,
        });
    }
    Ok(())
}

/// Reads a UCI-style vocabulary file: one word per line.
pub fn load_vocab(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|source| TopicError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(String::from)
        .collect())
}

/// Word frequency matrix: column `i` is the count column divided by `N_i`.
pub fn frequencies(d: &DocTermMatrix) -> Result<DMatrix<f64>> {
    let mut freq = DMatrix::zeros(d.p, d.n);
    for i in 0..d.n {
        let len = d.doc_lengths[i];
        if len == 0 {
            return Err(TopicError::ZeroLengthDocument(i));
        }
        let len = len as f64;
        for (j, c) in d.doc(i) {
            freq[(j, i)] = c as f64 / len;
        }
    }
    Ok(freq)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WordRemoval {
    Stopword,
    LowFrequency,
    ZeroCount,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DocRemoval {
    Short,
}

/// What [`preprocess`] removed. Indices are 0-based positions in the input
/// corpus.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PreprocessReport {
    pub removed_words: Vec<(usize, WordRemoval)>,
    pub removed_docs: Vec<(usize, DocRemoval)>,
    /// Surviving row -> original row.
    pub row_index_map: Vec<usize>,
    /// Surviving column -> original column.
    pub doc_index_map: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct PreprocessOptions {
    pub stopwords: HashSet<String>,
    pub keep_top_words: Option<usize>,
    /// Fraction of shortest documents to drop, in `[0, 1)`.
    pub drop_short_docs_fraction: f64,
}

/// Removes stopwords, keeps the most frequent words, drops the shortest
/// documents, then removes words and documents left with zero counts.
///
/// Stopwords are removed before ranking words by frequency. Ranking ties and
/// document-length ties go to the lower index.
pub fn preprocess(
    d: &DocTermMatrix,
    opts: &PreprocessOptions,
) -> Result<(DocTermMatrix, PreprocessReport)> {
    if !(0.0..1.0).contains(&opts.drop_short_docs_fraction) {
        return Err(TopicError::InvalidArgument(format!(
            "drop_short_docs_fraction must be in [0, 1), got {}",
            opts.drop_short_docs_fraction
        )));
    }
    if !opts.stopwords.is_empty() && d.vocab.is_empty() {
        return Err(TopicError::InvalidArgument(
            "stopwords given but the corpus has no vocabulary".into(),
        ));
    }

    let mut removed_words: BTreeMap<usize, WordRemoval> = BTreeMap::new();
    let mut alive = vec![true; d.p];
    if !opts.stopwords.is_empty() {
        for (j, w) in d.vocab.iter().enumerate() {
            if opts.stopwords.contains(w) {
                alive[j] = false;
                removed_words.insert(j, WordRemoval::Stopword);
            }
        }
    }

    let totals = d.word_totals();
    if let Some(keep) = opts.keep_top_words {
        let mut ranked: Vec<usize> = (0..d.p).filter(|&j| alive[j]).collect();
        ranked.sort_by(|&a, &b| totals[b].cmp(&totals[a]).then(a.cmp(&b)));
        for &j in ranked.iter().skip(keep) {
            alive[j] = false;
            removed_words.insert(j, WordRemoval::LowFrequency);
        }
    }

    // Document lengths over the surviving vocabulary.
    let lengths: Vec<u64> = (0..d.n)
        .map(|i| d.doc(i).filter(|&(j, _)| alive[j]).map(|(_, c)| c).sum())
        .collect();
    let mut removed_docs: BTreeMap<usize, DocRemoval> = BTreeMap::new();
    let n_drop = (opts.drop_short_docs_fraction * d.n as f64).floor() as usize;
    let mut by_length: Vec<usize> = (0..d.n).collect();
    by_length.sort_by(|&a, &b| lengths[a].cmp(&lengths[b]).then(a.cmp(&b)));
    for &i in by_length.iter().take(n_drop) {
        removed_docs.insert(i, DocRemoval::Short);
    }
    for i in 0..d.n {
        if lengths[i] == 0 {
            removed_docs.insert(i, DocRemoval::Short);
        }
    }
    let cols: Vec<usize> = (0..d.n).filter(|i| !removed_docs.contains_key(i)).collect();

    let mut kept_totals = vec![0u64; d.p];
    for &i in &cols {
        for (j, c) in d.doc(i) {
            kept_totals[j] += c;
        }
    }
    for j in 0..d.p {
        if alive[j] && kept_totals[j] == 0 {
            alive[j] = false;
            removed_words.insert(j, WordRemoval::ZeroCount);
        }
    }
    let rows: Vec<usize> = (0..d.p).filter(|&j| alive[j]).collect();
    if rows.is_empty() || cols.is_empty() {
        return Err(TopicError::EmptyCorpus(format!(
            "preprocessing left {} words and {} documents",
            rows.len(),
            cols.len()
        )));
    }

    let out = d.select(&rows, &cols)?;
    let report = PreprocessReport {
        removed_words: removed_words.into_iter().collect(),
        removed_docs: removed_docs.into_iter().collect(),
        row_index_map: rows,
        doc_index_map: cols,
    };
    Ok((out, report))
}
