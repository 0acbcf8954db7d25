//! Sparse document-word corpora: UCI bag-of-words I/O, word frequency
//! ranking, power-law fitting, and held-out evaluation splits.

mod split;
mod synth;
mod uci;
mod zipf;

pub use split::{split_for_eval, EvalSplit};
pub use synth::{generate_synthetic, SynthConfig};
pub use uci::{load_uci_bow, save_uci_bow, LoadWarning, UciLoad};
pub use zipf::{fit_zipf, ZipfFit};

/// A document-word count matrix stored sparsely by document.
///
/// Word ids are 0-based and dense in `[0, vocab_size)`. Each document holds
/// its nonzero `(word_id, count)` cells sorted by word id with no duplicates;
/// every document has at least one cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseCorpus {
    docs: Vec<Vec<(u32, u32)>>,
    vocab_size: usize,
    vocab: Vec<String>,
    total_tokens: u64,
    nnz: usize,
}

impl SparseCorpus {
    /// Builds a corpus from per-document cell lists.
    ///
    /// Cells within each document are aggregated and sorted; documents that
    /// end up empty are rejected.
    pub fn from_docs(mut docs: Vec<Vec<(u32, u32)>>, vocab_size: usize, vocab: Vec<String>) -> crate::Result<Self> {
        if !vocab.is_empty() && vocab.len() != vocab_size {
            return Err(crate::Error::VocabSize { got: vocab.len(), want: vocab_size });
        }
        for cells in &mut docs {
            if cells.is_empty() {
                return Err(crate::Error::Dimension("document with no cells".into()));
            }
            cells.sort_unstable_by_key(|&(w, _)| w);
            let mut merged: Vec<(u32, u32)> = Vec::with_capacity(cells.len());
            for &(w, x) in cells.iter() {
                if x == 0 {
                    return Err(crate::Error::Dimension("zero count cell".into()));
                }
                if (w as usize) >= vocab_size {
                    return Err(crate::Error::Dimension(format!(
                        "word id {w} outside vocabulary of size {vocab_size}"
                    )));
                }
                match merged.last_mut() {
                    Some(last) if last.0 == w => last.1 += x,
                    _ => merged.push((w, x)),
                }
            }
            *cells = merged;
        }
        let nnz = docs.iter().map(Vec::len).sum();
        let total_tokens = docs
            .iter()
            .flat_map(|c| c.iter())
            .map(|&(_, x)| u64::from(x))
            .sum();
        Ok(SparseCorpus { docs, vocab_size, vocab, total_tokens, nnz })
    }

    /// Number of documents D.
    pub fn num_docs(&self) -> usize {
        self.docs.len()
    }

    /// Vocabulary size W.
    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// Number of nonzero (word, document) cells.
    pub fn nnz(&self) -> usize {
        self.nnz
    }

    /// Total token count over all cells.
    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// The nonzero cells of document `d`, sorted by word id.
    pub fn doc(&self, d: usize) -> &[(u32, u32)] {
        &self.docs[d]
    }

    /// Iterator over all documents' cell lists in document order.
    pub fn docs(&self) -> impl Iterator<Item = &[(u32, u32)]> {
        self.docs.iter().map(Vec::as_slice)
    }

    /// Surface forms, word id -> string. Empty when no vocabulary was loaded.
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Token count of document `d`.
    pub fn doc_len(&self, d: usize) -> u64 {
        self.docs[d].iter().map(|&(_, x)| u64::from(x)).sum()
    }

    /// A corpus containing only the first `n` documents, same vocabulary.
    pub fn take_docs(&self, n: usize) -> SparseCorpus {
        let docs: Vec<_> = self.docs.iter().take(n).cloned().collect();
        SparseCorpus::from_docs(docs, self.vocab_size, self.vocab.clone())
            .expect("prefix of a valid corpus is valid")
    }
}

/// Per-word corpus frequencies and the descending-frequency rank order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencyTable {
    freq: Vec<u64>,
    rank_order: Vec<u32>,
}

impl FrequencyTable {
    /// Corpus frequency of a word.
    pub fn freq(&self, word: u32) -> u64 {
        self.freq[word as usize]
    }

    /// All per-word frequencies, indexed by word id.
    pub fn freqs(&self) -> &[u64] {
        &self.freq
    }

    /// Word ids sorted by descending frequency; position 0 is rank 1.
    pub fn rank_order(&self) -> &[u32] {
        &self.rank_order
    }

    /// Splits the rank positions `0..W` into `n` near-equal contiguous
    /// blocks. When `n` does not divide `W`, the first `W mod n` blocks get
    /// one extra position, so the most-frequent blocks are the larger ones.
    pub fn rank_blocks(&self, n: usize) -> Vec<std::ops::Range<usize>> {
        rank_blocks(self.rank_order.len(), n)
    }
}

pub(crate) fn rank_blocks(w: usize, n: usize) -> Vec<std::ops::Range<usize>> {
    assert!(n >= 1 && n <= w, "block count must be in [1, W]");
    let base = w / n;
    let extra = w % n;
    let mut blocks = Vec::with_capacity(n);
    let mut start = 0;
    for i in 0..n {
        let len = base + usize::from(i < extra);
        blocks.push(start..start + len);
        start += len;
    }
    blocks
}

/// Computes per-word corpus frequencies and the rank order (descending
/// frequency, ties broken by ascending word id).
pub fn word_frequencies(corpus: &SparseCorpus) -> FrequencyTable {
    let mut freq = vec![0u64; corpus.vocab_size()];
    for cells in corpus.docs() {
        for &(w, x) in cells {
            freq[w as usize] += u64::from(x);
        }
    }
    let mut rank_order: Vec<u32> = (0..corpus.vocab_size() as u32).collect();
    rank_order.sort_by_key(|&w| (std::cmp::Reverse(freq[w as usize]), w));
    FrequencyTable { freq, rank_order }
}
