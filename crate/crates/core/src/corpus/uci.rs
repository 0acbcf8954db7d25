//! UCI bag-of-words reader/writer.
//!
//! Format: three integer header lines `D`, `W`, `NNZ`, then `NNZ` lines of
//! `docID wordID count` triples with 1-based ids. A vocabulary file holds one
//! word per line, line `i` being word id `i - 1`.

use std::io::{BufRead, Write};

use super::SparseCorpus;
use crate::{Error, Result};

/// Non-fatal irregularities observed while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadWarning {
    /// The same (doc, word) pair appeared on more than one line; counts were
    /// summed and the effective nnz is lower than the header's.
    DuplicateCell { doc: u32, word: u32 },
    /// A document declared by the header had no entries and was dropped;
    /// later document ids shift down accordingly.
    EmptyDocDropped { doc: u32 },
    /// Header nnz differs from the number of distinct cells actually read.
    NnzMismatch { declared: usize, actual: usize },
}

/// A loaded corpus together with any warnings produced during the load.
#[derive(Debug)]
pub struct UciLoad {
    pub corpus: SparseCorpus,
    pub warnings: Vec<LoadWarning>,
}

fn parse_header_line(lines: &mut impl Iterator<Item = std::io::Result<String>>, lineno: usize, what: &str) -> Result<usize> {
    let line = lines
        .next()
        .ok_or_else(|| Error::parse(lineno, format!("missing {what} header line")))?
        .map_err(Error::Io)?;
    line.trim()
        .parse::<usize>()
        .map_err(|e| Error::parse(lineno, format!("bad {what} header: {e}")))
}

/// Loads a corpus in UCI bag-of-words format.
///
/// Duplicate `(doc, word)` lines are aggregated by summation. Documents that
/// end up with no entries are dropped and the document count adjusted; both
/// situations are reported as warnings rather than errors.
pub fn load_uci_bow<R: BufRead, V: BufRead>(docword: R, vocab: Option<V>) -> Result<UciLoad> {
    let mut lines = docword.lines();
    let d_decl = parse_header_line(&mut lines, 1, "D")?;
    let w_decl = parse_header_line(&mut lines, 2, "W")?;
    let nnz_decl = parse_header_line(&mut lines, 3, "NNZ")?;

    let mut docs: Vec<Vec<(u32, u32)>> = vec![Vec::new(); d_decl];
    let mut warnings = Vec::new();
    let mut lineno = 3usize;
    for line in lines {
        lineno += 1;
        let line = line.map_err(Error::Io)?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let mut field = |name: &str| -> Result<i64> {
            it.next()
                .ok_or_else(|| Error::parse(lineno, format!("missing {name}")))?
                .parse::<i64>()
                .map_err(|e| Error::parse(lineno, format!("bad {name}: {e}")))
        };
        let doc = field("docID")?;
        let word = field("wordID")?;
        let count = field("count")?;
        if it.next().is_some() {
            return Err(Error::parse(lineno, "trailing fields on triple line"));
        }
        if doc < 1 || doc as usize > d_decl {
            return Err(Error::bounds(lineno, format!("docID {doc} outside [1, {d_decl}]")));
        }
        if word < 1 || word as usize > w_decl {
            return Err(Error::bounds(lineno, format!("wordID {word} outside [1, {w_decl}]")));
        }
        if count <= 0 {
            return Err(Error::value(lineno, format!("count {count} must be positive")));
        }
        if count > u32::MAX as i64 {
            return Err(Error::value(lineno, format!("count {count} too large")));
        }
        docs[(doc - 1) as usize].push((word as u32 - 1, count as u32));
    }

    // Aggregate duplicates per document, noting each pair once.
    for (d, cells) in docs.iter_mut().enumerate() {
        cells.sort_unstable_by_key(|&(w, _)| w);
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(cells.len());
        for &(w, x) in cells.iter() {
            match merged.last_mut() {
                Some(last) if last.0 == w => {
                    warnings.push(LoadWarning::DuplicateCell { doc: d as u32, word: w });
                    last.1 += x;
                }
                _ => merged.push((w, x)),
            }
        }
        *cells = merged;
    }

    let mut kept = Vec::with_capacity(docs.len());
    for (d, cells) in docs.into_iter().enumerate() {
        if cells.is_empty() {
            warnings.push(LoadWarning::EmptyDocDropped { doc: d as u32 });
        } else {
            kept.push(cells);
        }
    }

    let vocab = match vocab {
        Some(v) => {
            let words: Vec<String> = v.lines().collect::<std::io::Result<_>>().map_err(Error::Io)?;
            if words.len() != w_decl {
                return Err(Error::VocabSize { got: words.len(), want: w_decl });
            }
            words
        }
        None => Vec::new(),
    };

    let corpus = SparseCorpus::from_docs(kept, w_decl, vocab)?;
    if corpus.nnz() != nnz_decl {
        warnings.push(LoadWarning::NnzMismatch { declared: nnz_decl, actual: corpus.nnz() });
    }
    Ok(UciLoad { corpus, warnings })
}

/// Writes a corpus in UCI bag-of-words format (1-based ids, document-major,
/// words ascending within a document).
pub fn save_uci_bow<W: Write>(corpus: &SparseCorpus, mut out: W) -> Result<()> {
    writeln!(out, "{}", corpus.num_docs())?;
    writeln!(out, "{}", corpus.vocab_size())?;
    writeln!(out, "{}", corpus.nnz())?;
    for (d, cells) in corpus.docs().enumerate() {
        for &(w, x) in cells {
            writeln!(out, "{} {} {}", d + 1, w + 1, x)?;
        }
    }
    Ok(())
}
