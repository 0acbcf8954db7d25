//! Held-out evaluation splits: a seeded document-level test selection with a
//! per-token observed/held-out split inside each test document.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SparseCorpus;
use crate::{Error, Result};

/// Train / test-observed / test-heldout partition of a corpus.
///
/// `test_observed` and `test_heldout` use the same document ordering, so
/// document `d` of one is the other half of document `d` of the other. All
/// three corpora share the vocabulary of the original.
#[derive(Debug, Clone)]
pub struct EvalSplit {
    pub train: SparseCorpus,
    pub test_observed: SparseCorpus,
    pub test_heldout: SparseCorpus,
    pub seed: u64,
}

/// Splits a corpus for held-out evaluation.
///
/// A fraction `test_doc_fraction` of documents (rounded, at least one) is
/// selected uniformly at random; within each selected document a fraction
/// `heldout_word_fraction` of its tokens (rounded, clamped so neither side is
/// empty) is held out and the rest observed. Documents with fewer than two
/// tokens are not eligible for selection. Deterministic given `seed`.
pub fn split_for_eval(
    corpus: &SparseCorpus,
    test_doc_fraction: f64,
    heldout_word_fraction: f64,
    seed: u64,
) -> Result<EvalSplit> {
    if !(test_doc_fraction > 0.0 && test_doc_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test_doc_fraction must be in (0, 1), got {test_doc_fraction}"
        )));
    }
    if !(heldout_word_fraction > 0.0 && heldout_word_fraction < 1.0) {
        return Err(Error::Config(format!(
            "heldout_word_fraction must be in (0, 1), got {heldout_word_fraction}"
        )));
    }
    if corpus.num_docs() < 2 {
        return Err(Error::Config("corpus needs at least 2 documents to split".into()));
    }

    let d = corpus.num_docs();
    let n_test = ((d as f64 * test_doc_fraction).round() as usize).max(1);
    let eligible: Vec<usize> = (0..d).filter(|&i| corpus.doc_len(i) >= 2).collect();
    let n_test = n_test.min(eligible.len()).min(d - 1);
    if n_test == 0 {
        return Err(Error::Config("no documents eligible for the test split".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = eligible;
    pool.shuffle(&mut rng);
    let mut test_ids: Vec<usize> = pool.into_iter().take(n_test).collect();
    test_ids.sort_unstable();
    let is_test = {
        let mut flags = vec![false; d];
        for &i in &test_ids {
            flags[i] = true;
        }
        flags
    };

    let mut train_docs = Vec::with_capacity(d - n_test);
    let mut observed_docs = Vec::with_capacity(n_test);
    let mut heldout_docs = Vec::with_capacity(n_test);
    for (i, cells) in corpus.docs().enumerate() {
        if !is_test[i] {
            train_docs.push(cells.to_vec());
            continue;
        }
        // Expand the document into tokens, hold out an exact fraction.
        let mut tokens: Vec<u32> = Vec::with_capacity(corpus.doc_len(i) as usize);
        for &(w, x) in cells {
            for _ in 0..x {
                tokens.push(w);
            }
        }
        let n = tokens.len();
        let n_held = ((n as f64 * heldout_word_fraction).round() as usize).clamp(1, n - 1);
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut rng);
        let mut held = vec![false; n];
        for &j in idx.iter().take(n_held) {
            held[j] = true;
        }
        let collect = |keep_held: bool| -> Vec<(u32, u32)> {
            let mut counts: std::collections::BTreeMap<u32, u32> = Default::default();
            for (j, &w) in tokens.iter().enumerate() {
                if held[j] == keep_held {
                    *counts.entry(w).or_insert(0) += 1;
                }
            }
            counts.into_iter().collect()
        };
        observed_docs.push(collect(false));
        heldout_docs.push(collect(true));
    }

    let w = corpus.vocab_size();
    let vocab = corpus.vocab().to_vec();
    Ok(EvalSplit {
        train: SparseCorpus::from_docs(train_docs, w, vocab.clone())?,
        test_observed: SparseCorpus::from_docs(observed_docs, w, vocab.clone())?,
        test_heldout: SparseCorpus::from_docs(heldout_docs, w, vocab)?,
        seed,
    })
}
