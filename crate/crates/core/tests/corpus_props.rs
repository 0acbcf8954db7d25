//! Corpus-level properties: UCI round-trips, independent file re-summation,
//! and split mass conservation on randomized instances.

mod common;

use std::io::Cursor;

use cepbp::corpus::{
    fit_zipf, generate_synthetic, load_uci_bow, save_uci_bow, split_for_eval, word_frequencies,
    SynthConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn uci_round_trip_random_corpora() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..25 {
        let corpus = common::random_corpus(&mut rng, 8, 12);
        let mut buf = Vec::new();
        save_uci_bow(&corpus, &mut buf).unwrap();
        let reloaded = load_uci_bow(Cursor::new(&buf), None::<Cursor<&[u8]>>).unwrap();
        assert!(reloaded.warnings.is_empty());
        assert_eq!(reloaded.corpus, corpus);
    }
}

#[test]
fn kos_scale_file_against_raw_resummation() {
    // Write the synthetic corpus in UCI format, then re-derive the totals
    // from the text alone and compare with what the loader reports.
    let corpus = generate_synthetic(&SynthConfig::kos_scale(1));
    let mut buf = Vec::new();
    save_uci_bow(&corpus, &mut buf).unwrap();

    let text = String::from_utf8(buf.clone()).unwrap();
    let mut lines = text.lines();
    let d: usize = lines.next().unwrap().parse().unwrap();
    let w: usize = lines.next().unwrap().parse().unwrap();
    let nnz: usize = lines.next().unwrap().parse().unwrap();
    let mut token_sum = 0u64;
    let mut line_count = 0usize;
    let mut per_word = vec![0u64; w];
    for line in lines {
        let mut it = line.split_whitespace();
        let _doc: usize = it.next().unwrap().parse().unwrap();
        let word: usize = it.next().unwrap().parse().unwrap();
        let count: u64 = it.next().unwrap().parse().unwrap();
        token_sum += count;
        per_word[word - 1] += count;
        line_count += 1;
    }

    let loaded = load_uci_bow(Cursor::new(&buf), None::<Cursor<&[u8]>>).unwrap();
    assert!(loaded.warnings.is_empty());
    assert_eq!(loaded.corpus.num_docs(), d);
    assert_eq!(loaded.corpus.vocab_size(), w);
    assert_eq!(loaded.corpus.nnz(), nnz);
    assert_eq!(line_count, nnz);
    assert_eq!(loaded.corpus.total_tokens(), token_sum);

    // Frequency table equals the raw per-word sums, and conserves mass.
    let ft = word_frequencies(&loaded.corpus);
    assert_eq!(ft.freqs(), per_word.as_slice());
    assert_eq!(ft.freqs().iter().sum::<u64>(), token_sum);
}

#[test]
fn split_partitions_token_mass_randomized() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for trial in 0..20 {
        let corpus = common::random_corpus(&mut rng, 10, 8);
        if corpus.num_docs() < 2 {
            continue;
        }
        let test_frac = rng.gen_range(0.1..0.6);
        let heldout_frac = rng.gen_range(0.1..0.6);
        let split = match split_for_eval(&corpus, test_frac, heldout_frac, trial) {
            Ok(s) => s,
            Err(_) => continue, // no eligible test docs in this draw
        };
        assert_eq!(
            split.train.total_tokens()
                + split.test_observed.total_tokens()
                + split.test_heldout.total_tokens(),
            corpus.total_tokens(),
            "trial {trial}"
        );
        assert_eq!(split.test_observed.num_docs(), split.test_heldout.num_docs());
        assert_eq!(split.train.vocab_size(), corpus.vocab_size());
    }
}

#[test]
fn power_law_recovery_to_nine_digits() {
    // Exact power-law data: f_r = 3600 / r^2 is integral for every
    // r in 1..=6 (3600 = 60^2), so the log-log points sit on the line
    // log f = log 3600 - 2 log r with no rounding.
    let w = 6;
    let scale = 3600u32;
    let freqs: Vec<u32> = (1..=w as u32).map(|r| scale / (r * r)).collect();
    let docs = vec![freqs
        .iter()
        .enumerate()
        .map(|(i, &f)| (i as u32, f))
        .collect::<Vec<_>>()];
    let corpus = cepbp::corpus::SparseCorpus::from_docs(docs, w, Vec::new()).unwrap();
    let ft = word_frequencies(&corpus);
    let fit = fit_zipf(&ft, w).unwrap();
    assert!((fit.h - 2.0).abs() < 1e-9, "h = {}", fit.h);
    assert!((fit.c - (scale as f64).ln()).abs() < 1e-9);
    assert!((fit.r_squared - 1.0).abs() < 1e-12);
}
