//! Shared test support: a literal dense reference implementation of the
//! message updates and statistics, independent of the sparse engine's data
//! layout and bookkeeping.
#![allow(dead_code)]

use cepbp::bp::{Hyper, MessageStore};
use cepbp::corpus::SparseCorpus;

/// Dense mirror of a corpus: `x[d][w]` counts, plus messages `mu[d][w][k]`
/// defined wherever `x[d][w] > 0`.
pub struct DenseState {
    pub x: Vec<Vec<u32>>,
    pub mu: Vec<Vec<Vec<f64>>>,
    pub k: usize,
}

impl DenseState {
    /// Copies the engine's corpus and message store into dense form.
    pub fn from_engine(corpus: &SparseCorpus, msgs: &MessageStore) -> Self {
        let d = corpus.num_docs();
        let w = corpus.vocab_size();
        let k = msgs.k();
        let mut x = vec![vec![0u32; w]; d];
        let mut mu = vec![vec![Vec::new(); w]; d];
        let mut cell = 0;
        for (di, cells) in corpus.docs().enumerate() {
            for &(wi, count) in cells {
                x[di][wi as usize] = count;
                mu[di][wi as usize] = msgs.cell(cell).to_vec();
                cell += 1;
            }
        }
        DenseState { x, mu, k }
    }

    pub fn num_docs(&self) -> usize {
        self.x.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    /// theta_hat[k][d] = sum over all words of x * mu.
    pub fn theta_hat(&self) -> Vec<Vec<f64>> {
        let (d, w, k) = (self.num_docs(), self.vocab_size(), self.k);
        let mut theta = vec![vec![0.0; d]; k];
        for di in 0..d {
            for wi in 0..w {
                if self.x[di][wi] > 0 {
                    for kk in 0..k {
                        theta[kk][di] += f64::from(self.x[di][wi]) * self.mu[di][wi][kk];
                    }
                }
            }
        }
        theta
    }

    /// phi_hat[w][k] = sum over all documents of x * mu.
    pub fn phi_hat(&self) -> Vec<Vec<f64>> {
        let (d, w, k) = (self.num_docs(), self.vocab_size(), self.k);
        let mut phi = vec![vec![0.0; k]; w];
        for wi in 0..w {
            for di in 0..d {
                if self.x[di][wi] > 0 {
                    for kk in 0..k {
                        phi[wi][kk] += f64::from(self.x[di][wi]) * self.mu[di][wi][kk];
                    }
                }
            }
        }
        phi
    }

    /// One synchronous iteration, evaluated literally: the statistics and
    /// their column sums are fully recomputed, every occupied cell's message
    /// is rebuilt from them with the cell's own mass excluded (clamped at
    /// zero), and messages are replaced only after all are computed.
    pub fn iterate(&mut self, hyper: &Hyper) {
        let (d, w, k) = (self.num_docs(), self.vocab_size(), self.k);
        let theta = self.theta_hat();
        let phi = self.phi_hat();
        let mut col_sums = vec![0.0; k];
        for row in &phi {
            for kk in 0..k {
                col_sums[kk] += row[kk];
            }
        }
        let wbeta = w as f64 * hyper.beta;
        let mut next = self.mu.clone();
        for di in 0..d {
            for wi in 0..w {
                if self.x[di][wi] == 0 {
                    continue;
                }
                let xf = f64::from(self.x[di][wi]);
                let mut weights = vec![0.0; k];
                let mut norm = 0.0;
                for kk in 0..k {
                    let own = xf * self.mu[di][wi][kk];
                    let doc_side = (theta[kk][di] - own).max(0.0) + hyper.alpha;
                    let word_side = (phi[wi][kk] - own).max(0.0) + hyper.beta;
                    let denom = (col_sums[kk] - own).max(0.0) + wbeta;
                    weights[kk] = doc_side * word_side / denom;
                    norm += weights[kk];
                }
                for kk in 0..k {
                    next[di][wi][kk] = weights[kk] / norm;
                }
            }
        }
        self.mu = next;
    }

    /// Fold-in reference: the word-side factor is a fixed `phi[w][k]`
    /// probability, only the document-side statistics evolve.
    pub fn fold_in_iterate(&mut self, phi: &[f64], hyper: &Hyper) {
        let (d, w, k) = (self.num_docs(), self.vocab_size(), self.k);
        let theta = self.theta_hat();
        let mut next = self.mu.clone();
        for di in 0..d {
            for wi in 0..w {
                if self.x[di][wi] == 0 {
                    continue;
                }
                let xf = f64::from(self.x[di][wi]);
                let mut weights = vec![0.0; k];
                let mut norm = 0.0;
                for kk in 0..k {
                    let own = xf * self.mu[di][wi][kk];
                    let doc_side = (theta[kk][di] - own).max(0.0) + hyper.alpha;
                    weights[kk] = doc_side * phi[wi * k + kk];
                    norm += weights[kk];
                }
                for kk in 0..k {
                    next[di][wi][kk] = weights[kk] / norm;
                }
            }
        }
        self.mu = next;
    }

    /// Smoothed document-topic estimates from the current messages.
    pub fn theta_estimate(&self, hyper: &Hyper) -> Vec<Vec<f64>> {
        let theta_hat = self.theta_hat();
        let (d, k) = (self.num_docs(), self.k);
        let mut theta = vec![vec![0.0; d]; k];
        for di in 0..d {
            let total: f64 = (0..k).map(|kk| theta_hat[kk][di]).sum();
            let denom = total + k as f64 * hyper.alpha;
            for kk in 0..k {
                theta[kk][di] = (theta_hat[kk][di] + hyper.alpha) / denom;
            }
        }
        theta
    }
}

/// Random small corpus for oracle trials: dimensions within the given
/// bounds, every document non-empty.
pub fn random_corpus<R: rand::Rng>(rng: &mut R, max_docs: usize, max_words: usize) -> SparseCorpus {
    let d = rng.gen_range(1..=max_docs);
    let w = rng.gen_range(1..=max_words);
    let docs: Vec<Vec<(u32, u32)>> = (0..d)
        .map(|_| {
            let n_cells = rng.gen_range(1..=w);
            let mut words: Vec<u32> = (0..w as u32).collect();
            for i in (1..words.len()).rev() {
                let j = rng.gen_range(0..=i);
                words.swap(i, j);
            }
            words
                .into_iter()
                .take(n_cells)
                .map(|wi| (wi, rng.gen_range(1..=6)))
                .collect()
        })
        .collect();
    SparseCorpus::from_docs(docs, w, Vec::new()).unwrap()
}
