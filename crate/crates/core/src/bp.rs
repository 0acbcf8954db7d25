//! Synchronous belief propagation for LDA.
//!
//! Every nonzero corpus cell `(w, d)` carries a length-K message, the
//! posterior over topics for that cell's tokens. One iteration recomputes all
//! messages from the previous iteration's sufficient statistics (so cell
//! order cannot matter), then rebuilds the statistics from the new messages.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::SparseCorpus;

/// Training hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Hyper {
    /// Topic count K.
    pub k: usize,
    /// Symmetric document-topic Dirichlet parameter.
    pub alpha: f64,
    /// Symmetric topic-word Dirichlet parameter.
    pub beta: f64,
    /// Training iteration count T.
    pub t: usize,
}

impl Hyper {
    pub fn new(k: usize, alpha: f64, beta: f64, t: usize) -> crate::Result<Self> {
        if k < 1 {
            return Err(crate::Error::Config("k must be >= 1".into()));
        }
        if !(alpha > 0.0) || !(beta > 0.0) {
            return Err(crate::Error::Config("alpha and beta must be positive".into()));
        }
        if t < 1 {
            return Err(crate::Error::Config("t must be >= 1".into()));
        }
        Ok(Hyper { k, alpha, beta, t })
    }
}

/// Per-cell topic messages, flat `nnz x K`, aligned with corpus cell order
/// (document-major, words ascending within a document).
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStore {
    k: usize,
    data: Vec<f64>,
}

impl MessageStore {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_cells(&self) -> usize {
        self.data.len() / self.k
    }

    pub fn cell(&self, idx: usize) -> &[f64] {
        &self.data[idx * self.k..(idx + 1) * self.k]
    }

    pub fn cell_mut(&mut self, idx: usize) -> &mut [f64] {
        &mut self.data[idx * self.k..(idx + 1) * self.k]
    }

    /// A store with no cells.
    pub fn empty(k: usize) -> MessageStore {
        MessageStore { k, data: Vec::new() }
    }

    /// Concatenates stores in order; all must share the same K.
    pub fn concat(k: usize, parts: Vec<MessageStore>) -> MessageStore {
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            assert_eq!(p.k, k, "topic count mismatch in message stores");
            data.extend_from_slice(&p.data);
        }
        MessageStore { k, data }
    }

    /// Splits the store into per-document sub-stores for the given document
    /// cell counts; used to hand each parallel worker its own slice.
    pub fn split_by_docs(self, cells_per_doc: &[usize]) -> Vec<MessageStore> {
        let k = self.k;
        let mut out = Vec::with_capacity(cells_per_doc.len());
        let mut data = self.data;
        for &n in cells_per_doc.iter().rev() {
            let rest = data.split_off(data.len() - n * k);
            out.push(MessageStore { k, data: rest });
        }
        out.reverse();
        debug_assert!(data.is_empty());
        out
    }
}

/// Sufficient statistics: expected token mass per (topic, document) and per
/// (word, topic), plus cached per-topic column sums of the word-topic mass.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStats {
    k: usize,
    /// K x D, document-major: column d occupies `d*K..(d+1)*K`.
    pub theta_hat: Vec<f64>,
    /// W x K, word-major: row w occupies `w*K..(w+1)*K`.
    pub phi_hat: Vec<f64>,
    /// K-vector of column sums of `phi_hat`.
    pub phi_col_sums: Vec<f64>,
}

impl SufficientStats {
    /// Assembles statistics from raw matrices (document-major theta, word-
    /// major phi, precomputed column sums).
    pub fn from_parts(k: usize, theta_hat: Vec<f64>, phi_hat: Vec<f64>, phi_col_sums: Vec<f64>) -> Self {
        assert_eq!(theta_hat.len() % k, 0);
        assert_eq!(phi_hat.len() % k, 0);
        assert_eq!(phi_col_sums.len(), k);
        SufficientStats { k, theta_hat, phi_hat, phi_col_sums }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn num_docs(&self) -> usize {
        self.theta_hat.len() / self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.phi_hat.len() / self.k
    }

    pub fn theta_col(&self, d: usize) -> &[f64] {
        &self.theta_hat[d * self.k..(d + 1) * self.k]
    }

    pub fn phi_row(&self, w: usize) -> &[f64] {
        &self.phi_hat[w * self.k..(w + 1) * self.k]
    }

    /// Recomputes `phi_col_sums` from `phi_hat` in ascending word order.
    pub fn refresh_col_sums(&mut self) {
        self.phi_col_sums = column_sums(&self.phi_hat, self.k);
    }
}

/// Column sums of a word-major W x K matrix, accumulated in ascending word
/// order (the canonical reduction order used throughout).
pub(crate) fn column_sums(phi_hat: &[f64], k: usize) -> Vec<f64> {
    let mut sums = vec![0.0; k];
    for row in phi_hat.chunks_exact(k) {
        for (s, &v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    sums
}

/// Normalized topic model: `theta` is K x D column-stochastic over topics,
/// `phi` is W x K with each topic column summing to one over words.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    pub k: usize,
    /// K x D, document-major like [`SufficientStats::theta_hat`].
    pub theta: Vec<f64>,
    /// W x K, word-major like [`SufficientStats::phi_hat`].
    pub phi: Vec<f64>,
}

impl TopicModel {
    pub fn num_docs(&self) -> usize {
        self.theta.len() / self.k
    }

    pub fn vocab_size(&self) -> usize {
        self.phi.len() / self.k
    }

    pub fn theta_col(&self, d: usize) -> &[f64] {
        &self.theta[d * self.k..(d + 1) * self.k]
    }

    pub fn phi_row(&self, w: usize) -> &[f64] {
        &self.phi[w * self.k..(w + 1) * self.k]
    }
}

/// Draws the initial messages: each cell's K-vector is K independent
/// uniform(0,1) draws normalized to sum one. Deterministic given `seed`.
pub fn init_messages(corpus: &SparseCorpus, hyper: &Hyper, seed: u64) -> MessageStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = hyper.k;
    let mut data = vec![0.0f64; corpus.nnz() * k];
    for cell in data.chunks_exact_mut(k) {
        let mut sum = 0.0;
        for v in cell.iter_mut() {
            // Avoid exact zeros so normalization never divides by zero at K=1.
            *v = 1.0 - rng.gen::<f64>();
            sum += *v;
        }
        for v in cell.iter_mut() {
            *v /= sum;
        }
    }
    MessageStore { k, data }
}

/// Accumulates sufficient statistics from messages, summing in corpus cell
/// order.
pub fn accumulate_stats(corpus: &SparseCorpus, msgs: &MessageStore, k: usize) -> SufficientStats {
    assert_eq!(msgs.k(), k);
    assert_eq!(msgs.num_cells(), corpus.nnz(), "messages not aligned to corpus");
    let d = corpus.num_docs();
    let w = corpus.vocab_size();
    let mut theta_hat = vec![0.0; k * d];
    let mut phi_hat = vec![0.0; w * k];
    let mut cell_idx = 0;
    for (di, cells) in corpus.docs().enumerate() {
        let theta_col = &mut theta_hat[di * k..(di + 1) * k];
        for &(wi, x) in cells {
            let msg = msgs.cell(cell_idx);
            let x = f64::from(x);
            let phi_row = &mut phi_hat[wi as usize * k..(wi as usize + 1) * k];
            for kk in 0..k {
                let mass = x * msg[kk];
                theta_col[kk] += mass;
                phi_row[kk] += mass;
            }
            cell_idx += 1;
        }
    }
    let phi_col_sums = column_sums(&phi_hat, k);
    SufficientStats { k, theta_hat, phi_hat, phi_col_sums }
}

/// One cell's message update from frozen statistics.
///
/// For each topic: the document-side factor excludes this cell's own mass
/// from the document-topic statistic, and the word-side ratio excludes it
/// from both the word-topic statistic and its column sum; exclusions are
/// clamped at zero against negative floating-point residue. The result is
/// normalized to sum one and written to `out`.
#[allow(clippy::too_many_arguments)]
pub fn bp_update_cell(
    w: u32,
    d: u32,
    x: u32,
    old_msg: &[f64],
    stats: &SufficientStats,
    hyper: &Hyper,
    vocab_size: usize,
    out: &mut [f64],
) {
    update_cell_kernel(
        f64::from(x),
        old_msg,
        stats.theta_col(d as usize),
        stats.phi_row(w as usize),
        &stats.phi_col_sums,
        hyper.alpha,
        hyper.beta,
        vocab_size as f64 * hyper.beta,
        out,
    );
}

/// The shared per-cell arithmetic: serial iteration and parallel worker
/// sweeps both call this, so their results can only differ through the
/// statistics they pass in.
#[allow(clippy::too_many_arguments)]
#[inline]
pub(crate) fn update_cell_kernel(
    x: f64,
    old_msg: &[f64],
    theta_col: &[f64],
    phi_row: &[f64],
    col_sums: &[f64],
    alpha: f64,
    beta: f64,
    wbeta: f64,
    out: &mut [f64],
) {
    let k = old_msg.len();
    debug_assert_eq!(out.len(), k);
    let mut norm = 0.0;
    for kk in 0..k {
        let own = x * old_msg[kk];
        let doc_side = (theta_col[kk] - own).max(0.0) + alpha;
        let word_side = (phi_row[kk] - own).max(0.0) + beta;
        let denom = (col_sums[kk] - own).max(0.0) + wbeta;
        let v = doc_side * word_side / denom;
        out[kk] = v;
        norm += v;
    }
    assert!(norm > 0.0, "message normalizer must be positive");
    for v in out.iter_mut() {
        *v /= norm;
    }
}

/// One synchronous iteration: every cell's new message is computed from the
/// statistics passed in (all frozen at the previous iteration), then fresh
/// statistics are accumulated from the new messages.
pub fn bp_iteration(
    corpus: &SparseCorpus,
    msgs: &mut MessageStore,
    stats: &SufficientStats,
    hyper: &Hyper,
) -> SufficientStats {
    let k = hyper.k;
    let w = corpus.vocab_size();
    let mut scratch = vec![0.0f64; k];
    let mut cell_idx = 0;
    for (di, cells) in corpus.docs().enumerate() {
        for &(wi, x) in cells {
            let msg = msgs.cell_mut(cell_idx);
            bp_update_cell(wi, di as u32, x, msg, stats, hyper, w, &mut scratch);
            msg.copy_from_slice(&scratch);
            cell_idx += 1;
        }
    }
    accumulate_stats(corpus, msgs, k)
}

/// Smoothed parameter estimates from sufficient statistics.
///
/// The Dirichlet parameters are added before normalizing, so every entry is
/// strictly positive and perplexity never sees a zero probability.
pub fn estimate_parameters(stats: &SufficientStats, hyper: &Hyper) -> TopicModel {
    let k = stats.k();
    let d = stats.num_docs();
    let w = stats.vocab_size();
    let mut theta = vec![0.0; k * d];
    for di in 0..d {
        let col = stats.theta_col(di);
        let total: f64 = col.iter().sum();
        let denom = total + k as f64 * hyper.alpha;
        for kk in 0..k {
            theta[di * k + kk] = (col[kk] + hyper.alpha) / denom;
        }
    }
    let mut phi = vec![0.0; w * k];
    let wbeta = w as f64 * hyper.beta;
    for wi in 0..w {
        let row = stats.phi_row(wi);
        for kk in 0..k {
            phi[wi * k + kk] = (row[kk] + hyper.beta) / (stats.phi_col_sums[kk] + wbeta);
        }
    }
    TopicModel { k, theta, phi }
}

/// Corpus perplexity under a model:
/// `exp(-sum_{d,w} x log sum_k theta[k,d] phi[w,k] / total_tokens)`.
pub fn perplexity(corpus: &SparseCorpus, model: &TopicModel) -> f64 {
    assert_eq!(model.num_docs(), corpus.num_docs(), "model/corpus doc mismatch");
    assert_eq!(model.vocab_size(), corpus.vocab_size(), "model/corpus vocab mismatch");
    let k = model.k;
    let mut log_lik = 0.0;
    for (di, cells) in corpus.docs().enumerate() {
        let theta = model.theta_col(di);
        for &(wi, x) in cells {
            let phi = model.phi_row(wi as usize);
            let mut p = 0.0;
            for kk in 0..k {
                p += theta[kk] * phi[kk];
            }
            assert!(p > 0.0, "zero token probability in perplexity");
            log_lik += f64::from(x) * p.ln();
        }
    }
    (-log_lik / corpus.total_tokens() as f64).exp()
}

/// Infers document-topic proportions for new documents against a fixed
/// topic-word matrix.
///
/// Messages over the observed cells are updated as in training, except the
/// word-side ratio is replaced by the trained `phi` entry; only the
/// document-side statistics evolve. With `iters == 0` no statistics are
/// accumulated and the returned proportions are the uniform smoothing floor.
pub fn fold_in(
    test_observed: &SparseCorpus,
    phi: &[f64],
    hyper: &Hyper,
    iters: usize,
    seed: u64,
) -> TopicModel {
    let k = hyper.k;
    let d = test_observed.num_docs();
    assert_eq!(phi.len(), test_observed.vocab_size() * k, "phi shape mismatch");

    let mut theta_hat = vec![0.0f64; k * d];
    if iters > 0 {
        let mut msgs = init_messages(test_observed, hyper, seed);
        let mut stats_theta = {
            let s = accumulate_stats(test_observed, &msgs, k);
            s.theta_hat
        };
        let mut scratch = vec![0.0f64; k];
        for _ in 0..iters {
            let mut new_theta = vec![0.0f64; k * d];
            let mut cell_idx = 0;
            for (di, cells) in test_observed.docs().enumerate() {
                let theta_col = &stats_theta[di * k..(di + 1) * k];
                for &(wi, x) in cells {
                    let msg = msgs.cell_mut(cell_idx);
                    let phi_row = &phi[wi as usize * k..(wi as usize + 1) * k];
                    let xf = f64::from(x);
                    let mut norm = 0.0;
                    for kk in 0..k {
                        let own = xf * msg[kk];
                        let doc_side = (theta_col[kk] - own).max(0.0) + hyper.alpha;
                        let v = doc_side * phi_row[kk];
                        scratch[kk] = v;
                        norm += v;
                    }
                    assert!(norm > 0.0, "fold-in normalizer must be positive");
                    for kk in 0..k {
                        msg[kk] = scratch[kk] / norm;
                        new_theta[di * k + kk] += xf * msg[kk];
                    }
                    cell_idx += 1;
                }
            }
            stats_theta = new_theta;
        }
        theta_hat = stats_theta;
    }

    let mut theta = vec![0.0; k * d];
    for di in 0..d {
        let col = &theta_hat[di * k..(di + 1) * k];
        let total: f64 = col.iter().sum();
        let denom = total + k as f64 * hyper.alpha;
        for kk in 0..k {
            theta[di * k + kk] = (col[kk] + hyper.alpha) / denom;
        }
    }
    TopicModel { k, theta, phi: phi.to_vec() }
}

/// Perplexity of the held-out tokens under folded-in document proportions
/// and the trained topic-word matrix.
pub fn predictive_perplexity(test_heldout: &SparseCorpus, folded: &TopicModel) -> f64 {
    perplexity(test_heldout, folded)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::SparseCorpus;

    fn corpus(docs: Vec<Vec<(u32, u32)>>, w: usize) -> SparseCorpus {
        SparseCorpus::from_docs(docs, w, Vec::new()).unwrap()
    }

    fn hyper(k: usize) -> Hyper {
        Hyper::new(k, 0.01, 0.01, 10).unwrap()
    }

    #[test]
    fn single_topic_messages_are_one() {
        let c = corpus(vec![vec![(0, 2), (1, 1)]], 2);
        let msgs = init_messages(&c, &hyper(1), 3);
        for i in 0..msgs.num_cells() {
            assert_eq!(msgs.cell(i), &[1.0]);
        }
    }

    #[test]
    fn init_messages_normalized_and_deterministic() {
        let c = corpus(vec![vec![(0, 2), (2, 1)], vec![(1, 4)]], 3);
        let h = hyper(5);
        let a = init_messages(&c, &h, 42);
        let b = init_messages(&c, &h, 42);
        assert_eq!(a, b);
        for i in 0..a.num_cells() {
            let sum: f64 = a.cell(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(a.cell(i).iter().all(|&v| v >= 0.0));
        }
        let c2 = init_messages(&c, &h, 43);
        assert_ne!(a, c2);
    }

    #[test]
    fn accumulate_single_cell_by_hand() {
        // One doc, one word, x = 5, message (0.2, 0.8).
        let c = corpus(vec![vec![(0, 5)]], 1);
        let mut msgs = init_messages(&c, &hyper(2), 0);
        msgs.cell_mut(0).copy_from_slice(&[0.2, 0.8]);
        let stats = accumulate_stats(&c, &msgs, 2);
        assert_eq!(stats.theta_col(0), &[1.0, 4.0]);
        assert_eq!(stats.phi_row(0), &[1.0, 4.0]);
        assert_eq!(stats.phi_col_sums, vec![1.0, 4.0]);
    }

    #[test]
    fn uniform_messages_give_doc_length_over_k() {
        let c = corpus(vec![vec![(0, 3), (1, 5)], vec![(2, 4)]], 3);
        let k = 4;
        let mut msgs = init_messages(&c, &hyper(k), 0);
        for i in 0..msgs.num_cells() {
            msgs.cell_mut(i).fill(1.0 / k as f64);
        }
        let stats = accumulate_stats(&c, &msgs, k);
        for (d, len) in [(0usize, 8.0f64), (1, 4.0)] {
            for &v in stats.theta_col(d) {
                assert!((v - len / k as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn update_cell_k1_returns_one() {
        let c = corpus(vec![vec![(0, 2)]], 1);
        let h = hyper(1);
        let msgs = init_messages(&c, &h, 0);
        let stats = accumulate_stats(&c, &msgs, 1);
        let mut out = [0.0];
        bp_update_cell(0, 0, 2, msgs.cell(0), &stats, &h, 1, &mut out);
        assert_eq!(out, [1.0]);
    }

    #[test]
    fn update_cell_sole_cell_is_uniform() {
        // With the cell's own mass excluded, nothing remains: every topic
        // gets alpha * beta / (W beta).
        let c = corpus(vec![vec![(0, 7)]], 3);
        let h = Hyper::new(4, 0.3, 0.05, 5).unwrap();
        let msgs = init_messages(&c, &h, 11);
        let stats = accumulate_stats(&c, &msgs, 4);
        let mut out = [0.0; 4];
        bp_update_cell(0, 0, 7, msgs.cell(0), &stats, &h, 3, &mut out);
        for &v in &out {
            assert!((v - 0.25).abs() < 1e-12, "expected uniform, got {out:?}");
        }
    }

    #[test]
    fn iteration_fixed_point_at_k1() {
        let c = corpus(vec![vec![(0, 2), (1, 1)], vec![(1, 3)]], 2);
        let h = hyper(1);
        let mut msgs = init_messages(&c, &h, 0);
        let stats = accumulate_stats(&c, &msgs, 1);
        let before = msgs.clone();
        let new_stats = bp_iteration(&c, &mut msgs, &stats, &h);
        assert_eq!(msgs, before);
        assert_eq!(new_stats, stats);
    }

    #[test]
    fn iteration_uniform_fixed_point_single_cell() {
        // A one-cell corpus maps any message to uniform, so uniform is a
        // fixed point.
        let c = corpus(vec![vec![(0, 7)]], 3);
        let h = hyper(4);
        let mut msgs = init_messages(&c, &h, 1);
        let stats0 = accumulate_stats(&c, &msgs, 4);
        let _ = bp_iteration(&c, &mut msgs, &stats0, &h);
        let uniform = msgs.clone();
        let stats1 = accumulate_stats(&c, &msgs, 4);
        let _ = bp_iteration(&c, &mut msgs, &stats1, &h);
        for i in 0..msgs.num_cells() {
            for (a, b) in msgs.cell(i).iter().zip(uniform.cell(i)) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mass_conservation_random_instances() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(5);
        for trial in 0..20 {
            let d = rng.gen_range(1..=6);
            let w = rng.gen_range(2..=8);
            let docs: Vec<Vec<(u32, u32)>> = (0..d)
                .map(|_| {
                    let n = rng.gen_range(1..=w);
                    (0..n as u32).map(|wi| (wi, rng.gen_range(1..=9))).collect()
                })
                .collect();
            let c = corpus(docs, w);
            let k = rng.gen_range(1..=5);
            let h = hyper(k);
            let mut msgs = init_messages(&c, &h, trial);
            let mut stats = accumulate_stats(&c, &msgs, k);
            for _ in 0..3 {
                stats = bp_iteration(&c, &mut msgs, &stats, &h);
                for i in 0..msgs.num_cells() {
                    let sum: f64 = msgs.cell(i).iter().sum();
                    assert!((sum - 1.0).abs() < 1e-12);
                }
                let total = c.total_tokens() as f64;
                let sum_theta: f64 = stats.theta_hat.iter().sum();
                let sum_phi: f64 = stats.phi_hat.iter().sum();
                assert!((sum_theta - total).abs() / total < 1e-6);
                assert!((sum_phi - total).abs() / total < 1e-6);
                let recomputed = column_sums(&stats.phi_hat, k);
                for (a, b) in stats.phi_col_sums.iter().zip(&recomputed) {
                    assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn estimate_parameters_zero_stats_is_uniform() {
        let stats = SufficientStats {
            k: 4,
            theta_hat: vec![0.0; 4 * 2],
            phi_hat: vec![0.0; 3 * 4],
            phi_col_sums: vec![0.0; 4],
        };
        let h = hyper(4);
        let model = estimate_parameters(&stats, &h);
        for d in 0..2 {
            for &v in model.theta_col(d) {
                assert!((v - 0.25).abs() < 1e-12);
            }
        }
        for w in 0..3 {
            for &v in model.phi_row(w) {
                assert!((v - 1.0 / 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn estimate_parameters_k1_is_exactly_one() {
        let c = corpus(vec![vec![(0, 2)], vec![(1, 5)]], 2);
        let h = hyper(1);
        let msgs = init_messages(&c, &h, 0);
        let stats = accumulate_stats(&c, &msgs, 1);
        let model = estimate_parameters(&stats, &h);
        for d in 0..2 {
            assert_eq!(model.theta_col(d), &[1.0]);
        }
    }

    #[test]
    fn estimate_parameters_columns_sum_to_one() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
        let k = 3;
        let d = 4;
        let w = 5;
        let stats = SufficientStats {
            k,
            theta_hat: (0..k * d).map(|_| rng.gen_range(0.0..10.0)).collect(),
            phi_hat: (0..w * k).map(|_| rng.gen_range(0.0..10.0)).collect(),
            phi_col_sums: vec![0.0; k],
        };
        let mut stats = stats;
        stats.refresh_col_sums();
        let model = estimate_parameters(&stats, &hyper(k));
        for di in 0..d {
            let sum: f64 = model.theta_col(di).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
        for kk in 0..k {
            let sum: f64 = (0..w).map(|wi| model.phi_row(wi)[kk]).sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn perplexity_uniform_model_is_vocab_size() {
        let c = corpus(vec![vec![(0, 1), (2, 3)], vec![(1, 2)]], 4);
        let model = TopicModel {
            k: 1,
            theta: vec![1.0; 2],
            phi: vec![0.25; 4],
        };
        let p = perplexity(&c, &model);
        assert!((p - 4.0).abs() < 1e-9);
    }

    #[test]
    fn perplexity_perfect_prediction_is_one() {
        let c = corpus(vec![vec![(0, 3)]], 1);
        let model = TopicModel { k: 1, theta: vec![1.0], phi: vec![1.0] };
        assert!((perplexity(&c, &model) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn perplexity_two_by_two_by_hand() {
        // theta(.,0) = (0.5, 0.5); theta(.,1) = (0.9, 0.1)
        // phi(0,.) = (0.8, 0.3); phi(1,.) = (0.2, 0.7)
        let c = corpus(vec![vec![(0, 2), (1, 1)], vec![(0, 1)]], 2);
        let model = TopicModel {
            k: 2,
            theta: vec![0.5, 0.5, 0.9, 0.1],
            phi: vec![0.8, 0.3, 0.2, 0.7],
        };
        let p00: f64 = 0.5 * 0.8 + 0.5 * 0.3; // doc 0, word 0
        let p01: f64 = 0.5 * 0.2 + 0.5 * 0.7; // doc 0, word 1
        let p10: f64 = 0.9 * 0.8 + 0.1 * 0.3; // doc 1, word 0
        let expect = (-(2.0 * p00.ln() + p01.ln() + p10.ln()) / 4.0).exp();
        assert!((perplexity(&c, &model) - expect).abs() < 1e-12);
    }

    #[test]
    fn fold_in_zero_iters_is_uniform() {
        let c = corpus(vec![vec![(0, 2), (1, 1)]], 2);
        let h = hyper(3);
        let phi = vec![1.0 / 2.0; 2 * 3];
        let model = fold_in(&c, &phi, &h, 0, 9);
        for &v in model.theta_col(0) {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fold_in_concentrates_on_supported_topic() {
        // Words 0 and 1 have support only in topic 1 (up to smoothing).
        let c = corpus(vec![vec![(0, 4), (1, 2)]], 3);
        let h = hyper(2);
        let eps = 1e-9;
        let phi = vec![
            eps, 0.5, // word 0
            eps, 0.5, // word 1
            1.0 - 2.0 * eps, eps, // word 2 belongs to topic 0
        ];
        let model = fold_in(&c, &phi, &h, 1, 3);
        let theta = model.theta_col(0);
        assert!(theta[1] > theta[0], "theta = {theta:?}");
        let argmax = if theta[0] > theta[1] { 0 } else { 1 };
        assert_eq!(argmax, 1);
    }

    #[test]
    fn predictive_bounded_by_vocab_size_when_heldout_equals_observed() {
        // Fold in against a well-trained model with the held-out tokens
        // equal to the observed ones: prediction can be no worse than the
        // uniform model.
        let c = corpus(
            vec![vec![(0, 5), (1, 3)], vec![(2, 5), (3, 3)], vec![(4, 4), (5, 4)]],
            6,
        );
        let h = Hyper::new(3, 0.01, 0.01, 60).unwrap();
        let mut msgs = init_messages(&c, &h, 2);
        let mut stats = accumulate_stats(&c, &msgs, 3);
        for _ in 0..60 {
            stats = bp_iteration(&c, &mut msgs, &stats, &h);
        }
        let trained = estimate_parameters(&stats, &h);
        let folded = fold_in(&c, &trained.phi, &h, 20, 5);
        let pp = predictive_perplexity(&c, &folded);
        assert!(pp <= c.vocab_size() as f64, "pp = {pp}");
    }

    #[test]
    fn predictive_perplexity_k1_is_unigram() {
        // With one topic the predictive distribution is phi itself.
        let held = corpus(vec![vec![(0, 2), (1, 1)]], 3);
        let obs = corpus(vec![vec![(0, 1), (2, 1)]], 3);
        let h = hyper(1);
        let phi = vec![0.5, 0.3, 0.2];
        let model = fold_in(&obs, &phi, &h, 5, 0);
        let got = predictive_perplexity(&held, &model);
        let expect = (-(2.0 * 0.5f64.ln() + 0.3f64.ln()) / 3.0).exp();
        assert!((got - expect).abs() < 1e-12);
    }
}
