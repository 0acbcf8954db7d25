//! Collapsed Gibbs sampling and its approximate data-parallel variant.
//!
//! The sampler works on explicit token topic labels. A sweep visits tokens
//! in document-major, cell, token-index order, removing each token's own
//! count before resampling it (asynchronous in-place updates, so later
//! tokens see earlier ones). The parallel variant shards documents exactly
//! like the BP runner; each worker samples against a stale copy of the
//! shared word-topic counts, reconciled by an exact integer delta reduction
//! every `sync_every` iterations.

use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bp::{estimate_parameters, Hyper, SufficientStats};
use crate::corpus::SparseCorpus;
use crate::metrics::{ConfigEcho, IterationRecord, RunReport};
use crate::parallel::{shard_documents, ShardPolicy, TrainOutcome};
use crate::Result;

/// Topic labels for every word token, document-major, cell order, then token
/// index within the cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAssignments {
    z: Vec<u32>,
    doc_offsets: Vec<usize>,
}

impl TokenAssignments {
    /// Draws one uniform topic per token from `rng`.
    pub fn init_random<R: Rng>(corpus: &SparseCorpus, k: usize, rng: &mut R) -> Self {
        let mut z = Vec::with_capacity(corpus.total_tokens() as usize);
        let mut doc_offsets = Vec::with_capacity(corpus.num_docs() + 1);
        doc_offsets.push(0);
        for cells in corpus.docs() {
            for &(_, x) in cells {
                for _ in 0..x {
                    z.push(rng.gen_range(0..k) as u32);
                }
            }
            doc_offsets.push(z.len());
        }
        TokenAssignments { z, doc_offsets }
    }

    pub fn num_tokens(&self) -> usize {
        self.z.len()
    }

    /// Topic labels of document `d`'s tokens.
    pub fn doc_tokens(&self, d: usize) -> &[u32] {
        &self.z[self.doc_offsets[d]..self.doc_offsets[d + 1]]
    }

    pub fn labels(&self) -> &[u32] {
        &self.z
    }
}

/// Integer count matrices kept consistent with the token assignments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrices {
    k: usize,
    /// K x D, document-major.
    pub doc_topic: Vec<i64>,
    /// W x K, word-major.
    pub word_topic: Vec<i64>,
    /// Column sums of `word_topic`.
    pub topic_totals: Vec<i64>,
}

impl CountMatrices {
    /// Exact recount from assignments.
    pub fn recount(corpus: &SparseCorpus, assignments: &TokenAssignments, k: usize) -> Self {
        let mut doc_topic = vec![0i64; k * corpus.num_docs()];
        let mut word_topic = vec![0i64; corpus.vocab_size() * k];
        let mut topic_totals = vec![0i64; k];
        for (d, cells) in corpus.docs().enumerate() {
            let mut it = assignments.doc_tokens(d).iter();
            for &(w, x) in cells {
                for _ in 0..x {
                    let z = *it.next().expect("assignments shorter than corpus") as usize;
                    doc_topic[d * k + z] += 1;
                    word_topic[w as usize * k + z] += 1;
                    topic_totals[z] += 1;
                }
            }
        }
        CountMatrices { k, doc_topic, word_topic, topic_totals }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn total(&self) -> i64 {
        self.topic_totals.iter().sum()
    }
}

/// Picks the topic whose cumulative unnormalized probability first exceeds
/// `u * norm`. One uniform draw per token.
#[inline]
fn pick(weights: &[f64], norm: f64, u: f64) -> usize {
    let target = u * norm;
    let mut acc = 0.0;
    for (k, &p) in weights.iter().enumerate() {
        acc += p;
        if acc > target {
            return k;
        }
    }
    weights.len() - 1
}

/// One full Gibbs sweep over the corpus: every token is removed from the
/// counts, resampled from the conditional, and added back.
pub fn gs_sweep<R: Rng>(
    corpus: &SparseCorpus,
    assignments: &mut TokenAssignments,
    counts: &mut CountMatrices,
    hyper: &Hyper,
    rng: &mut R,
) {
    let k = hyper.k;
    let wbeta = corpus.vocab_size() as f64 * hyper.beta;
    let mut weights = vec![0.0f64; k];
    let mut token = 0usize;
    for (d, cells) in corpus.docs().enumerate() {
        for &(w, x) in cells {
            for _ in 0..x {
                let old = assignments.z[token] as usize;
                counts.doc_topic[d * k + old] -= 1;
                counts.word_topic[w as usize * k + old] -= 1;
                counts.topic_totals[old] -= 1;

                let mut norm = 0.0;
                for kk in 0..k {
                    let p = (counts.doc_topic[d * k + kk] as f64 + hyper.alpha)
                        * (counts.word_topic[w as usize * k + kk] as f64 + hyper.beta)
                        / (counts.topic_totals[kk] as f64 + wbeta);
                    weights[kk] = p;
                    norm += p;
                }
                let new = pick(&weights, norm, rng.gen::<f64>());

                assignments.z[token] = new as u32;
                counts.doc_topic[d * k + new] += 1;
                counts.word_topic[w as usize * k + new] += 1;
                counts.topic_totals[new] += 1;
                token += 1;
            }
        }
    }
}

struct GibbsWorker {
    docs: Vec<u32>,
    /// Topic labels for the worker's tokens, owned-doc-major.
    z: Vec<u32>,
    /// K x owned docs.
    doc_topic: Vec<i64>,
    /// Own word-topic counts, W x K.
    own_wt: Vec<i64>,
    own_totals: Vec<i64>,
    /// Other workers' stale counts, from the last broadcast.
    base_wt: Vec<i64>,
    base_totals: Vec<i64>,
    rng: ChaCha8Rng,
}

impl GibbsWorker {
    fn new(id: usize, docs: Vec<u32>, corpus: &SparseCorpus, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(id as u64);
        let w = corpus.vocab_size();
        let mut z = Vec::new();
        let mut doc_topic = vec![0i64; k * docs.len()];
        let mut own_wt = vec![0i64; w * k];
        let mut own_totals = vec![0i64; k];
        for (li, &doc) in docs.iter().enumerate() {
            for &(wi, x) in corpus.doc(doc as usize) {
                for _ in 0..x {
                    let topic = rng.gen_range(0..k);
                    z.push(topic as u32);
                    doc_topic[li * k + topic] += 1;
                    own_wt[wi as usize * k + topic] += 1;
                    own_totals[topic] += 1;
                }
            }
        }
        GibbsWorker {
            docs,
            z,
            doc_topic,
            own_wt,
            own_totals,
            base_wt: vec![0i64; w * k],
            base_totals: vec![0i64; k],
            rng,
        }
    }

    /// One sweep over the owned tokens against `base + own` counts.
    fn sweep(&mut self, corpus: &SparseCorpus, hyper: &Hyper) -> f64 {
        let start = Instant::now();
        let k = hyper.k;
        let wbeta = corpus.vocab_size() as f64 * hyper.beta;
        let mut weights = vec![0.0f64; k];
        let mut token = 0usize;
        for (li, &doc) in self.docs.iter().enumerate() {
            for &(w, x) in corpus.doc(doc as usize) {
                for _ in 0..x {
                    let old = self.z[token] as usize;
                    self.doc_topic[li * k + old] -= 1;
                    self.own_wt[w as usize * k + old] -= 1;
                    self.own_totals[old] -= 1;

                    let mut norm = 0.0;
                    for kk in 0..k {
                        let wt = self.base_wt[w as usize * k + kk] + self.own_wt[w as usize * k + kk];
                        let tot = self.base_totals[kk] + self.own_totals[kk];
                        let p = (self.doc_topic[li * k + kk] as f64 + hyper.alpha)
                            * (wt as f64 + hyper.beta)
                            / (tot as f64 + wbeta);
                        weights[kk] = p;
                        norm += p;
                    }
                    let new = pick(&weights, norm, self.rng.gen::<f64>());

                    self.z[token] = new as u32;
                    self.doc_topic[li * k + new] += 1;
                    self.own_wt[w as usize * k + new] += 1;
                    self.own_totals[new] += 1;
                    token += 1;
                }
            }
        }
        start.elapsed().as_secs_f64()
    }
}

/// Data-parallel collapsed Gibbs sampling.
///
/// Workers sweep their shards against stale shared counts; every
/// `sync_every` iterations (and at the final iteration) the global
/// word-topic counts are rebuilt as the worker-ordered sum of own counts -
/// the exact integer result of the delta rule - and broadcast back. With
/// one worker and `sync_every == 1` the trajectory is bit-identical to the
/// serial sampler under the same RNG stream.
pub fn pgs_train(
    corpus: &SparseCorpus,
    hyper: &Hyper,
    m: usize,
    sync_every: usize,
    seed: u64,
    perplexity_every: usize,
    algo_label: &str,
) -> Result<TrainOutcome> {
    if sync_every < 1 {
        return Err(crate::Error::Config("sync_every must be >= 1".into()));
    }
    let plan = shard_documents(corpus, m, ShardPolicy::RoundRobin)?;
    let k = hyper.k;
    let w = corpus.vocab_size();

    let mut workers: Vec<GibbsWorker> = (0..m)
        .map(|id| GibbsWorker::new(id, plan.docs_of(id).to_vec(), corpus, k, seed))
        .collect();

    let mut global_wt = vec![0i64; w * k];
    let mut global_totals = vec![0i64; k];
    let sync = |global_wt: &mut Vec<i64>, global_totals: &mut Vec<i64>, workers: &mut [GibbsWorker]| {
        global_wt.iter_mut().for_each(|v| *v = 0);
        for worker in workers.iter() {
            for (g, o) in global_wt.iter_mut().zip(&worker.own_wt) {
                *g += o;
            }
        }
        global_totals.iter_mut().for_each(|v| *v = 0);
        for worker in workers.iter() {
            for (g, o) in global_totals.iter_mut().zip(&worker.own_totals) {
                *g += o;
            }
        }
        for worker in workers.iter_mut() {
            for ((b, g), o) in worker.base_wt.iter_mut().zip(global_wt.iter()).zip(&worker.own_wt) {
                *b = g - o;
            }
            for ((b, g), o) in worker
                .base_totals
                .iter_mut()
                .zip(global_totals.iter())
                .zip(&worker.own_totals)
            {
                *b = g - o;
            }
        }
    };
    sync(&mut global_wt, &mut global_totals, &mut workers);

    let entry_bytes = 4u64;
    let mut report = RunReport::new(ConfigEcho {
        algo: algo_label.to_string(),
        k,
        m,
        n: 1,
        h: 1.0,
        t: hyper.t,
        alpha: hyper.alpha,
        beta: hyper.beta,
        seed,
    });

    for t in 1..=hyper.t {
        let durations: Vec<f64> = std::thread::scope(|scope| {
            let handles: Vec<_> = workers
                .iter_mut()
                .map(|wk| scope.spawn(|| wk.sweep(corpus, hyper)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let comp_s = durations.into_iter().fold(0.0f64, f64::max);

        let naturally_due = t % sync_every == 0;
        let due = naturally_due || t == hyper.t;
        let mut comm_s = 0.0;
        let mut bytes = 0;
        if due {
            let comm_start = Instant::now();
            sync(&mut global_wt, &mut global_totals, &mut workers);
            comm_s = comm_start.elapsed().as_secs_f64();
            bytes = 2 * m as u64 * w as u64 * k as u64 * entry_bytes;
            if t == hyper.t && !naturally_due {
                report.totals.terminal_sync_bytes = bytes;
            }
        }

        let perplexity = if (perplexity_every > 0 && t % perplexity_every == 0) || t == hyper.t {
            let stats = assemble_stats(corpus, &workers, &global_wt, &global_totals, k);
            let model = estimate_parameters(&stats, hyper);
            Some(crate::bp::perplexity(corpus, &model))
        } else {
            None
        };

        report.push(IterationRecord { t, comp_s, comm_s, bytes, perplexity });
    }

    let stats = assemble_stats(corpus, &workers, &global_wt, &global_totals, k);
    let model = estimate_parameters(&stats, hyper);
    report.final_train_perplexity = report.records.last().and_then(|r| r.perplexity);
    Ok(TrainOutcome { model, report, stats })
}

fn assemble_stats(
    corpus: &SparseCorpus,
    workers: &[GibbsWorker],
    global_wt: &[i64],
    global_totals: &[i64],
    k: usize,
) -> SufficientStats {
    let mut theta_hat = vec![0.0; k * corpus.num_docs()];
    for worker in workers {
        for (li, &doc) in worker.docs.iter().enumerate() {
            for kk in 0..k {
                theta_hat[doc as usize * k + kk] = worker.doc_topic[li * k + kk] as f64;
            }
        }
    }
    let phi_hat: Vec<f64> = global_wt.iter().map(|&v| v as f64).collect();
    let col_sums: Vec<f64> = global_totals.iter().map(|&v| v as f64).collect();
    SufficientStats::from_parts(k, theta_hat, phi_hat, col_sums)
}

/// Serial collapsed Gibbs training: one worker, synchronized every sweep.
pub fn gs_train(
    corpus: &SparseCorpus,
    hyper: &Hyper,
    seed: u64,
    perplexity_every: usize,
) -> Result<TrainOutcome> {
    pgs_train(corpus, hyper, 1, 1, seed, perplexity_every, "gs")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: Vec<Vec<(u32, u32)>>, w: usize) -> SparseCorpus {
        SparseCorpus::from_docs(docs, w, Vec::new()).unwrap()
    }

    fn hyper(k: usize, t: usize) -> Hyper {
        Hyper::new(k, 0.1, 0.1, t).unwrap()
    }

    #[test]
    fn k1_sweep_never_changes_anything() {
        let c = corpus(vec![vec![(0, 3), (1, 1)], vec![(1, 2)]], 2);
        let h = hyper(1, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut assign = TokenAssignments::init_random(&c, 1, &mut rng);
        let mut counts = CountMatrices::recount(&c, &assign, 1);
        let before = counts.clone();
        gs_sweep(&c, &mut assign, &mut counts, &h, &mut rng);
        assert_eq!(counts, before);
        assert!(assign.labels().iter().all(|&z| z == 0));
    }

    #[test]
    fn single_token_sampling_is_uniform() {
        // One token, symmetric hyperparameters: after the exclusion nothing
        // remains, so both topics are equally likely. Chi-square over 1e5
        // seeded draws, 1 df: reject only above 6.635 (p < 0.01).
        let c = corpus(vec![vec![(0, 1)]], 2);
        let h = hyper(2, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let mut assign = TokenAssignments::init_random(&c, 2, &mut rng);
        let mut counts = CountMatrices::recount(&c, &assign, 2);
        let mut hits = [0u64; 2];
        let draws = 100_000;
        for _ in 0..draws {
            gs_sweep(&c, &mut assign, &mut counts, &h, &mut rng);
            hits[assign.labels()[0] as usize] += 1;
        }
        let expected = draws as f64 / 2.0;
        let chi2: f64 = hits
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 6.635, "chi2 = {chi2}, hits = {hits:?}");
    }

    #[test]
    fn sweep_matches_independent_trace() {
        // Replays the sampler by hand on a 3-token corpus: same RNG stream,
        // one uniform draw per token, counts recomputed from scratch at
        // every step instead of updated in place.
        let c = corpus(vec![vec![(0, 2)], vec![(1, 1)]], 2);
        let k = 2;
        let h = hyper(k, 1);
        let seed = 1234;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut assign = TokenAssignments::init_random(&c, k, &mut rng);
        let mut counts = CountMatrices::recount(&c, &assign, k);
        gs_sweep(&c, &mut assign, &mut counts, &h, &mut rng);

        // Trace oracle.
        let mut oracle_rng = ChaCha8Rng::seed_from_u64(seed);
        let tokens = [(0usize, 0u32), (0, 0), (1, 1)]; // (doc, word) per token
        let mut z: Vec<usize> = (0..3).map(|_| oracle_rng.gen_range(0..k)).collect();
        let wbeta = 2.0 * h.beta;
        for i in 0..3 {
            // Counts over all tokens except i, rebuilt from scratch.
            let mut doc_topic = vec![0i64; k * 2];
            let mut word_topic = vec![0i64; 2 * k];
            let mut totals = vec![0i64; k];
            for (j, &(d, w)) in tokens.iter().enumerate() {
                if j != i {
                    doc_topic[d * k + z[j]] += 1;
                    word_topic[w as usize * k + z[j]] += 1;
                    totals[z[j]] += 1;
                }
            }
            let (d, w) = tokens[i];
            let mut weights = vec![0.0; k];
            let mut norm = 0.0;
            for kk in 0..k {
                let p = (doc_topic[d * k + kk] as f64 + h.alpha)
                    * (word_topic[w as usize * k + kk] as f64 + h.beta)
                    / (totals[kk] as f64 + wbeta);
                weights[kk] = p;
                norm += p;
            }
            let u: f64 = oracle_rng.gen();
            z[i] = pick(&weights, norm, u);
        }
        let got: Vec<usize> = assign.labels().iter().map(|&v| v as usize).collect();
        assert_eq!(got, z);
    }

    #[test]
    fn counts_stay_consistent_with_assignments() {
        let c = corpus(
            vec![vec![(0, 3), (2, 1)], vec![(1, 2), (3, 2)], vec![(0, 1), (3, 1)]],
            4,
        );
        let h = hyper(3, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut assign = TokenAssignments::init_random(&c, 3, &mut rng);
        let mut counts = CountMatrices::recount(&c, &assign, 3);
        for _ in 0..5 {
            gs_sweep(&c, &mut assign, &mut counts, &h, &mut rng);
            let recounted = CountMatrices::recount(&c, &assign, 3);
            assert_eq!(counts, recounted);
            assert_eq!(counts.total(), c.total_tokens() as i64);
        }
    }

    #[test]
    fn pgs_single_worker_equals_serial() {
        let c = corpus(
            vec![vec![(0, 2), (1, 1)], vec![(2, 3)], vec![(0, 1), (2, 1)]],
            3,
        );
        let t = 4;
        let h = hyper(2, t);
        let seed = 77;
        let par = pgs_train(&c, &h, 1, 1, seed, 0, "pgs").unwrap();

        // Serial reference: same stream (stream 0), same sweep order.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(0);
        let mut assign = TokenAssignments::init_random(&c, 2, &mut rng);
        let mut counts = CountMatrices::recount(&c, &assign, 2);
        for _ in 0..t {
            gs_sweep(&c, &mut assign, &mut counts, &h, &mut rng);
        }
        let want_phi: Vec<f64> = counts.word_topic.iter().map(|&v| v as f64).collect();
        assert_eq!(par.stats.phi_hat, want_phi);
        let want_theta: Vec<f64> = counts.doc_topic.iter().map(|&v| v as f64).collect();
        assert_eq!(par.stats.theta_hat, want_theta);
    }

    #[test]
    fn pgs_sync_bytes_are_twice_m_w_k_ints() {
        let c = corpus(vec![vec![(0, 2)], vec![(1, 3)], vec![(2, 1)], vec![(0, 1)]], 3);
        let h = hyper(2, 3);
        let out = pgs_train(&c, &h, 2, 1, 9, 0, "pgs").unwrap();
        for rec in &out.report.records {
            assert_eq!(rec.bytes, 2 * 2 * 3 * 2 * 4);
        }
        // Exactly half the 8-byte payload cost at equal W, K, M, T.
        let full8 = crate::schedule::predicted_full_cost(3, 2, 2, 3, 8);
        assert_eq!(out.report.totals.bytes as u128 * 2, full8);
    }

    #[test]
    fn pgs_global_counts_exact_after_sync() {
        let c = corpus(
            vec![vec![(0, 2), (1, 1)], vec![(2, 3)], vec![(0, 1), (2, 1)], vec![(1, 2)]],
            3,
        );
        let h = hyper(3, 5);
        let out = pgs_train(&c, &h, 2, 2, 3, 0, "pgs").unwrap();
        // Terminal sync makes the final counts an exact integer recount.
        let total: f64 = out.stats.phi_hat.iter().sum();
        assert_eq!(total, c.total_tokens() as f64);
        let theta_total: f64 = out.stats.theta_hat.iter().sum();
        assert_eq!(theta_total, c.total_tokens() as f64);
    }
}
