//! Data-parallel synchronous BP: document sharding, per-worker sweeps, and
//! delta-based synchronization of the shared word-topic statistics.
//!
//! Workers own disjoint document shards and never share mutable state. Each
//! worker keeps its own view of the word-topic mass as `base + contribution`,
//! where `base` is everyone else's mass as of the last broadcast and
//! `contribution` is the worker's own, always fresh. At a sync the
//! coordinator rebuilds the due rows of the global matrix as the
//! worker-ordered sum of contributions - algebraically the same as adding
//! every worker's delta to the previous value, but free of the rounding
//! drift repeated increments would accumulate. All reductions run in
//! ascending worker order, so results depend only on
//! (corpus, hyper, M, schedule, seed), never on thread timing.

use std::time::Instant;

use crate::bp::{
    self, column_sums, estimate_parameters, Hyper, MessageStore, SufficientStats, TopicModel,
};
use crate::corpus::SparseCorpus;
use crate::metrics::{ConfigEcho, IterationRecord, RunReport};
use crate::schedule::{parts_due, CommSchedule, VocabPartition};
use crate::{Error, Result};

/// Document sharding policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShardPolicy {
    /// Document `d` goes to worker `d mod M`.
    RoundRobin,
    /// Largest remaining document to the currently lightest worker.
    TokenBalanced,
}

/// Assignment of documents to workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShardPlan {
    assignment: Vec<u32>,
    per_worker: Vec<Vec<u32>>,
}

impl ShardPlan {
    pub fn num_workers(&self) -> usize {
        self.per_worker.len()
    }

    pub fn worker_of(&self, doc: usize) -> usize {
        self.assignment[doc] as usize
    }

    /// Documents owned by a worker, ascending.
    pub fn docs_of(&self, worker: usize) -> &[u32] {
        &self.per_worker[worker]
    }
}

/// Shards documents over `m` workers.
pub fn shard_documents(corpus: &SparseCorpus, m: usize, policy: ShardPolicy) -> Result<ShardPlan> {
    let d = corpus.num_docs();
    if m < 1 {
        return Err(Error::Config("worker count must be >= 1".into()));
    }
    if m > d {
        return Err(Error::Config(format!("{m} workers for {d} documents")));
    }
    let mut assignment = vec![0u32; d];
    match policy {
        ShardPolicy::RoundRobin => {
            for (doc, slot) in assignment.iter_mut().enumerate() {
                *slot = (doc % m) as u32;
            }
        }
        ShardPolicy::TokenBalanced => {
            let mut order: Vec<usize> = (0..d).collect();
            order.sort_by_key(|&doc| (std::cmp::Reverse(corpus.doc_len(doc)), doc));
            let mut loads = vec![0u64; m];
            for doc in order {
                let lightest = (0..m).min_by_key(|&wk| (loads[wk], wk)).unwrap();
                assignment[doc] = lightest as u32;
                loads[lightest] += corpus.doc_len(doc);
            }
        }
    }
    let mut per_worker = vec![Vec::new(); m];
    for (doc, &wk) in assignment.iter().enumerate() {
        per_worker[wk as usize].push(doc as u32);
    }
    Ok(ShardPlan { assignment, per_worker })
}

/// The shared word-topic statistics owned by the coordinator.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPhi {
    k: usize,
    phi_hat: Vec<f64>,
    col_sums: Vec<f64>,
}

impl GlobalPhi {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn phi_hat(&self) -> &[f64] {
        &self.phi_hat
    }

    pub fn row(&self, w: u32) -> &[f64] {
        &self.phi_hat[w as usize * self.k..(w as usize + 1) * self.k]
    }

    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }

    fn refresh_col_sums(&mut self) {
        self.col_sums = column_sums(&self.phi_hat, self.k);
    }
}

/// One worker's private state.
#[derive(Debug, Clone)]
pub struct WorkerState {
    id: usize,
    docs: Vec<u32>,
    k: usize,
    vocab_size: usize,
    msgs: MessageStore,
    /// K x owned-docs, column per owned document (local order).
    theta: Vec<f64>,
    /// Everyone else's word-topic mass, frozen at the last broadcast.
    base: Vec<f64>,
    base_col_sums: Vec<f64>,
    /// This worker's own word-topic mass, from its current messages.
    contrib: Vec<f64>,
    contrib_col_sums: Vec<f64>,
    /// Own contribution as of each part's last sync, for delta payloads.
    snap: Vec<f64>,
    scratch_next: Vec<f64>,
}

impl WorkerState {
    /// Builds a worker from its document list and its slice of the initial
    /// messages (cells of the owned documents, ascending document order).
    pub fn new(
        id: usize,
        docs: Vec<u32>,
        corpus: &SparseCorpus,
        msgs: MessageStore,
        k: usize,
    ) -> Self {
        let w = corpus.vocab_size();
        let expected: usize = docs.iter().map(|&d| corpus.doc(d as usize).len()).sum();
        assert_eq!(msgs.num_cells(), expected, "message slice not aligned to shard");
        let mut state = WorkerState {
            id,
            docs,
            k,
            vocab_size: w,
            msgs,
            theta: Vec::new(),
            base: vec![0.0; w * k],
            base_col_sums: vec![0.0; k],
            contrib: vec![0.0; w * k],
            contrib_col_sums: vec![0.0; k],
            snap: vec![0.0; w * k],
            scratch_next: vec![0.0; w * k],
        };
        state.theta = vec![0.0; k * state.docs.len()];
        state.recompute_from_messages(corpus);
        state.snap.copy_from_slice(&state.contrib);
        state
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn docs(&self) -> &[u32] {
        &self.docs
    }

    /// Own word-topic contribution, word-major W x K.
    pub fn contribution(&self) -> &[f64] {
        &self.contrib
    }

    /// Local theta column for the `i`-th owned document.
    pub fn theta_col(&self, i: usize) -> &[f64] {
        &self.theta[i * self.k..(i + 1) * self.k]
    }

    /// The worker's current view of a word-topic row (stale others + fresh own).
    pub fn view_phi_row(&self, w: u32) -> Vec<f64> {
        let r = w as usize * self.k..(w as usize + 1) * self.k;
        self.base[r.clone()]
            .iter()
            .zip(&self.contrib[r])
            .map(|(b, c)| b + c)
            .collect()
    }

    /// Column sums of the worker's current view.
    pub fn view_col_sums(&self) -> Vec<f64> {
        self.base_col_sums
            .iter()
            .zip(&self.contrib_col_sums)
            .map(|(b, c)| b + c)
            .collect()
    }

    /// Rebuilds theta columns and the own contribution from the current
    /// messages (summation in owned-document cell order).
    fn recompute_from_messages(&mut self, corpus: &SparseCorpus) {
        self.theta.iter_mut().for_each(|v| *v = 0.0);
        self.contrib.iter_mut().for_each(|v| *v = 0.0);
        let k = self.k;
        let mut cell = 0;
        for (li, &doc) in self.docs.iter().enumerate() {
            for &(wi, x) in corpus.doc(doc as usize) {
                let msg = self.msgs.cell(cell);
                let x = f64::from(x);
                for kk in 0..k {
                    let mass = x * msg[kk];
                    self.theta[li * k + kk] += mass;
                    self.contrib[wi as usize * k + kk] += mass;
                }
                cell += 1;
            }
        }
        self.contrib_col_sums = column_sums(&self.contrib, k);
    }

    /// One synchronous sweep over the owned cells against the frozen view
    /// from the previous iteration. Returns the sweep wall-time in seconds.
    pub fn sweep(&mut self, corpus: &SparseCorpus, hyper: &Hyper) -> f64 {
        let start = Instant::now();
        let k = self.k;
        let wbeta = self.vocab_size as f64 * hyper.beta;
        let view_sums = self.view_col_sums();

        let mut new_theta = vec![0.0f64; self.theta.len()];
        self.scratch_next.iter_mut().for_each(|v| *v = 0.0);
        let mut phi_view = vec![0.0f64; k];
        let mut out = vec![0.0f64; k];

        let mut cell = 0;
        for (li, &doc) in self.docs.iter().enumerate() {
            let theta_col = &self.theta[li * k..(li + 1) * k];
            for &(wi, x) in corpus.doc(doc as usize) {
                let row = wi as usize * k..(wi as usize + 1) * k;
                for ((pv, b), c) in phi_view
                    .iter_mut()
                    .zip(&self.base[row.clone()])
                    .zip(&self.contrib[row.clone()])
                {
                    *pv = b + c;
                }
                let msg = self.msgs.cell_mut(cell);
                bp::update_cell_kernel(
                    f64::from(x),
                    msg,
                    theta_col,
                    &phi_view,
                    &view_sums,
                    hyper.alpha,
                    hyper.beta,
                    wbeta,
                    &mut out,
                );
                msg.copy_from_slice(&out);
                let xf = f64::from(x);
                for kk in 0..k {
                    let mass = xf * out[kk];
                    new_theta[li * k + kk] += mass;
                    self.scratch_next[wi as usize * k + kk] += mass;
                }
                cell += 1;
            }
        }

        self.theta = new_theta;
        std::mem::swap(&mut self.contrib, &mut self.scratch_next);
        self.contrib_col_sums = column_sums(&self.contrib, k);
        start.elapsed().as_secs_f64()
    }
}

/// The difference between a worker's current contribution and its snapshot
/// at the part's last sync - the payload that would cross the wire.
#[derive(Debug, Clone, PartialEq)]
pub struct SyncDelta {
    pub worker_id: usize,
    pub part_rank: usize,
    /// Word ids of the part, parallel to `rows`.
    pub words: Vec<u32>,
    /// Flat `|part| x K` difference sub-matrix, row per word in `words`.
    pub diffs: Vec<f64>,
    /// Dense payload size: rows x K x bytes per entry.
    pub byte_size: u64,
}

impl WorkerState {
    /// Materializes the delta payload for one part.
    pub fn delta(&self, partition: &VocabPartition, part_rank: usize, bytes_per_entry: usize) -> SyncDelta {
        let words = partition.part(part_rank).to_vec();
        let k = self.k;
        let mut diffs = Vec::with_capacity(words.len() * k);
        for &w in &words {
            let r = w as usize * k..(w as usize + 1) * k;
            for (c, s) in self.contrib[r.clone()].iter().zip(&self.snap[r]) {
                diffs.push(c - s);
            }
        }
        let byte_size = (words.len() * k * bytes_per_entry) as u64;
        SyncDelta { worker_id: self.id, part_rank, words, diffs, byte_size }
    }
}

/// Applies delta payloads to the global matrix: for every row of every due
/// part, the worker deltas are accumulated in ascending worker id order and
/// added on. Equivalent to the reduction performed inside [`pbp_train`].
pub fn sync_global(global: &mut GlobalPhi, deltas: &[SyncDelta]) -> Result<()> {
    let k = global.k;
    let mut order: Vec<&SyncDelta> = deltas.iter().collect();
    order.sort_by_key(|d| (d.part_rank, d.worker_id));
    let mut i = 0;
    while i < order.len() {
        let part = order[i].part_rank;
        let group_end = order[i..].iter().take_while(|d| d.part_rank == part).count() + i;
        let words = &order[i].words;
        for d in &order[i..group_end] {
            if d.words != *words {
                return Err(Error::Dimension("delta word sets disagree within a part".into()));
            }
            if d.diffs.len() != words.len() * k {
                return Err(Error::Dimension("delta sub-matrix shape mismatch".into()));
            }
        }
        for (row, &w) in words.iter().enumerate() {
            if (w as usize) * k + k > global.phi_hat.len() {
                return Err(Error::Dimension(format!("word {w} outside global matrix")));
            }
            for kk in 0..k {
                let mut acc = 0.0;
                for d in &order[i..group_end] {
                    acc += d.diffs[row * k + kk];
                }
                global.phi_hat[w as usize * k + kk] += acc;
            }
        }
        i = group_end;
    }
    global.refresh_col_sums();
    Ok(())
}

/// Overwrites the due rows of every worker's local view with the global rows
/// and resets the per-part contribution snapshots. Must run after the sync
/// for the same iteration.
pub fn broadcast(global: &GlobalPhi, workers: &mut [WorkerState], partition: &VocabPartition, due: &[usize]) {
    let k = global.k;
    for worker in workers.iter_mut() {
        for &r in due {
            for &w in partition.part(r) {
                let range = w as usize * k..(w as usize + 1) * k;
                let grow = &global.phi_hat[range.clone()];
                for kk in 0..k {
                    let own = worker.contrib[w as usize * k + kk];
                    worker.base[w as usize * k + kk] = grow[kk] - own;
                    worker.snap[w as usize * k + kk] = own;
                }
            }
        }
        worker.base_col_sums = column_sums(&worker.base, k);
    }
}

/// Rebuilds the due rows of the global matrix as the worker-ordered sum of
/// current contributions (the algebraic result of applying all deltas).
fn reduce_due_rows(global: &mut GlobalPhi, workers: &[WorkerState], partition: &VocabPartition, due: &[usize]) {
    let k = global.k;
    for &r in due {
        for &w in partition.part(r) {
            let range = w as usize * k..(w as usize + 1) * k;
            let row = &mut global.phi_hat[range];
            row.iter_mut().for_each(|v| *v = 0.0);
            for worker in workers {
                for (g, c) in row.iter_mut().zip(&worker.contrib[w as usize * k..(w as usize + 1) * k]) {
                    *g += c;
                }
            }
        }
    }
    global.refresh_col_sums();
}

/// Everything produced by a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: TopicModel,
    pub report: RunReport,
    pub stats: SufficientStats,
}

fn assemble_stats(global: &GlobalPhi, workers: &[WorkerState], num_docs: usize) -> SufficientStats {
    let k = global.k;
    let mut theta_hat = vec![0.0; k * num_docs];
    for worker in workers {
        for (li, &doc) in worker.docs.iter().enumerate() {
            let src = worker.theta_col(li);
            theta_hat[doc as usize * k..(doc as usize + 1) * k].copy_from_slice(src);
        }
    }
    SufficientStats::from_parts(k, theta_hat, global.phi_hat.clone(), global.col_sums.clone())
}

/// Runs data-parallel synchronous BP under a communication schedule.
///
/// Each iteration: parallel worker sweeps against the frozen previous view,
/// barrier, sync of the due parts, broadcast of the freshly synced rows.
/// The final iteration forces a full sync, so the returned statistics and
/// model reflect every worker's contribution. Training perplexity is
/// evaluated (outside the timed phases) every `perplexity_every` iterations
/// when nonzero, and always at the final iteration.
#[allow(clippy::too_many_arguments)]
pub fn pbp_train(
    corpus: &SparseCorpus,
    hyper: &Hyper,
    m: usize,
    schedule: &CommSchedule,
    policy: ShardPolicy,
    seed: u64,
    perplexity_every: usize,
    algo_label: &str,
) -> Result<TrainOutcome> {
    if schedule.partition().vocab_size() != corpus.vocab_size() {
        return Err(Error::Dimension(format!(
            "schedule covers {} words, corpus has {}",
            schedule.partition().vocab_size(),
            corpus.vocab_size()
        )));
    }
    if schedule.horizon() != hyper.t {
        return Err(Error::Config(format!(
            "schedule horizon {} differs from training iterations {}",
            schedule.horizon(),
            hyper.t
        )));
    }
    let plan = shard_documents(corpus, m, policy)?;
    let k = hyper.k;
    let partition = schedule.partition();

    // Initial messages are drawn for the whole corpus in cell order, so the
    // initialization is identical for every worker count.
    let full_msgs = bp::init_messages(corpus, hyper, seed);
    let cells_per_doc: Vec<usize> = corpus.docs().map(<[(u32, u32)]>::len).collect();
    let mut per_doc = full_msgs.split_by_docs(&cells_per_doc);
    let mut workers: Vec<WorkerState> = Vec::with_capacity(m);
    for wk in 0..m {
        let docs = plan.docs_of(wk).to_vec();
        let mut parts: Vec<MessageStore> = Vec::with_capacity(docs.len());
        for &d in &docs {
            parts.push(std::mem::replace(
                &mut per_doc[d as usize],
                MessageStore::empty(k),
            ));
        }
        let msgs = MessageStore::concat(k, parts);
        workers.push(WorkerState::new(wk, docs, corpus, msgs, k));
    }

    // Global statistics from the initial messages, reduced in worker order.
    let mut global = GlobalPhi {
        k,
        phi_hat: vec![0.0; corpus.vocab_size() * k],
        col_sums: vec![0.0; k],
    };
    let all_parts: Vec<usize> = (1..=partition.num_parts()).collect();
    reduce_due_rows(&mut global, &workers, partition, &all_parts);
    broadcast(&global, &mut workers, partition, &all_parts);

    let entry_bytes = 8usize;
    let mut report = RunReport::new(ConfigEcho {
        algo: algo_label.to_string(),
        k,
        m,
        n: partition.num_parts(),
        h: schedule.h(),
        t: hyper.t,
        alpha: hyper.alpha,
        beta: hyper.beta,
        seed,
    });

    for t in 1..=hyper.t {
        // Parallel sweeps; results are deterministic regardless of timing.
        let durations: Vec<f64> = std::thread::scope(|scope| {
            let handles: Vec<_> = workers
                .iter_mut()
                .map(|wk| scope.spawn(|| wk.sweep(corpus, hyper)))
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
        });
        let comp_s = durations.into_iter().fold(0.0f64, f64::max);

        let due = parts_due(schedule, t);
        let comm_start = Instant::now();
        reduce_due_rows(&mut global, &workers, partition, &due);
        broadcast(&global, &mut workers, partition, &due);
        let comm_s = comm_start.elapsed().as_secs_f64();

        let (natural_bytes, forced_bytes) =
            crate::schedule::iteration_sync_bytes(schedule, t, m, k, entry_bytes);
        let bytes = natural_bytes + forced_bytes;
        report.totals.terminal_sync_bytes += forced_bytes;

        let perplexity = if (perplexity_every > 0 && t % perplexity_every == 0) || t == hyper.t {
            let stats = assemble_stats(&global, &workers, corpus.num_docs());
            let model = estimate_parameters(&stats, hyper);
            Some(bp::perplexity(corpus, &model))
        } else {
            None
        };

        report.push(IterationRecord { t, comp_s, comm_s, bytes, perplexity });
    }

    let stats = assemble_stats(&global, &workers, corpus.num_docs());
    let model = estimate_parameters(&stats, hyper);
    report.final_train_perplexity = report.records.last().and_then(|r| r.perplexity);
    Ok(TrainOutcome { model, report, stats })
}
