//! C ABI for the cepbp topic-model trainer.
//!
//! All entry points operate on opaque handles ([`CepbpCorpus`],
//! [`CepbpModel`]) and report failures through [`CepbpStatus`] codes; the
//! message for the most recent failure on the current thread is available
//! via [`cepbp_last_error`]. Handles returned by this library must be
//! released with the matching `*_free` function and are not thread-safe to
//! mutate concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use cepbp::bp::{self, Hyper, TopicModel};
use cepbp::corpus::{self, SparseCorpus, SynthConfig};
use cepbp::gibbs;
use cepbp::model::ModelHeader;
use cepbp::parallel::{self, ShardPolicy};
use cepbp::schedule::{partition_vocab, CommSchedule};

/// Status codes returned by every fallible entry point.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CepbpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Dimension = 5,
    Internal = 6,
}

/// Training algorithm selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CepbpAlgo {
    Bp = 0,
    Pbp = 1,
    Cepbp = 2,
    Gs = 3,
    Pgs = 4,
}

/// Training parameters; `n` and `h` are only read for the scheduled
/// algorithm, `m` is ignored by the serial ones.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct CepbpTrainParams {
    pub algo: CepbpAlgo,
    pub k: usize,
    pub t: usize,
    pub m: usize,
    pub n: usize,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
    pub seed: u64,
}

/// Opaque corpus handle.
pub struct CepbpCorpus {
    inner: SparseCorpus,
}

/// Opaque model handle.
pub struct CepbpModel {
    header: ModelHeader,
    inner: TopicModel,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = msg.into());
}

fn status_of(err: &cepbp::Error) -> CepbpStatus {
    use cepbp::Error::*;
    match err {
        Parse { .. } | ModelFormat(_) | Json(_) => CepbpStatus::Parse,
        Bounds { .. } | Value { .. } | VocabSize { .. } | Config(_) | Fit(_) => {
            CepbpStatus::InvalidArgument
        }
        Dimension(_) => CepbpStatus::Dimension,
        Io(_) => CepbpStatus::Io,
    }
}

fn fail(err: cepbp::Error) -> CepbpStatus {
    let code = status_of(&err);
    set_error(err.to_string());
    code
}

fn guard<F: FnOnce() -> CepbpStatus>(f: F) -> CepbpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in cepbp".to_string());
            set_error(msg);
            CepbpStatus::Internal
        }
    }
}

unsafe fn path_from(ptr: *const c_char) -> Option<PathBuf> {
    if ptr.is_null() {
        return None;
    }
    Some(PathBuf::from(CStr::from_ptr(ptr).to_string_lossy().into_owned()))
}

/// Copies the most recent error message on this thread into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length in
/// bytes, excluding the terminator.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be NULL (then only the
/// length is returned).
#[no_mangle]
pub unsafe extern "C" fn cepbp_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Loads a UCI bag-of-words corpus. `vocab_path` may be NULL.
///
/// # Safety
/// `docword_path` must be a NUL-terminated string; `out` must be a valid
/// pointer to a corpus handle slot.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_load(
    docword_path: *const c_char,
    vocab_path: *const c_char,
    out: *mut *mut CepbpCorpus,
) -> CepbpStatus {
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    let Some(docword) = path_from(docword_path) else {
        set_error("docword_path is NULL");
        return CepbpStatus::NullArgument;
    };
    let vocab = path_from(vocab_path);
    guard(|| {
        let open = |p: &PathBuf| std::fs::File::open(p).map(std::io::BufReader::new);
        let docword_reader = match open(&docword) {
            Ok(r) => r,
            Err(e) => return fail(e.into()),
        };
        let loaded = match vocab {
            Some(v) => {
                let vr = match open(&v) {
                    Ok(r) => r,
                    Err(e) => return fail(e.into()),
                };
                corpus::load_uci_bow(docword_reader, Some(vr))
            }
            None => corpus::load_uci_bow(docword_reader, None::<std::io::BufReader<std::fs::File>>),
        };
        match loaded {
            Ok(l) => {
                *out = Box::into_raw(Box::new(CepbpCorpus { inner: l.corpus }));
                CepbpStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Generates a deterministic synthetic corpus (see the library docs).
///
/// # Safety
/// `out` must be a valid pointer to a corpus handle slot.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_generate(
    num_docs: usize,
    vocab_size: usize,
    num_topics: usize,
    avg_doc_len: usize,
    seed: u64,
    out: *mut *mut CepbpCorpus,
) -> CepbpStatus {
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    guard(|| {
        if num_docs == 0 || vocab_size < 2 || num_topics == 0 || avg_doc_len == 0 {
            set_error("corpus dimensions must be positive (vocab_size >= 2)");
            return CepbpStatus::InvalidArgument;
        }
        let cfg = SynthConfig {
            num_docs,
            vocab_size,
            num_topics,
            avg_doc_len,
            zipf_exponent: 1.05,
            doc_topic_concentration: 0.2,
            seed,
        };
        let corpus = corpus::generate_synthetic(&cfg);
        *out = Box::into_raw(Box::new(CepbpCorpus { inner: corpus }));
        CepbpStatus::Ok
    })
}

/// Releases a corpus handle. NULL is ignored.
///
/// # Safety
/// `ptr` must have been returned by a corpus constructor and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_free(ptr: *mut CepbpCorpus) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Number of documents; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live corpus handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_num_docs(ptr: *const CepbpCorpus) -> usize {
    ptr.as_ref().map_or(0, |c| c.inner.num_docs())
}

/// Vocabulary size; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live corpus handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_vocab_size(ptr: *const CepbpCorpus) -> usize {
    ptr.as_ref().map_or(0, |c| c.inner.vocab_size())
}

/// Number of nonzero (word, document) cells; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live corpus handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_nnz(ptr: *const CepbpCorpus) -> usize {
    ptr.as_ref().map_or(0, |c| c.inner.nnz())
}

/// Total token count; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live corpus handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_corpus_total_tokens(ptr: *const CepbpCorpus) -> u64 {
    ptr.as_ref().map_or(0, |c| c.inner.total_tokens())
}

fn train_inner(corpus: &SparseCorpus, p: &CepbpTrainParams) -> cepbp::Result<(String, TopicModel)> {
    let hyper = Hyper::new(p.k, p.alpha, p.beta, p.t)?;
    let label = match p.algo {
        CepbpAlgo::Bp => "bp",
        CepbpAlgo::Pbp => "pbp",
        CepbpAlgo::Cepbp => "cepbp",
        CepbpAlgo::Gs => "gs",
        CepbpAlgo::Pgs => "pgs",
    };
    let outcome = match p.algo {
        CepbpAlgo::Bp | CepbpAlgo::Pbp | CepbpAlgo::Cepbp => {
            let ft = corpus::word_frequencies(corpus);
            let schedule = if matches!(p.algo, CepbpAlgo::Cepbp) {
                let n = p.n.clamp(1, corpus.vocab_size());
                CommSchedule::new(partition_vocab(&ft, n)?, p.h, p.t)?
            } else {
                CommSchedule::all_parts(partition_vocab(&ft, 1)?, p.t)?
            };
            let m = if matches!(p.algo, CepbpAlgo::Bp) { 1 } else { p.m.max(1) };
            parallel::pbp_train(corpus, &hyper, m, &schedule, ShardPolicy::RoundRobin, p.seed, 0, label)?
        }
        CepbpAlgo::Gs => gibbs::gs_train(corpus, &hyper, p.seed, 0)?,
        CepbpAlgo::Pgs => gibbs::pgs_train(corpus, &hyper, p.m.max(1), 1, p.seed, 0, label)?,
    };
    Ok((label.to_string(), outcome.model))
}

/// Trains a model on the whole corpus.
///
/// # Safety
/// `corpus` must be a live corpus handle; `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cepbp_train(
    corpus: *const CepbpCorpus,
    params: *const CepbpTrainParams,
    out: *mut *mut CepbpModel,
) -> CepbpStatus {
    let (Some(corpus), Some(params)) = (corpus.as_ref(), params.as_ref()) else {
        set_error("corpus or params is NULL");
        return CepbpStatus::NullArgument;
    };
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    guard(|| match train_inner(&corpus.inner, params) {
        Ok((algo, model)) => {
            let header = ModelHeader {
                algo,
                k: model.k,
                num_docs: model.num_docs(),
                vocab_size: model.vocab_size(),
                alpha: params.alpha,
                beta: params.beta,
                seed: params.seed,
            };
            *out = Box::into_raw(Box::new(CepbpModel { header, inner: model }));
            CepbpStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Releases a model handle. NULL is ignored.
///
/// # Safety
/// `ptr` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_free(ptr: *mut CepbpModel) {
    if !ptr.is_null() {
        drop(Box::from_raw(ptr));
    }
}

/// Topic count; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live model handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_k(ptr: *const CepbpModel) -> usize {
    ptr.as_ref().map_or(0, |m| m.inner.k)
}

/// Document count of the training corpus; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live model handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_num_docs(ptr: *const CepbpModel) -> usize {
    ptr.as_ref().map_or(0, |m| m.inner.num_docs())
}

/// Vocabulary size; 0 for NULL.
///
/// # Safety
/// `ptr` must be a live model handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_vocab_size(ptr: *const CepbpModel) -> usize {
    ptr.as_ref().map_or(0, |m| m.inner.vocab_size())
}

/// Copies document `doc`'s topic proportions (K values) into `buf`.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold at least `buf_len` f64s.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_theta_col(
    model: *const CepbpModel,
    doc: usize,
    buf: *mut f64,
    buf_len: usize,
) -> CepbpStatus {
    let Some(model) = model.as_ref() else {
        set_error("model is NULL");
        return CepbpStatus::NullArgument;
    };
    if buf.is_null() {
        set_error("buf is NULL");
        return CepbpStatus::NullArgument;
    }
    if doc >= model.inner.num_docs() {
        set_error(format!("document {doc} out of range"));
        return CepbpStatus::InvalidArgument;
    }
    if buf_len < model.inner.k {
        set_error(format!("buffer holds {buf_len} values, need {}", model.inner.k));
        return CepbpStatus::Dimension;
    }
    let col = model.inner.theta_col(doc);
    std::ptr::copy_nonoverlapping(col.as_ptr(), buf, col.len());
    CepbpStatus::Ok
}

/// Copies word `word`'s per-topic probabilities (K values) into `buf`.
///
/// # Safety
/// `model` must be a live handle; `buf` must hold at least `buf_len` f64s.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_phi_row(
    model: *const CepbpModel,
    word: usize,
    buf: *mut f64,
    buf_len: usize,
) -> CepbpStatus {
    let Some(model) = model.as_ref() else {
        set_error("model is NULL");
        return CepbpStatus::NullArgument;
    };
    if buf.is_null() {
        set_error("buf is NULL");
        return CepbpStatus::NullArgument;
    }
    if word >= model.inner.vocab_size() {
        set_error(format!("word {word} out of range"));
        return CepbpStatus::InvalidArgument;
    }
    if buf_len < model.inner.k {
        set_error(format!("buffer holds {buf_len} values, need {}", model.inner.k));
        return CepbpStatus::Dimension;
    }
    let row = model.inner.phi_row(word);
    std::ptr::copy_nonoverlapping(row.as_ptr(), buf, row.len());
    CepbpStatus::Ok
}

/// Saves a model to `path` in the library's model file format.
///
/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_save(model: *const CepbpModel, path: *const c_char) -> CepbpStatus {
    let Some(model) = model.as_ref() else {
        set_error("model is NULL");
        return CepbpStatus::NullArgument;
    };
    let Some(path) = path_from(path) else {
        set_error("path is NULL");
        return CepbpStatus::NullArgument;
    };
    guard(|| match cepbp::model::save_model_file(&path, &model.header, &model.inner) {
        Ok(()) => CepbpStatus::Ok,
        Err(e) => fail(e),
    })
}

/// Loads a model file written by [`cepbp_model_save`] or the CLI.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn cepbp_model_load(path: *const c_char, out: *mut *mut CepbpModel) -> CepbpStatus {
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    let Some(path) = path_from(path) else {
        set_error("path is NULL");
        return CepbpStatus::NullArgument;
    };
    guard(|| match cepbp::model::load_model_file(&path) {
        Ok((header, model)) => {
            *out = Box::into_raw(Box::new(CepbpModel { header, inner: model }));
            CepbpStatus::Ok
        }
        Err(e) => fail(e),
    })
}

/// Perplexity of `corpus` under `model` (dimensions must match); writes the
/// value to `out`.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cepbp_perplexity(
    model: *const CepbpModel,
    corpus: *const CepbpCorpus,
    out: *mut f64,
) -> CepbpStatus {
    let (Some(model), Some(corpus)) = (model.as_ref(), corpus.as_ref()) else {
        set_error("model or corpus is NULL");
        return CepbpStatus::NullArgument;
    };
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    if model.inner.num_docs() != corpus.inner.num_docs()
        || model.inner.vocab_size() != corpus.inner.vocab_size()
    {
        set_error("model and corpus dimensions differ");
        return CepbpStatus::Dimension;
    }
    guard(|| {
        *out = bp::perplexity(&corpus.inner, &model.inner);
        CepbpStatus::Ok
    })
}

/// Folds the observed corpus into the model's topics and writes the
/// perplexity of the held-out corpus to `out`. Observed and held-out must
/// have the same document count and the model's vocabulary.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cepbp_predictive_perplexity(
    model: *const CepbpModel,
    observed: *const CepbpCorpus,
    heldout: *const CepbpCorpus,
    fold_in_iters: usize,
    seed: u64,
    out: *mut f64,
) -> CepbpStatus {
    let (Some(model), Some(observed), Some(heldout)) =
        (model.as_ref(), observed.as_ref(), heldout.as_ref())
    else {
        set_error("model, observed, or heldout is NULL");
        return CepbpStatus::NullArgument;
    };
    if out.is_null() {
        return CepbpStatus::NullArgument;
    }
    if observed.inner.vocab_size() != model.inner.vocab_size()
        || heldout.inner.vocab_size() != model.inner.vocab_size()
        || observed.inner.num_docs() != heldout.inner.num_docs()
    {
        set_error("observed/heldout/model dimensions differ");
        return CepbpStatus::Dimension;
    }
    guard(|| {
        let hyper = match Hyper::new(model.inner.k, model.header.alpha, model.header.beta, 1) {
            Ok(h) => h,
            Err(e) => return fail(e),
        };
        let folded = bp::fold_in(&observed.inner, &model.inner.phi, &hyper, fold_in_iters, seed);
        *out = bp::predictive_perplexity(&heldout.inner, &folded);
        CepbpStatus::Ok
    })
}
