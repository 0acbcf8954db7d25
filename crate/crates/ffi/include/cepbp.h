#ifndef CEPBP_H
#define CEPBP_H

/* Generated by cbindgen from the cepbp-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Training algorithm selector.
 */
typedef enum CepbpAlgo {
  CEPBP_ALGO_BP = 0,
  CEPBP_ALGO_PBP = 1,
  CEPBP_ALGO_CEPBP = 2,
  CEPBP_ALGO_GS = 3,
  CEPBP_ALGO_PGS = 4,
} CepbpAlgo;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum CepbpStatus {
  CEPBP_STATUS_OK = 0,
  CEPBP_STATUS_NULL_ARGUMENT = 1,
  CEPBP_STATUS_INVALID_ARGUMENT = 2,
  CEPBP_STATUS_IO = 3,
  CEPBP_STATUS_PARSE = 4,
  CEPBP_STATUS_DIMENSION = 5,
  CEPBP_STATUS_INTERNAL = 6,
} CepbpStatus;

/**
 * Opaque corpus handle.
 */
typedef struct CepbpCorpus CepbpCorpus;

/**
 * Opaque model handle.
 */
typedef struct CepbpModel CepbpModel;

/**
 * Training parameters; `n` and `h` are only read for the scheduled
 * algorithm, `m` is ignored by the serial ones.
 */
typedef struct CepbpTrainParams {
  enum CepbpAlgo algo;
  size_t k;
  size_t t;
  size_t m;
  size_t n;
  double h;
  double alpha;
  double beta;
  uint64_t seed;
} CepbpTrainParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the most recent error message on this thread into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length in
 * bytes, excluding the terminator.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be NULL (then only the
 * length is returned).
 */
size_t cepbp_last_error(char *buf, size_t len);

/**
 * Loads a UCI bag-of-words corpus. `vocab_path` may be NULL.
 *
 * # Safety
 * `docword_path` must be a NUL-terminated string; `out` must be a valid
 * pointer to a corpus handle slot.
 */
enum CepbpStatus cepbp_corpus_load(const char *docword_path,
                                   const char *vocab_path,
                                   struct CepbpCorpus **out);

/**
 * Generates a deterministic synthetic corpus (see the library docs).
 *
 * # Safety
 * `out` must be a valid pointer to a corpus handle slot.
 */
enum CepbpStatus cepbp_corpus_generate(size_t num_docs,
                                       size_t vocab_size,
                                       size_t num_topics,
                                       size_t avg_doc_len,
                                       uint64_t seed,
                                       struct CepbpCorpus **out);

/**
 * Releases a corpus handle. NULL is ignored.
 *
 * # Safety
 * `ptr` must have been returned by a corpus constructor and not yet freed.
 */
void cepbp_corpus_free(struct CepbpCorpus *ptr);

/**
 * Number of documents; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live corpus handle or NULL.
 */
size_t cepbp_corpus_num_docs(const struct CepbpCorpus *ptr);

/**
 * Vocabulary size; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live corpus handle or NULL.
 */
size_t cepbp_corpus_vocab_size(const struct CepbpCorpus *ptr);

/**
 * Number of nonzero (word, document) cells; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live corpus handle or NULL.
 */
size_t cepbp_corpus_nnz(const struct CepbpCorpus *ptr);

/**
 * Total token count; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live corpus handle or NULL.
 */
uint64_t cepbp_corpus_total_tokens(const struct CepbpCorpus *ptr);

/**
 * Trains a model on the whole corpus.
 *
 * # Safety
 * `corpus` must be a live corpus handle; `params` and `out` must be valid.
 */
enum CepbpStatus cepbp_train(const struct CepbpCorpus *corpus,
                             const struct CepbpTrainParams *params,
                             struct CepbpModel **out);

/**
 * Releases a model handle. NULL is ignored.
 *
 * # Safety
 * `ptr` must have been returned by this library and not yet freed.
 */
void cepbp_model_free(struct CepbpModel *ptr);

/**
 * Topic count; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live model handle or NULL.
 */
size_t cepbp_model_k(const struct CepbpModel *ptr);

/**
 * Document count of the training corpus; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live model handle or NULL.
 */
size_t cepbp_model_num_docs(const struct CepbpModel *ptr);

/**
 * Vocabulary size; 0 for NULL.
 *
 * # Safety
 * `ptr` must be a live model handle or NULL.
 */
size_t cepbp_model_vocab_size(const struct CepbpModel *ptr);

/**
 * Copies document `doc`'s topic proportions (K values) into `buf`.
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold at least `buf_len` f64s.
 */
enum CepbpStatus cepbp_model_theta_col(const struct CepbpModel *model,
                                       size_t doc,
                                       double *buf,
                                       size_t buf_len);

/**
 * Copies word `word`'s per-topic probabilities (K values) into `buf`.
 *
 * # Safety
 * `model` must be a live handle; `buf` must hold at least `buf_len` f64s.
 */
enum CepbpStatus cepbp_model_phi_row(const struct CepbpModel *model,
                                     size_t word,
                                     double *buf,
                                     size_t buf_len);

/**
 * Saves a model to `path` in the library's model file format.
 *
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum CepbpStatus cepbp_model_save(const struct CepbpModel *model, const char *path);

/**
 * Loads a model file written by [`cepbp_model_save`] or the CLI.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum CepbpStatus cepbp_model_load(const char *path, struct CepbpModel **out);

/**
 * Perplexity of `corpus` under `model` (dimensions must match); writes the
 * value to `out`.
 *
 * # Safety
 * All pointers must be valid; `out` must be writable.
 */
enum CepbpStatus cepbp_perplexity(const struct CepbpModel *model,
                                  const struct CepbpCorpus *corpus,
                                  double *out);

/**
 * Folds the observed corpus into the model's topics and writes the
 * perplexity of the held-out corpus to `out`. Observed and held-out must
 * have the same document count and the model's vocabulary.
 *
 * # Safety
 * All pointers must be valid; `out` must be writable.
 */
enum CepbpStatus cepbp_predictive_perplexity(const struct CepbpModel *model,
                                             const struct CepbpCorpus *observed,
                                             const struct CepbpCorpus *heldout,
                                             size_t fold_in_iters,
                                             uint64_t seed,
                                             double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* CEPBP_H */
