#ifndef SENTIGAN_H
#define SENTIGAN_H

/* Generated by cbindgen from the sentigan-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SentiganStatus {
  /**
   * Success.
   */
  SENTIGAN_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SENTIGAN_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  SENTIGAN_STATUS_INVALID_UTF8 = 2,
  /**
   * A numeric or flag argument was out of range.
   */
  SENTIGAN_STATUS_INVALID_ARGUMENT = 3,
  /**
   * Reading, parsing, or writing data failed.
   */
  SENTIGAN_STATUS_DATA_ERROR = 4,
  /**
   * An internal invariant failed (a bug; see the last error message).
   */
  SENTIGAN_STATUS_INTERNAL_ERROR = 5,
} SentiganStatus;

/**
 * Opaque corpus handle.
 */
typedef struct SentiganCorpus SentiganCorpus;

/**
 * Opaque set of per-user sentiment images.
 */
typedef struct SentiganImages SentiganImages;

/**
 * Opaque lexicon handle.
 */
typedef struct SentiganLexicon SentiganLexicon;

/**
 * Opaque trained model handle.
 */
typedef struct SentiganModel SentiganModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message for the calling thread into `buffer`
 * (NUL-terminated, truncated to `capacity`). Returns the full message
 * length in bytes, excluding the NUL. Safe to call with a null buffer
 * to query the length.
 */
uintptr_t sentigan_last_error_message(char *buffer, uintptr_t capacity);

/**
 * Load a line-delimited comment corpus. Returns null on failure.
 */
struct SentiganCorpus *sentigan_corpus_load(const char *path);

/**
 * Generate a deterministic synthetic corpus. `margin` in [0,1] controls
 * how separable the two classes are. Returns null on failure.
 */
struct SentiganCorpus *sentigan_corpus_synth(uint64_t seed,
                                             uintptr_t n_users,
                                             double relapse_fraction,
                                             double margin);

/**
 * Apply a user-label TSV (user_id<TAB>label) to a loaded corpus.
 */
enum SentiganStatus sentigan_corpus_apply_labels(struct SentiganCorpus *corpus, const char *path);

/**
 * Number of users in the corpus; 0 when the handle is null.
 */
uintptr_t sentigan_corpus_user_count(const struct SentiganCorpus *corpus);

/**
 * Release a corpus handle. Null is a no-op.
 */
void sentigan_corpus_free(struct SentiganCorpus *corpus);

/**
 * Load a word-emotion association lexicon TSV. Returns null on failure.
 */
struct SentiganLexicon *sentigan_lexicon_load(const char *path);

/**
 * The built-in lexicon matching the synthetic corpus vocabulary.
 */
struct SentiganLexicon *sentigan_lexicon_synth(void);

/**
 * Number of words in the lexicon; 0 when the handle is null.
 */
uintptr_t sentigan_lexicon_word_count(const struct SentiganLexicon *lexicon);

/**
 * Release a lexicon handle. Null is a no-op.
 */
void sentigan_lexicon_free(struct SentiganLexicon *lexicon);

/**
 * Build one 2-channel 10x10 sentiment image per user over the trailing
 * `observation_days` window. Returns null on failure.
 */
struct SentiganImages *sentigan_images_build(const struct SentiganCorpus *corpus,
                                             const struct SentiganLexicon *lexicon,
                                             uint32_t observation_days);

/**
 * Number of images in the set; 0 when the handle is null.
 */
uintptr_t sentigan_images_count(const struct SentiganImages *images);

/**
 * Copy image `index` into `out` as 200 doubles (emotion channel first,
 * row-major, then the influence channel).
 */
enum SentiganStatus sentigan_images_pixels(const struct SentiganImages *images,
                                           uintptr_t index,
                                           double *out);

/**
 * Release an image-set handle. Null is a no-op.
 */
void sentigan_images_free(struct SentiganImages *images);

/**
 * Train the semi-supervised GAN on all labeled images in the set
 * (unlabeled images join the unsupervised pool). Returns null on
 * failure.
 */
struct SentiganModel *sentigan_model_train(const struct SentiganImages *images,
                                           uintptr_t epochs,
                                           uintptr_t batch_size,
                                           double learning_rate,
                                           uint64_t seed);

/**
 * Load a model checkpoint. Returns null on failure.
 */
struct SentiganModel *sentigan_model_load(const char *path);

/**
 * Write a model checkpoint (bit-exact round-trip).
 */
enum SentiganStatus sentigan_model_save(const struct SentiganModel *model, const char *path);

/**
 * Relapse probability for image `index`, written to `out_probability`.
 */
enum SentiganStatus sentigan_model_predict(const struct SentiganModel *model,
                                           const struct SentiganImages *images,
                                           uintptr_t index,
                                           double *out_probability);

/**
 * Release a model handle. Null is a no-op.
 */
void sentigan_model_free(struct SentiganModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENTIGAN_H */
