/*
 * intona -- many-to-one voice conversion with diverse intonation.
 *
 * C API over the core library: opaque handles, integer status codes.
 * Every function returns INTONA_OK (0) on success or a nonzero status;
 * intona_last_error() returns a thread-local message for the most recent
 * failure on the calling thread.
 */
#ifndef INTONA_H
#define INTONA_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
  INTONA_OK = 0,
  INTONA_ERR_INVALID_ARGUMENT = 1,
  INTONA_ERR_IO = 2,
  INTONA_ERR_FORMAT = 3,
  INTONA_ERR_BAD_MAGIC = 4,
  INTONA_ERR_VERSION_MISMATCH = 5,
  INTONA_ERR_TRUNCATED = 6,
  INTONA_ERR_SHAPE_MISMATCH = 7,
  INTONA_ERR_BAD_STATE = 8,
  INTONA_ERR_INTERNAL = 9
};

/* Synthesizer variants accepted by the training entry points. */
enum {
  INTONA_SYNTH_CVAE = 0,
  INTONA_SYNTH_CVAE_FLOW = 1,
  INTONA_SYNTH_BASELINE = 2
};

typedef struct intona_config intona_config;
typedef struct intona_corpus intona_corpus;
typedef struct intona_model intona_model;

const char* intona_version(void);
const char* intona_status_name(int status);
const char* intona_last_error(void);

/* --- configuration (flat key = value text files) ------------------------ */

int intona_config_create(intona_config** out);
int intona_config_load(const char* path, intona_config** out);
int intona_config_set(intona_config* cfg, const char* key, const char* value);
/* Writes the value into buf (NUL terminated); fails if buf_len is short. */
int intona_config_get(const intona_config* cfg, const char* key, char* buf,
                      size_t buf_len);
void intona_config_free(intona_config* cfg);

/* --- corpora ------------------------------------------------------------- */

int intona_corpus_generate(const intona_config* cfg, uint64_t seed,
                           int n_utterances, intona_corpus** out);
/* TIMIT-style ingestion: wav files plus "start end symbol" label files. */
int intona_corpus_load(const char* audio_dir, const char* label_dir,
                       const char* inventory_path, const intona_config* cfg,
                       intona_corpus** out);
/* Directory layout produced by intona_corpus_save / gen-corpus runs. */
int intona_corpus_load_dir(const char* dir, const intona_config* cfg,
                           intona_corpus** out);
int intona_corpus_save(const intona_corpus* corpus, const char* dir);
int intona_corpus_size(const intona_corpus* corpus, int* n_utterances);
void intona_corpus_free(intona_corpus* corpus);

/* --- models -------------------------------------------------------------- */

int intona_train_classifier(const intona_corpus* corpus,
                            const intona_config* cfg, uint64_t seed,
                            intona_model** out);
int intona_train_synth(const intona_corpus* corpus,
                       const intona_model* classifier,
                       const intona_config* cfg, uint64_t seed, int variant,
                       intona_model** out);
int intona_model_save(const intona_model* model, const char* path);
int intona_model_load(const char* path, intona_model** out);
/* Kind tag: "classifier", "synth", "synth+flow" or "baseline". */
int intona_model_kind(const intona_model* model, char* buf, size_t buf_len);
void intona_model_free(intona_model* model);

/* Held-out (or full-corpus) frame accuracy; confusion, when non-NULL, must
 * hold k*k int64 cells and receives true x predicted counts row-major. */
int intona_eval_classifier(const intona_model* classifier,
                           const intona_corpus* corpus,
                           const intona_config* cfg, int heldout_only,
                           double* accuracy, int64_t* confusion, int* k);

/* --- file-level runs ------------------------------------------------------
 * Each run writes its artifacts plus manifest.txt into out_dir. Feeding a
 * manifest back in as the config reproduces the run byte for byte. */

int intona_run_gen_corpus(const intona_config* cfg, const char* out_dir);
int intona_run_train_classifier(const intona_config* cfg,
                                const char* corpus_dir, const char* out_dir);
int intona_run_train_synth(const intona_config* cfg, const char* corpus_dir,
                           const char* classifier_ckpt, int variant,
                           const char* out_dir);
int intona_run_eval_classifier(const intona_config* cfg,
                               const char* classifier_ckpt,
                               const char* corpus_dir, const char* out_dir);
int intona_run_convert(const intona_config* cfg, const char* wav_in,
                       const char* classifier_ckpt, const char* synth_ckpt,
                       const char* out_dir);
int intona_run_interpolate(const intona_config* cfg, const char* wav_in,
                           const char* classifier_ckpt,
                           const char* synth_ckpt, const char* eps1_path,
                           const char* eps2_path, int steps,
                           const char* out_dir);
int intona_run_diversity(const intona_config* cfg, const char* wav_in,
                         const char* classifier_ckpt, const char* synth_ckpt,
                         int samples, const char* out_dir,
                         double* mean_pairwise_mel, double* mean_f0_std);
int intona_run_plot(const intona_config* cfg, const char* wav_in,
                    const char* out_dir);

#ifdef __cplusplus
}
#endif

#endif /* INTONA_H */
