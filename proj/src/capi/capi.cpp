#include "intona.h"

#include <cstring>
#include <string>

#include "core/checkpoint.hpp"
#include "core/config.hpp"
#include "core/corpus.hpp"
#include "core/phoneme.hpp"
#include "core/runs.hpp"
#include "core/synth.hpp"

using namespace intona;

struct intona_config {
  RunConfig cfg;
};

struct intona_corpus {
  Corpus corpus;
  RunConfig cfg;  // analysis framing the corpus was built with
};

struct intona_model {
  AnyModel model;
};

namespace {

thread_local std::string g_last_error;

int status_code(Status s) {
  switch (s) {
    case Status::Ok: return INTONA_OK;
    case Status::InvalidArgument: return INTONA_ERR_INVALID_ARGUMENT;
    case Status::Io: return INTONA_ERR_IO;
    case Status::Format: return INTONA_ERR_FORMAT;
    case Status::BadMagic: return INTONA_ERR_BAD_MAGIC;
    case Status::VersionMismatch: return INTONA_ERR_VERSION_MISMATCH;
    case Status::Truncated: return INTONA_ERR_TRUNCATED;
    case Status::ShapeMismatch: return INTONA_ERR_SHAPE_MISMATCH;
    case Status::BadState: return INTONA_ERR_BAD_STATE;
    case Status::Internal: return INTONA_ERR_INTERNAL;
  }
  return INTONA_ERR_INTERNAL;
}

template <typename Fn>
int wrap(Fn&& fn) {
  try {
    fn();
    return INTONA_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_code(e.status());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return INTONA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return INTONA_ERR_INTERNAL;
  }
}

int fail_arg(const char* msg) {
  g_last_error = msg;
  return INTONA_ERR_INVALID_ARGUMENT;
}

int copy_string(const std::string& s, char* buf, size_t buf_len) {
  if (buf == nullptr) return fail_arg("output buffer is null");
  if (s.size() + 1 > buf_len) {
    g_last_error = "buffer too small (" + std::to_string(s.size() + 1) +
                   " bytes needed)";
    return INTONA_ERR_INVALID_ARGUMENT;
  }
  std::memcpy(buf, s.c_str(), s.size() + 1);
  return INTONA_OK;
}

SynthVariant variant_of(int v) {
  switch (v) {
    case INTONA_SYNTH_CVAE: return SynthVariant::Cvae;
    case INTONA_SYNTH_CVAE_FLOW: return SynthVariant::CvaeFlow;
    case INTONA_SYNTH_BASELINE: return SynthVariant::Baseline;
    default:
      fail(Status::InvalidArgument,
           "variant must be 0 (cvae), 1 (cvae+flow) or 2 (baseline)");
  }
}

}  // namespace

extern "C" {

const char* intona_version(void) { return "1.0.0"; }

const char* intona_status_name(int status) {
  switch (status) {
    case INTONA_OK: return "ok";
    case INTONA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case INTONA_ERR_IO: return "io error";
    case INTONA_ERR_FORMAT: return "format error";
    case INTONA_ERR_BAD_MAGIC: return "bad magic";
    case INTONA_ERR_VERSION_MISMATCH: return "version mismatch";
    case INTONA_ERR_TRUNCATED: return "truncated";
    case INTONA_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case INTONA_ERR_BAD_STATE: return "bad state";
    case INTONA_ERR_INTERNAL: return "internal error";
    default: return "unknown status";
  }
}

const char* intona_last_error(void) { return g_last_error.c_str(); }

int intona_config_create(intona_config** out) {
  if (!out) return fail_arg("out is null");
  return wrap([&] { *out = new intona_config(); });
}

int intona_config_load(const char* path, intona_config** out) {
  if (!path || !out) return fail_arg("path/out is null");
  return wrap([&] { *out = new intona_config{RunConfig::from_file(path)}; });
}

int intona_config_set(intona_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail_arg("cfg/key/value is null");
  return wrap([&] {
    RunConfig tmp = cfg->cfg;
    tmp.set(key, value);
    tmp.validate();
    cfg->cfg = tmp;
  });
}

int intona_config_get(const intona_config* cfg, const char* key, char* buf,
                      size_t buf_len) {
  if (!cfg || !key) return fail_arg("cfg/key is null");
  std::string value;
  const int rc = wrap([&] { value = cfg->cfg.get(key); });
  if (rc != INTONA_OK) return rc;
  return copy_string(value, buf, buf_len);
}

void intona_config_free(intona_config* cfg) { delete cfg; }

int intona_corpus_generate(const intona_config* cfg, uint64_t seed,
                           int n_utterances, intona_corpus** out) {
  if (!cfg || !out) return fail_arg("cfg/out is null");
  return wrap([&] {
    *out = new intona_corpus{
        generate_corpus(cfg->cfg, seed, n_utterances), cfg->cfg};
  });
}

int intona_corpus_load(const char* audio_dir, const char* label_dir,
                       const char* inventory_path, const intona_config* cfg,
                       intona_corpus** out) {
  if (!audio_dir || !label_dir || !inventory_path || !cfg || !out)
    return fail_arg("argument is null");
  return wrap([&] {
    *out = new intona_corpus{
        load_corpus(audio_dir, label_dir, inventory_path, cfg->cfg),
        cfg->cfg};
  });
}

int intona_corpus_load_dir(const char* dir, const intona_config* cfg,
                           intona_corpus** out) {
  if (!dir || !cfg || !out) return fail_arg("argument is null");
  return wrap([&] {
    *out = new intona_corpus{load_corpus_dir(dir, cfg->cfg), cfg->cfg};
  });
}

int intona_corpus_save(const intona_corpus* corpus, const char* dir) {
  if (!corpus || !dir) return fail_arg("corpus/dir is null");
  return wrap([&] { save_corpus(corpus->corpus, dir); });
}

int intona_corpus_size(const intona_corpus* corpus, int* n_utterances) {
  if (!corpus || !n_utterances) return fail_arg("corpus/out is null");
  *n_utterances = static_cast<int>(corpus->corpus.utterances.size());
  return INTONA_OK;
}

void intona_corpus_free(intona_corpus* corpus) { delete corpus; }

int intona_train_classifier(const intona_corpus* corpus,
                            const intona_config* cfg, uint64_t seed,
                            intona_model** out) {
  if (!corpus || !cfg || !out) return fail_arg("argument is null");
  return wrap([&] {
    auto trained = train_classifier(corpus->corpus, cfg->cfg, seed);
    *out = new intona_model{
        AnyModel::of(std::move(trained.model), cfg->cfg)};
  });
}

int intona_train_synth(const intona_corpus* corpus,
                       const intona_model* classifier,
                       const intona_config* cfg, uint64_t seed, int variant,
                       intona_model** out) {
  if (!corpus || !classifier || !cfg || !out)
    return fail_arg("argument is null");
  return wrap([&] {
    require(classifier->model.kind == ModelKind::Classifier, Status::BadState,
            "the classifier handle does not hold a classifier");
    auto trained = train_synthesizer(corpus->corpus,
                                     classifier->model.classifier, cfg->cfg,
                                     seed, variant_of(variant));
    *out = new intona_model{AnyModel::of(trained.model, cfg->cfg)};
  });
}

int intona_model_save(const intona_model* model, const char* path) {
  if (!model || !path) return fail_arg("model/path is null");
  return wrap([&] { save_checkpoint(model->model, path); });
}

int intona_model_load(const char* path, intona_model** out) {
  if (!path || !out) return fail_arg("path/out is null");
  return wrap([&] { *out = new intona_model{load_checkpoint(path)}; });
}

int intona_model_kind(const intona_model* model, char* buf, size_t buf_len) {
  if (!model) return fail_arg("model is null");
  return copy_string(model_kind_name(model->model.kind), buf, buf_len);
}

void intona_model_free(intona_model* model) { delete model; }

int intona_eval_classifier(const intona_model* classifier,
                           const intona_corpus* corpus,
                           const intona_config* cfg, int heldout_only,
                           double* accuracy, int64_t* confusion, int* k) {
  if (!classifier || !corpus || !cfg || !accuracy)
    return fail_arg("argument is null");
  return wrap([&] {
    require(classifier->model.kind == ModelKind::Classifier, Status::BadState,
            "the model handle does not hold a classifier");
    const auto m = confusion_matrix(classifier->model.classifier,
                                    corpus->corpus, cfg->cfg,
                                    heldout_only ? Split::Heldout : Split::All);
    *accuracy = top1_from_confusion(m);
    if (k) *k = m.rows;
    if (confusion)
      for (size_t i = 0; i < m.size(); ++i) confusion[i] = m.v[i];
  });
}

int intona_run_gen_corpus(const intona_config* cfg, const char* out_dir) {
  if (!cfg || !out_dir) return fail_arg("argument is null");
  return wrap([&] { run_gen_corpus(cfg->cfg, out_dir); });
}

int intona_run_train_classifier(const intona_config* cfg,
                                const char* corpus_dir, const char* out_dir) {
  if (!cfg || !corpus_dir || !out_dir) return fail_arg("argument is null");
  return wrap([&] { run_train_classifier(cfg->cfg, corpus_dir, out_dir); });
}

int intona_run_train_synth(const intona_config* cfg, const char* corpus_dir,
                           const char* classifier_ckpt, int variant,
                           const char* out_dir) {
  if (!cfg || !corpus_dir || !classifier_ckpt || !out_dir)
    return fail_arg("argument is null");
  return wrap([&] {
    run_train_synth(cfg->cfg, corpus_dir, classifier_ckpt,
                    variant_of(variant), out_dir);
  });
}

int intona_run_eval_classifier(const intona_config* cfg,
                               const char* classifier_ckpt,
                               const char* corpus_dir, const char* out_dir) {
  if (!cfg || !classifier_ckpt || !corpus_dir || !out_dir)
    return fail_arg("argument is null");
  return wrap([&] {
    run_eval_classifier(cfg->cfg, classifier_ckpt, corpus_dir, out_dir);
  });
}

int intona_run_convert(const intona_config* cfg, const char* wav_in,
                       const char* classifier_ckpt, const char* synth_ckpt,
                       const char* out_dir) {
  if (!cfg || !wav_in || !classifier_ckpt || !synth_ckpt || !out_dir)
    return fail_arg("argument is null");
  return wrap([&] {
    run_convert(cfg->cfg, wav_in, classifier_ckpt, synth_ckpt, out_dir);
  });
}

int intona_run_interpolate(const intona_config* cfg, const char* wav_in,
                           const char* classifier_ckpt,
                           const char* synth_ckpt, const char* eps1_path,
                           const char* eps2_path, int steps,
                           const char* out_dir) {
  if (!cfg || !wav_in || !classifier_ckpt || !synth_ckpt || !eps1_path ||
      !eps2_path || !out_dir)
    return fail_arg("argument is null");
  return wrap([&] {
    run_interpolate(cfg->cfg, wav_in, classifier_ckpt, synth_ckpt, eps1_path,
                    eps2_path, steps, out_dir);
  });
}

int intona_run_diversity(const intona_config* cfg, const char* wav_in,
                         const char* classifier_ckpt, const char* synth_ckpt,
                         int samples, const char* out_dir,
                         double* mean_pairwise_mel, double* mean_f0_std) {
  if (!cfg || !wav_in || !classifier_ckpt || !synth_ckpt || !out_dir)
    return fail_arg("argument is null");
  return wrap([&] {
    DiversitySummary summary;
    run_diversity(cfg->cfg, wav_in, classifier_ckpt, synth_ckpt, samples,
                  out_dir, &summary);
    if (mean_pairwise_mel) *mean_pairwise_mel = summary.mean_pairwise_mel;
    if (mean_f0_std) *mean_f0_std = summary.mean_f0_std;
  });
}

int intona_run_plot(const intona_config* cfg, const char* wav_in,
                    const char* out_dir) {
  if (!cfg || !wav_in || !out_dir) return fail_arg("argument is null");
  return wrap([&] { run_plot(cfg->cfg, wav_in, out_dir); });
}

}  // extern "C"
