// intona command-line tool. Talks to the library exclusively through the
// public C API; everything else lives behind libintona.

#include <CLI11.hpp>
#include <cstdio>
#include <string>

#include "intona.h"

namespace {

struct ConfigGuard {
  intona_config* cfg = nullptr;
  ~ConfigGuard() { intona_config_free(cfg); }
};

int die(int rc, const char* what) {
  std::fprintf(stderr, "intona: %s failed: %s (%s)\n", what,
               intona_status_name(rc), intona_last_error());
  return 1;
}

// --config file first, then per-flag overrides on top.
int build_config(ConfigGuard& guard, const std::string& config_path,
                 const std::string& seed, const std::string& clamp) {
  int rc = config_path.empty()
               ? intona_config_create(&guard.cfg)
               : intona_config_load(config_path.c_str(), &guard.cfg);
  if (rc != INTONA_OK) return rc;
  if (!seed.empty()) {
    rc = intona_config_set(guard.cfg, "seed", seed.c_str());
    if (rc != INTONA_OK) return rc;
  }
  if (!clamp.empty()) {
    rc = intona_config_set(guard.cfg, "clamp_radius", clamp.c_str());
    if (rc != INTONA_OK) return rc;
  }
  return INTONA_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"many-to-one voice conversion with diverse intonation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", intona_version());

  std::string config_path, out_dir, seed, clamp;
  std::string corpus_dir, classifier_path, synth_path, wav_in;
  std::string eps1_path, eps2_path;
  int steps = 21, samples = 10, utts = 0;
  bool flow = false, baseline = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file (key = value)");
    cmd->add_option("--out", out_dir, "output directory")->required();
    cmd->add_option("--seed", seed, "root random seed");
  };

  auto* gen = app.add_subcommand("gen-corpus",
                                 "generate a synthetic labeled corpus");
  add_common(gen);
  gen->add_option("--utts", utts, "number of utterances");

  auto* tc = app.add_subcommand("train-classifier",
                                "train the phoneme classifier");
  add_common(tc);
  tc->add_option("--corpus", corpus_dir, "corpus directory")->required();

  auto* ts = app.add_subcommand("train-synth", "train the speech synthesizer");
  add_common(ts);
  ts->add_option("--corpus", corpus_dir, "corpus directory")->required();
  ts->add_option("--classifier", classifier_path, "classifier checkpoint")
      ->required();
  ts->add_flag("--flow", flow, "use the inverse-autoregressive-flow posterior");
  ts->add_flag("--baseline", baseline, "train the deterministic baseline");

  auto* ev = app.add_subcommand("eval-classifier",
                                "held-out accuracy and confusion matrix");
  add_common(ev);
  ev->add_option("--classifier", classifier_path, "classifier checkpoint")
      ->required();
  ev->add_option("--corpus", corpus_dir, "corpus directory")->required();

  auto* cv = app.add_subcommand("convert",
                                "convert one utterance with a sampled eps");
  add_common(cv);
  cv->add_option("--in", wav_in, "source wav")->required();
  cv->add_option("--classifier", classifier_path, "classifier checkpoint")
      ->required();
  cv->add_option("--synth", synth_path, "synthesizer checkpoint")->required();
  cv->add_option("--clamp", clamp, "eps clamp radius (0 disables)");

  auto* ip = app.add_subcommand("interpolate",
                                "sweep eps between two endpoint files");
  add_common(ip);
  ip->add_option("--in", wav_in, "source wav")->required();
  ip->add_option("--classifier", classifier_path, "classifier checkpoint")
      ->required();
  ip->add_option("--synth", synth_path, "synthesizer checkpoint")->required();
  ip->add_option("--eps1", eps1_path, "first endpoint eps file")->required();
  ip->add_option("--eps2", eps2_path, "second endpoint eps file")->required();
  ip->add_option("--steps", steps, "number of interpolation steps");

  auto* dv = app.add_subcommand("diversity",
                                "repeated sampling and diversity metrics");
  add_common(dv);
  dv->add_option("--in", wav_in, "source wav")->required();
  dv->add_option("--classifier", classifier_path, "classifier checkpoint")
      ->required();
  dv->add_option("--synth", synth_path, "synthesizer checkpoint")->required();
  dv->add_option("--samples", samples, "number of eps draws");
  dv->add_option("--clamp", clamp, "eps clamp radius (0 disables)");

  auto* pl = app.add_subcommand("plot", "emit PGM spectrogram images");
  add_common(pl);
  pl->add_option("--in", wav_in, "source wav")->required();

  CLI11_PARSE(app, argc, argv);

  ConfigGuard guard;
  int rc = build_config(guard, config_path, seed, clamp);
  if (rc != INTONA_OK) return die(rc, "config");

  if (gen->parsed()) {
    if (utts > 0) {
      rc = intona_config_set(guard.cfg, "corpus_utterances",
                             std::to_string(utts).c_str());
      if (rc != INTONA_OK) return die(rc, "config");
    }
    rc = intona_run_gen_corpus(guard.cfg, out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "gen-corpus");
    std::printf("corpus written to %s\n", out_dir.c_str());
  } else if (tc->parsed()) {
    rc = intona_run_train_classifier(guard.cfg, corpus_dir.c_str(),
                                     out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "train-classifier");
    std::printf("classifier written to %s/classifier.ckpt\n", out_dir.c_str());
  } else if (ts->parsed()) {
    if (flow && baseline) {
      std::fprintf(stderr, "intona: --flow and --baseline are exclusive\n");
      return 1;
    }
    const int variant = baseline ? INTONA_SYNTH_BASELINE
                        : flow   ? INTONA_SYNTH_CVAE_FLOW
                                 : INTONA_SYNTH_CVAE;
    rc = intona_run_train_synth(guard.cfg, corpus_dir.c_str(),
                                classifier_path.c_str(), variant,
                                out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "train-synth");
    std::printf("synthesizer written to %s/synth.ckpt\n", out_dir.c_str());
  } else if (ev->parsed()) {
    rc = intona_run_eval_classifier(guard.cfg, classifier_path.c_str(),
                                    corpus_dir.c_str(), out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "eval-classifier");
    std::printf("evaluation written to %s\n", out_dir.c_str());
  } else if (cv->parsed()) {
    rc = intona_run_convert(guard.cfg, wav_in.c_str(),
                            classifier_path.c_str(), synth_path.c_str(),
                            out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "convert");
    std::printf("conversion written to %s\n", out_dir.c_str());
  } else if (ip->parsed()) {
    rc = intona_run_interpolate(guard.cfg, wav_in.c_str(),
                                classifier_path.c_str(), synth_path.c_str(),
                                eps1_path.c_str(), eps2_path.c_str(), steps,
                                out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "interpolate");
    std::printf("sweep written to %s\n", out_dir.c_str());
  } else if (dv->parsed()) {
    double mel = 0.0, f0 = 0.0;
    rc = intona_run_diversity(guard.cfg, wav_in.c_str(),
                              classifier_path.c_str(), synth_path.c_str(),
                              samples, out_dir.c_str(), &mel, &f0);
    if (rc != INTONA_OK) return die(rc, "diversity");
    std::printf("mean pairwise mel distance: %.6f\n", mel);
    std::printf("mean cross-sample f0 std:   %.6f Hz\n", f0);
  } else if (pl->parsed()) {
    rc = intona_run_plot(guard.cfg, wav_in.c_str(), out_dir.c_str());
    if (rc != INTONA_OK) return die(rc, "plot");
    std::printf("plots written to %s\n", out_dir.c_str());
  }
  return 0;
}
