#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "pipeline.hpp"
#include "synth.hpp"

namespace intona {

// File-level entry points behind the CLI subcommands. Every run writes its
// artifacts plus a manifest.txt (command, inputs, full config, artifact
// list) into out_dir; feeding that manifest back as --config reproduces the
// run byte for byte.
struct RunResult {
  std::vector<std::string> artifacts;  // paths relative to out_dir
};

RunResult run_gen_corpus(const RunConfig& cfg, const std::string& out_dir);

RunResult run_train_classifier(const RunConfig& cfg,
                               const std::string& corpus_dir,
                               const std::string& out_dir);

RunResult run_train_synth(const RunConfig& cfg, const std::string& corpus_dir,
                          const std::string& classifier_path,
                          SynthVariant variant, const std::string& out_dir);

RunResult run_eval_classifier(const RunConfig& cfg,
                              const std::string& classifier_path,
                              const std::string& corpus_dir,
                              const std::string& out_dir);

RunResult run_convert(const RunConfig& cfg, const std::string& wav_in,
                      const std::string& classifier_path,
                      const std::string& synth_path,
                      const std::string& out_dir);

RunResult run_interpolate(const RunConfig& cfg, const std::string& wav_in,
                          const std::string& classifier_path,
                          const std::string& synth_path,
                          const std::string& eps1_path,
                          const std::string& eps2_path, int steps,
                          const std::string& out_dir);

struct DiversitySummary {
  double mean_pairwise_mel = 0.0;
  double mean_f0_std = 0.0;
};

RunResult run_diversity(const RunConfig& cfg, const std::string& wav_in,
                        const std::string& classifier_path,
                        const std::string& synth_path, int samples,
                        const std::string& out_dir,
                        DiversitySummary* summary = nullptr);

RunResult run_plot(const RunConfig& cfg, const std::string& wav_in,
                   const std::string& out_dir);

// Whitespace-separated floats; count must match the expected dimension.
NoiseVector read_eps_file(const std::string& path, int dim);
void write_eps_file(const std::string& path, const NoiseVector& eps);

}  // namespace intona
