#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace intona {

// Flat key = value configuration with '#' comments. Keys under the run. and
// artifact. namespaces are manifest metadata and are ignored on load, which
// lets a run manifest be fed straight back in as a config file.
struct RunConfig {
  int sample_rate = 16000;
  int frame_len = 800;  // 50 ms
  int hop = 200;        // 12.5 ms
  int n_fft = 1024;
  int n_mels = 40;
  double mel_fmin = 0.0;
  double mel_fmax = 8000.0;
  double power = 1.2;
  int gl_iters = 60;
  double f0_min = 70.0;
  double f0_max = 400.0;

  int latent_dim = 16;
  int flow_steps = 4;
  double beta = 1.0;
  double clamp_radius = 3.0;  // 0 disables clamping
  double learning_rate = 1e-3;
  int classifier_hidden = 128;
  int synth_hidden = 128;
  int classifier_epochs = 30;
  int synth_epochs = 40;
  double early_stop_accuracy = 0.0;  // 0 runs every epoch

  uint64_t seed = 12345;
  int corpus_utterances = 200;

  void validate() const;
  std::string to_text() const;
  std::map<std::string, std::string> to_map() const;

  static RunConfig from_file(const std::string& path);
  static RunConfig from_text(const std::string& text);

  // Applies one key = value pair; unknown keys are an error unless they are
  // manifest metadata.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
};

}  // namespace intona
