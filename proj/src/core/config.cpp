#include "config.hpp"

#include <charconv>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "error.hpp"

namespace intona {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const int r = std::stoi(v, &pos);
    require(pos == v.size(), Status::Format, "");
    return r;
  } catch (...) {
    fail(Status::Format, "config: bad integer for " + key + ": " + v);
  }
}

uint64_t to_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const uint64_t r = std::stoull(v, &pos);
    require(pos == v.size(), Status::Format, "");
    return r;
  } catch (...) {
    fail(Status::Format, "config: bad unsigned integer for " + key + ": " + v);
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double r = std::stod(v, &pos);
    require(pos == v.size(), Status::Format, "");
    return r;
  } catch (...) {
    fail(Status::Format, "config: bad number for " + key + ": " + v);
  }
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void RunConfig::validate() const {
  require(sample_rate > 0, Status::InvalidArgument, "config: sample_rate must be positive");
  require(frame_len > 0 && hop > 0 && hop <= frame_len && frame_len <= n_fft,
          Status::InvalidArgument,
          "config: need 0 < hop <= frame_len <= n_fft");
  require(n_mels > 0, Status::InvalidArgument, "config: n_mels must be positive");
  require(mel_fmin >= 0 && mel_fmin < mel_fmax && mel_fmax <= sample_rate / 2.0,
          Status::InvalidArgument,
          "config: need 0 <= mel_fmin < mel_fmax <= sample_rate/2");
  require(power > 0, Status::InvalidArgument, "config: power must be positive");
  require(gl_iters >= 1, Status::InvalidArgument, "config: gl_iters must be >= 1");
  require(f0_min > 0 && f0_min < f0_max && f0_max < sample_rate / 2.0,
          Status::InvalidArgument,
          "config: need 0 < f0_min < f0_max < sample_rate/2");
  require(latent_dim >= 1, Status::InvalidArgument, "config: latent_dim must be >= 1");
  require(flow_steps >= 0, Status::InvalidArgument, "config: flow_steps must be >= 0");
  require(beta >= 0, Status::InvalidArgument, "config: beta must be >= 0");
  require(clamp_radius >= 0, Status::InvalidArgument,
          "config: clamp_radius must be >= 0 (0 disables)");
  require(learning_rate > 0, Status::InvalidArgument,
          "config: learning_rate must be positive");
  require(classifier_hidden > 0 && synth_hidden > 0, Status::InvalidArgument,
          "config: hidden widths must be positive");
  require(classifier_epochs >= 1 && synth_epochs >= 1, Status::InvalidArgument,
          "config: epoch counts must be >= 1");
  require(early_stop_accuracy >= 0 && early_stop_accuracy <= 1,
          Status::InvalidArgument,
          "config: early_stop_accuracy must be in [0, 1]");
  require(corpus_utterances >= 1, Status::InvalidArgument,
          "config: corpus_utterances must be >= 1");
}

std::map<std::string, std::string> RunConfig::to_map() const {
  std::map<std::string, std::string> m;
  m["sample_rate"] = std::to_string(sample_rate);
  m["frame_len"] = std::to_string(frame_len);
  m["hop"] = std::to_string(hop);
  m["n_fft"] = std::to_string(n_fft);
  m["n_mels"] = std::to_string(n_mels);
  m["mel_fmin"] = fmt_double(mel_fmin);
  m["mel_fmax"] = fmt_double(mel_fmax);
  m["power"] = fmt_double(power);
  m["gl_iters"] = std::to_string(gl_iters);
  m["f0_min"] = fmt_double(f0_min);
  m["f0_max"] = fmt_double(f0_max);
  m["latent_dim"] = std::to_string(latent_dim);
  m["flow_steps"] = std::to_string(flow_steps);
  m["beta"] = fmt_double(beta);
  m["clamp_radius"] = fmt_double(clamp_radius);
  m["learning_rate"] = fmt_double(learning_rate);
  m["classifier_hidden"] = std::to_string(classifier_hidden);
  m["synth_hidden"] = std::to_string(synth_hidden);
  m["classifier_epochs"] = std::to_string(classifier_epochs);
  m["synth_epochs"] = std::to_string(synth_epochs);
  m["early_stop_accuracy"] = fmt_double(early_stop_accuracy);
  m["seed"] = std::to_string(seed);
  m["corpus_utterances"] = std::to_string(corpus_utterances);
  return m;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  for (const auto& [k, v] : to_map()) os << k << " = " << v << "\n";
  return os.str();
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key.rfind("run.", 0) == 0 || key.rfind("artifact.", 0) == 0) return;
  if (key == "sample_rate") sample_rate = to_int(key, value);
  else if (key == "frame_len") frame_len = to_int(key, value);
  else if (key == "hop") hop = to_int(key, value);
  else if (key == "n_fft") n_fft = to_int(key, value);
  else if (key == "n_mels") n_mels = to_int(key, value);
  else if (key == "mel_fmin") mel_fmin = to_double(key, value);
  else if (key == "mel_fmax") mel_fmax = to_double(key, value);
  else if (key == "power") power = to_double(key, value);
  else if (key == "gl_iters") gl_iters = to_int(key, value);
  else if (key == "f0_min") f0_min = to_double(key, value);
  else if (key == "f0_max") f0_max = to_double(key, value);
  else if (key == "latent_dim") latent_dim = to_int(key, value);
  else if (key == "flow_steps") flow_steps = to_int(key, value);
  else if (key == "beta") beta = to_double(key, value);
  else if (key == "clamp_radius") clamp_radius = to_double(key, value);
  else if (key == "learning_rate") learning_rate = to_double(key, value);
  else if (key == "classifier_hidden") classifier_hidden = to_int(key, value);
  else if (key == "synth_hidden") synth_hidden = to_int(key, value);
  else if (key == "classifier_epochs") classifier_epochs = to_int(key, value);
  else if (key == "synth_epochs") synth_epochs = to_int(key, value);
  else if (key == "early_stop_accuracy") early_stop_accuracy = to_double(key, value);
  else if (key == "seed") seed = to_u64(key, value);
  else if (key == "corpus_utterances") corpus_utterances = to_int(key, value);
  else fail(Status::Format, "config: unknown key: " + key);
}

std::string RunConfig::get(const std::string& key) const {
  const auto m = to_map();
  const auto it = m.find(key);
  require(it != m.end(), Status::InvalidArgument, "config: unknown key: " + key);
  return it->second;
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    require(eq != std::string::npos, Status::Format,
            "config line " + std::to_string(line_no) + ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  cfg.validate();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Status::Io, "cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_text(ss.str());
}

}  // namespace intona
