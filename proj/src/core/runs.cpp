#include "runs.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "checkpoint.hpp"
#include "corpus.hpp"
#include "pgm.hpp"
#include "wav.hpp"

namespace fs = std::filesystem;

namespace intona {

namespace {

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  require(!ec, Status::Io, "cannot create output directory: " + dir);
}

class Manifest {
public:
  Manifest(const RunConfig& cfg, std::string out_dir, std::string command)
      : cfg_(cfg), out_dir_(std::move(out_dir)) {
    input("command", std::move(command));
  }

  void input(const std::string& key, std::string value) {
    inputs_.emplace_back("run." + key, std::move(value));
  }

  void artifact(const std::string& rel) { result_.artifacts.push_back(rel); }

  // Also usable as a config file: run.* and artifact.* keys are ignored by
  // the config loader.
  RunResult finish() {
    std::ostringstream os;
    os << "# intona run manifest\n";
    for (const auto& [k, v] : inputs_) os << k << " = " << v << "\n";
    os << cfg_.to_text();
    for (size_t i = 0; i < result_.artifacts.size(); ++i)
      os << "artifact." << i << " = " << result_.artifacts[i] << "\n";
    const std::string path = out_dir_ + "/manifest.txt";
    std::ofstream f(path, std::ios::trunc);
    require(f.good(), Status::Io, "cannot write manifest: " + path);
    f << os.str();
    result_.artifacts.push_back("manifest.txt");
    return std::move(result_);
  }

private:
  RunConfig cfg_;
  std::string out_dir_;
  std::vector<std::pair<std::string, std::string>> inputs_;
  RunResult result_;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  require(f.good(), Status::Io, "cannot write " + path);
  f << text;
  require(f.good(), Status::Io, "short write on " + path);
}

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", alpha);
  return buf;
}

ClassifierModel load_classifier(const std::string& path) {
  auto any = load_checkpoint(path);
  require(any.kind == ModelKind::Classifier, Status::BadState,
          path + " is not a classifier checkpoint");
  return std::move(any.classifier);
}

SynthModel load_synth(const std::string& path) {
  return load_checkpoint(path).to_synth_model();
}

void emit_conversion(const ConversionResult& r, const std::string& out_dir,
                     const std::string& base, Manifest& manifest) {
  write_wav(out_dir + "/" + base + ".wav", r.waveform);
  manifest.artifact(base + ".wav");
  write_pgm(out_dir + "/" + base + "_mel.pgm", r.mel.mels);
  manifest.artifact(base + "_mel.pgm");
}

}  // namespace

NoiseVector read_eps_file(const std::string& path, int dim) {
  std::ifstream in(path);
  require(in.good(), Status::Io, "cannot open eps file: " + path);
  NoiseVector eps;
  double v;
  while (in >> v) eps.eps.push_back(v);
  require(eps.dim() == dim, Status::Format,
          path + ": expected " + std::to_string(dim) + " values, found " +
              std::to_string(eps.dim()));
  return eps;
}

void write_eps_file(const std::string& path, const NoiseVector& eps) {
  std::ostringstream os;
  char buf[64];
  for (double v : eps.eps) {
    std::snprintf(buf, sizeof buf, "%.17g\n", v);
    os << buf;
  }
  write_text(path, os.str());
}

RunResult run_gen_corpus(const RunConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "gen-corpus");
  const auto corpus = generate_corpus(cfg, cfg.seed, cfg.corpus_utterances);
  save_corpus(corpus, out_dir);
  manifest.artifact("inventory.txt");
  char name[32];
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    std::snprintf(name, sizeof name, "utt_%04zu", i);
    manifest.artifact("wav/" + std::string(name) + ".wav");
    manifest.artifact("labels/" + std::string(name) + ".txt");
    manifest.artifact("f0/" + std::string(name) + ".txt");
  }
  return manifest.finish();
}

RunResult run_train_classifier(const RunConfig& cfg,
                               const std::string& corpus_dir,
                               const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "train-classifier");
  manifest.input("corpus", corpus_dir);
  const auto corpus = load_corpus_dir(corpus_dir, cfg);
  auto trained = train_classifier(corpus, cfg, cfg.seed);
  save_checkpoint(AnyModel::of(std::move(trained.model), cfg),
                  out_dir + "/classifier.ckpt");
  manifest.artifact("classifier.ckpt");
  std::ostringstream os;
  os << "epoch,mean_loss,train_accuracy,heldout_accuracy\n";
  for (size_t e = 0; e < trained.metrics.size(); ++e) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", e,
                  trained.metrics[e].mean_loss,
                  trained.metrics[e].train_accuracy,
                  trained.metrics[e].heldout_accuracy);
    os << buf;
  }
  write_text(out_dir + "/metrics.csv", os.str());
  manifest.artifact("metrics.csv");
  return manifest.finish();
}

RunResult run_train_synth(const RunConfig& cfg, const std::string& corpus_dir,
                          const std::string& classifier_path,
                          SynthVariant variant, const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "train-synth");
  manifest.input("corpus", corpus_dir);
  manifest.input("classifier", classifier_path);
  manifest.input("variant", variant == SynthVariant::Baseline ? "baseline"
                            : variant == SynthVariant::CvaeFlow ? "flow"
                                                                : "cvae");
  const auto corpus = load_corpus_dir(corpus_dir, cfg);
  const auto classifier = load_classifier(classifier_path);
  auto trained = train_synthesizer(corpus, classifier, cfg, cfg.seed, variant);
  save_checkpoint(AnyModel::of(trained.model, cfg), out_dir + "/synth.ckpt");
  manifest.artifact("synth.ckpt");
  std::ostringstream os;
  os << "epoch,total,recon,kl\n";
  for (size_t e = 0; e < trained.metrics.size(); ++e) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f\n", e,
                  trained.metrics[e].total, trained.metrics[e].recon,
                  trained.metrics[e].kl);
    os << buf;
  }
  write_text(out_dir + "/metrics.csv", os.str());
  manifest.artifact("metrics.csv");
  return manifest.finish();
}

RunResult run_eval_classifier(const RunConfig& cfg,
                              const std::string& classifier_path,
                              const std::string& corpus_dir,
                              const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "eval-classifier");
  manifest.input("classifier", classifier_path);
  manifest.input("corpus", corpus_dir);
  const auto corpus = load_corpus_dir(corpus_dir, cfg);
  const auto classifier = load_classifier(classifier_path);
  const auto confusion = confusion_matrix(classifier, corpus, cfg,
                                          Split::Heldout);
  const double accuracy = top1_from_confusion(confusion);

  std::ostringstream os;
  os << "symbol";
  for (const auto& s : classifier.inventory.symbols) os << "," << s;
  os << "\n";
  for (int i = 0; i < confusion.rows; ++i) {
    os << classifier.inventory.symbols[i];
    for (int j = 0; j < confusion.cols; ++j) os << "," << confusion.at(i, j);
    os << "\n";
  }
  write_text(out_dir + "/confusion.csv", os.str());
  manifest.artifact("confusion.csv");
  char buf[64];
  std::snprintf(buf, sizeof buf, "heldout_top1 = %.6f\n", accuracy);
  write_text(out_dir + "/accuracy.txt", buf);
  manifest.artifact("accuracy.txt");
  return manifest.finish();
}

RunResult run_convert(const RunConfig& cfg, const std::string& wav_in,
                      const std::string& classifier_path,
                      const std::string& synth_path,
                      const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "convert");
  manifest.input("input", wav_in);
  manifest.input("classifier", classifier_path);
  manifest.input("synth", synth_path);
  const auto classifier = load_classifier(classifier_path);
  const auto synth = load_synth(synth_path);
  const auto source = read_wav(wav_in);

  SamplerConfig sampler;
  sampler.seed = cfg.seed;
  sampler.clamp_radius = cfg.clamp_radius;
  const int dim = std::holds_alternative<SynthesizerModel>(synth)
                      ? std::get<SynthesizerModel>(synth).latent_dim
                      : 1;
  const auto eps = sample_epsilon(sampler, dim);
  const auto result = convert(source, classifier, synth, eps, cfg);

  const std::string stem = stem_of(wav_in);
  emit_conversion(result, out_dir, stem + "_converted", manifest);
  write_eps_file(out_dir + "/" + stem + "_eps.txt", result.eps_used);
  manifest.artifact(stem + "_eps.txt");
  std::ostringstream f0;
  f0 << "frame,f0_hz\n";
  for (size_t i = 0; i < result.f0_contour.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.3f\n", i, result.f0_contour[i]);
    f0 << buf;
  }
  write_text(out_dir + "/" + stem + "_f0.csv", f0.str());
  manifest.artifact(stem + "_f0.csv");
  return manifest.finish();
}

RunResult run_interpolate(const RunConfig& cfg, const std::string& wav_in,
                          const std::string& classifier_path,
                          const std::string& synth_path,
                          const std::string& eps1_path,
                          const std::string& eps2_path, int steps,
                          const std::string& out_dir) {
  cfg.validate();
  require(steps >= 2, Status::InvalidArgument,
          "interpolate: need at least two steps");
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "interpolate");
  manifest.input("input", wav_in);
  manifest.input("classifier", classifier_path);
  manifest.input("synth", synth_path);
  manifest.input("eps1", eps1_path);
  manifest.input("eps2", eps2_path);
  manifest.input("steps", std::to_string(steps));

  const auto classifier = load_classifier(classifier_path);
  const auto synth = load_synth(synth_path);
  require(std::holds_alternative<SynthesizerModel>(synth), Status::BadState,
          "interpolate: the baseline synthesizer has no latent to vary");
  const int dim = std::get<SynthesizerModel>(synth).latent_dim;
  const auto source = read_wav(wav_in);

  InterpolationSpec spec;
  spec.eps1 = read_eps_file(eps1_path, dim);
  spec.eps2 = read_eps_file(eps2_path, dim);
  for (int i = 0; i < steps; ++i)
    spec.alphas.push_back(static_cast<double>(i) / (steps - 1));
  const auto results = interpolation_sweep(source, classifier, synth, spec, cfg);

  const std::string stem = stem_of(wav_in);
  for (size_t i = 0; i < results.size(); ++i)
    emit_conversion(results[i], out_dir,
                    stem + "_a" + alpha_tag(spec.alphas[i]), manifest);
  std::ostringstream csv;
  csv << "alpha,mel_l2\n";
  for (size_t i = 1; i < results.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f,%.6f\n", spec.alphas[i],
                  mel_distance(results[i - 1].mel, results[i].mel));
    csv << buf;
  }
  write_text(out_dir + "/" + stem + "_interp.csv", csv.str());
  manifest.artifact(stem + "_interp.csv");
  return manifest.finish();
}

RunResult run_diversity(const RunConfig& cfg, const std::string& wav_in,
                        const std::string& classifier_path,
                        const std::string& synth_path, int samples,
                        const std::string& out_dir,
                        DiversitySummary* summary) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "diversity");
  manifest.input("input", wav_in);
  manifest.input("classifier", classifier_path);
  manifest.input("synth", synth_path);
  manifest.input("samples", std::to_string(samples));

  const auto classifier = load_classifier(classifier_path);
  const auto synth = load_synth(synth_path);
  const auto source = read_wav(wav_in);

  SamplerConfig sampler;
  sampler.seed = cfg.seed;
  sampler.clamp_radius = cfg.clamp_radius;
  sampler.num_samples = samples;
  const auto report = diversity_report(source, classifier, synth, sampler, cfg);

  const std::string stem = stem_of(wav_in);
  for (size_t s = 0; s < report.samples.size(); ++s)
    emit_conversion(report.samples[s], out_dir,
                    stem + "_s" + std::to_string(s), manifest);
  std::ostringstream csv;
  csv << "metric,value\n";
  char buf[96];
  std::snprintf(buf, sizeof buf, "mean_pairwise_mel,%.9f\n",
                report.mean_pairwise_mel);
  csv << buf;
  std::snprintf(buf, sizeof buf, "mean_f0_std,%.9f\n", report.mean_f0_std);
  csv << buf;
  write_text(out_dir + "/" + stem + "_diversity.csv", csv.str());
  manifest.artifact(stem + "_diversity.csv");
  if (summary) {
    summary->mean_pairwise_mel = report.mean_pairwise_mel;
    summary->mean_f0_std = report.mean_f0_std;
  }
  return manifest.finish();
}

RunResult run_plot(const RunConfig& cfg, const std::string& wav_in,
                   const std::string& out_dir) {
  cfg.validate();
  ensure_dir(out_dir);
  Manifest manifest(cfg, out_dir, "plot");
  manifest.input("input", wav_in);
  const auto w = read_wav(wav_in);
  require(w.sample_rate == cfg.sample_rate, Status::InvalidArgument,
          wav_in + ": sample rate does not match the configuration");
  const auto spec = stft(w, cfg.frame_len, cfg.hop, cfg.n_fft);
  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  const std::string stem = stem_of(wav_in);
  write_pgm(out_dir + "/" + stem + "_lin.pgm", spec.mags);
  manifest.artifact(stem + "_lin.pgm");
  write_pgm(out_dir + "/" + stem + "_mel.pgm", to_mel(spec, fb).mels);
  manifest.artifact(stem + "_mel.pgm");
  return manifest.finish();
}

}  // namespace intona
