#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/corpus.hpp"
#include "core/pipeline.hpp"
#include "oracles.hpp"

using namespace intona;

namespace {

// One trained classifier + synthesizer + baseline shared by the whole file;
// sized to train in seconds while producing usable audio.
struct Fixture {
  RunConfig cfg;
  Corpus corpus;
  ClassifierModel classifier;
  SynthModel cvae;
  SynthModel baseline;
};

const Fixture& fixture() {
  static const Fixture fx = [] {
    Fixture f;
    f.cfg.classifier_hidden = 64;
    f.cfg.classifier_epochs = 10;
    f.cfg.early_stop_accuracy = 0.95;
    f.cfg.synth_hidden = 64;
    f.cfg.latent_dim = 8;
    f.cfg.synth_epochs = 12;
    f.cfg.gl_iters = 25;
    f.corpus = generate_corpus(f.cfg, 1234, 14);
    f.classifier = train_classifier(f.corpus, f.cfg, 21).model;
    f.cvae = train_synthesizer(f.corpus, f.classifier, f.cfg, 22,
                               SynthVariant::Cvae)
                 .model;
    RunConfig base_cfg = f.cfg;
    base_cfg.synth_epochs = 4;
    f.baseline = train_synthesizer(f.corpus, f.classifier, base_cfg, 23,
                                   SynthVariant::Baseline)
                     .model;
    return f;
  }();
  return fx;
}

int latent_dim(const SynthModel& m) {
  return std::get<SynthesizerModel>(m).latent_dim;
}

}  // namespace

TEST_CASE("sample_epsilon is deterministic per seed and respects the clamp") {
  SamplerConfig cfg;
  cfg.seed = 42;
  cfg.clamp_radius = 3.0;
  auto a = sample_epsilon(cfg, 16);
  auto b = sample_epsilon(cfg, 16);
  for (int i = 0; i < 16; ++i) CHECK(a.eps[i] == b.eps[i]);
  for (uint64_t seed = 0; seed < 200; ++seed) {
    SamplerConfig c2;
    c2.seed = seed;
    c2.clamp_radius = 3.0;
    for (double v : sample_epsilon(c2, 8).eps) CHECK(std::fabs(v) <= 3.0);
  }
}

TEST_CASE("unclamped epsilon draws look standard normal") {
  std::vector<double> values;
  for (uint64_t seed = 0; seed < 2500; ++seed) {
    SamplerConfig cfg;
    cfg.seed = seed;
    cfg.clamp_radius = 0.0;
    for (double v : sample_epsilon(cfg, 4).eps) values.push_back(v);
  }
  REQUIRE(values.size() == 10000);
  const auto mv = oracle::mean_var(values);
  CHECK(std::fabs(mv.mean) < 0.05);
  CHECK(mv.var > 0.9);
  CHECK(mv.var < 1.1);
}

TEST_CASE("interpolation endpoints are exact") {
  InterpolationSpec spec;
  spec.eps1.eps = {2.0, 0.0, -1.5};
  spec.eps2.eps = {0.0, 2.0, 0.25};
  spec.alphas = {0.0, 0.5, 1.0};
  auto at1 = interpolate(spec, 1.0);
  auto at0 = interpolate(spec, 0.0);
  for (int i = 0; i < 3; ++i) {
    CHECK(at1.eps[i] == spec.eps1.eps[i]);
    CHECK(at0.eps[i] == spec.eps2.eps[i]);
  }
  auto mid = interpolate(spec, 0.5);
  CHECK(mid.eps[0] == 1.0);
  CHECK(mid.eps[1] == 1.0);
  CHECK_THROWS_AS(interpolate(spec, 1.5), Error);
}

TEST_CASE("interpolants stay inside the coordinate-wise envelope") {
  Rng rng(5, RngPurpose::Eps);
  InterpolationSpec spec;
  for (int i = 0; i < 8; ++i) {
    spec.eps1.eps.push_back(rng.normal());
    spec.eps2.eps.push_back(rng.normal());
  }
  spec.alphas = {0.0, 1.0};
  for (double alpha : {0.1, 0.37, 0.66, 0.95}) {
    auto e = interpolate(spec, alpha);
    for (int i = 0; i < 8; ++i) {
      CHECK(e.eps[i] >= std::min(spec.eps1.eps[i], spec.eps2.eps[i]) - 1e-12);
      CHECK(e.eps[i] <= std::max(spec.eps1.eps[i], spec.eps2.eps[i]) + 1e-12);
    }
  }
}

TEST_CASE("convert is deterministic and aligns frames to the source") {
  const auto& fx = fixture();
  const auto& src = fx.corpus.utterances[2];
  SamplerConfig sc;
  sc.seed = 7;
  auto eps = sample_epsilon(sc, latent_dim(fx.cvae));
  auto a = convert(src.wave, fx.classifier, fx.cvae, eps, fx.cfg);
  auto b = convert(src.wave, fx.classifier, fx.cvae, eps, fx.cfg);
  REQUIRE(a.waveform.samples.size() == b.waveform.samples.size());
  for (size_t i = 0; i < a.waveform.samples.size(); ++i)
    CHECK(a.waveform.samples[i] == b.waveform.samples[i]);
  CHECK(a.spectrogram.frames() == src.frame_labels.frames());
  CHECK(a.mel.frames() == src.frame_labels.frames());
  CHECK(!a.waveform.samples.empty());
  for (double v : a.spectrogram.mags.v) CHECK(v >= 0.0);
}

TEST_CASE("convert validates model state and eps dimension") {
  const auto& fx = fixture();
  const auto& src = fx.corpus.utterances[0];
  NoiseVector eps;
  eps.eps.assign(latent_dim(fx.cvae), 0.1);
  ClassifierModel untrained = fx.classifier;
  untrained.trained = false;
  CHECK_THROWS_AS(convert(src.wave, untrained, fx.cvae, eps, fx.cfg), Error);
  NoiseVector short_eps;
  short_eps.eps = {0.1};
  CHECK_THROWS_AS(convert(src.wave, fx.classifier, fx.cvae, short_eps, fx.cfg),
                  Error);
}

TEST_CASE("sweep endpoints equal direct conversions") {
  const auto& fx = fixture();
  const auto& src = fx.corpus.utterances[1];
  InterpolationSpec spec;
  SamplerConfig s1, s2;
  s1.seed = 11;
  s2.seed = 12;
  spec.eps1 = sample_epsilon(s1, latent_dim(fx.cvae));
  spec.eps2 = sample_epsilon(s2, latent_dim(fx.cvae));
  spec.alphas = {0.0, 0.5, 1.0};
  auto results = interpolation_sweep(src.wave, fx.classifier, fx.cvae, spec,
                                     fx.cfg);
  REQUIRE(results.size() == 3);
  auto lo = convert(src.wave, fx.classifier, fx.cvae, spec.eps2, fx.cfg);
  auto hi = convert(src.wave, fx.classifier, fx.cvae, spec.eps1, fx.cfg);
  CHECK(mel_distance(results.front().mel, lo.mel) == 0.0);
  CHECK(mel_distance(results.back().mel, hi.mel) == 0.0);
}

TEST_CASE("baseline diversity is exactly zero; the cvae's is positive") {
  const auto& fx = fixture();
  const auto& src = fx.corpus.utterances[3];
  SamplerConfig sampler;
  sampler.seed = 31;
  sampler.num_samples = 4;
  auto base = diversity_report(src.wave, fx.classifier, fx.baseline, sampler,
                               fx.cfg);
  CHECK(base.mean_pairwise_mel == 0.0);
  CHECK(base.mean_f0_std == 0.0);
  auto cvae = diversity_report(src.wave, fx.classifier, fx.cvae, sampler,
                               fx.cfg);
  CHECK(cvae.mean_pairwise_mel > 0.0);
}

TEST_CASE("mel output responds continuously to eps perturbations") {
  const auto& fx = fixture();
  const auto& src = fx.corpus.utterances[4];
  SamplerConfig sc;
  sc.seed = 41;
  auto eps = sample_epsilon(sc, latent_dim(fx.cvae));
  auto base = convert(src.wave, fx.classifier, fx.cvae, eps, fx.cfg);
  Rng dir_rng(99, RngPurpose::Eps);
  for (int dir = 0; dir < 3; ++dir) {
    std::vector<double> direction;
    double norm = 0.0;
    for (int i = 0; i < latent_dim(fx.cvae); ++i) {
      direction.push_back(dir_rng.normal());
      norm += direction.back() * direction.back();
    }
    norm = std::sqrt(norm);
    double prev = -1.0;
    for (double delta : {0.5, 0.25, 0.125, 0.0625}) {
      NoiseVector moved = eps;
      for (int i = 0; i < latent_dim(fx.cvae); ++i)
        moved.eps[i] += delta * direction[i] / norm;
      auto out = convert(src.wave, fx.classifier, fx.cvae, moved, fx.cfg);
      const double d = mel_distance(base.mel, out.mel);
      if (prev >= 0.0) CHECK(d <= prev * 1.1);  // shrinking within 10% noise
      prev = d;
    }
    CHECK(prev < mel_distance(base.mel,
                              convert(src.wave, fx.classifier, fx.cvae,
                                      [&] {
                                        NoiseVector far = eps;
                                        for (auto& v : far.eps) v += 1.0;
                                        return far;
                                      }(),
                                      fx.cfg)
                                  .mel) +
                     1e-9);
  }
}
