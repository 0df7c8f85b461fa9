#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "core/corpus.hpp"
#include "core/phoneme.hpp"
#include "core/synth.hpp"
#include "gradcheck.hpp"
#include "oracles.hpp"

using namespace intona;

namespace {

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.latent_dim = 4;
  cfg.synth_hidden = 16;
  cfg.classifier_hidden = 32;
  cfg.classifier_epochs = 6;
  cfg.synth_epochs = 4;
  cfg.flow_steps = 2;
  return cfg;
}

LinguisticFeatures uniform_conditions(int frames, int k) {
  LinguisticFeatures c;
  c.probs = Mat<double>(frames, k);
  for (auto& v : c.probs.v) v = 1.0 / k;
  return c;
}

LinSpectrogram random_spec(const RunConfig& cfg, int frames, uint64_t seed) {
  LinSpectrogram s;
  s.mags = Mat<double>(frames, cfg.n_fft / 2 + 1);
  Rng rng(seed, RngPurpose::Data);
  for (auto& v : s.mags.v) v = rng.uniform(0.0, 5.0);
  s.frame_len = cfg.frame_len;
  s.hop = cfg.hop;
  s.n_fft = cfg.n_fft;
  s.sample_rate = cfg.sample_rate;
  return s;
}

struct TrainedPair {
  ClassifierModel classifier;
  Corpus corpus;
  RunConfig cfg;
};

// A small trained classifier + corpus shared by the training smoke tests.
const TrainedPair& trained_pair() {
  static const TrainedPair pair = [] {
    TrainedPair p;
    p.cfg = tiny_cfg();
    p.cfg.early_stop_accuracy = 0.9;
    p.corpus = generate_corpus(p.cfg, 404, 12);
    p.classifier = train_classifier(p.corpus, p.cfg, 17).model;
    return p;
  }();
  return pair;
}

}  // namespace

TEST_CASE("zero-parameter encoder gives the standard posterior") {
  auto cfg = tiny_cfg();
  auto model = make_synthesizer(cfg, 8, 3, 0);
  for (auto& [name, m] : model.params) std::fill(m.v.begin(), m.v.end(), 0.0f);
  auto post = encode(model, random_spec(cfg, 6, 1), uniform_conditions(6, 8));
  for (int i = 0; i < model.latent_dim; ++i) {
    CHECK(post.mu[i] == 0.0);
    CHECK(post.sigma[i] == 1.0);
  }
}

TEST_CASE("fresh synthesizer's posterior head starts at N(0, I)") {
  auto cfg = tiny_cfg();
  auto model = make_synthesizer(cfg, 8, 3, 0);
  auto post = encode(model, random_spec(cfg, 6, 2), uniform_conditions(6, 8));
  CHECK(kl_closed_form(post) == 0.0);
}

TEST_CASE("encoder sigma is strictly positive for random parameters") {
  auto cfg = tiny_cfg();
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto model = make_synthesizer(cfg, 8, seed, 0);
    Rng rng(seed + 100, RngPurpose::Init);
    for (auto& [name, m] : model.params)
      for (auto& v : m.v) v = static_cast<float>(rng.uniform(-0.5, 0.5));
    auto post =
        encode(model, random_spec(cfg, 5, seed), uniform_conditions(5, 8));
    for (double s : post.sigma) CHECK(s > 0.0);
  }
}

TEST_CASE("encode is deterministic and validates frame counts") {
  auto cfg = tiny_cfg();
  auto model = make_synthesizer(cfg, 8, 9, 0);
  auto x = random_spec(cfg, 7, 3);
  auto c = uniform_conditions(7, 8);
  auto a = encode(model, x, c);
  auto b = encode(model, x, c);
  for (int i = 0; i < model.latent_dim; ++i) {
    CHECK(a.mu[i] == b.mu[i]);
    CHECK(a.sigma[i] == b.sigma[i]);
  }
  CHECK_THROWS_AS(encode(model, x, uniform_conditions(6, 8)), Error);
}

TEST_CASE("reparameterize arithmetic") {
  GaussianPosterior p;
  p.mu = {1.0, 2.0};
  p.sigma = {0.5, 0.5};
  CHECK(reparameterize(p, NoiseVector{{0.0, 0.0}}).z[0] == 1.0);
  CHECK(reparameterize(p, NoiseVector{{0.0, 0.0}}).z[1] == 2.0);
  auto z = reparameterize(p, NoiseVector{{2.0, -2.0}});
  CHECK(z.z[0] == 2.0);
  CHECK(z.z[1] == 1.0);
  GaussianPosterior std01;
  std01.mu = {0.0, 0.0, 0.0};
  std01.sigma = {1.0, 1.0, 1.0};
  auto e = NoiseVector{{0.3, -1.7, 0.9}};
  auto ze = reparameterize(std01, e);
  for (int i = 0; i < 3; ++i) CHECK(ze.z[i] == e.eps[i]);
  CHECK_THROWS_AS(reparameterize(p, NoiseVector{{1.0}}), Error);
}

TEST_CASE("reparameterize is affine in eps") {
  Rng rng(7, RngPurpose::Data);
  GaussianPosterior p;
  for (int i = 0; i < 6; ++i) {
    p.mu.push_back(rng.uniform(-2, 2));
    p.sigma.push_back(rng.uniform(0.1, 3.0));
  }
  NoiseVector e1, e2;
  for (int i = 0; i < 6; ++i) {
    e1.eps.push_back(rng.normal());
    e2.eps.push_back(rng.normal());
  }
  const double a = 0.3;
  NoiseVector mix;
  for (int i = 0; i < 6; ++i)
    mix.eps.push_back(a * e1.eps[i] + (1 - a) * e2.eps[i]);
  auto zm = reparameterize(p, mix);
  auto z1 = reparameterize(p, e1);
  auto z2 = reparameterize(p, e2);
  for (int i = 0; i < 6; ++i)
    CHECK(zm.z[i] ==
          doctest::Approx(a * z1.z[i] + (1 - a) * z2.z[i]).epsilon(1e-12));
}

TEST_CASE("decode emits one clamped frame per condition frame, deterministically") {
  auto cfg = tiny_cfg();
  auto model = make_synthesizer(cfg, 8, 5, 0);
  auto c = uniform_conditions(9, 8);
  LatentVector z{{0.5, -0.25, 1.0, 0.0}};
  auto a = decode(model, z, c);
  CHECK(a.frames() == 9);
  CHECK(a.bins() == cfg.n_fft / 2 + 1);
  for (double v : a.mags.v) CHECK(v >= 0.0);
  auto b = decode(model, z, c);
  for (size_t i = 0; i < a.mags.size(); ++i) CHECK(a.mags.v[i] == b.mags.v[i]);
  CHECK_THROWS_AS(decode(model, LatentVector{{1.0}}, c), Error);
}

TEST_CASE("cvae loss is zero at the global minimum") {
  auto cfg = tiny_cfg();
  auto x = random_spec(cfg, 4, 11);
  GaussianPosterior p;
  p.mu.assign(4, 0.0);
  p.sigma.assign(4, 1.0);
  auto parts = cvae_loss(x, x, p);
  CHECK(parts.total == 0.0);
  CHECK(parts.recon == 0.0);
  CHECK(parts.kl == 0.0);
}

TEST_CASE("kl arithmetic: mu 1 sigma 1 gives one half") {
  GaussianPosterior p;
  p.mu = {1.0};
  p.sigma = {1.0};
  CHECK(kl_closed_form(p) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("closed-form KL matches numerical quadrature") {
  GaussianPosterior p;
  p.mu = {0.7};
  p.sigma = {1.3};
  CHECK(std::fabs(kl_closed_form(p) -
                  oracle::kl_gauss_quadrature(0.7, 1.3)) < 1e-6);
  Rng rng(13, RngPurpose::Data);
  for (int trial = 0; trial < 10; ++trial) {
    const double mu = rng.uniform(-3, 3);
    const double sigma = rng.uniform(0.3, 3.0);
    GaussianPosterior q;
    q.mu = {mu};
    q.sigma = {sigma};
    CHECK(std::fabs(kl_closed_form(q) -
                    oracle::kl_gauss_quadrature(mu, sigma)) < 1e-6);
  }
}

TEST_CASE("KL is nonnegative with equality only at the prior") {
  Rng rng(19, RngPurpose::Data);
  for (int draw = 0; draw < 1000; ++draw) {
    GaussianPosterior p;
    for (int i = 0; i < 4; ++i) {
      p.mu.push_back(rng.uniform(-4, 4));
      p.sigma.push_back(rng.uniform(0.05, 5.0));
    }
    CHECK(kl_closed_form(p) >= 0.0);
  }
  GaussianPosterior prior;
  prior.mu.assign(4, 0.0);
  prior.sigma.assign(4, 1.0);
  CHECK(kl_closed_form(prior) == 0.0);
}

TEST_CASE("cvae loss rejects mismatched shapes") {
  auto cfg = tiny_cfg();
  auto x = random_spec(cfg, 4, 1);
  auto y = random_spec(cfg, 5, 2);
  GaussianPosterior p;
  p.mu = {0.0};
  p.sigma = {1.0};
  CHECK_THROWS_AS(cvae_loss(x, y, p), Error);
}

TEST_CASE("single-draw KL estimator agrees with the closed form in expectation") {
  GaussianPosterior p;
  Rng prng(23, RngPurpose::Data);
  for (int i = 0; i < 3; ++i) {
    p.mu.push_back(prng.uniform(-1.5, 1.5));
    p.sigma.push_back(prng.uniform(0.4, 2.0));
  }
  const double closed = kl_closed_form(p);
  Rng rng(29, RngPurpose::Eps);
  std::vector<double> draws;
  for (int d = 0; d < 10000; ++d) {
    NoiseVector eps;
    double sls = 0.0;
    double acc = 0.0;
    for (int i = 0; i < 3; ++i) {
      eps.eps.push_back(rng.normal());
      const double z = p.mu[i] + p.sigma[i] * eps.eps[i];
      acc += 0.5 * (z * z - eps.eps[i] * eps.eps[i]);
      sls += std::log(p.sigma[i]);
    }
    draws.push_back(acc - sls);
  }
  const auto mv = oracle::mean_var(draws);
  CHECK(std::fabs(mv.mean - closed) < 3.0 * mv.stderr_mean);
}

TEST_CASE("baseline is deterministic with the spec'd output shape") {
  auto cfg = tiny_cfg();
  auto model = make_baseline(cfg, 8, 31);
  model.trained = true;
  auto c = uniform_conditions(7, 8);
  auto a = baseline_synthesize(model, c);
  CHECK(a.frames() == 7);
  CHECK(a.bins() == cfg.n_fft / 2 + 1);
  for (int run = 0; run < 4; ++run) {
    auto b = baseline_synthesize(model, c);
    double dist = 0.0;
    for (size_t i = 0; i < a.mags.size(); ++i)
      dist += std::fabs(a.mags.v[i] - b.mags.v[i]);
    CHECK(dist == 0.0);
  }
}

TEST_CASE("cvae training decreases the loss and starts with zero KL") {
  const auto& tp = trained_pair();
  RunConfig cfg = tp.cfg;
  cfg.synth_epochs = 4;
  auto res = train_synthesizer(tp.corpus, tp.classifier, cfg, 5,
                               SynthVariant::Cvae);
  REQUIRE(res.metrics.size() == 4);
  CHECK(res.metrics.back().total < res.metrics.front().total);
  // The posterior head starts at zero, so the first epoch's KL stays tiny.
  CHECK(res.metrics.front().kl < 0.5);
  CHECK(std::get<SynthesizerModel>(res.model).trained);
}

TEST_CASE("flow-variant training decreases the loss") {
  const auto& tp = trained_pair();
  RunConfig cfg = tp.cfg;
  cfg.synth_epochs = 3;
  auto res = train_synthesizer(tp.corpus, tp.classifier, cfg, 6,
                               SynthVariant::CvaeFlow);
  CHECK(res.metrics.back().total < res.metrics.front().total);
  const auto& model = std::get<SynthesizerModel>(res.model);
  CHECK(model.flow_steps == cfg.flow_steps);
  CHECK(static_cast<int>(model.flow_params().size()) == cfg.flow_steps);
}

TEST_CASE("synthesizer training is bit-reproducible per seed") {
  const auto& tp = trained_pair();
  RunConfig cfg = tp.cfg;
  cfg.synth_epochs = 2;
  auto a = train_synthesizer(tp.corpus, tp.classifier, cfg, 8,
                             SynthVariant::Cvae);
  auto b = train_synthesizer(tp.corpus, tp.classifier, cfg, 8,
                             SynthVariant::Cvae);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (size_t e = 0; e < a.metrics.size(); ++e) {
    CHECK(a.metrics[e].total == b.metrics[e].total);
    CHECK(a.metrics[e].recon == b.metrics[e].recon);
  }
  const auto& ma = std::get<SynthesizerModel>(a.model);
  const auto& mb = std::get<SynthesizerModel>(b.model);
  for (const auto& [name, pa] : ma.params) {
    const auto& pb = mb.params.at(name);
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa.v[i] == pb.v[i]);
  }
}

TEST_CASE("training rejects an untrained classifier and an empty corpus") {
  const auto& tp = trained_pair();
  ClassifierModel untrained = tp.classifier;
  untrained.trained = false;
  CHECK_THROWS_AS(train_synthesizer(tp.corpus, untrained, tp.cfg, 1,
                                    SynthVariant::Cvae),
                  Error);
  Corpus empty;
  empty.inventory = tp.corpus.inventory;
  empty.frame_len = tp.cfg.frame_len;
  empty.hop = tp.cfg.hop;
  CHECK_THROWS_AS(train_synthesizer(empty, tp.classifier, tp.cfg, 1,
                                    SynthVariant::Cvae),
                  Error);
}

TEST_CASE("toy-trained baseline beats the untrained one by 10x on recon") {
  const auto& tp = trained_pair();
  RunConfig cfg = tp.cfg;
  cfg.synth_epochs = 110;
  Corpus two = tp.corpus;
  two.utterances.resize(2);
  for (auto& u : two.utterances) u.heldout = false;
  auto res =
      train_synthesizer(two, tp.classifier, cfg, 9, SynthVariant::Baseline);
  const auto& trained = std::get<BaselineModel>(res.model);
  auto fresh = make_baseline(cfg, tp.corpus.inventory.size(), 9);
  fresh.out_gain = trained.out_gain;
  fresh.trained = true;

  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  const auto& u = two.utterances[0];
  const auto spec = stft(u.wave, cfg.frame_len, cfg.hop, cfg.n_fft);
  const auto c = classify_frames(tp.classifier, to_mel(spec, fb));
  auto recon_of = [&](const BaselineModel& m) {
    const auto out = baseline_synthesize(m, c);
    double acc = 0.0;
    for (size_t i = 0; i < spec.mags.size(); ++i) {
      const double d = spec.mags.v[i] - out.mags.v[i];
      acc += d * d;
    }
    return acc / static_cast<double>(spec.mags.size());
  };
  const double after = recon_of(trained);
  const double before = recon_of(fresh);
  INFO("before ", before, " after ", after);
  CHECK(after * 10.0 <= before);
}

TEST_CASE("cvae loss gradients pass the finite-difference check") {
  // Tiny double-precision model over the same graph builders training uses.
  const int bins = 5, k = 3, dz = 2, hidden = 4, frames = 4;
  Rng init(41, RngPurpose::Init);
  ParamMap<double> params;
  for (const char* g : {"z", "r", "n"}) {
    params[std::string("enc.gru.w") + g] = xavier<double>(bins + k, hidden, init);
    params[std::string("enc.gru.u") + g] = xavier<double>(hidden, hidden, init);
    params[std::string("enc.gru.b") + g] = xavier<double>(1, hidden, init);
    params[std::string("dec.gru.w") + g] = xavier<double>(k + dz, hidden, init);
    params[std::string("dec.gru.u") + g] = xavier<double>(hidden, hidden, init);
    params[std::string("dec.gru.b") + g] = xavier<double>(1, hidden, init);
  }
  params["enc.head.w"] = xavier<double>(hidden, 2 * dz, init);
  params["enc.head.b"] = xavier<double>(1, 2 * dz, init);
  params["dec.head.w"] = xavier<double>(hidden, bins, init);
  params["dec.head.b"] = xavier<double>(1, bins, init);

  Rng drng(42, RngPurpose::Data);
  Mat<double> x(frames, bins), c(frames, k), eps(1, dz);
  for (auto& v : x.v) v = drng.uniform(0.0, 2.0);
  for (auto& v : c.v) v = drng.uniform(0.0, 1.0);
  for (auto& v : eps.v) v = drng.normal();

  SynthDims dims;
  dims.cond_width = k;
  dims.bins = bins;
  dims.latent_dim = dz;
  dims.flow_steps = 0;
  dims.in_scale = 0.5f;
  dims.out_gain = 2.0f;

  auto build = [&](Tape<double>& tp, const ParamMap<double>& p) {
    auto ids = bind_params(tp, p);
    Mat<double> xin(frames, bins + k);
    for (int f = 0; f < frames; ++f) {
      for (int b = 0; b < bins; ++b) xin.at(f, b) = x.at(f, b) * dims.in_scale;
      for (int j = 0; j < k; ++j) xin.at(f, bins + j) = c.at(f, j);
    }
    auto enc = encoder_fwd(tp, ids, dims, tp.constant(xin));
    const int eps_c = tp.constant(eps);
    const int z = tp.add(enc.mu, tp.mul(enc.sigma, eps_c));
    const int xhat = decoder_fwd(tp, ids, dims, tp.constant(c), z);
    const int recon = tp.mean(tp.square(tp.sub(xhat, tp.constant(x))));
    const int kl = kl_closed_node(tp, enc.mu, enc.logvar);
    return std::pair<int, std::map<std::string, int>>(tp.add(recon, kl), ids);
  };
  Tape<double> tp;
  auto [loss, ids] = build(tp, params);
  tp.backward(loss);
  auto res = gradcheck::compare(
      [&](const ParamMap<double>& p) {
        Tape<double> t2;
        return t2.val(build(t2, p).first).v[0];
      },
      params, collect_grads(tp, ids));
  INFO("worst ", res.worst);
  CHECK(res.max_rel < 1e-4);
}
