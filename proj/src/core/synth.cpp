#include "synth.hpp"

#include <algorithm>
#include <cmath>

#include "corpus.hpp"

namespace intona {

namespace {

void init_gru_params(ParamMap<float>& p, const std::string& name, int in,
                     int hidden, Rng& rng) {
  for (const char* g : {"z", "r", "n"}) {
    p[name + ".w" + g] = xavier<float>(in, hidden, rng);
    p[name + ".u" + g] = xavier<float>(hidden, hidden, rng);
    p[name + ".b" + g] = Mat<float>(1, hidden);
  }
}

SynthDims dims_of(const SynthesizerModel& m) {
  SynthDims d;
  d.cond_width = m.cond_width;
  d.bins = m.bins;
  d.latent_dim = m.latent_dim;
  d.flow_steps = m.flow_steps;
  d.in_scale = m.in_scale;
  d.out_gain = m.out_gain;
  return d;
}

Mat<float> encoder_input(const SynthesizerModel& model,
                         const LinSpectrogram& x,
                         const LinguisticFeatures& c) {
  require(x.frames() == c.frames(), Status::ShapeMismatch,
          "encode: spectrogram has " + std::to_string(x.frames()) +
              " frames but conditions have " + std::to_string(c.frames()));
  require(x.bins() == model.bins, Status::ShapeMismatch,
          "encode: spectrogram bins do not match the model");
  require(c.k() == model.cond_width, Status::ShapeMismatch,
          "encode: condition width does not match the model");
  Mat<float> xin(x.frames(), model.bins + model.cond_width);
  for (int f = 0; f < x.frames(); ++f) {
    for (int b = 0; b < model.bins; ++b)
      xin.at(f, b) = static_cast<float>(x.mags.at(f, b)) * model.in_scale;
    for (int k = 0; k < model.cond_width; ++k)
      xin.at(f, model.bins + k) = static_cast<float>(c.probs.at(f, k));
  }
  return xin;
}

Mat<float> cond_input(int cond_width, const LinguisticFeatures& c) {
  require(c.k() == cond_width, Status::ShapeMismatch,
          "condition width " + std::to_string(c.k()) +
              " does not match the model's " + std::to_string(cond_width));
  return c.probs.cast<float>();
}

}  // namespace

SynthesizerModel make_synthesizer(const RunConfig& cfg, int cond_width,
                                  uint64_t seed, int flow_steps) {
  cfg.validate();
  require(cond_width >= 1 && flow_steps >= 0, Status::InvalidArgument,
          "make_synthesizer: bad widths");
  SynthesizerModel m;
  m.cond_width = cond_width;
  m.bins = cfg.n_fft / 2 + 1;
  m.latent_dim = cfg.latent_dim;
  m.hidden = cfg.synth_hidden;
  m.flow_steps = flow_steps;
  m.frame_len = cfg.frame_len;
  m.hop = cfg.hop;
  m.n_fft = cfg.n_fft;
  m.sample_rate = cfg.sample_rate;
  Rng rng(seed, RngPurpose::Init);
  init_gru_params(m.params, "enc.gru", m.bins + cond_width, m.hidden, rng);
  // Zero posterior head: the initial posterior is exactly N(0, I).
  m.params["enc.head.w"] = Mat<float>(m.hidden, 2 * m.latent_dim);
  m.params["enc.head.b"] = Mat<float>(1, 2 * m.latent_dim);
  init_gru_params(m.params, "dec.gru", cond_width + m.latent_dim, m.hidden,
                  rng);
  m.params["dec.head.w"] = xavier<float>(m.hidden, m.bins, rng);
  m.params["dec.head.b"] = Mat<float>(1, m.bins);
  // Zero flow nets: every step starts as the identity transform.
  for (int t = 0; t < flow_steps; ++t) {
    const std::string name = "flow.t" + std::to_string(t);
    m.params[name + ".wm"] = Mat<float>(m.latent_dim, m.latent_dim);
    m.params[name + ".ws"] = Mat<float>(m.latent_dim, m.latent_dim);
    m.params[name + ".bm"] = Mat<float>(1, m.latent_dim);
    m.params[name + ".bs"] = Mat<float>(1, m.latent_dim);
  }
  return m;
}

BaselineModel make_baseline(const RunConfig& cfg, int cond_width,
                            uint64_t seed) {
  cfg.validate();
  BaselineModel m;
  m.cond_width = cond_width;
  m.bins = cfg.n_fft / 2 + 1;
  m.frame_len = cfg.frame_len;
  m.hop = cfg.hop;
  m.n_fft = cfg.n_fft;
  m.sample_rate = cfg.sample_rate;
  m.stack = StackSpec::parse(
      "in:" + std::to_string(cond_width) +
      "|cbhg:4:32:128:2:64|cbhg:4:32:128:2:64|dense:" + std::to_string(m.bins) +
      ":none");
  Rng rng(seed, RngPurpose::Init);
  init_stack_params(m.stack, "base.", rng, m.params);
  return m;
}

std::vector<FlowStepParams> SynthesizerModel::flow_params() const {
  std::vector<FlowStepParams> steps;
  for (int t = 0; t < flow_steps; ++t) {
    const std::string name = "flow.t" + std::to_string(t);
    FlowStepParams p;
    p.wm = params.at(name + ".wm").cast<double>();
    p.ws = params.at(name + ".ws").cast<double>();
    p.bm = params.at(name + ".bm").cast<double>();
    p.bs = params.at(name + ".bs").cast<double>();
    p.order = flow_order(t, latent_dim);
    steps.push_back(std::move(p));
  }
  return steps;
}

GaussianPosterior encode(const SynthesizerModel& model,
                         const LinSpectrogram& x,
                         const LinguisticFeatures& c) {
  Tape<float> tp;
  auto ids = bind_params(tp, model.params);
  const int xin = tp.constant(encoder_input(model, x, c));
  const auto enc = encoder_fwd(tp, ids, dims_of(model), xin);
  GaussianPosterior post;
  for (int i = 0; i < model.latent_dim; ++i) {
    post.mu.push_back(tp.val(enc.mu).v[i]);
    post.sigma.push_back(tp.val(enc.sigma).v[i]);
  }
  post.validate();
  return post;
}

LatentVector reparameterize(const GaussianPosterior& post,
                            const NoiseVector& eps) {
  post.validate();
  require(post.dim() == eps.dim(), Status::ShapeMismatch,
          "reparameterize: eps dimension " + std::to_string(eps.dim()) +
              " does not match posterior dimension " +
              std::to_string(post.dim()));
  LatentVector z;
  z.z.resize(post.dim());
  for (int i = 0; i < post.dim(); ++i)
    z.z[i] = post.mu[i] + post.sigma[i] * eps.eps[i];
  return z;
}

LinSpectrogram decode(const SynthesizerModel& model, const LatentVector& z,
                      const LinguisticFeatures& c) {
  require(z.dim() == model.latent_dim, Status::ShapeMismatch,
          "decode: latent dimension " + std::to_string(z.dim()) +
              " does not match the model's " +
              std::to_string(model.latent_dim));
  Tape<float> tp;
  auto ids = bind_params(tp, model.params);
  const int cond = tp.constant(cond_input(model.cond_width, c));
  Mat<float> zrow(1, model.latent_dim);
  for (int i = 0; i < model.latent_dim; ++i)
    zrow.v[i] = static_cast<float>(z.z[i]);
  const int xhat = decoder_fwd(tp, ids, dims_of(model), cond,
                               tp.constant(zrow));
  LinSpectrogram out;
  out.mags = Mat<double>(c.frames(), model.bins);
  for (size_t i = 0; i < out.mags.size(); ++i)
    out.mags.v[i] = std::max(0.0, static_cast<double>(tp.val(xhat).v[i]));
  out.frame_len = model.frame_len;
  out.hop = model.hop;
  out.n_fft = model.n_fft;
  out.sample_rate = model.sample_rate;
  return out;
}

double kl_closed_form(const GaussianPosterior& post) {
  post.validate();
  double kl = 0.0;
  for (int i = 0; i < post.dim(); ++i) {
    const double mu = post.mu[i];
    const double s = post.sigma[i];
    kl += 0.5 * (mu * mu + s * s - 2.0 * std::log(s) - 1.0);
  }
  return kl;
}

CvaeLossParts cvae_loss(const LinSpectrogram& x, const LinSpectrogram& x_hat,
                        const GaussianPosterior& post, double beta) {
  require(x.mags.same_shape(x_hat.mags), Status::ShapeMismatch,
          "cvae_loss: spectrogram shapes differ");
  CvaeLossParts parts;
  for (size_t i = 0; i < x.mags.size(); ++i) {
    const double d = x.mags.v[i] - x_hat.mags.v[i];
    parts.recon += d * d;
  }
  parts.recon /= static_cast<double>(x.mags.size());
  parts.kl = kl_closed_form(post);
  parts.total = parts.recon + beta * parts.kl;
  return parts;
}

LinSpectrogram baseline_synthesize(const BaselineModel& model,
                                   const LinguisticFeatures& c) {
  const auto out =
      stack_forward(model.params, model.stack, "base.",
                    cond_input(model.cond_width, c));
  LinSpectrogram s;
  s.mags = Mat<double>(c.frames(), model.bins);
  for (size_t i = 0; i < s.mags.size(); ++i)
    s.mags.v[i] = std::max(
        0.0, static_cast<double>(out.output.v[i]) * model.out_gain);
  s.frame_len = model.frame_len;
  s.hop = model.hop;
  s.n_fft = model.n_fft;
  s.sample_rate = model.sample_rate;
  return s;
}

TrainSynthResult train_synthesizer(const Corpus& corpus,
                                   const ClassifierModel& classifier,
                                   const RunConfig& cfg, uint64_t seed,
                                   SynthVariant variant) {
  require(classifier.trained, Status::BadState,
          "train_synthesizer: the phoneme classifier must be trained and "
          "frozen first");
  require(!corpus.utterances.empty(), Status::InvalidArgument,
          "train_synthesizer: corpus is empty");
  cfg.validate();

  // Frozen-classifier conditions and analysis spectra are constant across
  // epochs; compute them once.
  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  struct Item {
    Mat<float> x;     // T x bins
    Mat<float> cond;  // T x K
  };
  std::vector<Item> items;
  double sum_sq = 0.0;
  size_t count = 0;
  for (const auto& u : corpus.utterances) {
    if (u.heldout) continue;
    const auto spec = stft(u.wave, cfg.frame_len, cfg.hop, cfg.n_fft);
    const auto c = classify_frames(classifier, to_mel(spec, fb));
    Item item;
    item.x = spec.mags.cast<float>();
    item.cond = c.probs.cast<float>();
    for (double v : spec.mags.v) sum_sq += v * v;
    count += spec.mags.size();
    items.push_back(std::move(item));
  }
  require(!items.empty(), Status::InvalidArgument,
          "train_synthesizer: no training utterances");
  const double rms = std::sqrt(std::max(sum_sq / count, 1e-12));
  const int k = classifier.inventory.size();

  TrainSynthResult result;
  const bool baseline = variant == SynthVariant::Baseline;
  const int flow_steps = variant == SynthVariant::CvaeFlow ? cfg.flow_steps : 0;
  SynthesizerModel synth;
  BaselineModel base;
  ParamMap<float>* params = nullptr;
  if (baseline) {
    base = make_baseline(cfg, k, seed);
    base.out_gain = static_cast<float>(4.0 * rms);
    params = &base.params;
  } else {
    synth = make_synthesizer(cfg, k, seed, flow_steps);
    synth.in_scale = static_cast<float>(1.0 / (8.0 * rms));
    synth.out_gain = static_cast<float>(4.0 * rms);
    params = &synth.params;
  }

  AdamState<float> opt;
  const float lr = static_cast<float>(cfg.learning_rate);
  const float beta = static_cast<float>(cfg.beta);
  Rng order_rng(seed, RngPurpose::Data);
  Rng eps_root(seed, RngPurpose::Eps);
  for (int epoch = 0; epoch < cfg.synth_epochs; ++epoch) {
    Rng erng = order_rng.fork(epoch);
    std::vector<size_t> order(items.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[erng.below(i)]);
    Rng epoch_eps = eps_root.fork(epoch);

    SynthEpochMetrics metrics;
    for (size_t ix : order) {
      const Item& item = items[ix];
      Tape<float> tp;
      auto ids = bind_params(tp, *params);
      const int x_const = tp.constant(item.x);
      const int cond = tp.constant(item.cond);
      int loss = -1, recon = -1, kl = -1;
      if (baseline) {
        auto out = stack_fwd(tp, base.stack, ids, "base.", cond);
        const int xhat = tp.scale(out.out, base.out_gain);
        recon = tp.mean(tp.square(tp.sub(xhat, x_const)));
        loss = recon;
      } else {
        Mat<float> xin = item.x;
        for (auto& v : xin.v) v *= synth.in_scale;
        const int enc_in = tp.constant([&] {
          Mat<float> m(item.x.rows, synth.bins + k);
          for (int f = 0; f < item.x.rows; ++f) {
            std::copy(xin.row_ptr(f), xin.row_ptr(f) + synth.bins,
                      m.row_ptr(f));
            std::copy(item.cond.row_ptr(f), item.cond.row_ptr(f) + k,
                      m.row_ptr(f) + synth.bins);
          }
          return m;
        }());
        const auto enc = encoder_fwd(tp, ids, dims_of(synth), enc_in);
        Mat<float> eps(1, synth.latent_dim);
        Rng utt_eps = epoch_eps.fork(ix);
        for (auto& v : eps.v) v = static_cast<float>(utt_eps.normal());
        const int eps_const = tp.constant(eps);
        const int z0 = tp.add(enc.mu, tp.mul(enc.sigma, eps_const));
        int z = z0;
        if (flow_steps > 0) {
          const auto fo =
              flow_fwd(tp, ids, dims_of(synth), z0, enc.sum_log_sigma);
          z = fo.z;
          // Eq. 7 estimate: 0.5 (z^2 - eps^2) - sum log sigma.
          const int half_sq = tp.scale(
              tp.sub(tp.sum(tp.square(z)), tp.sum(tp.square(eps_const))),
              0.5f);
          kl = tp.sub(half_sq, fo.sum_log_sigma);
        } else {
          kl = kl_closed_node(tp, enc.mu, enc.logvar);
        }
        const int xhat = decoder_fwd(tp, ids, dims_of(synth), cond, z);
        recon = tp.mean(tp.square(tp.sub(xhat, x_const)));
        loss = tp.add(recon, tp.scale(kl, beta));
      }
      metrics.total += tp.val(loss).v[0];
      metrics.recon += tp.val(recon).v[0];
      if (kl >= 0) metrics.kl += tp.val(kl).v[0];
      tp.backward(loss);
      adam_step(*params, collect_grads(tp, ids), opt, lr);
    }
    metrics.total /= static_cast<double>(items.size());
    metrics.recon /= static_cast<double>(items.size());
    metrics.kl /= static_cast<double>(items.size());
    result.metrics.push_back(metrics);
  }

  if (baseline) {
    base.trained = true;
    result.model = std::move(base);
  } else {
    synth.trained = true;
    result.model = std::move(synth);
  }
  return result;
}

}  // namespace intona
