#pragma once

#include <variant>
#include <vector>

#include "config.hpp"
#include "flow.hpp"
#include "latent.hpp"
#include "net.hpp"
#include "phoneme.hpp"
#include "signal.hpp"

namespace intona {

struct Corpus;

// CVAE speech synthesizer. The encoder reads per-frame concat(x_t, c_t) and
// emits one utterance-level posterior; the decoder broadcasts the latent
// onto every condition frame and emits magnitude frames.
struct SynthesizerModel {
  int cond_width = 0;
  int bins = 0;
  int latent_dim = 0;
  int hidden = 0;
  int flow_steps = 0;
  // Fixed input/output scaling set from training statistics.
  float in_scale = 1.0f;
  float out_gain = 1.0f;
  // Analysis framing the model was trained against.
  int frame_len = 0, hop = 0, n_fft = 0, sample_rate = 0;
  ParamMap<float> params;
  bool trained = false;

  std::vector<FlowStepParams> flow_params() const;
};

struct BaselineModel {
  int cond_width = 0;
  int bins = 0;
  StackSpec stack;  // two cbhg-lite blocks and a dense head
  float out_gain = 1.0f;
  int frame_len = 0, hop = 0, n_fft = 0, sample_rate = 0;
  ParamMap<float> params;
  bool trained = false;
};

using SynthModel = std::variant<SynthesizerModel, BaselineModel>;

// flow_steps = 0 builds the plain CVAE. The posterior head starts at zero
// so the initial posterior is exactly N(0, I); flow steps start as the
// identity transform.
SynthesizerModel make_synthesizer(const RunConfig& cfg, int cond_width,
                                  uint64_t seed, int flow_steps);
BaselineModel make_baseline(const RunConfig& cfg, int cond_width,
                            uint64_t seed);

GaussianPosterior encode(const SynthesizerModel& model,
                         const LinSpectrogram& x,
                         const LinguisticFeatures& c);

// z = mu + sigma * eps, elementwise.
LatentVector reparameterize(const GaussianPosterior& post,
                            const NoiseVector& eps);

// One magnitude frame per condition frame; raw decoder output is clamped
// at zero before any vocoding.
LinSpectrogram decode(const SynthesizerModel& model, const LatentVector& z,
                      const LinguisticFeatures& c);

struct CvaeLossParts {
  double total = 0.0;
  double recon = 0.0;  // element mean of (x - x_hat)^2
  double kl = 0.0;     // sum_d 0.5 (mu^2 + sigma^2 - 2 log sigma - 1)
};

double kl_closed_form(const GaussianPosterior& post);
CvaeLossParts cvae_loss(const LinSpectrogram& x, const LinSpectrogram& x_hat,
                        const GaussianPosterior& post, double beta = 1.0);

LinSpectrogram baseline_synthesize(const BaselineModel& model,
                                   const LinguisticFeatures& c);

enum class SynthVariant { Cvae, CvaeFlow, Baseline };

struct SynthEpochMetrics {
  double total = 0.0;
  double recon = 0.0;
  double kl = 0.0;
};

struct TrainSynthResult {
  SynthModel model;
  std::vector<SynthEpochMetrics> metrics;
};

// Stage two of training: conditions come from the frozen classifier, a
// fresh eps is drawn per utterance per epoch, and the CVAE loss (or its
// flow form) is minimized per utterance. Deterministic given the seed.
TrainSynthResult train_synthesizer(const Corpus& corpus,
                                   const ClassifierModel& classifier,
                                   const RunConfig& cfg, uint64_t seed,
                                   SynthVariant variant);

// --- shared graph builders (training and inference use the same graphs) ----

struct SynthDims {
  int cond_width = 0, bins = 0, latent_dim = 0, flow_steps = 0;
  float in_scale = 1.0f, out_gain = 1.0f;
};

template <typename T>
struct EncoderNodes {
  int mu = -1, logvar = -1, sigma = -1, sum_log_sigma = -1;
};

template <typename T>
EncoderNodes<T> encoder_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
                            const SynthDims& dims, int xin /* T x (bins+K) */) {
  const auto enc = gru_fwd(tp, ids, "enc.gru", xin);
  const int head = dense_fwd(tp, ids, "enc.head", enc.final_, Act::None);
  EncoderNodes<T> out;
  out.mu = tp.slice_cols(head, 0, dims.latent_dim);
  out.logvar = tp.slice_cols(head, dims.latent_dim, 2 * dims.latent_dim);
  out.sigma = tp.exp_(tp.scale(out.logvar, T(0.5)));
  out.sum_log_sigma = tp.scale(tp.sum(out.logvar), T(0.5));
  return out;
}

template <typename T>
struct FlowNodes {
  int z = -1;
  int sum_log_sigma = -1;  // chain total including the encoder part
};

template <typename T>
FlowNodes<T> flow_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
                      const SynthDims& dims, int z0, int enc_sum_log_sigma) {
  FlowNodes<T> out;
  out.z = z0;
  out.sum_log_sigma = enc_sum_log_sigma;
  for (int t = 0; t < dims.flow_steps; ++t) {
    const std::string name = "flow.t" + std::to_string(t);
    const auto mask =
        autoregressive_mask(flow_order(t, dims.latent_dim)).template cast<T>();
    const int mask_id = tp.constant(mask);
    const int m = tp.add_bias(
        tp.matmul(out.z, tp.mul(ids.at(name + ".wm"), mask_id)),
        ids.at(name + ".bm"));
    const int s = tp.clamp_(
        tp.add_bias(tp.matmul(out.z, tp.mul(ids.at(name + ".ws"), mask_id)),
                    ids.at(name + ".bs")),
        T(-kFlowLogScaleLimit), T(kFlowLogScaleLimit));
    out.z = tp.add(m, tp.mul(tp.exp_(s), out.z));
    out.sum_log_sigma = tp.add(out.sum_log_sigma, tp.sum(s));
  }
  return out;
}

template <typename T>
int decoder_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
                const SynthDims& dims, int cond /* T x K */, int z /* 1 x Dz */) {
  const int frames = tp.val(cond).rows;
  const int din = tp.concat_cols(cond, tp.repeat_rows(z, frames));
  const auto dec = gru_fwd(tp, ids, "dec.gru", din);
  const int head = dense_fwd(tp, ids, "dec.head", dec.seq, Act::None);
  return tp.scale(head, T(dims.out_gain));
}

// KL of Eq. 6 from mu / logvar nodes:
// 0.5 * sum(mu^2 + exp(logvar) - logvar - 1).
template <typename T>
int kl_closed_node(Tape<T>& tp, int mu, int logvar) {
  const int d = tp.val(mu).cols;
  Mat<T> ones_m(1, d);
  std::fill(ones_m.v.begin(), ones_m.v.end(), T(1));
  const int ones = tp.constant(ones_m);
  const int body = tp.sub(
      tp.sub(tp.add(tp.square(mu), tp.exp_(logvar)), logvar), ones);
  return tp.scale(tp.sum(body), T(0.5));
}

}  // namespace intona
