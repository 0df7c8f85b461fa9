#include "pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "rng.hpp"

namespace intona {

void InterpolationSpec::validate() const {
  require(eps1.dim() == eps2.dim(), Status::ShapeMismatch,
          "interpolation endpoints have different dimensions");
  require(alphas.size() >= 2, Status::InvalidArgument,
          "interpolation needs at least two alphas");
  double prev = -1.0;
  for (double a : alphas) {
    require(a >= 0.0 && a <= 1.0, Status::InvalidArgument,
            "interpolation alpha outside [0, 1]");
    require(a >= prev, Status::InvalidArgument,
            "interpolation alphas must be sorted");
    prev = a;
  }
}

NoiseVector sample_epsilon(const SamplerConfig& cfg, int dim) {
  require(dim >= 1, Status::InvalidArgument,
          "sample_epsilon: dimension must be positive");
  Rng rng(cfg.seed, RngPurpose::Eps);
  NoiseVector eps;
  eps.eps.resize(dim);
  for (int i = 0; i < dim; ++i) {
    double v = rng.normal();
    if (cfg.clamp_radius > 0.0)
      v = std::clamp(v, -cfg.clamp_radius, cfg.clamp_radius);
    eps.eps[i] = v;
  }
  return eps;
}

NoiseVector interpolate(const InterpolationSpec& spec, double alpha) {
  require(spec.eps1.dim() == spec.eps2.dim(), Status::ShapeMismatch,
          "interpolate: endpoint dimensions differ");
  require(alpha >= 0.0 && alpha <= 1.0, Status::InvalidArgument,
          "interpolate: alpha outside [0, 1]");
  NoiseVector out;
  out.eps.resize(spec.eps1.dim());
  for (int i = 0; i < spec.eps1.dim(); ++i)
    out.eps[i] = alpha * spec.eps1.eps[i] + (1.0 - alpha) * spec.eps2.eps[i];
  return out;
}

ConversionResult convert(const Waveform& source,
                         const ClassifierModel& classifier,
                         const SynthModel& synth, const NoiseVector& eps,
                         const RunConfig& cfg) {
  cfg.validate();
  require(classifier.trained, Status::BadState,
          "convert: the classifier is not trained");

  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  require(source.sample_rate == cfg.sample_rate, Status::InvalidArgument,
          "convert: source sample rate does not match the configuration");
  const auto source_spec = stft(source, cfg.frame_len, cfg.hop, cfg.n_fft);
  const auto cond = classify_frames(classifier, to_mel(source_spec, fb));

  LinSpectrogram decoded;
  if (std::holds_alternative<SynthesizerModel>(synth)) {
    const auto& model = std::get<SynthesizerModel>(synth);
    require(model.trained, Status::BadState,
            "convert: the synthesizer is not trained");
    require(eps.dim() == model.latent_dim, Status::ShapeMismatch,
            "convert: eps dimension " + std::to_string(eps.dim()) +
                " does not match latent dimension " +
                std::to_string(model.latent_dim));
    LatentVector z;
    if (model.flow_steps > 0) {
      GaussianPosterior prior;
      prior.mu.assign(model.latent_dim, 0.0);
      prior.sigma.assign(model.latent_dim, 1.0);
      z = iaf_chain(prior, eps, model.flow_params()).z_final();
    } else {
      z.z = eps.eps;
    }
    decoded = decode(model, z, cond);
  } else {
    const auto& model = std::get<BaselineModel>(synth);
    require(model.trained, Status::BadState,
            "convert: the baseline synthesizer is not trained");
    decoded = baseline_synthesize(model, cond);
  }

  ConversionResult result;
  result.spectrogram = power_emphasis(decoded, cfg.power);
  result.mel = to_mel(result.spectrogram, fb);
  result.waveform = griffin_lim(result.spectrogram, cfg.gl_iters, cfg.seed);
  result.eps_used = eps;
  result.f0_contour = estimate_f0(result.waveform, cfg.frame_len, cfg.hop,
                                  cfg.f0_min, cfg.f0_max);
  return result;
}

double mel_distance(const MelSpectrogram& a, const MelSpectrogram& b) {
  require(a.mels.same_shape(b.mels), Status::ShapeMismatch,
          "mel_distance: shapes differ");
  double acc = 0.0;
  for (size_t i = 0; i < a.mels.size(); ++i) {
    const double d = a.mels.v[i] - b.mels.v[i];
    acc += d * d;
  }
  return std::sqrt(acc);
}

std::vector<ConversionResult> interpolation_sweep(
    const Waveform& source, const ClassifierModel& classifier,
    const SynthModel& synth, const InterpolationSpec& spec,
    const RunConfig& cfg) {
  spec.validate();
  std::vector<ConversionResult> results;
  results.reserve(spec.alphas.size());
  for (double alpha : spec.alphas)
    results.push_back(
        convert(source, classifier, synth, interpolate(spec, alpha), cfg));
  return results;
}

DiversityReport diversity_report(const Waveform& source,
                                 const ClassifierModel& classifier,
                                 const SynthModel& synth,
                                 const SamplerConfig& sampler,
                                 const RunConfig& cfg) {
  require(sampler.num_samples >= 2, Status::InvalidArgument,
          "diversity_report: need at least two samples");
  const bool baseline = std::holds_alternative<BaselineModel>(synth);
  const int dim = baseline ? 1 : std::get<SynthesizerModel>(synth).latent_dim;

  DiversityReport report;
  for (int s = 0; s < sampler.num_samples; ++s) {
    SamplerConfig draw = sampler;
    draw.seed = Rng(sampler.seed, RngPurpose::Eps).fork(s).next_u64();
    const NoiseVector eps =
        baseline ? NoiseVector{{0.0}} : sample_epsilon(draw, dim);
    report.samples.push_back(convert(source, classifier, synth, eps, cfg));
  }

  int pairs = 0;
  for (size_t i = 0; i < report.samples.size(); ++i)
    for (size_t j = i + 1; j < report.samples.size(); ++j) {
      report.mean_pairwise_mel +=
          mel_distance(report.samples[i].mel, report.samples[j].mel);
      ++pairs;
    }
  if (pairs > 0) report.mean_pairwise_mel /= pairs;

  // Cross-sample per-frame f0 spread over frames voiced in >= 2 samples.
  size_t frames = 0;
  for (const auto& r : report.samples)
    frames = std::max(frames, r.f0_contour.size());
  double std_sum = 0.0;
  int counted = 0;
  for (size_t f = 0; f < frames; ++f) {
    std::vector<double> voiced;
    for (const auto& r : report.samples)
      if (f < r.f0_contour.size() && r.f0_contour[f] > 0.0)
        voiced.push_back(r.f0_contour[f]);
    if (voiced.size() < 2) continue;
    const auto [lo, hi] = std::minmax_element(voiced.begin(), voiced.end());
    if (*lo == *hi) {
      // Identical values have exactly zero spread; the summation formula
      // would otherwise leak rounding noise.
      ++counted;
      continue;
    }
    double mean = 0.0;
    for (double v : voiced) mean += v;
    mean /= static_cast<double>(voiced.size());
    double var = 0.0;
    for (double v : voiced) var += (v - mean) * (v - mean);
    var /= static_cast<double>(voiced.size() - 1);
    std_sum += std::sqrt(var);
    ++counted;
  }
  report.mean_f0_std = counted > 0 ? std_sum / counted : 0.0;
  return report;
}

}  // namespace intona
