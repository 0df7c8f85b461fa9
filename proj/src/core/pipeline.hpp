#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "phoneme.hpp"
#include "signal.hpp"
#include "synth.hpp"

namespace intona {

struct SamplerConfig {
  uint64_t seed = 0;
  double clamp_radius = 3.0;  // <= 0 disables clamping
  int num_samples = 10;
};

struct InterpolationSpec {
  NoiseVector eps1, eps2;
  std::vector<double> alphas;  // sorted, each within [0, 1]

  void validate() const;
};

struct ConversionResult {
  Waveform waveform;
  LinSpectrogram spectrogram;  // decoded, clamped, power-emphasized
  MelSpectrogram mel;          // log-mel of that spectrogram
  NoiseVector eps_used;
  std::vector<double> f0_contour;  // of the rendered waveform, 0 = unvoiced
};

// Seeded standard-normal draw, each coordinate clamped into
// [-clamp_radius, clamp_radius] when a radius is configured.
NoiseVector sample_epsilon(const SamplerConfig& cfg, int dim);

// eps = alpha * eps1 + (1 - alpha) * eps2, exactly as written.
NoiseVector interpolate(const InterpolationSpec& spec, double alpha);

// Full conversion: analyze the source, extract linguistic features with the
// frozen classifier, drive the decoder straight from the prior draw (through
// the flow chain when the model has one), then power-emphasize and rebuild
// phase. Deterministic in (source, eps, models, cfg.seed).
ConversionResult convert(const Waveform& source,
                         const ClassifierModel& classifier,
                         const SynthModel& synth, const NoiseVector& eps,
                         const RunConfig& cfg);

// Frobenius distance between two log-mel matrices.
double mel_distance(const MelSpectrogram& a, const MelSpectrogram& b);

// One conversion per alpha, in order.
std::vector<ConversionResult> interpolation_sweep(
    const Waveform& source, const ClassifierModel& classifier,
    const SynthModel& synth, const InterpolationSpec& spec,
    const RunConfig& cfg);

struct DiversityReport {
  std::vector<ConversionResult> samples;
  double mean_pairwise_mel = 0.0;
  double mean_f0_std = 0.0;  // cross-sample std, averaged over voiced frames
};

// num_samples independent eps draws (derived from sampler.seed) for the
// CVAE; the deterministic baseline is simply run num_samples times.
DiversityReport diversity_report(const Waveform& source,
                                 const ClassifierModel& classifier,
                                 const SynthModel& synth,
                                 const SamplerConfig& sampler,
                                 const RunConfig& cfg);

}  // namespace intona
