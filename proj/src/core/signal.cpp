#include "signal.hpp"

#include <algorithm>
#include <cmath>

#include "fft.hpp"
#include "rng.hpp"

namespace intona {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kLogMelFloor = 1e-6;

int frame_count(size_t n_samples, int frame_len, int hop) {
  return static_cast<int>((n_samples - frame_len) / hop) + 1;
}

void check_framing(const char* op, size_t n_samples, int frame_len, int hop,
                   int n_fft) {
  require(frame_len > 0 && hop > 0 && n_fft > 0, Status::InvalidArgument,
          std::string(op) + ": framing parameters must be positive");
  require(frame_len <= n_fft, Status::InvalidArgument,
          std::string(op) + ": frame_len must not exceed n_fft");
  require(hop <= frame_len, Status::InvalidArgument,
          std::string(op) + ": hop must not exceed frame_len");
  require(n_samples >= static_cast<size_t>(frame_len), Status::InvalidArgument,
          std::string(op) + ": waveform too short for one frame");
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i)
    w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  return w;
}

std::vector<std::complex<double>> stft_complex(const std::vector<double>& x,
                                               int frame_len, int hop,
                                               int n_fft) {
  check_framing("stft", x.size(), frame_len, hop, n_fft);
  const int frames = frame_count(x.size(), frame_len, hop);
  const int bins = n_fft / 2 + 1;
  const std::vector<double> win = hann_window(frame_len);
  std::vector<std::complex<double>> out(static_cast<size_t>(frames) * bins);
  std::vector<std::complex<double>> buf(n_fft);
  for (int f = 0; f < frames; ++f) {
    const size_t off = static_cast<size_t>(f) * hop;
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (int n = 0; n < frame_len; ++n) buf[n] = x[off + n] * win[n];
    fft(buf, false);
    for (int k = 0; k < bins; ++k) out[static_cast<size_t>(f) * bins + k] = buf[k];
  }
  return out;
}

LinSpectrogram stft(const Waveform& w, int frame_len, int hop, int n_fft) {
  require(w.sample_rate > 0, Status::InvalidArgument,
          "stft: sample rate must be positive");
  const auto spec = stft_complex(w.samples, frame_len, hop, n_fft);
  const int frames = frame_count(w.samples.size(), frame_len, hop);
  const int bins = n_fft / 2 + 1;
  LinSpectrogram s;
  s.mags = Mat<double>(frames, bins);
  for (size_t i = 0; i < spec.size(); ++i) s.mags.v[i] = std::abs(spec[i]);
  s.frame_len = frame_len;
  s.hop = hop;
  s.n_fft = n_fft;
  s.sample_rate = w.sample_rate;
  return s;
}

std::vector<double> istft(const std::vector<std::complex<double>>& spec,
                          int frames, int frame_len, int hop, int n_fft) {
  const int bins = n_fft / 2 + 1;
  require(spec.size() == static_cast<size_t>(frames) * bins,
          Status::ShapeMismatch, "istft: spectrogram size mismatch");
  const std::vector<double> win = hann_window(frame_len);
  const size_t n_samples = static_cast<size_t>(frames - 1) * hop + frame_len;
  std::vector<double> num(n_samples, 0.0);
  std::vector<double> den(n_samples, 0.0);
  std::vector<std::complex<double>> buf(n_fft);
  for (int f = 0; f < frames; ++f) {
    // Rebuild the full spectrum from the half-spectrum by conjugate symmetry.
    for (int k = 0; k < bins; ++k) buf[k] = spec[static_cast<size_t>(f) * bins + k];
    for (int k = bins; k < n_fft; ++k) buf[k] = std::conj(buf[n_fft - k]);
    fft(buf, true);
    const size_t off = static_cast<size_t>(f) * hop;
    for (int n = 0; n < frame_len; ++n) {
      num[off + n] += win[n] * buf[n].real();
      den[off + n] += win[n] * win[n];
    }
  }
  for (size_t i = 0; i < n_samples; ++i)
    num[i] = den[i] > 1e-12 ? num[i] / den[i] : 0.0;
  return num;
}

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels,
                             double fmin, double fmax) {
  require(sample_rate > 0 && n_fft > 0, Status::InvalidArgument,
          "mel_filterbank: sample_rate and n_fft must be positive");
  require(n_mels > 0, Status::InvalidArgument,
          "mel_filterbank: n_mels must be positive");
  require(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0,
          Status::InvalidArgument,
          "mel_filterbank: need 0 <= fmin < fmax <= sample_rate/2");
  const int bins = n_fft / 2 + 1;
  const double mel_lo = hz_to_mel(fmin);
  const double mel_hi = hz_to_mel(fmax);
  std::vector<double> centers_hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i)
    centers_hz[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * i / (n_mels + 1));

  MelFilterbank fb;
  fb.weights = Mat<double>(n_mels, bins);
  fb.fmin = fmin;
  fb.fmax = fmax;
  fb.sample_rate = sample_rate;
  fb.n_fft = n_fft;
  for (int m = 0; m < n_mels; ++m) {
    const double left = centers_hz[m];
    const double center = centers_hz[m + 1];
    const double right = centers_hz[m + 2];
    bool any = false;
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > left && f < right)
        w = f <= center ? (f - left) / (center - left)
                        : (right - f) / (right - center);
      fb.weights.at(m, k) = w;
      any = any || w > 0.0;
    }
    require(any, Status::InvalidArgument,
            "mel_filterbank: filter " + std::to_string(m) +
                " covers no FFT bin; reduce n_mels or raise n_fft");
  }
  return fb;
}

Mat<double> mel_project(const LinSpectrogram& s, const MelFilterbank& fb) {
  require(fb.weights.cols == s.bins(), Status::ShapeMismatch,
          "mel projection: filterbank bins do not match spectrogram bins");
  Mat<double> out;
  gemm(s.mags, false, fb.weights, true, out);
  return out;
}

MelSpectrogram to_mel(const LinSpectrogram& s, const MelFilterbank& fb) {
  MelSpectrogram m;
  m.mels = mel_project(s, fb);
  for (double& x : m.mels.v) x = std::log(x + kLogMelFloor);
  m.frame_len = s.frame_len;
  m.hop = s.hop;
  m.n_fft = s.n_fft;
  m.sample_rate = s.sample_rate;
  return m;
}

LinSpectrogram power_emphasis(const LinSpectrogram& s, double p) {
  require(p > 0.0, Status::InvalidArgument,
          "power_emphasis: exponent must be positive");
  for (double x : s.mags.v)
    require(x >= 0.0, Status::InvalidArgument,
            "power_emphasis: magnitudes must be nonnegative");
  if (p == 1.0) return s;
  LinSpectrogram out = s;
  for (double& x : out.mags.v) x = std::pow(x, p);
  return out;
}

Waveform griffin_lim(const LinSpectrogram& s, int n_iters, uint64_t seed,
                     std::vector<double>* spectral_errors) {
  require(n_iters >= 1, Status::InvalidArgument,
          "griffin_lim: need at least one iteration");
  require(s.bins() == s.n_fft / 2 + 1, Status::ShapeMismatch,
          "griffin_lim: bins != n_fft/2 + 1");
  const int frames = s.frames();
  const int bins = s.bins();
  const size_t cells = static_cast<size_t>(frames) * bins;
  if (spectral_errors) spectral_errors->clear();

  double target_norm = 0.0;
  for (double m : s.mags.v) target_norm += m * m;
  target_norm = std::sqrt(target_norm);

  Waveform out;
  out.sample_rate = s.sample_rate;
  if (target_norm == 0.0) {
    out.samples.assign(static_cast<size_t>(frames - 1) * s.hop + s.frame_len,
                       0.0);
    if (spectral_errors) spectral_errors->assign(n_iters, 0.0);
    return out;
  }

  // Seeded random initial phase.
  Rng rng(seed, RngPurpose::Vocoder);
  std::vector<std::complex<double>> spec(cells);
  for (size_t i = 0; i < cells; ++i) {
    const double phi = rng.uniform(-kPi, kPi);
    spec[i] = s.mags.v[i] * std::complex<double>(std::cos(phi), std::sin(phi));
  }

  // Plain alternating projections between the magnitude constraint and the
  // set of consistent spectrograms. With the least-squares istft the
  // measured magnitude error is non-increasing.
  std::vector<double> x;
  for (int it = 0; it < n_iters; ++it) {
    x = istft(spec, frames, s.frame_len, s.hop, s.n_fft);
    auto est = stft_complex(x, s.frame_len, s.hop, s.n_fft);
    double err = 0.0;
    for (size_t i = 0; i < cells; ++i) {
      const double mag = std::abs(est[i]);
      const double d = mag - s.mags.v[i];
      err += d * d;
      spec[i] = mag > 1e-300 ? est[i] * (s.mags.v[i] / mag)
                             : std::complex<double>(s.mags.v[i], 0.0);
    }
    if (spectral_errors) spectral_errors->push_back(std::sqrt(err) / target_norm);
  }
  out.samples = istft(spec, frames, s.frame_len, s.hop, s.n_fft);

  double peak = 0.0;
  for (double v : out.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0)
    for (double& v : out.samples) v /= peak;
  return out;
}

std::vector<double> estimate_f0(const Waveform& w, int frame_len, int hop,
                                double fmin, double fmax) {
  require(fmin > 0.0 && fmin < fmax && fmax < w.sample_rate / 2.0,
          Status::InvalidArgument,
          "estimate_f0: need 0 < fmin < fmax < sample_rate/2");
  if (w.samples.size() < static_cast<size_t>(frame_len)) return {};
  const int frames = frame_count(w.samples.size(), frame_len, hop);
  const double sr = w.sample_rate;
  int lag_min = static_cast<int>(std::floor(sr / fmax));
  int lag_max = static_cast<int>(std::ceil(sr / fmin));
  lag_min = std::max(lag_min, 1);
  lag_max = std::min(lag_max, frame_len - 1);
  std::vector<double> f0(frames, 0.0);
  std::vector<double> r(lag_max + 2, 0.0);
  for (int f = 0; f < frames; ++f) {
    const double* x = w.samples.data() + static_cast<size_t>(f) * hop;
    double energy = 0.0;
    for (int n = 0; n < frame_len; ++n) energy += x[n] * x[n];
    if (energy < 1e-10) continue;
    const int top = std::min(lag_max + 1, frame_len - 1);
    for (int lag = lag_min - 1; lag <= top; ++lag) {
      double acc = 0.0;
      for (int n = 0; n + lag < frame_len; ++n) acc += x[n] * x[n + lag];
      r[lag] = acc / energy;
    }
    int best = lag_min;
    for (int lag = lag_min; lag <= std::min(lag_max, frame_len - 2); ++lag)
      if (r[lag] > r[best]) best = lag;
    if (r[best] < 0.3) continue;
    // Parabolic refinement around the peak lag.
    double lag_hat = best;
    if (best > lag_min - 1 && best + 1 <= top) {
      const double denom = r[best - 1] - 2.0 * r[best] + r[best + 1];
      if (std::fabs(denom) > 1e-12) {
        double delta = 0.5 * (r[best - 1] - r[best + 1]) / denom;
        delta = std::clamp(delta, -0.5, 0.5);
        lag_hat = best + delta;
      }
    }
    f0[f] = sr / lag_hat;
  }
  return f0;
}

}  // namespace intona
