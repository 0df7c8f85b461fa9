#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "mat.hpp"

namespace intona {

struct Waveform {
  std::vector<double> samples;
  int sample_rate = 16000;
};

struct LinSpectrogram {
  Mat<double> mags;  // frames x bins, bins == n_fft/2 + 1
  int frame_len = 0;
  int hop = 0;
  int n_fft = 0;
  int sample_rate = 0;

  int frames() const { return mags.rows; }
  int bins() const { return mags.cols; }
};

struct MelSpectrogram {
  Mat<double> mels;  // frames x n_mels, log-compressed
  int frame_len = 0;
  int hop = 0;
  int n_fft = 0;
  int sample_rate = 0;

  int frames() const { return mels.rows; }
  int n_mels() const { return mels.cols; }
};

struct MelFilterbank {
  Mat<double> weights;  // n_mels x bins
  double fmin = 0.0;
  double fmax = 0.0;
  int sample_rate = 0;
  int n_fft = 0;
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

std::vector<double> hann_window(int n);

// Magnitude STFT. No padding: frames = floor((len - frame_len)/hop) + 1.
// Throws if the waveform is shorter than one frame.
LinSpectrogram stft(const Waveform& w, int frame_len, int hop, int n_fft);

// Complex STFT over an arbitrary sample buffer, flat frames x bins.
std::vector<std::complex<double>> stft_complex(const std::vector<double>& x,
                                               int frame_len, int hop,
                                               int n_fft);

// Least-squares inverse STFT (windowed overlap-add normalized by the
// window-square sum). n_samples = (frames-1)*hop + frame_len.
std::vector<double> istft(const std::vector<std::complex<double>>& spec,
                          int frames, int frame_len, int hop, int n_fft);

MelFilterbank mel_filterbank(int sample_rate, int n_fft, int n_mels,
                             double fmin, double fmax);

// Linear mel projection: mags * weights^T (no log).
Mat<double> mel_project(const LinSpectrogram& s, const MelFilterbank& fb);

// Log-mel features: log(mel_project + 1e-6).
MelSpectrogram to_mel(const LinSpectrogram& s, const MelFilterbank& fb);

LinSpectrogram power_emphasis(const LinSpectrogram& s, double p);

// Iterative phase recovery from a magnitude spectrogram. Deterministic in
// (s, n_iters, seed); output peak-normalized into [-1, 1]. When
// spectral_errors is given it receives, per iteration, the relative
// magnitude error ||STFT(x_k)| - s| / |s| (Frobenius).
Waveform griffin_lim(const LinSpectrogram& s, int n_iters, uint64_t seed,
                     std::vector<double>* spectral_errors = nullptr);

// Per-frame f0 in Hz via normalized autocorrelation with parabolic peak
// refinement; entries are 0 where the frame is judged unvoiced.
std::vector<double> estimate_f0(const Waveform& w, int frame_len, int hop,
                                double fmin, double fmax);

}  // namespace intona
