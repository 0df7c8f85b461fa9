#pragma once

#include <vector>

#include "latent.hpp"
#include "mat.hpp"
#include "signal.hpp"

namespace intona {

// One inverse-autoregressive step: (m, s) = masked_net(z_in),
// z_out = m + exp(s) * z_in. The net is a single masked dense layer;
// coordinate `order[p]` may only read coordinates at positions < p, so the
// Jacobian is triangular in the step's ordering with diagonal exp(s).
struct FlowStepParams {
  Mat<double> wm, ws;          // dim x dim, entries off the mask are ignored
  Mat<double> bm, bs;          // 1 x dim
  std::vector<int> order;      // coordinate visited at each position

  int dim() const { return static_cast<int>(order.size()); }
};

// Log-scales are clamped here before exponentiation.
constexpr double kFlowLogScaleLimit = 7.0;

// Position of each coordinate in the ordering (inverse permutation).
std::vector<int> order_positions(const std::vector<int>& order);

// mask(in, out) = 1 when pos(in) < pos(out).
Mat<double> autoregressive_mask(const std::vector<int>& order);

// Alternating orderings so no coordinate stays untransformed across the
// chain: even steps use the identity order, odd steps the reversal.
std::vector<int> flow_order(int step, int dim);

struct IafStepOut {
  LatentVector z;
  double log_sigma_sum = 0.0;
  std::vector<double> m, s;  // post-clamp log-scales
};

IafStepOut iaf_step(const FlowStepParams& params, const LatentVector& z_in);

struct FlowTrace {
  NoiseVector eps;
  LatentVector z0;
  std::vector<LatentVector> intermediates;  // z_1 .. z_T
  double sum_log_sigma = 0.0;  // includes the encoder's sum of log sigma

  const LatentVector& z_final() const {
    return intermediates.empty() ? z0 : intermediates.back();
  }
};

// z0 = mu + sigma * eps, then the steps in order; sum_log_sigma accumulates
// the encoder log-sigmas plus every step's log-scales.
FlowTrace iaf_chain(const GaussianPosterior& post, const NoiseVector& eps,
                    const std::vector<FlowStepParams>& steps);

// Exact inversion: per step in reverse, coordinates are recovered in
// autoregression order; finally eps = (z0 - mu) / sigma.
NoiseVector iaf_inverse(const GaussianPosterior& post,
                        const std::vector<FlowStepParams>& steps,
                        const LatentVector& z_final);

struct IafLossParts {
  double total = 0.0;
  double recon = 0.0;
  double kl_estimate = 0.0;
};

// recon is the element mean of (x - x_hat)^2; the KL estimate is
// 0.5 * (|z_T|^2 - |eps|^2) - sum_log_sigma.
IafLossParts iaf_loss(const LinSpectrogram& x, const LinSpectrogram& x_hat,
                      const FlowTrace& trace, double beta = 1.0);

double iaf_kl_estimate(const FlowTrace& trace);

}  // namespace intona
