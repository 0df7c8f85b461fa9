#include "flow.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace intona {

std::vector<int> order_positions(const std::vector<int>& order) {
  std::vector<int> pos(order.size(), -1);
  for (size_t p = 0; p < order.size(); ++p) {
    require(order[p] >= 0 && order[p] < static_cast<int>(order.size()) &&
                pos[order[p]] < 0,
            Status::InvalidArgument, "flow ordering is not a permutation");
    pos[order[p]] = static_cast<int>(p);
  }
  return pos;
}

Mat<double> autoregressive_mask(const std::vector<int>& order) {
  const int d = static_cast<int>(order.size());
  const auto pos = order_positions(order);
  Mat<double> mask(d, d);
  for (int in = 0; in < d; ++in)
    for (int out = 0; out < d; ++out)
      mask.at(in, out) = pos[in] < pos[out] ? 1.0 : 0.0;
  return mask;
}

std::vector<int> flow_order(int step, int dim) {
  std::vector<int> order(dim);
  std::iota(order.begin(), order.end(), 0);
  if (step % 2 == 1) std::reverse(order.begin(), order.end());
  return order;
}

namespace {

// (m, s) of the masked dense net at every coordinate. Inputs at positions
// >= the output's position never contribute by construction.
void masked_net(const FlowStepParams& p, const std::vector<double>& z,
                std::vector<double>& m, std::vector<double>& s) {
  const int d = p.dim();
  const auto pos = order_positions(p.order);
  m.assign(d, 0.0);
  s.assign(d, 0.0);
  for (int out = 0; out < d; ++out) {
    double am = p.bm.at(0, out);
    double as = p.bs.at(0, out);
    for (int in = 0; in < d; ++in) {
      if (pos[in] >= pos[out]) continue;
      am += p.wm.at(in, out) * z[in];
      as += p.ws.at(in, out) * z[in];
    }
    m[out] = am;
    s[out] = std::clamp(as, -kFlowLogScaleLimit, kFlowLogScaleLimit);
  }
}

void check_step(const FlowStepParams& p, int dim) {
  require(p.dim() == dim, Status::ShapeMismatch,
          "flow step dimension mismatch");
  require(p.wm.rows == dim && p.wm.cols == dim && p.ws.rows == dim &&
              p.ws.cols == dim && p.bm.cols == dim && p.bs.cols == dim,
          Status::ShapeMismatch, "flow step parameter shapes are wrong");
}

}  // namespace

IafStepOut iaf_step(const FlowStepParams& params, const LatentVector& z_in) {
  check_step(params, z_in.dim());
  IafStepOut out;
  masked_net(params, z_in.z, out.m, out.s);
  out.z.z.resize(z_in.dim());
  for (int i = 0; i < z_in.dim(); ++i) {
    out.z.z[i] = out.m[i] + std::exp(out.s[i]) * z_in.z[i];
    out.log_sigma_sum += out.s[i];
  }
  return out;
}

FlowTrace iaf_chain(const GaussianPosterior& post, const NoiseVector& eps,
                    const std::vector<FlowStepParams>& steps) {
  post.validate();
  require(post.dim() == eps.dim(), Status::ShapeMismatch,
          "iaf_chain: eps dimension does not match the posterior");
  FlowTrace trace;
  trace.eps = eps;
  trace.z0.z.resize(post.dim());
  for (int i = 0; i < post.dim(); ++i) {
    trace.z0.z[i] = post.mu[i] + post.sigma[i] * eps.eps[i];
    trace.sum_log_sigma += std::log(post.sigma[i]);
  }
  LatentVector z = trace.z0;
  for (const auto& step : steps) {
    auto out = iaf_step(step, z);
    trace.sum_log_sigma += out.log_sigma_sum;
    z = out.z;
    trace.intermediates.push_back(z);
  }
  return trace;
}

NoiseVector iaf_inverse(const GaussianPosterior& post,
                        const std::vector<FlowStepParams>& steps,
                        const LatentVector& z_final) {
  post.validate();
  require(post.dim() == z_final.dim(), Status::ShapeMismatch,
          "iaf_inverse: dimension mismatch");
  const int d = z_final.dim();
  LatentVector z = z_final;
  std::vector<double> m, s, partial(d, 0.0);
  for (auto it = steps.rbegin(); it != steps.rend(); ++it) {
    check_step(*it, d);
    std::fill(partial.begin(), partial.end(), 0.0);
    // Coordinates recovered in autoregression order; (m, s) at a coordinate
    // only reads already-recovered positions.
    for (int p = 0; p < d; ++p) {
      masked_net(*it, partial, m, s);
      const int c = it->order[p];
      partial[c] = (z.z[c] - m[c]) / std::exp(s[c]);
    }
    z.z = partial;
  }
  NoiseVector eps;
  eps.eps.resize(d);
  for (int i = 0; i < d; ++i)
    eps.eps[i] = (z.z[i] - post.mu[i]) / post.sigma[i];
  return eps;
}

double iaf_kl_estimate(const FlowTrace& trace) {
  const auto& z = trace.z_final();
  double z_sq = 0.0, eps_sq = 0.0;
  for (double v : z.z) z_sq += v * v;
  for (double v : trace.eps.eps) eps_sq += v * v;
  return 0.5 * (z_sq - eps_sq) - trace.sum_log_sigma;
}

IafLossParts iaf_loss(const LinSpectrogram& x, const LinSpectrogram& x_hat,
                      const FlowTrace& trace, double beta) {
  require(x.mags.same_shape(x_hat.mags), Status::ShapeMismatch,
          "iaf_loss: spectrogram shapes differ");
  IafLossParts parts;
  for (size_t i = 0; i < x.mags.size(); ++i) {
    const double dlt = x.mags.v[i] - x_hat.mags.v[i];
    parts.recon += dlt * dlt;
  }
  parts.recon /= static_cast<double>(x.mags.size());
  parts.kl_estimate = iaf_kl_estimate(trace);
  parts.total = parts.recon + beta * parts.kl_estimate;
  return parts;
}

}  // namespace intona
