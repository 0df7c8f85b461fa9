#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rng.hpp"
#include "tape.hpp"

namespace intona {

enum class Act { None, Relu, Tanh, Sigmoid, Softmax };

const char* act_name(Act a);
Act act_from_name(const std::string& s);

// One layer of a sequential stack operating on a frames x width matrix.
struct LayerDef {
  enum class Kind { Dense, Gru, BiGru, Conv1d, MaxPool, Highway, Cbhg };
  Kind kind = Kind::Dense;
  int units = 0;      // dense/gru/bigru output width (per direction for bigru)
  Act act = Act::None;
  int k = 0;          // conv kernel / pool width
  // cbhg-lite shape
  int bank_k = 4;
  int bank_ch = 32;
  int proj_ch = 128;
  int highways = 2;
  int rnn_units = 64;
};

struct StackSpec {
  int input_width = 0;
  std::vector<LayerDef> layers;

  int output_width() const;
  std::string to_string() const;
  static StackSpec parse(const std::string& text);
};

// Sequential layer naming: <prefix>l<index>.<param>.
void init_stack_params(const StackSpec& spec, const std::string& prefix,
                       Rng& rng, ParamMap<float>& params);

double xavier_bound(int fan_in, int fan_out);

template <typename T>
Mat<T> xavier(int rows, int cols, Rng& rng) {
  const double a = xavier_bound(rows, cols);
  Mat<T> m(rows, cols);
  for (auto& x : m.v) x = static_cast<T>(rng.uniform(-a, a));
  return m;
}

// --- tape-level layer builders -------------------------------------------

template <typename T>
int dense_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
              const std::string& name, int x, Act act) {
  int y = tp.add_bias(tp.matmul(x, ids.at(name + ".w")), ids.at(name + ".b"));
  switch (act) {
    case Act::None: break;
    case Act::Relu: y = tp.relu_(y); break;
    case Act::Tanh: y = tp.tanh_(y); break;
    case Act::Sigmoid: y = tp.sigmoid_(y); break;
    case Act::Softmax: y = tp.softmax_rows(y); break;
  }
  return y;
}

template <typename T>
struct GruOut {
  int seq = -1;    // T x H, hidden state at every step
  int final_ = -1; // 1 x H
};

// Unidirectional gated-recurrent scan. h0 < 0 starts from zeros.
template <typename T>
GruOut<T> gru_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
                  const std::string& name, int x, int h0 = -1) {
  const int steps = tp.val(x).rows;
  const int hidden = tp.val(ids.at(name + ".uz")).rows;
  const int pre_z = tp.add_bias(tp.matmul(x, ids.at(name + ".wz")), ids.at(name + ".bz"));
  const int pre_r = tp.add_bias(tp.matmul(x, ids.at(name + ".wr")), ids.at(name + ".br"));
  const int pre_n = tp.add_bias(tp.matmul(x, ids.at(name + ".wn")), ids.at(name + ".bn"));
  const int ones = tp.constant([&] {
    Mat<T> m(1, hidden);
    std::fill(m.v.begin(), m.v.end(), T(1));
    return m;
  }());
  int h = h0 >= 0 ? h0 : tp.constant(Mat<T>(1, hidden));
  GruOut<T> out;
  for (int t = 0; t < steps; ++t) {
    const int z = tp.sigmoid_(tp.add(tp.slice_rows(pre_z, t, t + 1),
                                     tp.matmul(h, ids.at(name + ".uz"))));
    const int r = tp.sigmoid_(tp.add(tp.slice_rows(pre_r, t, t + 1),
                                     tp.matmul(h, ids.at(name + ".ur"))));
    const int n = tp.tanh_(tp.add(tp.slice_rows(pre_n, t, t + 1),
                                  tp.mul(r, tp.matmul(h, ids.at(name + ".un")))));
    h = tp.add(tp.mul(tp.sub(ones, z), n), tp.mul(z, h));
    out.seq = t == 0 ? h : tp.concat_rows(out.seq, h);
  }
  out.final_ = h;
  return out;
}

template <typename T>
int highway_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
                const std::string& name, int x) {
  const int h = tp.relu_(tp.add_bias(tp.matmul(x, ids.at(name + ".hw")),
                                     ids.at(name + ".hb")));
  const int t = tp.sigmoid_(tp.add_bias(tp.matmul(x, ids.at(name + ".tw")),
                                        ids.at(name + ".tb")));
  const int ones = tp.constant([&] {
    Mat<T> m(tp.val(x).rows, tp.val(x).cols);
    std::fill(m.v.begin(), m.v.end(), T(1));
    return m;
  }());
  return tp.add(tp.mul(t, h), tp.mul(tp.sub(ones, t), x));
}

template <typename T>
int conv1d_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
               const std::string& name, int x, int k, Act act) {
  const int pl = (k - 1) / 2;
  int y = tp.conv1d(x, ids.at(name + ".w"), ids.at(name + ".b"), k, pl,
                    k - 1 - pl);
  if (act == Act::Relu) y = tp.relu_(y);
  return y;
}

// Convolution bank + pooling + projections + highways + bidirectional
// recurrence; time resolution is preserved throughout.
template <typename T>
int cbhg_fwd(Tape<T>& tp, const std::map<std::string, int>& ids,
             const std::string& name, int x, const LayerDef& def) {
  int bank = -1;
  for (int k = 1; k <= def.bank_k; ++k) {
    const int y = conv1d_fwd(tp, ids, name + ".bank" + std::to_string(k), x, k,
                             Act::Relu);
    bank = k == 1 ? y : tp.concat_cols(bank, y);
  }
  const int pooled = tp.maxpool1d(bank, 2);
  const int p1 = conv1d_fwd(tp, ids, name + ".proj1", pooled, 3, Act::Relu);
  int h = conv1d_fwd(tp, ids, name + ".proj2", p1, 3, Act::None);
  for (int i = 0; i < def.highways; ++i)
    h = highway_fwd(tp, ids, name + ".hw" + std::to_string(i), h);
  const auto fwd = gru_fwd(tp, ids, name + ".rnn.f", h);
  const auto bwd = gru_fwd(tp, ids, name + ".rnn.b", tp.reverse_rows(h));
  return tp.concat_cols(fwd.seq, tp.reverse_rows(bwd.seq));
}

template <typename T>
struct StackOut {
  int out = -1;
  std::vector<int> final_states;  // one per unidirectional recurrent layer
};

template <typename T>
StackOut<T> stack_fwd(Tape<T>& tp, const StackSpec& spec,
                      const std::map<std::string, int>& ids,
                      const std::string& prefix, int x,
                      const std::vector<int>* states = nullptr) {
  require(tp.val(x).cols == spec.input_width, Status::ShapeMismatch,
          "stack " + prefix + ": input width " +
              std::to_string(tp.val(x).cols) + " != expected " +
              std::to_string(spec.input_width));
  StackOut<T> out;
  int cur = x;
  size_t state_i = 0;
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerDef& def = spec.layers[li];
    const std::string name = prefix + "l" + std::to_string(li);
    try {
      switch (def.kind) {
      case LayerDef::Kind::Dense:
        cur = dense_fwd(tp, ids, name, cur, def.act);
        break;
      case LayerDef::Kind::Gru: {
        int h0 = -1;
        if (states && state_i < states->size()) h0 = (*states)[state_i];
        ++state_i;
        auto g = gru_fwd(tp, ids, name, cur, h0);
        cur = g.seq;
        out.final_states.push_back(g.final_);
        break;
      }
      case LayerDef::Kind::BiGru: {
        auto f = gru_fwd(tp, ids, name + ".f", cur);
        auto b = gru_fwd(tp, ids, name + ".b", tp.reverse_rows(cur));
        cur = tp.concat_cols(f.seq, tp.reverse_rows(b.seq));
        break;
      }
      case LayerDef::Kind::Conv1d:
        cur = conv1d_fwd(tp, ids, name, cur, def.k, def.act);
        break;
      case LayerDef::Kind::MaxPool:
        cur = tp.maxpool1d(cur, def.k);
        break;
      case LayerDef::Kind::Highway:
        cur = highway_fwd(tp, ids, name, cur);
        break;
      case LayerDef::Kind::Cbhg:
        cur = cbhg_fwd(tp, ids, name, cur, def);
        break;
      }
    } catch (const Error& e) {
      if (e.status() == Status::ShapeMismatch)
        fail(Status::ShapeMismatch,
             "layer " + name + ": " + std::string(e.what()));
      throw;
    }
  }
  out.out = cur;
  return out;
}

// Runs a stack over an input matrix outside any surrounding graph and
// returns concrete values. `state` carries one hidden row per unidirectional
// recurrent layer (zeros when absent).
template <typename T>
struct ForwardResult {
  Mat<T> output;
  std::vector<Mat<T>> state;
};

template <typename T>
ForwardResult<T> stack_forward(const ParamMap<T>& params, const StackSpec& spec,
                               const std::string& prefix, const Mat<T>& input,
                               const std::vector<Mat<T>>* state = nullptr) {
  Tape<T> tp;
  auto ids = bind_params(tp, params);
  const int x = tp.constant(input);
  std::vector<int> state_ids;
  if (state)
    for (const auto& h : *state) state_ids.push_back(tp.constant(h));
  auto res = stack_fwd(tp, spec, ids, prefix, x,
                       state ? &state_ids : nullptr);
  ForwardResult<T> fr;
  fr.output = tp.val(res.out);
  for (int id : res.final_states) fr.state.push_back(tp.val(id));
  return fr;
}

// --- parameter plumbing ----------------------------------------------------

template <typename T>
std::map<std::string, int> bind_params(Tape<T>& tp, const ParamMap<T>& params) {
  std::map<std::string, int> ids;
  for (const auto& [name, value] : params) ids[name] = tp.leaf(value, true);
  return ids;
}

template <typename T>
ParamMap<T> collect_grads(const Tape<T>& tp,
                          const std::map<std::string, int>& ids) {
  ParamMap<T> grads;
  for (const auto& [name, id] : ids) grads[name] = tp.grad(id);
  return grads;
}

// --- adaptive-moment optimizer ----------------------------------------------

template <typename T>
struct AdamState {
  int64_t step = 0;
  ParamMap<T> m;
  ParamMap<T> v;
};

template <typename T>
void adam_step(ParamMap<T>& params, const ParamMap<T>& grads,
               AdamState<T>& state, T lr, T beta1 = T(0.9),
               T beta2 = T(0.999), T eps = T(1e-8)) {
  require(params.size() == grads.size(), Status::InvalidArgument,
          "adam_step: parameter/gradient key mismatch");
  for (const auto& [name, g] : grads)
    require(params.count(name) == 1, Status::InvalidArgument,
            "adam_step: gradient for unknown parameter " + name);
  ++state.step;
  const T bc1 = T(1) - std::pow(beta1, static_cast<T>(state.step));
  const T bc2 = T(1) - std::pow(beta2, static_cast<T>(state.step));
  for (auto& [name, p] : params) {
    const Mat<T>& g = grads.at(name);
    require(g.same_shape(p), Status::ShapeMismatch,
            "adam_step: gradient shape mismatch for " + name);
    Mat<T>& m = state.m[name];
    Mat<T>& v = state.v[name];
    if (m.size() != p.size()) m = Mat<T>(p.rows, p.cols);
    if (v.size() != p.size()) v = Mat<T>(p.rows, p.cols);
    for (size_t i = 0; i < p.size(); ++i) {
      m.v[i] = beta1 * m.v[i] + (T(1) - beta1) * g.v[i];
      v.v[i] = beta2 * v.v[i] + (T(1) - beta2) * g.v[i] * g.v[i];
      const T mhat = m.v[i] / bc1;
      const T vhat = v.v[i] / bc2;
      p.v[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

// --- reference losses (double precision, independent of the tape) -----------

// Sum over rows of -log(prob at the one-hot target), 1e-12 floor inside the
// log. Validates that rows lie on the simplex and targets are one-hot.
double cross_entropy(const Mat<double>& probs, const Mat<double>& onehot);
double cross_entropy(const Mat<double>& probs, const std::vector<int>& targets);

}  // namespace intona
