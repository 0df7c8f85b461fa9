#include "net.hpp"

#include <cmath>
#include <sstream>

namespace intona {

const char* act_name(Act a) {
  switch (a) {
    case Act::None: return "none";
    case Act::Relu: return "relu";
    case Act::Tanh: return "tanh";
    case Act::Sigmoid: return "sigmoid";
    case Act::Softmax: return "softmax";
  }
  return "none";
}

Act act_from_name(const std::string& s) {
  if (s == "none") return Act::None;
  if (s == "relu") return Act::Relu;
  if (s == "tanh") return Act::Tanh;
  if (s == "sigmoid") return Act::Sigmoid;
  if (s == "softmax") return Act::Softmax;
  fail(Status::Format, "unknown activation: " + s);
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

int parse_int(const std::string& s) {
  try {
    size_t pos = 0;
    const int v = std::stoi(s, &pos);
    require(pos == s.size(), Status::Format, "trailing characters");
    return v;
  } catch (const Error&) {
    throw;
  } catch (const std::exception&) {
    fail(Status::Format, "bad integer in layer spec: " + s);
  }
}

}  // namespace

int StackSpec::output_width() const {
  int w = input_width;
  for (const auto& l : layers) {
    switch (l.kind) {
      case LayerDef::Kind::Dense: w = l.units; break;
      case LayerDef::Kind::Gru: w = l.units; break;
      case LayerDef::Kind::BiGru: w = 2 * l.units; break;
      case LayerDef::Kind::Conv1d: w = l.units; break;
      case LayerDef::Kind::MaxPool: break;
      case LayerDef::Kind::Highway: break;
      case LayerDef::Kind::Cbhg: w = 2 * l.rnn_units; break;
    }
  }
  return w;
}

std::string StackSpec::to_string() const {
  std::ostringstream os;
  os << "in:" << input_width;
  for (const auto& l : layers) {
    os << "|";
    switch (l.kind) {
      case LayerDef::Kind::Dense:
        os << "dense:" << l.units << ":" << act_name(l.act);
        break;
      case LayerDef::Kind::Gru: os << "gru:" << l.units; break;
      case LayerDef::Kind::BiGru: os << "bigru:" << l.units; break;
      case LayerDef::Kind::Conv1d:
        os << "conv:" << l.k << ":" << l.units << ":" << act_name(l.act);
        break;
      case LayerDef::Kind::MaxPool: os << "pool:" << l.k; break;
      case LayerDef::Kind::Highway: os << "highway"; break;
      case LayerDef::Kind::Cbhg:
        os << "cbhg:" << l.bank_k << ":" << l.bank_ch << ":" << l.proj_ch
           << ":" << l.highways << ":" << l.rnn_units;
        break;
    }
  }
  return os.str();
}

StackSpec StackSpec::parse(const std::string& text) {
  StackSpec spec;
  const auto parts = split(text, '|');
  require(!parts.empty() && parts[0].rfind("in:", 0) == 0, Status::Format,
          "layer spec must start with in:<width>");
  spec.input_width = parse_int(parts[0].substr(3));
  for (size_t i = 1; i < parts.size(); ++i) {
    const auto f = split(parts[i], ':');
    LayerDef d;
    if (f[0] == "dense") {
      require(f.size() == 3, Status::Format, "dense:<units>:<act>");
      d.kind = LayerDef::Kind::Dense;
      d.units = parse_int(f[1]);
      d.act = act_from_name(f[2]);
    } else if (f[0] == "gru") {
      require(f.size() == 2, Status::Format, "gru:<units>");
      d.kind = LayerDef::Kind::Gru;
      d.units = parse_int(f[1]);
    } else if (f[0] == "bigru") {
      require(f.size() == 2, Status::Format, "bigru:<units>");
      d.kind = LayerDef::Kind::BiGru;
      d.units = parse_int(f[1]);
    } else if (f[0] == "conv") {
      require(f.size() == 4, Status::Format, "conv:<k>:<out>:<act>");
      d.kind = LayerDef::Kind::Conv1d;
      d.k = parse_int(f[1]);
      d.units = parse_int(f[2]);
      d.act = act_from_name(f[3]);
    } else if (f[0] == "pool") {
      require(f.size() == 2, Status::Format, "pool:<width>");
      d.kind = LayerDef::Kind::MaxPool;
      d.k = parse_int(f[1]);
    } else if (f[0] == "highway") {
      d.kind = LayerDef::Kind::Highway;
    } else if (f[0] == "cbhg") {
      require(f.size() == 6, Status::Format,
              "cbhg:<bank_k>:<bank_ch>:<proj_ch>:<highways>:<rnn>");
      d.kind = LayerDef::Kind::Cbhg;
      d.bank_k = parse_int(f[1]);
      d.bank_ch = parse_int(f[2]);
      d.proj_ch = parse_int(f[3]);
      d.highways = parse_int(f[4]);
      d.rnn_units = parse_int(f[5]);
    } else {
      fail(Status::Format, "unknown layer kind: " + f[0]);
    }
    spec.layers.push_back(d);
  }
  return spec;
}

double xavier_bound(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

namespace {

void init_dense(ParamMap<float>& p, const std::string& name, int in, int out,
                Rng& rng) {
  p[name + ".w"] = xavier<float>(in, out, rng);
  p[name + ".b"] = Mat<float>(1, out);
}

void init_gru(ParamMap<float>& p, const std::string& name, int in, int hidden,
              Rng& rng) {
  for (const char* g : {"z", "r", "n"}) {
    p[name + ".w" + g] = xavier<float>(in, hidden, rng);
    p[name + ".u" + g] = xavier<float>(hidden, hidden, rng);
    p[name + ".b" + g] = Mat<float>(1, hidden);
  }
}

void init_conv(ParamMap<float>& p, const std::string& name, int k, int in,
               int out, Rng& rng) {
  p[name + ".w"] = xavier<float>(k * in, out, rng);
  p[name + ".b"] = Mat<float>(1, out);
}

void init_highway(ParamMap<float>& p, const std::string& name, int width,
                  Rng& rng) {
  p[name + ".hw"] = xavier<float>(width, width, rng);
  p[name + ".hb"] = Mat<float>(1, width);
  p[name + ".tw"] = xavier<float>(width, width, rng);
  p[name + ".tb"] = Mat<float>(1, width);
}

}  // namespace

void init_stack_params(const StackSpec& spec, const std::string& prefix,
                       Rng& rng, ParamMap<float>& params) {
  int w = spec.input_width;
  for (size_t li = 0; li < spec.layers.size(); ++li) {
    const LayerDef& d = spec.layers[li];
    const std::string name = prefix + "l" + std::to_string(li);
    switch (d.kind) {
      case LayerDef::Kind::Dense:
        init_dense(params, name, w, d.units, rng);
        w = d.units;
        break;
      case LayerDef::Kind::Gru:
        init_gru(params, name, w, d.units, rng);
        w = d.units;
        break;
      case LayerDef::Kind::BiGru:
        init_gru(params, name + ".f", w, d.units, rng);
        init_gru(params, name + ".b", w, d.units, rng);
        w = 2 * d.units;
        break;
      case LayerDef::Kind::Conv1d:
        init_conv(params, name, d.k, w, d.units, rng);
        w = d.units;
        break;
      case LayerDef::Kind::MaxPool:
        break;
      case LayerDef::Kind::Highway:
        init_highway(params, name, w, rng);
        break;
      case LayerDef::Kind::Cbhg: {
        for (int k = 1; k <= d.bank_k; ++k)
          init_conv(params, name + ".bank" + std::to_string(k), k, w,
                    d.bank_ch, rng);
        const int bank_w = d.bank_k * d.bank_ch;
        init_conv(params, name + ".proj1", 3, bank_w, d.proj_ch, rng);
        init_conv(params, name + ".proj2", 3, d.proj_ch, d.proj_ch, rng);
        for (int i = 0; i < d.highways; ++i)
          init_highway(params, name + ".hw" + std::to_string(i), d.proj_ch,
                       rng);
        init_gru(params, name + ".rnn.f", d.proj_ch, d.rnn_units, rng);
        init_gru(params, name + ".rnn.b", d.proj_ch, d.rnn_units, rng);
        w = 2 * d.rnn_units;
        break;
      }
    }
  }
}

double cross_entropy(const Mat<double>& probs,
                     const std::vector<int>& targets) {
  require(static_cast<int>(targets.size()) == probs.rows,
          Status::ShapeMismatch,
          "cross_entropy: row counts differ (" + std::to_string(probs.rows) +
              " probability rows, " + std::to_string(targets.size()) +
              " targets)");
  for (int r = 0; r < probs.rows; ++r) {
    double sum = 0.0;
    for (int c = 0; c < probs.cols; ++c) {
      require(probs.at(r, c) >= 0.0, Status::InvalidArgument,
              "cross_entropy: negative probability");
      sum += probs.at(r, c);
    }
    require(std::fabs(sum - 1.0) <= 1e-6, Status::InvalidArgument,
            "cross_entropy: probability row " + std::to_string(r) +
                " does not sum to 1");
    require(targets[r] >= 0 && targets[r] < probs.cols, Status::InvalidArgument,
            "cross_entropy: target out of range");
  }
  double loss = 0.0;
  for (int r = 0; r < probs.rows; ++r)
    loss -= std::log(std::max(probs.at(r, targets[r]), 1e-12));
  return loss;
}

double cross_entropy(const Mat<double>& probs, const Mat<double>& onehot) {
  require(onehot.rows == probs.rows, Status::ShapeMismatch,
          "cross_entropy: row counts differ");
  require(onehot.cols == probs.cols, Status::ShapeMismatch,
          "cross_entropy: class counts differ");
  std::vector<int> targets(onehot.rows, -1);
  for (int r = 0; r < onehot.rows; ++r) {
    for (int c = 0; c < onehot.cols; ++c) {
      const double v = onehot.at(r, c);
      require(v == 0.0 || v == 1.0, Status::InvalidArgument,
              "cross_entropy: targets must be one-hot");
      if (v == 1.0) {
        require(targets[r] < 0, Status::InvalidArgument,
                "cross_entropy: multiple ones in a target row");
        targets[r] = c;
      }
    }
    require(targets[r] >= 0, Status::InvalidArgument,
            "cross_entropy: empty target row");
  }
  return cross_entropy(probs, targets);
}

}  // namespace intona
