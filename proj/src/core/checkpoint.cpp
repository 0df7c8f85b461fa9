#include "checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace intona {

namespace {

constexpr char kMagic[8] = {'I', 'N', 'T', 'O', 'N', 'A', 'C', 'K'};
constexpr uint32_t kVersion = 1;
constexpr uint32_t kMaxRank = 8;
constexpr uint64_t kMaxCells = 1ull << 28;

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_string(std::string& out, const std::string& s) {
  put_u32(out, static_cast<uint32_t>(s.size()));
  out.append(s);
}

void put_f32(std::string& out, float v) {
  uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

class Reader {
public:
  Reader(std::string data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  bool at_end() const { return pos_ == data_.size(); }

  const std::string& path() const { return path_; }

  void read_bytes(void* dst, size_t n, const char* what) {
    require(pos_ + n <= data_.size(), Status::Truncated,
            path_ + ": checkpoint truncated while reading " +
                std::string(what));
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }

  uint32_t read_u32(const char* what) {
    unsigned char b[4];
    read_bytes(b, 4, what);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
  }

  uint64_t read_u64(const char* what) {
    unsigned char b[8];
    read_bytes(b, 8, what);
    uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | b[i];
    return v;
  }

  std::string read_string(const char* what) {
    const uint32_t len = read_u32(what);
    require(pos_ + len <= data_.size(), Status::Truncated,
            path_ + ": checkpoint truncated inside " + std::string(what));
    std::string s = data_.substr(pos_, len);
    pos_ += len;
    return s;
  }

private:
  std::string data_;
  std::string path_;
  size_t pos_ = 0;
};

std::map<std::string, std::string> parse_kv(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    const size_t eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

const std::string& want(const std::map<std::string, std::string>& kv,
                        const std::string& key, const std::string& path) {
  const auto it = kv.find(key);
  require(it != kv.end(), Status::Format,
          path + ": checkpoint spec is missing " + key);
  return it->second;
}

std::string spec_text_of(const AnyModel& m) {
  std::ostringstream os;
  switch (m.kind) {
    case ModelKind::Classifier: {
      const auto& c = m.classifier;
      os << "stack=" << c.stack.to_string() << "\n";
      os << "inventory=";
      for (size_t i = 0; i < c.inventory.symbols.size(); ++i)
        os << (i ? "," : "") << c.inventory.symbols[i];
      os << "\n";
      os << "trained=" << (c.trained ? 1 : 0) << "\n";
      break;
    }
    case ModelKind::Synth:
    case ModelKind::SynthFlow: {
      const auto& s = m.synth;
      os << "cond=" << s.cond_width << "\nbins=" << s.bins
         << "\nlatent_dim=" << s.latent_dim << "\nhidden=" << s.hidden
         << "\nflow_steps=" << s.flow_steps
         << "\nin_scale=" << fmt_double(s.in_scale)
         << "\nout_gain=" << fmt_double(s.out_gain)
         << "\nframe_len=" << s.frame_len << "\nhop=" << s.hop
         << "\nn_fft=" << s.n_fft << "\nsample_rate=" << s.sample_rate
         << "\ntrained=" << (s.trained ? 1 : 0) << "\n";
      break;
    }
    case ModelKind::Baseline: {
      const auto& b = m.baseline;
      os << "stack=" << b.stack.to_string() << "\ncond=" << b.cond_width
         << "\nbins=" << b.bins << "\nout_gain=" << fmt_double(b.out_gain)
         << "\nframe_len=" << b.frame_len << "\nhop=" << b.hop
         << "\nn_fft=" << b.n_fft << "\nsample_rate=" << b.sample_rate
         << "\ntrained=" << (b.trained ? 1 : 0) << "\n";
      break;
    }
  }
  return os.str();
}

const ParamMap<float>& params_of(const AnyModel& m) {
  switch (m.kind) {
    case ModelKind::Classifier: return m.classifier.params;
    case ModelKind::Synth:
    case ModelKind::SynthFlow: return m.synth.params;
    case ModelKind::Baseline: return m.baseline.params;
  }
  return m.classifier.params;
}

}  // namespace

const char* model_kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::Classifier: return "classifier";
    case ModelKind::Synth: return "synth";
    case ModelKind::SynthFlow: return "synth+flow";
    case ModelKind::Baseline: return "baseline";
  }
  return "classifier";
}

ModelKind model_kind_from_name(const std::string& s) {
  if (s == "classifier") return ModelKind::Classifier;
  if (s == "synth") return ModelKind::Synth;
  if (s == "synth+flow") return ModelKind::SynthFlow;
  if (s == "baseline") return ModelKind::Baseline;
  fail(Status::Format, "unknown checkpoint model kind: " + s);
}

AnyModel AnyModel::of(ClassifierModel m, const RunConfig& cfg) {
  AnyModel a;
  a.kind = ModelKind::Classifier;
  a.classifier = std::move(m);
  a.config = cfg;
  return a;
}

AnyModel AnyModel::of(SynthesizerModel m, const RunConfig& cfg) {
  AnyModel a;
  a.kind = m.flow_steps > 0 ? ModelKind::SynthFlow : ModelKind::Synth;
  a.synth = std::move(m);
  a.config = cfg;
  return a;
}

AnyModel AnyModel::of(BaselineModel m, const RunConfig& cfg) {
  AnyModel a;
  a.kind = ModelKind::Baseline;
  a.baseline = std::move(m);
  a.config = cfg;
  return a;
}

AnyModel AnyModel::of(const SynthModel& m, const RunConfig& cfg) {
  if (std::holds_alternative<SynthesizerModel>(m))
    return of(std::get<SynthesizerModel>(m), cfg);
  return of(std::get<BaselineModel>(m), cfg);
}

SynthModel AnyModel::to_synth_model() const {
  switch (kind) {
    case ModelKind::Synth:
    case ModelKind::SynthFlow: return synth;
    case ModelKind::Baseline: return baseline;
    case ModelKind::Classifier: break;
  }
  fail(Status::BadState, "checkpoint holds a classifier, not a synthesizer");
}

void save_checkpoint(const AnyModel& model, const std::string& path) {
  std::string out;
  out.append(kMagic, sizeof kMagic);
  put_u32(out, kVersion);
  put_string(out, model_kind_name(model.kind));
  put_string(out, spec_text_of(model));
  put_string(out, model.config.to_text());
  for (const auto& [name, tensor] : params_of(model)) {
    put_string(out, name);
    put_u32(out, 2);
    put_u64(out, static_cast<uint64_t>(tensor.rows));
    put_u64(out, static_cast<uint64_t>(tensor.cols));
    for (float v : tensor.v) put_f32(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), Status::Io, "cannot write checkpoint: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  require(f.good(), Status::Io, "short write on checkpoint: " + path);
}

AnyModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), Status::Io, "cannot open checkpoint: " + path);
  Reader r(std::string((std::istreambuf_iterator<char>(in)),
                       std::istreambuf_iterator<char>()),
           path);

  char magic[8];
  r.read_bytes(magic, 8, "magic");
  require(std::memcmp(magic, kMagic, 8) == 0, Status::BadMagic,
          path + ": bad checkpoint magic");
  const uint32_t version = r.read_u32("version");
  require(version == kVersion, Status::VersionMismatch,
          path + ": unsupported checkpoint version " +
              std::to_string(version));

  const std::string kind_name = r.read_string("kind");
  const std::string spec_text = r.read_string("model spec");
  const std::string config_text = r.read_string("config snapshot");

  ParamMap<float> tensors;
  while (!r.at_end()) {
    const std::string name = r.read_string("tensor name");
    const uint32_t rank = r.read_u32("tensor rank");
    require(rank >= 1 && rank <= kMaxRank, Status::Format,
            path + ": tensor " + name + " has invalid rank");
    uint64_t cells = 1;
    std::vector<uint64_t> extents(rank);
    for (uint32_t i = 0; i < rank; ++i) {
      extents[i] = r.read_u64("tensor extent");
      require(extents[i] >= 1 && extents[i] <= kMaxCells, Status::Format,
              path + ": tensor " + name + " has invalid extent");
      cells *= extents[i];
      require(cells <= kMaxCells, Status::Format,
              path + ": tensor " + name + " is implausibly large");
    }
    require(rank == 2, Status::Format,
            path + ": tensor " + name + " must be rank 2 in this format");
    Mat<float> m(static_cast<int>(extents[0]), static_cast<int>(extents[1]));
    for (auto& v : m.v) {
      const uint32_t bits = r.read_u32("tensor values");
      std::memcpy(&v, &bits, 4);
    }
    require(tensors.emplace(name, std::move(m)).second, Status::Format,
            path + ": duplicate tensor " + name);
  }

  AnyModel model;
  model.kind = model_kind_from_name(kind_name);
  model.config = RunConfig::from_text(config_text);
  const auto kv = parse_kv(spec_text);

  auto take_params = [&](const ParamMap<float>& expected_shapes,
                         ParamMap<float>& dst) {
    require(tensors.size() == expected_shapes.size(), Status::Format,
            path + ": checkpoint holds " + std::to_string(tensors.size()) +
                " tensors, expected " +
                std::to_string(expected_shapes.size()));
    for (const auto& [name, shape] : expected_shapes) {
      const auto it = tensors.find(name);
      require(it != tensors.end(), Status::Format,
              path + ": checkpoint is missing tensor " + name);
      require(it->second.rows == shape.rows && it->second.cols == shape.cols,
              Status::Format,
              path + ": tensor " + name + " has the wrong shape");
    }
    dst = std::move(tensors);
  };

  switch (model.kind) {
    case ModelKind::Classifier: {
      ClassifierModel c;
      c.stack = StackSpec::parse(want(kv, "stack", path));
      std::istringstream names(want(kv, "inventory", path));
      std::string sym;
      while (std::getline(names, sym, ','))
        if (!sym.empty()) c.inventory.symbols.push_back(sym);
      c.inventory.validate();
      c.trained = want(kv, "trained", path) == "1";
      ParamMap<float> expected;
      Rng rng(0, RngPurpose::Init);
      init_stack_params(c.stack, "cls.", rng, expected);
      take_params(expected, c.params);
      require(c.stack.output_width() == c.inventory.size(), Status::Format,
              path + ": classifier head width does not match the inventory");
      model.classifier = std::move(c);
      break;
    }
    case ModelKind::Synth:
    case ModelKind::SynthFlow: {
      RunConfig mk = model.config;
      mk.latent_dim = std::stoi(want(kv, "latent_dim", path));
      mk.synth_hidden = std::stoi(want(kv, "hidden", path));
      mk.frame_len = std::stoi(want(kv, "frame_len", path));
      mk.hop = std::stoi(want(kv, "hop", path));
      mk.n_fft = std::stoi(want(kv, "n_fft", path));
      mk.sample_rate = std::stoi(want(kv, "sample_rate", path));
      const int cond = std::stoi(want(kv, "cond", path));
      const int flow_steps = std::stoi(want(kv, "flow_steps", path));
      SynthesizerModel s = make_synthesizer(mk, cond, 0, flow_steps);
      require(s.bins == std::stoi(want(kv, "bins", path)), Status::Format,
              path + ": bins do not match n_fft");
      s.in_scale = std::stof(want(kv, "in_scale", path));
      s.out_gain = std::stof(want(kv, "out_gain", path));
      s.trained = want(kv, "trained", path) == "1";
      ParamMap<float> expected = s.params;
      take_params(expected, s.params);
      require((model.kind == ModelKind::SynthFlow) == (flow_steps > 0),
              Status::Format, path + ": kind tag and flow_steps disagree");
      model.synth = std::move(s);
      break;
    }
    case ModelKind::Baseline: {
      RunConfig mk = model.config;
      mk.frame_len = std::stoi(want(kv, "frame_len", path));
      mk.hop = std::stoi(want(kv, "hop", path));
      mk.n_fft = std::stoi(want(kv, "n_fft", path));
      mk.sample_rate = std::stoi(want(kv, "sample_rate", path));
      const int cond = std::stoi(want(kv, "cond", path));
      BaselineModel b = make_baseline(mk, cond, 0);
      require(b.stack.to_string() == want(kv, "stack", path), Status::Format,
              path + ": baseline stack does not match the format");
      require(b.bins == std::stoi(want(kv, "bins", path)), Status::Format,
              path + ": bins do not match n_fft");
      b.out_gain = std::stof(want(kv, "out_gain", path));
      b.trained = want(kv, "trained", path) == "1";
      ParamMap<float> expected = b.params;
      take_params(expected, b.params);
      model.baseline = std::move(b);
      break;
    }
  }
  return model;
}

}  // namespace intona
