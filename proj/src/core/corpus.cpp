#include "corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "rng.hpp"
#include "wav.hpp"

namespace fs = std::filesystem;

namespace intona {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct PhonemeRender {
  const char* symbol;
  bool voiced;
  // Voiced: three formant frequencies. Unvoiced: center frequency in f1.
  double f1, f2, f3;
  double bw1, bw2, bw3;
  double amp;
};

// aa and ah sit deliberately close in (F1, F2); every other pair is far
// apart in at least one formant.
const PhonemeRender kRenders[] = {
    {"sil", false, 0, 0, 0, 0, 0, 0, 0.0},
    {"aa", true, 730, 1090, 2440, 90, 110, 160, 0.55},
    {"ah", true, 706, 1113, 2420, 90, 110, 160, 0.55},
    {"eh", true, 530, 1840, 2480, 90, 110, 160, 0.55},
    {"iy", true, 270, 2290, 3010, 70, 100, 160, 0.50},
    {"uw", true, 300, 870, 2240, 70, 100, 160, 0.50},
    {"ss", false, 5600, 0, 0, 1600, 0, 0, 0.30},
    {"sh", false, 2700, 0, 0, 1000, 0, 0, 0.32},
};
constexpr int kNumPhonemes = 8;
constexpr int kSilIndex = 0;

// Two-pole resonator, unnormalized gain; callers rescale the result.
void resonate(std::vector<double>& x, double freq, double bw, int sr) {
  const double r = std::exp(-kPi * bw / sr);
  const double a1 = 2.0 * r * std::cos(2.0 * kPi * freq / sr);
  const double a2 = -r * r;
  double y1 = 0.0, y2 = 0.0;
  for (double& v : x) {
    const double y = v + a1 * y1 + a2 * y2;
    y2 = y1;
    y1 = y;
    v = y;
  }
}

void normalize_to(std::vector<double>& x, double amp) {
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::fabs(v));
  if (peak <= 0.0) return;
  const double s = amp / peak;
  for (double& v : x) v *= s;
}

void apply_fades(std::vector<double>& x, int fade) {
  const int n = static_cast<int>(x.size());
  const int f = std::min(fade, n / 2);
  for (int i = 0; i < f; ++i) {
    const double g = 0.5 * (1.0 - std::cos(kPi * i / f));
    x[i] *= g;
    x[n - 1 - i] *= g;
  }
}

struct Contour {
  int family = 0;  // 0 flat, 1 rising, 2 falling, 3 peaked
  double lo = 0.0, hi = 0.0;

  double at(double t) const {
    switch (family) {
      case 0: return lo;
      case 1: return lo + (hi - lo) * t;
      case 2: return hi - (hi - lo) * t;
      default:
        return t < 0.5 ? lo + (hi - lo) * (2.0 * t)
                       : hi - (hi - lo) * (2.0 * (t - 0.5));
    }
  }
};

}  // namespace

size_t Corpus::train_count() const {
  size_t n = 0;
  for (const auto& u : utterances) n += u.heldout ? 0 : 1;
  return n;
}

size_t Corpus::heldout_count() const {
  return utterances.size() - train_count();
}

PhonemeLabels frame_labels_from_segments(const std::vector<LabelSegment>& segs,
                                         size_t n_samples, int frame_len,
                                         int hop, const std::string& context) {
  require(n_samples >= static_cast<size_t>(frame_len), Status::InvalidArgument,
          context + ": audio shorter than one analysis frame");
  const int frames =
      static_cast<int>((n_samples - frame_len) / hop) + 1;
  PhonemeLabels labels;
  labels.idx.resize(frames, -1);
  for (int f = 0; f < frames; ++f) {
    const int64_t fs = static_cast<int64_t>(f) * hop;
    const int64_t fe = fs + frame_len;
    int64_t best_overlap = 0;
    int best = -1;
    for (const auto& seg : segs) {
      const int64_t ov = std::min(fe, seg.end) - std::max(fs, seg.start);
      if (ov > best_overlap) {
        best_overlap = ov;
        best = seg.phoneme;
      }
    }
    require(best >= 0, Status::Format,
            context + ": frame " + std::to_string(f) +
                " overlaps no labeled segment");
    labels.idx[f] = best;
  }
  return labels;
}

PhonemeInventory synthetic_inventory() {
  PhonemeInventory inv;
  for (const auto& r : kRenders) inv.symbols.push_back(r.symbol);
  inv.validate();
  return inv;
}

Corpus generate_corpus(const RunConfig& cfg, uint64_t seed, int n_utterances,
                       const PhonemeInventory& inventory, PitchFamily family) {
  require(n_utterances >= 1, Status::InvalidArgument,
          "generate_corpus: need at least one utterance");
  cfg.validate();
  inventory.validate();

  // Resolve every inventory symbol against the renderable table.
  std::vector<const PhonemeRender*> render;
  int sil = -1;
  for (size_t i = 0; i < inventory.symbols.size(); ++i) {
    const PhonemeRender* found = nullptr;
    for (const auto& r : kRenders)
      if (inventory.symbols[i] == r.symbol) found = &r;
    require(found != nullptr, Status::InvalidArgument,
            "generate_corpus: symbol '" + inventory.symbols[i] +
                "' is not renderable");
    if (inventory.symbols[i] == "sil") sil = static_cast<int>(i);
    render.push_back(found);
  }
  require(sil >= 0, Status::InvalidArgument,
          "generate_corpus: inventory must contain sil");
  std::vector<int> content_symbols;
  for (size_t i = 0; i < render.size(); ++i)
    if (static_cast<int>(i) != sil) content_symbols.push_back(static_cast<int>(i));
  require(!content_symbols.empty(), Status::InvalidArgument,
          "generate_corpus: inventory needs a non-sil phoneme");

  Corpus corpus;
  corpus.inventory = inventory;
  corpus.frame_len = cfg.frame_len;
  corpus.hop = cfg.hop;
  const int sr = cfg.sample_rate;
  const int fade = sr / 100;  // 10 ms

  for (int u = 0; u < n_utterances; ++u) {
    Rng rng = Rng(seed, RngPurpose::Data).fork(u);
    Utterance utt;
    utt.wave.sample_rate = sr;
    utt.speaker = "target";
    utt.heldout = (u % 10) == 9;

    // Phoneme sequence: leading and trailing silence around 4..6 content
    // segments with no immediate repeats.
    std::vector<int> seq = {sil};
    const int content = 4 + static_cast<int>(rng.below(3));
    int prev = -1;
    for (int i = 0; i < content; ++i) {
      int p;
      do {
        p = content_symbols[rng.below(content_symbols.size())];
      } while (p == prev && content_symbols.size() > 1);
      seq.push_back(p);
      prev = p;
    }
    seq.push_back(sil);

    std::vector<int> durations;  // samples
    for (size_t i = 0; i < seq.size(); ++i) {
      const auto& r = *render[seq[i]];
      double ms;
      if (seq[i] == sil)
        ms = rng.uniform(80.0, 140.0);
      else if (r.voiced)
        ms = rng.uniform(140.0, 280.0);
      else
        ms = rng.uniform(120.0, 200.0);
      durations.push_back(static_cast<int>(ms * sr / 1000.0));
    }
    int64_t total = 0;
    for (int d : durations) total += d;

    Contour contour;
    contour.family = family == PitchFamily::Mixed
                         ? static_cast<int>(rng.below(4))
                         : static_cast<int>(family);
    const double base = rng.uniform(110.0, 200.0);
    const double ratio = rng.uniform(1.25, 1.5);
    contour.lo = base;
    contour.hi = base * ratio;

    utt.wave.samples.assign(total, 0.0);
    int64_t pos = 0;
    for (size_t i = 0; i < seq.size(); ++i) {
      const auto& r = *render[seq[i]];
      const int n = durations[i];
      LabelSegment seg{pos, pos + n, seq[i]};
      utt.segments.push_back(seg);
      if (seq[i] != sil) {
        std::vector<double> x(n, 0.0);
        if (r.voiced) {
          double phase = 1.0;  // emit a pulse on the first sample
          for (int j = 0; j < n; ++j) {
            const double t = static_cast<double>(pos + j) / total;
            phase += contour.at(t) / sr;
            if (phase >= 1.0) {
              phase -= 1.0;
              x[j] = 1.0;
            }
            x[j] += 0.02 * rng.uniform(-1.0, 1.0);
          }
          resonate(x, r.f1, r.bw1, sr);
          resonate(x, r.f2, r.bw2, sr);
          resonate(x, r.f3, r.bw3, sr);
        } else {
          for (int j = 0; j < n; ++j) x[j] = rng.uniform(-1.0, 1.0);
          resonate(x, r.f1, r.bw1, sr);
        }
        normalize_to(x, r.amp);
        apply_fades(x, fade);
        for (int j = 0; j < n; ++j) utt.wave.samples[pos + j] = x[j];
      }
      pos += n;
    }

    utt.frame_labels = frame_labels_from_segments(
        utt.segments, utt.wave.samples.size(), cfg.frame_len, cfg.hop,
        "generate_corpus utterance " + std::to_string(u));
    utt.f0_truth.resize(utt.frame_labels.frames(), 0.0);
    for (int f = 0; f < utt.frame_labels.frames(); ++f) {
      const int label = utt.frame_labels.idx[f];
      if (!render[label]->voiced) continue;
      const double center =
          static_cast<double>(f) * cfg.hop + cfg.frame_len / 2.0;
      utt.f0_truth[f] = contour.at(center / total);
    }
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

Corpus generate_corpus(const RunConfig& cfg, uint64_t seed, int n_utterances) {
  return generate_corpus(cfg, seed, n_utterances, synthetic_inventory(),
                         PitchFamily::Mixed);
}

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<LabelSegment> parse_label_file(const std::string& path,
                                           const PhonemeInventory& inv,
                                           int64_t n_samples) {
  std::ifstream in(path);
  require(in.good(), Status::Io, "cannot open label file: " + path);
  std::vector<LabelSegment> segs;
  std::string line;
  int line_no = 0;
  int64_t prev_end = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    std::istringstream is(t);
    int64_t start = 0, end = 0;
    std::string symbol, extra;
    const std::string where = path + ":" + std::to_string(line_no);
    require(static_cast<bool>(is >> start >> end >> symbol), Status::Format,
            where + ": expected 'start end symbol'");
    require(!(is >> extra), Status::Format, where + ": trailing tokens");
    require(start >= 0 && start < end, Status::Format,
            where + ": need 0 <= start < end");
    require(start >= prev_end, Status::Format,
            where + ": segments must be sorted and non-overlapping");
    require(end <= n_samples, Status::Format,
            where + ": segment extends past the audio (" +
                std::to_string(n_samples) + " samples)");
    const int p = inv.index_of(symbol);
    require(p >= 0, Status::Format, where + ": unknown phoneme: " + symbol);
    segs.push_back({start, end, p});
    prev_end = end;
  }
  require(!segs.empty(), Status::Format, "label file is empty: " + path);
  return segs;
}

PhonemeInventory read_inventory(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), Status::Io, "cannot open inventory file: " + path);
  PhonemeInventory inv;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (!t.empty()) inv.symbols.push_back(t);
  }
  inv.validate();
  return inv;
}

std::vector<double> read_f0_file(const std::string& path) {
  std::ifstream in(path);
  std::vector<double> f0;
  double v;
  while (in >> v) f0.push_back(v);
  return f0;
}

}  // namespace

Corpus load_corpus(const std::string& audio_dir, const std::string& label_dir,
                   const std::string& inventory_path, const RunConfig& cfg) {
  cfg.validate();
  Corpus corpus;
  corpus.inventory = read_inventory(inventory_path);
  corpus.frame_len = cfg.frame_len;
  corpus.hop = cfg.hop;

  std::vector<std::string> stems;
  if (fs::is_directory(audio_dir)) {
    for (const auto& e : fs::directory_iterator(audio_dir))
      if (e.is_regular_file() && e.path().extension() == ".wav")
        stems.push_back(e.path().stem().string());
  }
  std::sort(stems.begin(), stems.end());
  require(!stems.empty(), Status::InvalidArgument,
          "no utterances: no .wav files under " + audio_dir);

  for (size_t i = 0; i < stems.size(); ++i) {
    const std::string wav_path = audio_dir + "/" + stems[i] + ".wav";
    const std::string label_path = label_dir + "/" + stems[i] + ".txt";
    require(fs::exists(label_path), Status::Io,
            "missing label file for " + wav_path + " (expected " + label_path +
                ")");
    Utterance utt;
    utt.wave = read_wav(wav_path);
    require(utt.wave.sample_rate == cfg.sample_rate, Status::Format,
            wav_path + ": sample rate " + std::to_string(utt.wave.sample_rate) +
                " does not match configured " +
                std::to_string(cfg.sample_rate));
    utt.segments = parse_label_file(label_path, corpus.inventory,
                                    static_cast<int64_t>(utt.wave.samples.size()));
    utt.frame_labels =
        frame_labels_from_segments(utt.segments, utt.wave.samples.size(),
                                   cfg.frame_len, cfg.hop, wav_path);
    utt.speaker = stems[i];
    utt.heldout = (i % 10) == 9;
    corpus.utterances.push_back(std::move(utt));
  }
  return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& dir) {
  fs::create_directories(fs::path(dir) / "wav");
  fs::create_directories(fs::path(dir) / "labels");
  fs::create_directories(fs::path(dir) / "f0");
  {
    std::ofstream inv((fs::path(dir) / "inventory.txt").string(),
                      std::ios::trunc);
    require(inv.good(), Status::Io, "cannot write inventory under " + dir);
    for (const auto& s : corpus.inventory.symbols) inv << s << "\n";
  }
  char name[32];
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    const auto& u = corpus.utterances[i];
    std::snprintf(name, sizeof name, "utt_%04zu", i);
    write_wav((fs::path(dir) / "wav" / (std::string(name) + ".wav")).string(),
              u.wave);
    std::ofstream lab(
        (fs::path(dir) / "labels" / (std::string(name) + ".txt")).string(),
        std::ios::trunc);
    for (const auto& seg : u.segments)
      lab << seg.start << " " << seg.end << " "
          << corpus.inventory.symbols[seg.phoneme] << "\n";
    if (!u.f0_truth.empty()) {
      std::ofstream f0(
          (fs::path(dir) / "f0" / (std::string(name) + ".txt")).string(),
          std::ios::trunc);
      char buf[32];
      for (double v : u.f0_truth) {
        std::snprintf(buf, sizeof buf, "%.6f", v);
        f0 << buf << "\n";
      }
    }
  }
}

Corpus load_corpus_dir(const std::string& dir, const RunConfig& cfg) {
  Corpus corpus = load_corpus(dir + "/wav", dir + "/labels",
                              dir + "/inventory.txt", cfg);
  for (size_t i = 0; i < corpus.utterances.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "utt_%04zu", i);
    const std::string f0_path = dir + "/f0/" + std::string(name) + ".txt";
    if (fs::exists(f0_path))
      corpus.utterances[i].f0_truth = read_f0_file(f0_path);
  }
  return corpus;
}

}  // namespace intona
