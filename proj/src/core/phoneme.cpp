#include "phoneme.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "corpus.hpp"

namespace intona {

int PhonemeInventory::index_of(const std::string& s) const {
  for (size_t i = 0; i < symbols.size(); ++i)
    if (symbols[i] == s) return static_cast<int>(i);
  return -1;
}

void PhonemeInventory::validate() const {
  require(symbols.size() >= 2, Status::InvalidArgument,
          "phoneme inventory needs at least 2 symbols");
  std::set<std::string> seen(symbols.begin(), symbols.end());
  require(seen.size() == symbols.size(), Status::InvalidArgument,
          "phoneme inventory has duplicate symbols");
}

ClassifierModel make_classifier(const PhonemeInventory& inventory, int n_mels,
                                int hidden, uint64_t seed) {
  inventory.validate();
  ClassifierModel model;
  model.inventory = inventory;
  model.stack = StackSpec::parse(
      "in:" + std::to_string(n_mels) + "|dense:" + std::to_string(hidden) +
      ":relu|dense:" + std::to_string(hidden) + ":relu|gru:" +
      std::to_string(hidden) + "|dense:" + std::to_string(inventory.size()) +
      ":softmax");
  Rng rng(seed, RngPurpose::Init);
  init_stack_params(model.stack, "cls.", rng, model.params);
  return model;
}

Mat<float> classifier_features(const MelSpectrogram& mel) {
  double mean = 0.0;
  for (double v : mel.mels.v) mean += v;
  mean /= static_cast<double>(mel.mels.size());
  double var = 0.0;
  for (double v : mel.mels.v) var += (v - mean) * (v - mean);
  var /= static_cast<double>(mel.mels.size());
  const double scale = 1.0 / std::sqrt(std::max(var, 1e-4));
  Mat<float> x(mel.frames(), mel.n_mels());
  for (size_t i = 0; i < x.size(); ++i)
    x.v[i] = static_cast<float>((mel.mels.v[i] - mean) * scale);
  return x;
}

LinguisticFeatures classify_frames(const ClassifierModel& model,
                                   const MelSpectrogram& frames) {
  require(frames.n_mels() == model.stack.input_width, Status::ShapeMismatch,
          "classify_frames: feature width " + std::to_string(frames.n_mels()) +
              " does not match model input " +
              std::to_string(model.stack.input_width));
  const auto out = stack_forward(model.params, model.stack, "cls.",
                                 classifier_features(frames));
  LinguisticFeatures feats;
  feats.probs = out.output.template cast<double>();
  return feats;
}

double classifier_loss(const LinguisticFeatures& probs,
                       const PhonemeLabels& labels) {
  require(probs.frames() == labels.frames(), Status::ShapeMismatch,
          "classifier_loss: " + std::to_string(probs.frames()) +
              " probability rows vs " + std::to_string(labels.frames()) +
              " labels");
  return cross_entropy(probs.probs, labels.idx);
}

namespace {

int argmax_row(const Mat<float>& m, int r) {
  int best = 0;
  for (int c = 1; c < m.cols; ++c)
    if (m.at(r, c) > m.at(r, best)) best = c;
  return best;
}

bool in_split(const Utterance& u, Split split) {
  switch (split) {
    case Split::All: return true;
    case Split::Train: return !u.heldout;
    case Split::Heldout: return u.heldout;
  }
  return true;
}

// Cached standardized features; mel analysis is constant across epochs.
struct PreppedUtterance {
  Mat<float> feats;
  const PhonemeLabels* labels = nullptr;
  bool heldout = false;
};

std::vector<PreppedUtterance> prep(const Corpus& corpus, const RunConfig& cfg) {
  require(corpus.frame_len == cfg.frame_len && corpus.hop == cfg.hop,
          Status::InvalidArgument,
          "corpus framing does not match the configuration");
  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  std::vector<PreppedUtterance> out;
  out.reserve(corpus.utterances.size());
  for (const auto& u : corpus.utterances) {
    const auto mel = to_mel(stft(u.wave, cfg.frame_len, cfg.hop, cfg.n_fft), fb);
    require(mel.frames() == u.frame_labels.frames(), Status::ShapeMismatch,
            "utterance labels are not aligned to its analysis frames");
    PreppedUtterance p;
    p.feats = classifier_features(mel);
    p.labels = &u.frame_labels;
    p.heldout = u.heldout;
    out.push_back(std::move(p));
  }
  return out;
}

double accuracy_over(const std::vector<PreppedUtterance>& data,
                     const ClassifierModel& model, bool heldout) {
  int64_t hits = 0, total = 0;
  for (const auto& u : data) {
    if (u.heldout != heldout) continue;
    const auto out = stack_forward(model.params, model.stack, "cls.", u.feats);
    for (int f = 0; f < out.output.rows; ++f) {
      hits += argmax_row(out.output, f) == u.labels->idx[f] ? 1 : 0;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(hits) / total : 0.0;
}

}  // namespace

TrainClassifierResult train_classifier(const Corpus& corpus,
                                       const RunConfig& cfg, uint64_t seed) {
  require(!corpus.utterances.empty(), Status::InvalidArgument,
          "train_classifier: corpus is empty");
  cfg.validate();
  TrainClassifierResult result;
  result.model = make_classifier(corpus.inventory, cfg.n_mels,
                                 cfg.classifier_hidden, seed);
  ClassifierModel& model = result.model;
  auto data = prep(corpus, cfg);

  std::vector<size_t> train_ix;
  for (size_t i = 0; i < data.size(); ++i)
    if (!data[i].heldout) train_ix.push_back(i);
  require(!train_ix.empty(), Status::InvalidArgument,
          "train_classifier: no training utterances");

  AdamState<float> opt;
  const float lr = static_cast<float>(cfg.learning_rate);
  Rng order_rng(seed, RngPurpose::Data);
  ParamMap<float> best_params = model.params;
  double best_score = -1.0;
  bool has_heldout = false;
  for (const auto& u : data) has_heldout = has_heldout || u.heldout;
  for (int epoch = 0; epoch < cfg.classifier_epochs; ++epoch) {
    Rng erng = order_rng.fork(epoch);
    std::vector<size_t> order = train_ix;
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[erng.below(i)]);

    double loss_sum = 0.0;
    int64_t frames = 0, hits = 0;
    for (size_t ix : order) {
      const auto& u = data[ix];
      Tape<float> tp;
      auto ids = bind_params(tp, model.params);
      auto out = stack_fwd(tp, model.stack, ids, "cls.", tp.constant(u.feats));
      const int loss = tp.cross_entropy(out.out, u.labels->idx);
      loss_sum += tp.val(loss).v[0];
      frames += u.feats.rows;
      const auto& probs = tp.val(out.out);
      for (int f = 0; f < probs.rows; ++f)
        hits += argmax_row(probs, f) == u.labels->idx[f] ? 1 : 0;
      tp.backward(loss);
      adam_step(model.params, collect_grads(tp, ids), opt, lr);
    }
    EpochMetrics m;
    m.mean_loss = loss_sum / static_cast<double>(frames);
    m.train_accuracy = static_cast<double>(hits) / static_cast<double>(frames);
    m.heldout_accuracy = accuracy_over(data, model, true);
    result.metrics.push_back(m);
    const double score = has_heldout ? m.heldout_accuracy : m.train_accuracy;
    if (score > best_score) {
      best_score = score;
      best_params = model.params;
    }
    if (cfg.early_stop_accuracy > 0.0 && score >= cfg.early_stop_accuracy)
      break;
  }
  // Keep the best held-out epoch's parameters.
  model.params = std::move(best_params);
  model.trained = true;
  return result;
}

Mat<int64_t> confusion_matrix(const ClassifierModel& model,
                              const Corpus& corpus, const RunConfig& cfg,
                              Split split) {
  const int k = model.inventory.size();
  Mat<int64_t> confusion(k, k);
  const auto fb = mel_filterbank(cfg.sample_rate, cfg.n_fft, cfg.n_mels,
                                 cfg.mel_fmin, cfg.mel_fmax);
  for (const auto& u : corpus.utterances) {
    if (!in_split(u, split)) continue;
    const auto mel =
        to_mel(stft(u.wave, cfg.frame_len, cfg.hop, cfg.n_fft), fb);
    const auto feats = classify_frames(model, mel);
    for (int f = 0; f < feats.frames(); ++f) {
      int best = 0;
      for (int c = 1; c < feats.k(); ++c)
        if (feats.probs.at(f, c) > feats.probs.at(f, best)) best = c;
      ++confusion.at(u.frame_labels.idx[f], best);
    }
  }
  return confusion;
}

double top1_from_confusion(const Mat<int64_t>& confusion) {
  int64_t diag = 0, total = 0;
  for (int i = 0; i < confusion.rows; ++i)
    for (int j = 0; j < confusion.cols; ++j) {
      total += confusion.at(i, j);
      if (i == j) diag += confusion.at(i, j);
    }
  return total > 0 ? static_cast<double>(diag) / static_cast<double>(total)
                   : 0.0;
}

double top1_accuracy(const ClassifierModel& model, const Corpus& corpus,
                     const RunConfig& cfg, Split split) {
  return top1_from_confusion(confusion_matrix(model, corpus, cfg, split));
}

}  // namespace intona
