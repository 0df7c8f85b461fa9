#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "net.hpp"
#include "signal.hpp"

namespace intona {

struct Corpus;

struct PhonemeInventory {
  std::vector<std::string> symbols;

  int size() const { return static_cast<int>(symbols.size()); }
  int index_of(const std::string& s) const;
  void validate() const;  // K >= 2, no duplicates
};

// Per-frame target indices aligned to a spectrogram's frames.
struct PhonemeLabels {
  std::vector<int> idx;
  int frames() const { return static_cast<int>(idx.size()); }
};

// Per-frame phoneme probability rows (the synthesizer condition).
struct LinguisticFeatures {
  Mat<double> probs;  // frames x K
  int frames() const { return probs.rows; }
  int k() const { return probs.cols; }
};

// Frame classifier: two dense layers, a unidirectional gated recurrence
// carrying the previous hidden state, and a softmax head. Inputs are
// normalized per utterance (mean/variance over the whole log-mel matrix),
// which cancels global gain and emphasis scaling between natural and
// vocoded audio.
struct ClassifierModel {
  PhonemeInventory inventory;
  StackSpec stack;
  ParamMap<float> params;
  bool trained = false;
};

ClassifierModel make_classifier(const PhonemeInventory& inventory, int n_mels,
                                int hidden, uint64_t seed);

LinguisticFeatures classify_frames(const ClassifierModel& model,
                                   const MelSpectrogram& frames);

// Sum over frames of the per-frame cross entropy.
double classifier_loss(const LinguisticFeatures& probs,
                       const PhonemeLabels& labels);

struct EpochMetrics {
  double mean_loss = 0.0;      // mean per-frame cross entropy over the epoch
  double train_accuracy = 0.0;
  double heldout_accuracy = 0.0;
};

struct TrainClassifierResult {
  ClassifierModel model;
  std::vector<EpochMetrics> metrics;
};

// Minimizes the summed cross entropy over the training split, one utterance
// per optimizer step. Deterministic given the seed.
TrainClassifierResult train_classifier(const Corpus& corpus,
                                       const RunConfig& cfg, uint64_t seed);

enum class Split { All, Train, Heldout };

// Entry (i, j) counts frames with true class i predicted as j.
Mat<int64_t> confusion_matrix(const ClassifierModel& model,
                              const Corpus& corpus, const RunConfig& cfg,
                              Split split);

double top1_accuracy(const ClassifierModel& model, const Corpus& corpus,
                     const RunConfig& cfg, Split split);
double top1_from_confusion(const Mat<int64_t>& confusion);

// Per-utterance normalized log-mel features.
Mat<float> classifier_features(const MelSpectrogram& mel);

}  // namespace intona
