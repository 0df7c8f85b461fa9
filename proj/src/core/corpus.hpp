#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "config.hpp"
#include "phoneme.hpp"
#include "signal.hpp"

namespace intona {

// Half-open sample interval carrying one phoneme.
struct LabelSegment {
  int64_t start = 0;
  int64_t end = 0;
  int phoneme = 0;
};

struct Utterance {
  Waveform wave;
  std::vector<LabelSegment> segments;  // sorted, non-overlapping
  PhonemeLabels frame_labels;          // majority overlap per analysis frame
  std::vector<double> f0_truth;        // per frame, 0 = unvoiced; may be empty
  std::string speaker;
  bool heldout = false;
};

struct Corpus {
  PhonemeInventory inventory;
  std::vector<Utterance> utterances;
  int frame_len = 0;
  int hop = 0;

  size_t train_count() const;
  size_t heldout_count() const;
};

// Majority-overlap frame labeling. Throws if a frame is covered by no
// segment at all.
PhonemeLabels frame_labels_from_segments(const std::vector<LabelSegment>& segs,
                                         size_t n_samples, int frame_len,
                                         int hop, const std::string& context);

// The fixed 8-symbol synthetic inventory. aa/ah share close formants on
// purpose so the classifier exhibits a dominant confusion pair.
PhonemeInventory synthetic_inventory();

enum class PitchFamily { Flat, Rising, Falling, Peaked, Mixed };

// Formant-synthesized utterances over random phoneme sequences and pitch
// contours, with exact segment labels and the true per-frame f0 contour.
// Bit-reproducible per seed. The inventory may be any subset of the
// renderable symbols that keeps sil plus at least one other phoneme.
Corpus generate_corpus(const RunConfig& cfg, uint64_t seed, int n_utterances,
                       const PhonemeInventory& inventory,
                       PitchFamily family = PitchFamily::Mixed);
Corpus generate_corpus(const RunConfig& cfg, uint64_t seed, int n_utterances);

// TIMIT-style ingestion: every wav in audio_dir needs a label file with the
// same stem in label_dir; label lines are "start_sample end_sample symbol".
Corpus load_corpus(const std::string& audio_dir, const std::string& label_dir,
                   const std::string& inventory_path, const RunConfig& cfg);

// Writes wav/, labels/, f0/ and inventory.txt under dir.
void save_corpus(const Corpus& corpus, const std::string& dir);

// Convenience for the directory layout save_corpus produces.
Corpus load_corpus_dir(const std::string& dir, const RunConfig& cfg);

}  // namespace intona
