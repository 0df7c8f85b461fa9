#pragma once

#include <string>

#include "config.hpp"
#include "phoneme.hpp"
#include "synth.hpp"

namespace intona {

enum class ModelKind { Classifier, Synth, SynthFlow, Baseline };

const char* model_kind_name(ModelKind k);
ModelKind model_kind_from_name(const std::string& s);

// Tagged union of everything the checkpoint format can carry, along with
// the training-time configuration snapshot.
struct AnyModel {
  ModelKind kind = ModelKind::Classifier;
  ClassifierModel classifier;
  SynthesizerModel synth;
  BaselineModel baseline;
  RunConfig config;

  static AnyModel of(ClassifierModel m, const RunConfig& cfg);
  static AnyModel of(SynthesizerModel m, const RunConfig& cfg);
  static AnyModel of(BaselineModel m, const RunConfig& cfg);
  static AnyModel of(const SynthModel& m, const RunConfig& cfg);

  SynthModel to_synth_model() const;  // Synth/SynthFlow/Baseline kinds only
};

// Byte format: 8 magic bytes, u32 version, three length-prefixed UTF-8
// strings (kind, model spec, config snapshot), then per-tensor records of
// length-prefixed name, u32 rank, u64 extents and raw little-endian f32
// values until end of file. Bad magic, wrong version and truncation raise
// distinct error codes.
void save_checkpoint(const AnyModel& model, const std::string& path);
AnyModel load_checkpoint(const std::string& path);

}  // namespace intona
