#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <thread>

#include "core/corpus.hpp"
#include "core/phoneme.hpp"
#include "oracles.hpp"

using namespace intona;

namespace {

RunConfig tiny_cfg() {
  RunConfig cfg;
  cfg.classifier_hidden = 32;
  cfg.classifier_epochs = 8;
  return cfg;
}

MelSpectrogram random_mel(const RunConfig& cfg, int frames, uint64_t seed) {
  MelSpectrogram m;
  m.mels = Mat<double>(frames, cfg.n_mels);
  Rng rng(seed, RngPurpose::Data);
  for (auto& v : m.mels.v) v = rng.uniform(-10.0, 4.0);
  m.frame_len = cfg.frame_len;
  m.hop = cfg.hop;
  m.n_fft = cfg.n_fft;
  m.sample_rate = cfg.sample_rate;
  return m;
}

}  // namespace

TEST_CASE("zero-parameter classifier emits uniform probability rows") {
  auto cfg = tiny_cfg();
  auto model = make_classifier(synthetic_inventory(), cfg.n_mels, 16, 3);
  for (auto& [name, m] : model.params) std::fill(m.v.begin(), m.v.end(), 0.0f);
  auto feats = classify_frames(model, random_mel(cfg, 5, 1));
  for (double p : feats.probs.v)
    CHECK(p == doctest::Approx(1.0 / 8).epsilon(1e-6));
}

TEST_CASE("classifier rows always lie on the simplex") {
  auto cfg = tiny_cfg();
  auto model = make_classifier(synthetic_inventory(), cfg.n_mels, 16, 5);
  for (uint64_t seed = 0; seed < 5; ++seed) {
    auto feats = classify_frames(model, random_mel(cfg, 6, seed));
    for (int f = 0; f < feats.frames(); ++f) {
      double sum = 0.0;
      for (int c = 0; c < feats.k(); ++c) {
        CHECK(feats.probs.at(f, c) > 0.0);
        sum += feats.probs.at(f, c);
      }
      CHECK(std::fabs(sum - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("concurrent inference on a shared frozen model is consistent") {
  auto cfg = tiny_cfg();
  auto model = make_classifier(synthetic_inventory(), cfg.n_mels, 16, 8);
  model.trained = true;
  const auto mel = random_mel(cfg, 10, 3);
  const auto reference = classify_frames(model, mel);
  std::vector<LinguisticFeatures> results(4);
  std::vector<std::thread> workers;
  for (auto& slot : results)
    workers.emplace_back(
        [&model, &mel, &slot] { slot = classify_frames(model, mel); });
  for (auto& w : workers) w.join();
  for (const auto& r : results)
    for (size_t i = 0; i < reference.probs.size(); ++i)
      CHECK(r.probs.v[i] == reference.probs.v[i]);
}

TEST_CASE("classifier rejects mismatched feature width") {
  auto cfg = tiny_cfg();
  auto model = make_classifier(synthetic_inventory(), cfg.n_mels, 16, 5);
  auto mel = random_mel(cfg, 4, 1);
  mel.mels = Mat<double>(4, cfg.n_mels + 1);
  CHECK_THROWS_AS(classify_frames(model, mel), Error);
}

TEST_CASE("classifier loss values") {
  LinguisticFeatures perfect;
  perfect.probs = Mat<double>(3, 4);
  perfect.probs.at(0, 2) = 1.0;
  perfect.probs.at(1, 0) = 1.0;
  perfect.probs.at(2, 3) = 1.0;
  PhonemeLabels labels;
  labels.idx = {2, 0, 3};
  CHECK(classifier_loss(perfect, labels) == 0.0);

  LinguisticFeatures uniform;
  uniform.probs = Mat<double>(5, 4);
  for (auto& v : uniform.probs.v) v = 0.25;
  PhonemeLabels l5;
  l5.idx = {0, 1, 2, 3, 0};
  CHECK(classifier_loss(uniform, l5) ==
        doctest::Approx(5.0 * std::log(4.0)).epsilon(1e-12));

  PhonemeLabels bad;
  bad.idx = {0, 1};
  CHECK_THROWS_AS(classifier_loss(uniform, bad), Error);
}

TEST_CASE("classifier loss matches a scalar-loop oracle") {
  Rng rng(3, RngPurpose::Data);
  LinguisticFeatures feats;
  feats.probs = Mat<double>(3, 6);
  for (int f = 0; f < 3; ++f) {
    double sum = 0.0;
    for (int c = 0; c < 6; ++c) {
      feats.probs.at(f, c) = rng.uniform(0.01, 1.0);
      sum += feats.probs.at(f, c);
    }
    for (int c = 0; c < 6; ++c) feats.probs.at(f, c) /= sum;
  }
  PhonemeLabels labels;
  labels.idx = {4, 0, 5};
  double expect = 0.0;
  for (int f = 0; f < 3; ++f)
    expect -= std::log(feats.probs.at(f, labels.idx[f]));
  CHECK(std::fabs(classifier_loss(feats, labels) - expect) < 1e-12);
}

TEST_CASE("classifier loss is invariant to frame permutations") {
  Rng rng(9, RngPurpose::Data);
  const int frames = 7, k = 5;
  LinguisticFeatures feats;
  feats.probs = Mat<double>(frames, k);
  PhonemeLabels labels;
  for (int f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (int c = 0; c < k; ++c) {
      feats.probs.at(f, c) = rng.uniform(0.05, 1.0);
      sum += feats.probs.at(f, c);
    }
    for (int c = 0; c < k; ++c) feats.probs.at(f, c) /= sum;
    labels.idx.push_back(static_cast<int>(rng.below(k)));
  }
  const double base = classifier_loss(feats, labels);
  std::vector<int> perm = {3, 0, 6, 1, 5, 2, 4};
  LinguisticFeatures pf;
  pf.probs = Mat<double>(frames, k);
  PhonemeLabels pl;
  for (int f = 0; f < frames; ++f) {
    for (int c = 0; c < k; ++c) pf.probs.at(f, c) = feats.probs.at(perm[f], c);
    pl.idx.push_back(labels.idx[perm[f]]);
  }
  CHECK(classifier_loss(pf, pl) == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("one epoch of training reduces the loss") {
  auto cfg = tiny_cfg();
  cfg.classifier_epochs = 2;
  auto corpus = generate_corpus(cfg, 55, 6);
  auto res = train_classifier(corpus, cfg, 4);
  REQUIRE(res.metrics.size() == 2);
  CHECK(res.metrics[1].mean_loss < res.metrics[0].mean_loss);
  CHECK(res.model.trained);
}

TEST_CASE("training with the same seed is bit-reproducible") {
  auto cfg = tiny_cfg();
  cfg.classifier_epochs = 3;
  auto corpus = generate_corpus(cfg, 56, 6);
  auto a = train_classifier(corpus, cfg, 12);
  auto b = train_classifier(corpus, cfg, 12);
  REQUIRE(a.metrics.size() == b.metrics.size());
  for (size_t e = 0; e < a.metrics.size(); ++e) {
    CHECK(a.metrics[e].mean_loss == b.metrics[e].mean_loss);
    CHECK(a.metrics[e].train_accuracy == b.metrics[e].train_accuracy);
    CHECK(a.metrics[e].heldout_accuracy == b.metrics[e].heldout_accuracy);
  }
  for (const auto& [name, pa] : a.model.params) {
    const auto& pb = b.model.params.at(name);
    for (size_t i = 0; i < pa.size(); ++i) CHECK(pa.v[i] == pb.v[i]);
  }
}

TEST_CASE("training rejects an empty corpus and misaligned labels") {
  auto cfg = tiny_cfg();
  Corpus empty;
  empty.inventory = synthetic_inventory();
  empty.frame_len = cfg.frame_len;
  empty.hop = cfg.hop;
  CHECK_THROWS_AS(train_classifier(empty, cfg, 1), Error);

  auto corpus = generate_corpus(cfg, 57, 3);
  corpus.utterances[1].frame_labels.idx.pop_back();
  CHECK_THROWS_AS(train_classifier(corpus, cfg, 1), Error);
}

TEST_CASE("confusion matrix counting identities") {
  auto cfg = tiny_cfg();
  cfg.classifier_epochs = 4;
  auto corpus = generate_corpus(cfg, 58, 8);
  auto res = train_classifier(corpus, cfg, 3);
  const auto confusion = confusion_matrix(res.model, corpus, cfg, Split::All);

  // Row sums equal per-class frame counts.
  std::vector<int64_t> class_frames(corpus.inventory.size(), 0);
  int64_t total = 0;
  for (const auto& u : corpus.utterances)
    for (int label : u.frame_labels.idx) {
      ++class_frames[label];
      ++total;
    }
  for (int i = 0; i < confusion.rows; ++i) {
    int64_t row = 0;
    for (int j = 0; j < confusion.cols; ++j) row += confusion.at(i, j);
    CHECK(row == class_frames[i]);
  }

  // top1 equals trace / total, exactly.
  int64_t diag = 0;
  for (int i = 0; i < confusion.rows; ++i) diag += confusion.at(i, i);
  const double acc = top1_accuracy(res.model, corpus, cfg, Split::All);
  CHECK(acc == static_cast<double>(diag) / static_cast<double>(total));
  CHECK(acc == top1_from_confusion(confusion));
}

TEST_CASE("uniform-output classifier scores the class-zero frame share") {
  auto cfg = tiny_cfg();
  auto corpus = generate_corpus(cfg, 59, 6);
  auto model = make_classifier(corpus.inventory, cfg.n_mels, 16, 1);
  for (auto& [name, m] : model.params) std::fill(m.v.begin(), m.v.end(), 0.0f);
  model.trained = true;
  // Uniform rows argmax to index 0, so accuracy is exactly the share of
  // frames labeled with class 0 (chance level on balanced data).
  int64_t zeros = 0, total = 0;
  for (const auto& u : corpus.utterances)
    for (int label : u.frame_labels.idx) {
      zeros += label == 0 ? 1 : 0;
      ++total;
    }
  const double acc = top1_accuracy(model, corpus, cfg, Split::All);
  CHECK(acc == static_cast<double>(zeros) / static_cast<double>(total));
}

TEST_CASE("an easily separable inventory trains to a clean diagonal") {
  RunConfig cfg = tiny_cfg();
  cfg.classifier_epochs = 12;
  cfg.early_stop_accuracy = 0.999;
  PhonemeInventory easy;
  easy.symbols = {"sil", "iy", "ss"};
  auto corpus = generate_corpus(cfg, 60, 10, easy, PitchFamily::Mixed);
  auto res = train_classifier(corpus, cfg, 2);
  const auto confusion = confusion_matrix(res.model, corpus, cfg, Split::All);
  const double acc = top1_from_confusion(confusion);
  CHECK(acc >= 0.97);
  // Perfect rows have empty off-diagonals.
  if (acc == 1.0) {
    for (int i = 0; i < confusion.rows; ++i)
      for (int j = 0; j < confusion.cols; ++j)
        if (i != j) CHECK(confusion.at(i, j) == 0);
  }
}

TEST_CASE("the deliberately confusable pair dominates the confusion matrix") {
  RunConfig cfg;
  cfg.classifier_hidden = 64;
  cfg.classifier_epochs = 14;
  cfg.early_stop_accuracy = 0.95;
  auto corpus = generate_corpus(cfg, 61, 60);
  auto res = train_classifier(corpus, cfg, 5);
  const auto confusion = confusion_matrix(res.model, corpus, cfg, Split::All);
  const int aa = corpus.inventory.index_of("aa");
  const int ah = corpus.inventory.index_of("ah");
  int64_t pair = confusion.at(aa, ah) + confusion.at(ah, aa);
  int64_t best_other = 0;
  for (int i = 0; i < confusion.rows; ++i)
    for (int j = i + 1; j < confusion.cols; ++j) {
      if ((i == aa && j == ah) || (i == ah && j == aa)) continue;
      best_other = std::max(best_other, confusion.at(i, j) + confusion.at(j, i));
    }
  INFO("pair ", pair, " best other ", best_other);
  CHECK(pair > best_other);
}
