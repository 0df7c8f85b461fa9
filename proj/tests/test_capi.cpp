#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "intona.h"

namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "intona_test_capi" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

struct Config {
  intona_config* ptr = nullptr;
  Config() { REQUIRE(intona_config_create(&ptr) == INTONA_OK); }
  ~Config() { intona_config_free(ptr); }
  void set(const char* k, const char* v) {
    REQUIRE(intona_config_set(ptr, k, v) == INTONA_OK);
  }
};

// Small-but-trainable settings shared by the heavier cases.
void tiny(Config& cfg) {
  cfg.set("corpus_utterances", "8");
  cfg.set("classifier_hidden", "24");
  cfg.set("classifier_epochs", "5");
  cfg.set("synth_hidden", "16");
  cfg.set("synth_epochs", "3");
  cfg.set("latent_dim", "4");
  cfg.set("gl_iters", "8");
}

}  // namespace

TEST_CASE("status names and version are stable strings") {
  CHECK(std::string(intona_version()) == "1.0.0");
  CHECK(std::string(intona_status_name(INTONA_OK)) == "ok");
  CHECK(std::string(intona_status_name(INTONA_ERR_BAD_MAGIC)) == "bad magic");
  CHECK(std::string(intona_status_name(1234)) == "unknown status");
}

TEST_CASE("null arguments are rejected with a message") {
  CHECK(intona_config_create(nullptr) == INTONA_ERR_INVALID_ARGUMENT);
  CHECK(std::strlen(intona_last_error()) > 0);
  CHECK(intona_config_load(nullptr, nullptr) == INTONA_ERR_INVALID_ARGUMENT);
  CHECK(intona_corpus_generate(nullptr, 1, 1, nullptr) ==
        INTONA_ERR_INVALID_ARGUMENT);
  CHECK(intona_model_load(nullptr, nullptr) == INTONA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config set/get round trip and rejection of bad values") {
  Config cfg;
  cfg.set("latent_dim", "8");
  char buf[32];
  REQUIRE(intona_config_get(cfg.ptr, "latent_dim", buf, sizeof buf) ==
          INTONA_OK);
  CHECK(std::string(buf) == "8");
  CHECK(intona_config_set(cfg.ptr, "no_such_key", "1") == INTONA_ERR_FORMAT);
  CHECK(intona_config_set(cfg.ptr, "hop", "4096") ==
        INTONA_ERR_INVALID_ARGUMENT);
  // Rejected values must not stick.
  REQUIRE(intona_config_get(cfg.ptr, "hop", buf, sizeof buf) == INTONA_OK);
  CHECK(std::string(buf) == "200");
  char tiny_buf[2];
  CHECK(intona_config_get(cfg.ptr, "sample_rate", tiny_buf, sizeof tiny_buf) ==
        INTONA_ERR_INVALID_ARGUMENT);
}

TEST_CASE("missing files map onto io / format statuses") {
  Config cfg;
  intona_config* loaded = nullptr;
  CHECK(intona_config_load("/no/such/config.cfg", &loaded) == INTONA_ERR_IO);
  intona_model* model = nullptr;
  CHECK(intona_model_load("/no/such/model.ckpt", &model) == INTONA_ERR_IO);
  auto dir = temp_dir("badckpt");
  const auto junk = (dir / "junk.ckpt").string();
  std::ofstream(junk) << "definitely not a checkpoint, but long enough";
  CHECK(intona_model_load(junk.c_str(), &model) == INTONA_ERR_BAD_MAGIC);
}

TEST_CASE("corpus generate, save, reload and size") {
  Config cfg;
  tiny(cfg);
  intona_corpus* corpus = nullptr;
  REQUIRE(intona_corpus_generate(cfg.ptr, 11, 8, &corpus) == INTONA_OK);
  int n = 0;
  REQUIRE(intona_corpus_size(corpus, &n) == INTONA_OK);
  CHECK(n == 8);
  auto dir = temp_dir("corpus");
  REQUIRE(intona_corpus_save(corpus, dir.string().c_str()) == INTONA_OK);
  intona_corpus* reloaded = nullptr;
  REQUIRE(intona_corpus_load_dir(dir.string().c_str(), cfg.ptr, &reloaded) ==
          INTONA_OK);
  REQUIRE(intona_corpus_size(reloaded, &n) == INTONA_OK);
  CHECK(n == 8);
  intona_corpus* via_parts = nullptr;
  REQUIRE(intona_corpus_load((dir / "wav").string().c_str(),
                             (dir / "labels").string().c_str(),
                             (dir / "inventory.txt").string().c_str(), cfg.ptr,
                             &via_parts) == INTONA_OK);
  intona_corpus_free(via_parts);
  intona_corpus_free(reloaded);
  intona_corpus_free(corpus);
}

TEST_CASE("train, evaluate, checkpoint and reload through the C surface") {
  Config cfg;
  tiny(cfg);
  intona_corpus* corpus = nullptr;
  REQUIRE(intona_corpus_generate(cfg.ptr, 21, 8, &corpus) == INTONA_OK);

  intona_model* cls = nullptr;
  REQUIRE(intona_train_classifier(corpus, cfg.ptr, 3, &cls) == INTONA_OK);
  char kind[32];
  REQUIRE(intona_model_kind(cls, kind, sizeof kind) == INTONA_OK);
  CHECK(std::string(kind) == "classifier");

  double accuracy = -1.0;
  int k = 0;
  std::vector<int64_t> confusion(8 * 8, -1);
  REQUIRE(intona_eval_classifier(cls, corpus, cfg.ptr, 0, &accuracy,
                                 confusion.data(), &k) == INTONA_OK);
  CHECK(k == 8);
  CHECK(accuracy >= 0.0);
  CHECK(accuracy <= 1.0);
  int64_t total = 0;
  for (int64_t c : confusion) {
    CHECK(c >= 0);
    total += c;
  }
  CHECK(total > 0);

  // Training the synthesizer against a non-classifier handle is an error.
  intona_model* synth = nullptr;
  REQUIRE(intona_train_synth(corpus, cls, cfg.ptr, 4, INTONA_SYNTH_CVAE,
                             &synth) == INTONA_OK);
  REQUIRE(intona_model_kind(synth, kind, sizeof kind) == INTONA_OK);
  CHECK(std::string(kind) == "synth");
  intona_model* misuse = nullptr;
  CHECK(intona_train_synth(corpus, synth, cfg.ptr, 4, INTONA_SYNTH_CVAE,
                           &misuse) == INTONA_ERR_BAD_STATE);
  CHECK(intona_train_synth(corpus, cls, cfg.ptr, 4, 7, &misuse) ==
        INTONA_ERR_INVALID_ARGUMENT);

  auto dir = temp_dir("models");
  const auto cls_path = (dir / "cls.ckpt").string();
  REQUIRE(intona_model_save(cls, cls_path.c_str()) == INTONA_OK);
  intona_model* back = nullptr;
  REQUIRE(intona_model_load(cls_path.c_str(), &back) == INTONA_OK);
  double accuracy2 = -2.0;
  REQUIRE(intona_eval_classifier(back, corpus, cfg.ptr, 0, &accuracy2, nullptr,
                                 nullptr) == INTONA_OK);
  CHECK(accuracy2 == accuracy);

  intona_model_free(back);
  intona_model_free(synth);
  intona_model_free(cls);
  intona_corpus_free(corpus);
}

TEST_CASE("file-level runs produce artifacts end to end") {
  Config cfg;
  tiny(cfg);
  auto root = temp_dir("runs");
  const auto corpus_dir = (root / "corpus").string();
  REQUIRE(intona_run_gen_corpus(cfg.ptr, corpus_dir.c_str()) == INTONA_OK);
  const auto cls_dir = (root / "cls").string();
  REQUIRE(intona_run_train_classifier(cfg.ptr, corpus_dir.c_str(),
                                      cls_dir.c_str()) == INTONA_OK);
  const auto synth_dir = (root / "synth").string();
  REQUIRE(intona_run_train_synth(cfg.ptr, corpus_dir.c_str(),
                                 (cls_dir + "/classifier.ckpt").c_str(),
                                 INTONA_SYNTH_CVAE,
                                 synth_dir.c_str()) == INTONA_OK);
  const auto eval_dir = (root / "eval").string();
  REQUIRE(intona_run_eval_classifier(cfg.ptr,
                                     (cls_dir + "/classifier.ckpt").c_str(),
                                     corpus_dir.c_str(),
                                     eval_dir.c_str()) == INTONA_OK);
  const std::string wav = corpus_dir + "/wav/utt_0000.wav";
  const auto conv_dir = (root / "conv").string();
  REQUIRE(intona_run_convert(cfg.ptr, wav.c_str(),
                             (cls_dir + "/classifier.ckpt").c_str(),
                             (synth_dir + "/synth.ckpt").c_str(),
                             conv_dir.c_str()) == INTONA_OK);
  CHECK(fs::exists(fs::path(conv_dir) / "utt_0000_converted.wav"));
  CHECK(fs::exists(fs::path(conv_dir) / "utt_0000_eps.txt"));
  CHECK(fs::exists(fs::path(conv_dir) / "manifest.txt"));

  double mel = -1.0, f0 = -1.0;
  const auto div_dir = (root / "div").string();
  REQUIRE(intona_run_diversity(cfg.ptr, wav.c_str(),
                               (cls_dir + "/classifier.ckpt").c_str(),
                               (synth_dir + "/synth.ckpt").c_str(), 3,
                               div_dir.c_str(), &mel, &f0) == INTONA_OK);
  CHECK(mel > 0.0);
  CHECK(f0 >= 0.0);

  const auto plot_dir = (root / "plot").string();
  REQUIRE(intona_run_plot(cfg.ptr, wav.c_str(), plot_dir.c_str()) ==
          INTONA_OK);
  CHECK(fs::exists(fs::path(plot_dir) / "utt_0000_lin.pgm"));
  CHECK(fs::exists(fs::path(plot_dir) / "utt_0000_mel.pgm"));

  // A convert against a missing wav is an io error.
  CHECK(intona_run_convert(cfg.ptr, "/no/such.wav",
                           (cls_dir + "/classifier.ckpt").c_str(),
                           (synth_dir + "/synth.ckpt").c_str(),
                           (root / "x").string().c_str()) == INTONA_ERR_IO);
}
