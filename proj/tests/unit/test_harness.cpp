#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "ttk/error.hpp"
#include "ttk/harness.hpp"
#include "ttk/metrics.hpp"
#include "ttk/pipeline.hpp"
#include "ttk/rng.hpp"
#include "ttk/synth.hpp"

namespace fs = std::filesystem;
using namespace ttk;

TEST_CASE("metrics closed forms") {
  SUBCASE("all-hold predictor on hold fraction p") {
    std::vector<int> labels, preds;
    for (int i = 0; i < 7722; ++i) labels.push_back(0);
    for (int i = 0; i < 5087; ++i) labels.push_back(1);
    preds.assign(labels.size(), 0);
    auto m = metrics::compute_metrics(preds, labels);
    double p = 7722.0 / 12809.0;
    CHECK(m.accuracy == doctest::Approx(100.0 * p).epsilon(1e-12));
    CHECK(m.f1_hold == doctest::Approx(100.0 * 2 * p / (1 + p)).epsilon(1e-12));
    CHECK(m.f1_yield == 0.0);
    CHECK(m.macro_f1 == doctest::Approx(m.f1_hold / 2).epsilon(1e-12));
  }
  SUBCASE("perfect predictor scores 100 everywhere") {
    std::vector<int> labels = {0, 1, 0, 1, 1};
    auto m = metrics::compute_metrics(labels, labels);
    CHECK(m.accuracy == 100.0);
    CHECK(m.macro_f1 == 100.0);
    CHECK(m.f1_hold == 100.0);
    CHECK(m.f1_yield == 100.0);
  }
  SUBCASE("label-inverting predictor on a balanced set zeroes everything") {
    std::vector<int> labels = {0, 0, 1, 1}, preds = {1, 1, 0, 0};
    auto m = metrics::compute_metrics(preds, labels);
    CHECK(m.accuracy == 0.0);
    CHECK(m.f1_hold == 0.0);
    CHECK(m.f1_yield == 0.0);
  }
}

TEST_CASE("property: metrics are recomputable from the confusion matrix alone") {
  Rng rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    int n = 5 + static_cast<int>(rng.below(200));
    std::vector<int> labels(static_cast<size_t>(n)), preds(static_cast<size_t>(n));
    for (auto& l : labels) l = static_cast<int>(rng.below(2));
    for (auto& p : preds) p = static_cast<int>(rng.below(2));
    auto m = metrics::compute_metrics(preds, labels);
    CHECK(m.total() == n);
    double acc = 100.0 * static_cast<double>(m.confusion[0][0] + m.confusion[1][1]) / n;
    CHECK(m.accuracy == doctest::Approx(acc).epsilon(1e-12));
    CHECK(m.macro_f1 == doctest::Approx(0.5 * (m.f1_hold + m.f1_yield)).epsilon(1e-12));
    // majority-baseline closed form on the same labels
    int64_t holds = std::count(labels.begin(), labels.end(), 0);
    std::vector<int> all_hold(static_cast<size_t>(n), 0);
    auto mb = metrics::compute_metrics(all_hold, labels);
    double p = static_cast<double>(holds) / n;
    CHECK(mb.accuracy == doctest::Approx(100.0 * p).epsilon(1e-9));
    if (holds > 0) CHECK(mb.f1_hold == doctest::Approx(100.0 * 2 * p / (1 + p)).epsilon(1e-9));
    CHECK(mb.f1_yield == 0.0);
  }
}

TEST_CASE("significance") {
  SUBCASE("identical predictions give p = 1.0 exactly") {
    std::vector<int> preds = {0, 1, 0, 1, 1, 0}, labels = {0, 1, 1, 1, 0, 0};
    CHECK(metrics::significance(preds, preds, labels, 500, 1) == 1.0);
  }
  SUBCASE("perfect vs always-wrong on 200 balanced examples is significant") {
    std::vector<int> labels, perfect, wrong;
    for (int i = 0; i < 200; ++i) {
      labels.push_back(i % 2);
      perfect.push_back(i % 2);
      wrong.push_back(1 - i % 2);
    }
    double p = metrics::significance(perfect, wrong, labels, 2000, 7);
    CHECK(p < 0.01);
    CHECK(p >= 1.0 / 2001.0);  // plus-one smoothing floor
  }
  SUBCASE("p is always in (0, 1]") {
    Rng rng(12);
    std::vector<int> labels(50), a(50), b(50);
    for (int i = 0; i < 50; ++i) {
      labels[static_cast<size_t>(i)] = static_cast<int>(rng.below(2));
      a[static_cast<size_t>(i)] = static_cast<int>(rng.below(2));
      b[static_cast<size_t>(i)] = static_cast<int>(rng.below(2));
    }
    double p = metrics::significance(a, b, labels, 200, 3);
    CHECK(p > 0.0);
    CHECK(p <= 1.0);
    CHECK(p >= 1.0 / 201.0);
  }
  SUBCASE("length mismatch throws") {
    CHECK_THROWS_AS(metrics::significance({0}, {0, 1}, {0, 1}, 10, 0), ValidationError);
  }
}

TEST_CASE("pca projection") {
  SUBCASE("axis-aligned 2-D data is recovered up to sign") {
    // symmetric quadruples make the sample covariance exactly diagonal with
    // a dominant x axis, so the components are the coordinate axes
    std::vector<std::vector<double>> pts;
    std::vector<std::string> types;
    Rng rng(4);
    for (int i = 0; i < 40; ++i) {
      double x = 3.0 + rng.uniform(0.0, 2.0), y = 0.5 + rng.uniform(0.0, 0.4);
      for (auto [sx, sy] : {std::pair{1, 1}, {1, -1}, {-1, 1}, {-1, -1}}) {
        pts.push_back({sx * x, sy * y});
        types.push_back("a");
      }
    }
    auto rows = harness::pca_project(pts, types);
    REQUIRE(rows.size() == pts.size());
    double sign_x = rows[0].x / pts[0][0];
    double sign_y = rows[0].y / pts[0][1];
    CHECK(std::abs(sign_x) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::abs(sign_y) == doctest::Approx(1.0).epsilon(1e-6));
    for (size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].x == doctest::Approx(sign_x * pts[i][0]).epsilon(1e-6));
      CHECK(rows[i].y == doctest::Approx(sign_y * pts[i][1]).epsilon(1e-6));
    }
  }
  SUBCASE("duplicated points project to identical coordinates") {
    std::vector<std::vector<double>> pts = {{1, 2, 3}, {1, 2, 3}, {4, 5, 6}};
    auto rows = harness::pca_project(pts, {"a", "a", "b"});
    CHECK(rows[0].x == doctest::Approx(rows[1].x));
    CHECK(rows[0].y == doctest::Approx(rows[1].y));
    CHECK(rows[0].type == "a");
  }
  SUBCASE("fewer than 2 samples is an error") {
    CHECK_THROWS_AS(harness::pca_project({{1.0, 2.0}}, {"a"}), ValidationError);
  }
}

namespace {

// small planted corpus on disk, shared across harness tests
struct CorpusFixture {
  fs::path dir;
  synth::SynthConfig cfg;

  CorpusFixture() {
    dir = fs::temp_directory_path() / "ttk_harness_corpus";
    fs::remove_all(dir);
    cfg.n_speakers = 2;
    cfg.session_length_s = 60.0;
    cfg.frame_rate_hz = 20.0;
    cfg.sample_rate_hz = 4000.0;
    cfg.seed = 5;
    synth::generate_benchmark(cfg, 2, dir.string());
  }
};

harness::TurnDataset tiny_dataset(const CorpusFixture& fixture, bool with_gesture,
                                  vqvae::Vqvae<harness::Scalar>** tokenizer_out = nullptr) {
  auto sessions = harness::load_corpus_dir(fixture.dir.string());
  std::vector<seg::TurnInstance> turns;
  for (const auto& [sid, session] : sessions) {
    auto t = seg::segment_session(session);
    turns.insert(turns.end(), t.begin(), t.end());
  }
  seg::split_dataset(turns, 0.70, 0.10, 0.20, 0);
  harness::FeatureConfig features;
  features.text_dim = 32;
  features.audio_bands = 8;
  features.motion_window_s = 2.0;

  static vqvae::Vqvae<harness::Scalar>* tokenizer = nullptr;
  if (with_gesture && tokenizer == nullptr) {
    auto windows = harness::make_labeled_windows(sessions, 2.0, 1.0, {});
    vqvae::VqvaeConfig vcfg;
    vcfg.hidden = 8;
    vcfg.embed_dim = 8;
    vcfg.codebook_size = 16;
    vcfg.epochs = 2;
    vcfg.batch_size = 32;
    vcfg.seed = 2;
    auto trained = vqvae::train_vqvae<harness::Scalar>(windows, vcfg);
    tokenizer = new vqvae::Vqvae<harness::Scalar>(std::move(trained.first));
  }
  if (tokenizer_out != nullptr) *tokenizer_out = tokenizer;
  return harness::build_dataset(turns, sessions, features, with_gesture ? tokenizer : nullptr);
}

}  // namespace

TEST_CASE("dataset assembly, training, and reports on a tiny corpus") {
  CorpusFixture fixture;
  vqvae::Vqvae<harness::Scalar>* tokenizer = nullptr;
  auto dataset = tiny_dataset(fixture, true, &tokenizer);
  REQUIRE(dataset.turns.size() > 20);
  CHECK(dataset.text_dim == 32);
  CHECK(dataset.audio_dim == 16);
  CHECK(dataset.code_dim == 8);
  CHECK(dataset.max_tokens > 0);
  CHECK(!dataset.split_indices(seg::Split::train).empty());
  CHECK(!dataset.split_indices(seg::Split::val).empty());
  CHECK(!dataset.split_indices(seg::Split::test).empty());
  for (const auto& t : dataset.turns) {
    CHECK(t.text.size() == 32);
    CHECK(t.audio.size() == 16);
  }

  harness::TrainConfig config;
  config.model.modalities = {model::Modality::text, model::Modality::audio, model::Modality::gesture};
  config.model.fusion = model::FusionKind::moe;
  config.model.d = 16;
  config.epochs = 2;
  config.batch_size = 16;
  config.lr = 1e-3;

  SUBCASE("single seed: mean equals that seed's metrics; report round-trips") {
    auto report = harness::run_seeds(dataset, config, {0}, R"({"note":"tiny"})");
    REQUIRE(report.seeds.size() == 1);
    CHECK(report.mean.accuracy == report.seeds[0].test.accuracy);
    CHECK(report.mean.macro_f1 == report.seeds[0].test.macro_f1);
    REQUIRE(report.modality_weight_means.size() == 3);
    double sum = 0;
    for (double w : report.modality_weight_means) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    auto text = harness::report_to_json(report);
    auto loaded = harness::report_from_json(text);
    CHECK(harness::report_to_json(loaded) == text);  // lossless
  }
  SUBCASE("three seeds: mean is the arithmetic mean") {
    auto report = harness::run_seeds(dataset, config, {0, 1, 2}, "{}");
    REQUIRE(report.seeds.size() == 3);
    double acc = 0, macro = 0;
    for (const auto& s : report.seeds) {
      acc += s.test.accuracy / 3.0;
      macro += s.test.macro_f1 / 3.0;
    }
    CHECK(report.mean.accuracy == doctest::Approx(acc).epsilon(1e-12));
    CHECK(report.mean.macro_f1 == doctest::Approx(macro).epsilon(1e-12));
  }
  SUBCASE("determinism: same seed twice gives identical metrics and predictions") {
    auto a = harness::run_seeds(dataset, config, {3}, "{}");
    auto b = harness::run_seeds(dataset, config, {3}, "{}");
    CHECK(a.seeds[0].test.accuracy == b.seeds[0].test.accuracy);
    CHECK(a.seeds[0].test.macro_f1 == b.seeds[0].test.macro_f1);
    CHECK(a.seeds[0].predictions == b.seeds[0].predictions);
  }
  SUBCASE("modality weights export requires MoE") {
    auto trained = harness::train_turn_model(dataset, config, 0);
    auto weights = harness::export_modality_weights(trained.model, dataset, seg::Split::test);
    REQUIRE(weights.size() == 3);
    double sum = 0;
    for (double w : weights) sum += w;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-6));

    auto concat_cfg = config;
    concat_cfg.model.fusion = model::FusionKind::concat;
    auto concat_model = harness::train_turn_model(dataset, concat_cfg, 0);
    CHECK_THROWS_AS(harness::export_modality_weights(concat_model.model, dataset, seg::Split::test), ValidationError);
  }
  SUBCASE("embedding projection export has the fixed schema") {
    auto sessions = harness::load_corpus_dir(fixture.dir.string());
    auto windows = harness::make_labeled_windows(sessions, 2.0, 0.5, {});
    int labeled = 0;
    for (const auto& w : windows)
      if (w.semantic_label != vqvae::kNoneClass) ++labeled;
    REQUIRE(labeled >= 2);
    auto rows = harness::export_embedding_projection(*tokenizer, windows, false);
    CHECK(rows.size() == static_cast<size_t>(labeled));
    for (const auto& r : rows) {
      CHECK(std::isfinite(r.x));
      CHECK(std::isfinite(r.y));
      CHECK(r.type != "none");
    }
  }
}

TEST_CASE("train/evaluate error paths") {
  CorpusFixture fixture;
  auto dataset = tiny_dataset(fixture, false);
  harness::TrainConfig config;
  config.model.modalities = {model::Modality::text};
  config.epochs = 1;

  SUBCASE("empty train split") {
    auto empty = dataset;
    for (auto& t : empty.turns) t.split = seg::Split::test;
    CHECK_THROWS_AS(harness::train_turn_model(empty, config, 0), ValidationError);
  }
  SUBCASE("gesture modality without a tokenizer codebook") {
    auto cfg = config;
    cfg.model.modalities = {model::Modality::gesture};
    CHECK_THROWS_AS(harness::train_turn_model(dataset, cfg, 0), ValidationError);
  }
  SUBCASE("run_seeds propagates per-seed failures with the seed id") {
    auto empty = dataset;
    for (auto& t : empty.turns) t.split = seg::Split::test;
    CHECK_THROWS_WITH_AS(harness::run_seeds(empty, config, {5}, "{}"), doctest::Contains("seed 5"), RuntimeFailure);
  }
}
