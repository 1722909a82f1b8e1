#include "ttk/harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

#include "json.hpp"
#include "ttk/error.hpp"
#include "ttk/optim.hpp"
#include "ttk/rng.hpp"
#include "ttk/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ttk::harness {

std::vector<size_t> TurnDataset::split_indices(seg::Split s) const {
  std::vector<size_t> out;
  for (size_t i = 0; i < turns.size(); ++i)
    if (turns[i].split == s) out.push_back(i);
  return out;
}

SessionMap load_corpus_dir(const std::string& dir) {
  if (!fs::is_directory(dir)) throw ValidationError("corpus directory not found: " + dir);
  SessionMap out;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    auto p = entry.path();
    if (p.extension() != ".json") continue;
    auto name = p.filename().string();
    if (name == "manifest.json" || name.ends_with(".meta.json") || name.ends_with(".emb.json")) continue;
    files.push_back(p);
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    auto session = corpus::load_session(p.string());
    auto id = session.session_id;
    if (!out.emplace(id, std::move(session)).second)
      throw ValidationError("corpus: duplicate session id " + id);
  }
  if (out.empty()) throw ValidationError("corpus: no session files in " + dir);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset assembly
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> tokenize_transcript(const std::string& transcript) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : transcript) {
    if (c == ' ') {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<float> to_float(const std::vector<double>& v) {
  std::vector<float> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace

TurnDataset build_dataset(const std::vector<seg::TurnInstance>& turns, const SessionMap& sessions,
                          const FeatureConfig& features, const vqvae::Vqvae<Scalar>* tokenizer) {
  TurnDataset out;
  out.text_dim = features.text_dim;
  out.audio_dim = 2 * features.audio_bands;
  if (tokenizer != nullptr) {
    out.code_dim = tokenizer->config().embed_dim;
    out.codebook_size = tokenizer->config().codebook_size;
    out.codebook.reserve(tokenizer->codebook().values().size());
    for (Scalar v : tokenizer->codebook().values()) out.codebook.push_back(static_cast<float>(v));
  }

  std::map<std::string, wav::Waveform> audio_cache;
  feat::AudioConfig audio_cfg;
  audio_cfg.bands = features.audio_bands;

  for (const auto& turn : turns) {
    auto sit = sessions.find(turn.session_id);
    if (sit == sessions.end()) throw ValidationError("dataset: unknown session " + turn.session_id);
    const auto* track = sit->second.find_speaker(turn.ipu.speaker_id);
    if (track == nullptr)
      throw ValidationError("dataset: unknown speaker " + turn.ipu.speaker_id + " in " + turn.session_id);

    TurnFeatures f;
    f.label = turn.label == seg::TurnLabel::yield ? 1 : 0;
    f.split = turn.split;

    // text
    if (features.text_provider == "precomputed") {
      auto pre = feat::load_precomputed(*track, turn.ipu.onset, turn.ipu.offset);
      if (pre) {
        if (pre->dim() != features.text_dim)
          throw ValidationError("dataset: precomputed text dim " + std::to_string(pre->dim()) + " != configured " +
                                std::to_string(features.text_dim));
        f.text = to_float(pre->values);
      }
    }
    if (f.text.empty()) {
      auto vec = feat::embed_text_hashed(tokenize_transcript(turn.transcript()), features.text_dim);
      f.text = to_float(vec.values);
    }

    // audio
    if (features.audio_provider == "precomputed") {
      auto pre = feat::load_precomputed(*track, turn.ipu.onset, turn.ipu.offset);
      if (pre) {
        if (pre->dim() != out.audio_dim)
          throw ValidationError("dataset: precomputed audio dim mismatch for " + turn.session_id);
        f.audio = to_float(pre->values);
      }
    }
    if (f.audio.empty()) {
      std::vector<double> slice;
      double rate = 16000.0;
      if (track->audio_path) {
        auto key = turn.session_id + "|" + track->speaker_id;
        auto it = audio_cache.find(key);
        if (it == audio_cache.end()) it = audio_cache.emplace(key, wav::read_wav(*track->audio_path)).first;
        const auto& wave = it->second;
        rate = wave.sample_rate_hz;
        auto i0 = static_cast<size_t>(std::max(0.0, turn.ipu.onset * rate));
        auto i1 = std::min(wave.samples.size(), static_cast<size_t>(std::max(0.0, turn.ipu.offset * rate)));
        if (i1 > i0) slice.assign(wave.samples.begin() + static_cast<std::ptrdiff_t>(i0),
                                  wave.samples.begin() + static_cast<std::ptrdiff_t>(i1));
      }
      auto vec = feat::audio_spectral_features(slice, rate, audio_cfg);
      f.audio = to_float(vec.values);
    }

    // gesture tokens
    if (tokenizer != nullptr) {
      if (track->motion) {
        auto window = feat::extract_motion_window(*track->motion, turn.ipu.onset, turn.ipu.offset,
                                                  features.motion_window_s, features.motion_joints);
        f.tokens = tokenizer->tokenize(window, turn.ipu.onset, turn.ipu.offset);
      } else {
        f.tokens.no_motion = true;
      }
      out.max_tokens = std::max(out.max_tokens, f.tokens.length());
    }
    out.turns.push_back(std::move(f));
  }
  if (out.max_tokens == 0) out.max_tokens = 1;
  return out;
}

// ---------------------------------------------------------------------------
// Batching
// ---------------------------------------------------------------------------

namespace {

model::TurnBatch<Scalar> make_batch(const TurnDataset& data, const std::vector<size_t>& indices,
                                    const model::TurnModelConfig& cfg) {
  model::TurnBatch<Scalar> batch;
  batch.batch = static_cast<int>(indices.size());
  bool want_text = cfg.has(model::Modality::text);
  bool want_audio = cfg.has(model::Modality::audio);
  bool want_gesture = cfg.has(model::Modality::gesture);
  int max_len = 0;
  if (want_gesture)
    for (size_t i : indices) max_len = std::max(max_len, data.turns[i].tokens.length());
  batch.max_len = max_len;
  for (size_t i : indices) {
    const auto& t = data.turns[i];
    batch.labels.push_back(t.label);
    if (want_text) {
      if (static_cast<int>(t.text.size()) != cfg.text_dim) throw ValidationError("batch: text dim mismatch");
      batch.text.insert(batch.text.end(), t.text.begin(), t.text.end());
    }
    if (want_audio) {
      if (static_cast<int>(t.audio.size()) != cfg.audio_dim) throw ValidationError("batch: audio dim mismatch");
      batch.audio.insert(batch.audio.end(), t.audio.begin(), t.audio.end());
    }
    if (want_gesture) {
      bool absent = t.tokens.no_motion || t.tokens.length() == 0;
      batch.gesture_absent.push_back(absent ? 1 : 0);
      for (int l = 0; l < max_len; ++l) {
        bool real = !absent && l < t.tokens.length();
        batch.token_ids.push_back(real ? t.tokens.token_ids[static_cast<size_t>(l)] : 0);
        batch.token_mask.push_back(real && t.tokens.mask[static_cast<size_t>(l)] ? 1 : 0);
      }
    }
  }
  return batch;
}

std::vector<Scalar> class_weights_for(const TurnDataset& data, const std::vector<size_t>& train_idx) {
  int64_t counts[2] = {0, 0};
  for (size_t i : train_idx) ++counts[data.turns[i].label];
  double total = static_cast<double>(counts[0] + counts[1]);
  std::vector<Scalar> w(2, 1.0f);
  for (int c = 0; c < 2; ++c)
    w[static_cast<size_t>(c)] = counts[c] > 0 ? static_cast<Scalar>(total / (2.0 * static_cast<double>(counts[c]))) : 1.0f;
  return w;
}

}  // namespace

TrainedTurnModel train_turn_model(const TurnDataset& dataset, const TrainConfig& config, uint64_t seed) {
  auto train_idx = dataset.split_indices(seg::Split::train);
  auto val_idx = dataset.split_indices(seg::Split::val);
  if (train_idx.empty()) throw ValidationError("train: empty train split");

  model::TurnModelConfig mcfg = config.model;
  mcfg.text_dim = dataset.text_dim;
  mcfg.audio_dim = dataset.audio_dim;
  if (mcfg.has(model::Modality::gesture)) {
    if (dataset.codebook.empty()) throw ValidationError("train: gesture modality requires a tokenizer codebook");
    mcfg.code_dim = dataset.code_dim;
    mcfg.codebook_size = dataset.codebook_size;
    mcfg.max_tokens = std::max(1, dataset.max_tokens);
  }

  Rng init_rng = Rng(seed).split(0);
  TrainedTurnModel out{model::TurnModel<Scalar>(mcfg, dataset.codebook, init_rng), {}, -1};
  auto& model = out.model;
  optim::AdamW<Scalar> opt(model.params(), config.lr, config.weight_decay);
  Rng shuffle_rng = Rng(seed).split(1);

  std::vector<Scalar> cls_weights;
  if (config.class_weighting) cls_weights = class_weights_for(dataset, train_idx);

  ckpt::Archive best;
  double best_f1 = -1.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Rng erng = shuffle_rng.split(static_cast<uint64_t>(epoch));
    auto order = train_idx;
    erng.shuffle(order);
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(config.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(config.batch_size));
      std::vector<size_t> chunk(order.begin() + static_cast<std::ptrdiff_t>(start),
                                order.begin() + static_cast<std::ptrdiff_t>(stop));
      auto batch = make_batch(dataset, chunk, mcfg);
      auto fwd = model.forward(batch);
      auto loss = tc::cross_entropy(fwd.logits, batch.labels, -1, cls_weights);
      if (!std::isfinite(static_cast<double>(loss.item())))
        throw RuntimeFailure("train: non-finite loss at epoch " + std::to_string(epoch));
      opt.zero_grad();
      tc::backward(loss);
      opt.step();
    }
    double val_f1;
    if (!val_idx.empty()) {
      auto val = evaluate(model, dataset, seg::Split::val);
      val_f1 = val.metrics.macro_f1;
    } else {
      val_f1 = 0.0;  // no validation split: keep the last epoch
      best_f1 = -1.0;
    }
    out.val_macro_f1.push_back(val_f1);
    if (val_f1 > best_f1) {
      best_f1 = val_f1;
      best = model.snapshot();
      out.best_epoch = epoch;
    }
  }
  if (!best.empty()) model.restore(best);
  return out;
}

EvalResult evaluate(const model::TurnModel<Scalar>& model, const TurnDataset& dataset, seg::Split split) {
  auto idx = dataset.split_indices(split);
  if (idx.empty()) throw ValidationError("evaluate: empty split");
  tc::NoGradGuard guard;
  EvalResult out;
  int M = model.config().num_modalities();
  std::vector<double> gate_sum(static_cast<size_t>(M), 0.0);
  constexpr size_t kEvalBatch = 64;
  for (size_t start = 0; start < idx.size(); start += kEvalBatch) {
    size_t stop = std::min(idx.size(), start + kEvalBatch);
    std::vector<size_t> chunk(idx.begin() + static_cast<std::ptrdiff_t>(start),
                              idx.begin() + static_cast<std::ptrdiff_t>(stop));
    auto batch = make_batch(dataset, chunk, model.config());
    auto fwd = model.forward(batch);
    auto preds = model::TurnModel<Scalar>::predictions(fwd.logits);
    out.predictions.insert(out.predictions.end(), preds.begin(), preds.end());
    out.labels.insert(out.labels.end(), batch.labels.begin(), batch.labels.end());
    if (model.config().fusion == model::FusionKind::moe) {
      const auto& w = fwd.gate_weights.values();
      for (size_t r = 0; r < chunk.size(); ++r)
        for (int m = 0; m < M; ++m) gate_sum[static_cast<size_t>(m)] += static_cast<double>(w[r * static_cast<size_t>(M) + static_cast<size_t>(m)]);
    }
  }
  out.metrics = metrics::compute_metrics(out.predictions, out.labels);
  if (model.config().fusion == model::FusionKind::moe) {
    out.gate_means.resize(static_cast<size_t>(M));
    for (int m = 0; m < M; ++m) out.gate_means[static_cast<size_t>(m)] = gate_sum[static_cast<size_t>(m)] / static_cast<double>(idx.size());
  }
  return out;
}

std::vector<double> export_modality_weights(const model::TurnModel<Scalar>& model, const TurnDataset& dataset,
                                            seg::Split split) {
  if (model.config().fusion != model::FusionKind::moe)
    throw ValidationError("modality weights require an MoE fusion model");
  return evaluate(model, dataset, split).gate_means;
}

// ---------------------------------------------------------------------------
// Multi-seed experiments
// ---------------------------------------------------------------------------

ExperimentReport run_seeds(const TurnDataset& dataset, const TrainConfig& config, const std::vector<uint64_t>& seeds,
                           const std::string& config_json, const ModelCallback& on_model) {
  if (seeds.empty()) throw ValidationError("run_seeds: need at least one seed");
  ExperimentReport report;
  report.config_json = config_json;
  for (uint64_t seed : seeds) {
    try {
      auto trained = train_turn_model(dataset, config, seed);
      if (on_model) on_model(seed, trained.model);
      auto eval = evaluate(trained.model, dataset, seg::Split::test);
      SeedResult r;
      r.seed = seed;
      r.test = eval.metrics;
      r.predictions = eval.predictions;
      r.gate_means = eval.gate_means;
      r.best_epoch = trained.best_epoch;
      if (report.labels.empty()) report.labels = eval.labels;
      report.seeds.push_back(std::move(r));
    } catch (const std::exception& e) {
      throw RuntimeFailure("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  auto n = static_cast<double>(report.seeds.size());
  for (const auto& r : report.seeds) {
    report.mean.accuracy += r.test.accuracy / n;
    report.mean.macro_f1 += r.test.macro_f1 / n;
    report.mean.f1_hold += r.test.f1_hold / n;
    report.mean.f1_yield += r.test.f1_yield / n;
  }
  if (!report.seeds.empty() && !report.seeds[0].gate_means.empty()) {
    report.modality_weight_means.assign(report.seeds[0].gate_means.size(), 0.0);
    for (const auto& r : report.seeds)
      for (size_t m = 0; m < r.gate_means.size(); ++m) report.modality_weight_means[m] += r.gate_means[m] / n;
  }
  return report;
}

namespace {

json metrics_to_json(const metrics::Metrics& m, bool with_confusion) {
  json out;
  out["accuracy"] = m.accuracy;
  out["macro_f1"] = m.macro_f1;
  out["f1_hold"] = m.f1_hold;
  out["f1_yield"] = m.f1_yield;
  if (with_confusion)
    out["confusion"] = {{m.confusion[0][0], m.confusion[0][1]}, {m.confusion[1][0], m.confusion[1][1]}};
  return out;
}

metrics::Metrics metrics_from_json(const json& doc) {
  metrics::Metrics m;
  m.accuracy = doc.at("accuracy").get<double>();
  m.macro_f1 = doc.at("macro_f1").get<double>();
  m.f1_hold = doc.at("f1_hold").get<double>();
  m.f1_yield = doc.at("f1_yield").get<double>();
  if (doc.contains("confusion"))
    for (int a = 0; a < 2; ++a)
      for (int p = 0; p < 2; ++p) m.confusion[a][p] = doc["confusion"][a][p].get<int64_t>();
  return m;
}

}  // namespace

std::string report_to_json(const ExperimentReport& report) {
  json doc;
  doc["config"] = json::parse(report.config_json.empty() ? "{}" : report.config_json);
  doc["seeds"] = json::array();
  for (const auto& r : report.seeds) {
    json s;
    s["seed"] = r.seed;
    s["metrics"] = metrics_to_json(r.test, true);
    s["best_epoch"] = r.best_epoch;
    if (!r.gate_means.empty()) s["gate_means"] = r.gate_means;
    s["predictions"] = r.predictions;
    doc["seeds"].push_back(std::move(s));
  }
  doc["mean_metrics"] = metrics_to_json(report.mean, false);
  if (!report.modality_weight_means.empty()) doc["modality_weights"] = report.modality_weight_means;
  doc["labels"] = report.labels;
  if (report.p_value) {
    doc["significance"] = {{"p_value", *report.p_value}};
    if (report.baseline_id) doc["significance"]["baseline_id"] = *report.baseline_id;
  } else {
    doc["significance"] = nullptr;
  }
  return doc.dump(2);
}

ExperimentReport report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("report: parse error: ") + e.what());
  }
  ExperimentReport report;
  report.config_json = doc.at("config").dump();
  for (const auto& s : doc.at("seeds")) {
    SeedResult r;
    r.seed = s.at("seed").get<uint64_t>();
    r.test = metrics_from_json(s.at("metrics"));
    if (s.contains("best_epoch")) r.best_epoch = s["best_epoch"].get<int>();
    if (s.contains("gate_means")) r.gate_means = s["gate_means"].get<std::vector<double>>();
    r.predictions = s.at("predictions").get<std::vector<int>>();
    report.seeds.push_back(std::move(r));
  }
  report.mean = metrics_from_json(doc.at("mean_metrics"));
  if (doc.contains("modality_weights") && !doc["modality_weights"].is_null())
    report.modality_weight_means = doc["modality_weights"].get<std::vector<double>>();
  report.labels = doc.at("labels").get<std::vector<int>>();
  if (doc.contains("significance") && !doc["significance"].is_null()) {
    report.p_value = doc["significance"].at("p_value").get<double>();
    if (doc["significance"].contains("baseline_id"))
      report.baseline_id = doc["significance"]["baseline_id"].get<std::string>();
  }
  return report;
}

// ---------------------------------------------------------------------------
// PCA projection
// ---------------------------------------------------------------------------

namespace {

std::vector<double> power_iteration(const std::vector<double>& cov, size_t d, Rng& rng) {
  std::vector<double> v(d);
  for (auto& x : v) x = rng.normal();
  auto normalize = [&v, d]() {
    double n = 0;
    for (size_t i = 0; i < d; ++i) n += v[i] * v[i];
    n = std::sqrt(n);
    if (n > 0)
      for (size_t i = 0; i < d; ++i) v[i] /= n;
    return n;
  };
  normalize();
  std::vector<double> next(d);
  for (int it = 0; it < 300; ++it) {
    for (size_t i = 0; i < d; ++i) {
      double s = 0;
      for (size_t j = 0; j < d; ++j) s += cov[i * d + j] * v[j];
      next[i] = s;
    }
    v = next;
    if (normalize() == 0.0) break;  // zero covariance
  }
  // deterministic sign: largest-magnitude coordinate positive
  size_t arg = 0;
  for (size_t i = 1; i < d; ++i)
    if (std::abs(v[i]) > std::abs(v[arg])) arg = i;
  if (v[arg] < 0)
    for (auto& x : v) x = -x;
  return v;
}

}  // namespace

std::vector<ProjectionRow> pca_project(const std::vector<std::vector<double>>& points,
                                       const std::vector<std::string>& types) {
  if (points.size() < 2) throw ValidationError("pca_project: need at least 2 samples");
  if (points.size() != types.size()) throw ValidationError("pca_project: types length mismatch");
  size_t n = points.size(), d = points[0].size();
  for (const auto& p : points)
    if (p.size() != d) throw ValidationError("pca_project: ragged input");

  std::vector<double> mean(d, 0.0);
  for (const auto& p : points)
    for (size_t i = 0; i < d; ++i) mean[i] += p[i] / static_cast<double>(n);
  std::vector<double> centered(n * d);
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d; ++i) centered[r * d + i] = points[r][i] - mean[i];

  std::vector<double> cov(d * d, 0.0);
  for (size_t r = 0; r < n; ++r)
    for (size_t i = 0; i < d; ++i)
      for (size_t j = 0; j < d; ++j) cov[i * d + j] += centered[r * d + i] * centered[r * d + j] / static_cast<double>(n - 1);

  Rng rng(12345);
  auto v1 = power_iteration(cov, d, rng);
  double lambda1 = 0;
  for (size_t i = 0; i < d; ++i) {
    double s = 0;
    for (size_t j = 0; j < d; ++j) s += cov[i * d + j] * v1[j];
    lambda1 += v1[i] * s;
  }
  auto deflated = cov;
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) deflated[i * d + j] -= lambda1 * v1[i] * v1[j];
  auto v2 = power_iteration(deflated, d, rng);

  std::vector<ProjectionRow> rows(n);
  for (size_t r = 0; r < n; ++r) {
    double x = 0, y = 0;
    for (size_t i = 0; i < d; ++i) {
      x += centered[r * d + i] * v1[i];
      y += centered[r * d + i] * v2[i];
    }
    rows[r] = {x, y, types[r]};
  }
  return rows;
}

std::vector<ProjectionRow> export_embedding_projection(const vqvae::Vqvae<Scalar>& model,
                                                       const std::vector<vqvae::LabeledWindow>& windows,
                                                       bool include_none) {
  static const char* kClassNames[5] = {"iconic", "metaphoric", "deictic", "discourse", "none"};
  std::vector<std::vector<double>> points;
  std::vector<std::string> types;
  for (const auto& lw : windows) {
    if (!include_none && lw.semantic_label == vqvae::kNoneClass) continue;
    if (lw.window.all_padding()) continue;
    auto seq = model.tokenize(lw.window);
    int L = seq.length(), D = model.config().embed_dim;
    if (L == 0) continue;
    std::vector<double> pooled(static_cast<size_t>(D), 0.0);
    for (int l = 0; l < L; ++l)
      for (int d = 0; d < D; ++d) pooled[static_cast<size_t>(d)] += static_cast<double>(seq.quantized[static_cast<size_t>(l) * D + d]) / L;
    points.push_back(std::move(pooled));
    types.push_back(kClassNames[lw.semantic_label]);
  }
  return pca_project(points, types);
}

// ---------------------------------------------------------------------------
// VQ-VAE window extraction
// ---------------------------------------------------------------------------

std::vector<vqvae::LabeledWindow> make_labeled_windows(const SessionMap& sessions, double window_s, double hop_s,
                                                       const std::vector<std::string>& joints,
                                                       const std::vector<SpanKey>& exclude) {
  std::vector<vqvae::LabeledWindow> out;
  for (const auto& [sid, session] : sessions) {
    for (const auto& track : session.speakers) {
      if (!track.motion) continue;
      double duration = static_cast<double>(track.motion->frame_count()) / track.motion->frame_rate_hz;
      for (double start = 0.0; start + window_s <= duration + 1e-9; start += hop_s) {
        double end = start + window_s;
        bool skip = false;
        for (const auto& e : exclude) {
          if (e.session_id != sid || e.speaker_id != track.speaker_id) continue;
          if (std::min(end, e.offset) - std::max(start, e.onset) > 0) {
            skip = true;
            break;
          }
        }
        if (skip) continue;
        vqvae::LabeledWindow lw;
        lw.window = feat::extract_motion_window(*track.motion, start, end, window_s, joints);
        lw.semantic_label = vqvae::semantic_label_for_span(track.gestures, start, end);
        out.push_back(std::move(lw));
      }
    }
  }
  return out;
}

}  // namespace ttk::harness
