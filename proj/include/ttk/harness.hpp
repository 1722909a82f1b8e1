#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttk/corpus.hpp"
#include "ttk/features.hpp"
#include "ttk/metrics.hpp"
#include "ttk/segmentation.hpp"
#include "ttk/turn_model.hpp"
#include "ttk/vqvae.hpp"

namespace ttk::harness {

using Scalar = float;  // training precision; gradient checks use double directly

struct FeatureConfig {
  std::string text_provider = "hashed";  // hashed | precomputed
  int text_dim = 384;
  std::string audio_provider = "spectral";  // spectral | precomputed
  int audio_bands = 26;
  double motion_window_s = 4.0;
  std::vector<std::string> motion_joints;  // empty = all joints in the motion
};

struct TurnFeatures {
  std::vector<float> text;
  std::vector<float> audio;
  vqvae::GestureTokenSequence tokens;
  int label = 0;  // 0 hold, 1 yield
  seg::Split split = seg::Split::unassigned;
};

struct TurnDataset {
  std::vector<TurnFeatures> turns;
  int text_dim = 0;
  int audio_dim = 0;
  int code_dim = 0;
  int codebook_size = 0;
  int max_tokens = 0;
  std::vector<float> codebook;  // frozen entries from the gesture tokenizer

  std::vector<size_t> split_indices(seg::Split s) const;
};

using SessionMap = std::map<std::string, corpus::Session>;

SessionMap load_corpus_dir(const std::string& dir);

// Extracts per-turn features; `tokenizer` may be null when the gesture
// modality is unused.
TurnDataset build_dataset(const std::vector<seg::TurnInstance>& turns, const SessionMap& sessions,
                          const FeatureConfig& features, const vqvae::Vqvae<Scalar>* tokenizer);

struct TrainConfig {
  model::TurnModelConfig model;
  int epochs = 20;
  int batch_size = 32;
  double lr = 5e-5;
  double weight_decay = 0.01;
  bool class_weighting = false;
};

struct EvalResult {
  metrics::Metrics metrics;
  std::vector<int> predictions;
  std::vector<int> labels;
  std::vector<double> gate_means;  // per modality, MoE only
};

struct TrainedTurnModel {
  model::TurnModel<Scalar> model;
  std::vector<double> val_macro_f1;  // per epoch
  int best_epoch = -1;
};

TrainedTurnModel train_turn_model(const TurnDataset& dataset, const TrainConfig& config, uint64_t seed);

EvalResult evaluate(const model::TurnModel<Scalar>& model, const TurnDataset& dataset, seg::Split split);

// Mean gate weight per modality over a split; errors for non-MoE models.
std::vector<double> export_modality_weights(const model::TurnModel<Scalar>& model, const TurnDataset& dataset,
                                            seg::Split split);

struct SeedResult {
  uint64_t seed = 0;
  metrics::Metrics test;
  std::vector<int> predictions;
  std::vector<double> gate_means;
  int best_epoch = -1;
};

struct ExperimentReport {
  std::string config_json;  // resolved config snapshot
  std::vector<SeedResult> seeds;
  metrics::Metrics mean;
  std::vector<double> modality_weight_means;
  std::vector<int> labels;
  std::optional<double> p_value;
  std::optional<std::string> baseline_id;
};

using ModelCallback = std::function<void(uint64_t seed, const model::TurnModel<Scalar>&)>;

ExperimentReport run_seeds(const TurnDataset& dataset, const TrainConfig& config, const std::vector<uint64_t>& seeds,
                           const std::string& config_json, const ModelCallback& on_model = {});

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& text);

// Deterministic 2-component PCA by power iteration with deflation.
struct ProjectionRow {
  double x = 0.0;
  double y = 0.0;
  std::string type;
};

std::vector<ProjectionRow> pca_project(const std::vector<std::vector<double>>& points,
                                       const std::vector<std::string>& types);

// Pooled quantized embedding per labeled window -> 2-D projection rows.
std::vector<ProjectionRow> export_embedding_projection(const vqvae::Vqvae<Scalar>& model,
                                                       const std::vector<vqvae::LabeledWindow>& windows,
                                                       bool include_none = false);

// Sliding labeled windows over all motion; spans overlapping `exclude`
// (same session and speaker) are skipped.
struct SpanKey {
  std::string session_id;
  std::string speaker_id;
  double onset = 0.0;
  double offset = 0.0;
};

std::vector<vqvae::LabeledWindow> make_labeled_windows(const SessionMap& sessions, double window_s, double hop_s,
                                                       const std::vector<std::string>& joints,
                                                       const std::vector<SpanKey>& exclude = {});

}  // namespace ttk::harness
