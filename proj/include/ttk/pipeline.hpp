#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttk/harness.hpp"
#include "ttk/synth.hpp"

// File-level pipeline entry points used by both the CLI and the python
// module. All outputs are written atomically (temp file + rename) and every
// produced document embeds the fully resolved configuration.
namespace ttk::pipeline {

void write_file_atomic(const std::string& path, const std::string& content);

std::string synth_command(const std::string& config_json, int sessions, const std::string& out_dir);

struct SegmentOptions {
  double gap_ms = 200.0;
  double min_ipu_ms = 300.0;
  double overlap_grace_ms = 0.0;
  double train_ratio = 0.70;
  double val_ratio = 0.10;
  double test_ratio = 0.20;
  uint64_t seed = 0;
  bool stratify_by_session = false;
};

// Returns a summary document; writes <out>.jsonl plus <out>.meta.json.
std::string segment_command(const std::string& corpus_dir, const SegmentOptions& options, const std::string& out_path);

struct StatsResult {
  std::string json;
  std::string text;
};
StatsResult stats_command(const std::string& turns_path);

struct VqvaeTrainOptions {
  bool semantic = true;   // semantic weight 0.1 when on, 0 when off
  int epochs = 120;
  int batch_size = 512;
  double lr = 3e-4;
  double weight_decay = 0.01;
  int hidden = 256;
  int embed_dim = 256;
  int codebook_size = 256;
  double beta = 0.25;
  double window_s = 2.0;
  double hop_s = 0.5;
  uint64_t seed = 0;
  std::vector<std::string> joints;  // empty = all
};

// Trains on sliding windows over all motion, excluding windows that overlap
// test-split turns; writes <out> plus <out>.json sidecar. Returns the log.
std::string train_vqvae_command(const std::string& turns_path, const std::string& corpus_dir,
                                const VqvaeTrainOptions& options, const std::string& out_path);

// Loads a checkpoint written by train_vqvae_command (sidecar required).
vqvae::Vqvae<harness::Scalar> load_vqvae_checkpoint(const std::string& path, vqvae::VqvaeConfig* out_config = nullptr,
                                                    std::string* sidecar_json = nullptr);

std::string tokenize_command(const std::string& model_path, const std::string& turns_path,
                             const std::string& corpus_dir, double window_s, const std::string& out_path);

// Resolved train configuration; parse/merge from JSON + flag overrides.
struct TrainRunConfig {
  std::string corpus_dir;
  std::string turns_path;
  std::string vqvae_path;  // required when gesture is active
  harness::TrainConfig train;
  harness::FeatureConfig features;
  std::vector<uint64_t> seeds = {0, 1, 2};
  std::string model_out;  // optional prefix for per-seed checkpoints
  std::string resolved_json;
};

TrainRunConfig parse_train_config(const std::string& json_text);

std::string train_command(const TrainRunConfig& config, const std::string& report_out);

std::string evaluate_command(const std::string& model_path, const std::string& turns_path,
                             const std::string& corpus_dir, const std::string& split,
                             const std::string& report_out);

std::string compare_command(const std::string& report_a, const std::string& report_b, int iterations, uint64_t seed);

std::string analyze_command(const std::string& model_path, const std::string& vqvae_path,
                            const std::string& turns_path, const std::string& corpus_dir,
                            const std::string& out_dir);

}  // namespace ttk::pipeline
