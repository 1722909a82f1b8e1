#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ttk/corpus.hpp"

namespace ttk::synth {

// Deterministic multi-party session generator. Word pauses inside an IPU
// stay below the 200 ms segmentation threshold; gaps between IPUs stay
// above it, so segmentation recovers the generated boundaries exactly.
// A planted gesture type shifts P(yield) by `delta`, giving the gesture
// channel a known, recoverable effect size.
struct SynthConfig {
  int n_speakers = 3;
  double session_length_s = 300.0;
  std::vector<double> hold_prob = {0.6};  // per speaker; single value broadcasts
  std::array<double, 2> word_duration_s = {0.15, 0.40};
  std::array<double, 2> intra_pause_s = {0.02, 0.15};
  std::array<double, 2> turn_gap_s = {0.25, 0.80};
  std::array<int, 2> words_per_ipu = {3, 9};
  // rates per turn, class order iconic, metaphoric, deictic, discourse
  std::array<double, 4> gesture_rates = {0.10, 0.06, 0.30, 0.10};
  std::optional<corpus::GestureType> planted_type = corpus::GestureType::deictic;
  double planted_delta = 0.25;

  double frame_rate_hz = 25.0;
  double noise_sigma = 0.05;
  double gesture_amp = 0.25;
  double posture_sigma = 0.12;
  double idle_amp = 0.02;
  std::array<double, 2> gesture_duration_s = {1.0, 1.8};

  double sample_rate_hz = 8000.0;
  double base_tone_hz = 180.0;
  double tone_step_hz = 60.0;
  double audio_amplitude = 0.3;
  bool write_audio = true;

  uint64_t seed = 1;

  double hold_prob_for(int speaker) const {
    return hold_prob.size() == 1 ? hold_prob[0] : hold_prob[static_cast<size_t>(speaker)];
  }
};

SynthConfig synth_config_from_json(const std::string& json_text);
std::string synth_config_to_json(const SynthConfig& cfg);
void validate_config(const SynthConfig& cfg);

struct GroundTruthTurn {
  std::string speaker_id;
  double onset = 0.0;
  double offset = 0.0;
  bool yield = false;
  std::optional<std::string> next_speaker_id;
};

struct GeneratedSession {
  corpus::Session session;
  std::vector<GroundTruthTurn> truth;
  std::vector<std::vector<double>> audio;  // per speaker, written by generate_benchmark
};

GeneratedSession generate_session(const SynthConfig& cfg, int session_index);

struct BenchmarkManifest {
  std::string json;  // full manifest document
  std::string content_hash;
  int64_t total_turns = 0;
  int64_t total_holds = 0;
};

// Writes session files, motion and audio sidecars, per-session ground-truth
// .truth.jsonl files, and manifest.json into out_dir.
BenchmarkManifest generate_benchmark(const SynthConfig& cfg, int n_sessions, const std::string& out_dir);

std::vector<GroundTruthTurn> read_truth_jsonl(const std::string& path);

// Joint set used by generated motion; pelvis first.
const std::vector<std::string>& synth_joint_names();

}  // namespace ttk::synth
