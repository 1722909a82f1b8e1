#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ttk/corpus.hpp"

namespace ttk::feat {

struct FeatureVector {
  std::vector<double> values;
  std::string provider_id;
  bool empty_input = false;  // zero vector produced from empty input

  int dim() const { return static_cast<int>(values.size()); }
};

// Fixed-length normalized motion slice: frames[t*J*3 + j*3 + axis], pelvis
// at the origin in every real frame; padded frames are zero with mask false.
struct MotionWindow {
  int frame_count = 0;  // T, padding included
  int joint_count = 0;  // J'
  double frame_rate_hz = 0.0;
  std::vector<float> frames;
  std::vector<uint8_t> mask;  // length T, true = real frame

  int real_frames() const {
    int n = 0;
    for (uint8_t m : mask) n += m ? 1 : 0;
    return n;
  }
  bool all_padding() const { return real_frames() == 0; }
};

struct AudioConfig {
  int bands = 26;
  double window_s = 0.025;
  double hop_s = 0.010;
  double log_floor = 1e-10;
};

// Deterministic feature hashing of unigrams and bigrams into `dim` signed
// buckets, L2-normalized. Empty token list gives the zero vector.
FeatureVector embed_text_hashed(const std::vector<std::string>& tokens, int dim);

// Log filterbank energies on 25 ms / 10 ms frames, mel-spaced triangular
// filters, pooled to per-band mean and standard deviation (length 2*bands).
FeatureVector audio_spectral_features(const std::vector<double>& samples, double sample_rate_hz,
                                      const AudioConfig& config = {});

// Center frequencies (Hz) of the triangular filters used above; exposed so
// tests can pick a tone aligned with a band.
std::vector<double> filterbank_centers_hz(double sample_rate_hz, const AudioConfig& config = {});

// Precomputed embedding lookup by span key; absent when not stored.
std::optional<FeatureVector> load_precomputed(const corpus::SpeakerTrack& track, double onset, double offset);

// Trailing window of at most max_seconds ending at `offset`, pelvis-relative,
// left-padded to T = round(max_seconds * frame_rate).
MotionWindow extract_motion_window(const corpus::MotionSequence& motion, double onset, double offset,
                                   double max_seconds = 4.0, const std::vector<std::string>& upper_body_joints = {});

// All-padding window for turns without motion.
MotionWindow empty_motion_window(int frame_count, int joint_count, double frame_rate_hz);

}  // namespace ttk::feat
