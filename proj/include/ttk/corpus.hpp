#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ttk::corpus {

enum class GestureType { iconic, metaphoric, deictic, discourse };

const char* to_string(GestureType t);
GestureType gesture_type_from_string(const std::string& s);

struct TimedWord {
  std::string text;
  double onset = 0.0;
  double offset = 0.0;
};

struct GestureSpan {
  double onset = 0.0;
  double offset = 0.0;
  GestureType gtype = GestureType::iconic;
};

// Frame-major joint positions in meters: frames[f*J*3 + j*3 + axis].
struct MotionSequence {
  double frame_rate_hz = 0.0;
  std::vector<std::string> joint_names;
  std::vector<float> frames;

  int64_t frame_count() const {
    return joint_names.empty() ? 0 : static_cast<int64_t>(frames.size()) / (3 * static_cast<int64_t>(joint_names.size()));
  }
  int joint_count() const { return static_cast<int>(joint_names.size()); }
  const float* frame(int64_t f) const { return frames.data() + f * joint_count() * 3; }
};

struct SpeakerTrack {
  std::string speaker_id;
  std::vector<TimedWord> words;
  std::vector<GestureSpan> gestures;
  std::optional<MotionSequence> motion;
  std::optional<std::string> audio_path;                     // resolved path to a WAV file
  std::map<std::string, std::vector<double>> embeddings;     // span key "onsetms-offsetms" -> vector
  bool has_embeddings = false;
};

struct Session {
  std::string session_id;
  double duration_s = 0.0;
  std::vector<SpeakerTrack> speakers;

  const SpeakerTrack* find_speaker(const std::string& id) const;
};

struct Violation {
  std::string path;  // e.g. "speakers[1].words[3]"
  std::string message;
};

// Loads the session JSON plus any referenced motion/audio/embedding sidecars
// (paths are resolved relative to the JSON file). Throws ValidationError on
// malformed input or, after loading, if validate_session reports violations.
Session load_session(const std::string& path);

// Writes the JSON document and motion sidecars next to it.
void write_session(const Session& s, const std::string& path);

MotionSequence load_motion(const std::string& path);
void write_motion(const MotionSequence& m, const std::string& path);

std::map<std::string, std::vector<double>> load_embeddings(const std::string& path);

// Appends gesture spans from a CSV with header onset_s,offset_s,gesture_type.
SpeakerTrack import_annotation_csv(const std::string& path, SpeakerTrack track);

std::vector<Violation> validate_session(const Session& s);

// Span key used by precomputed embedding files: "<onset_ms>-<offset_ms>",
// both rounded to the nearest millisecond.
std::string span_key(double onset, double offset);

}  // namespace ttk::corpus
