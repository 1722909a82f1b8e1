#include "ttk/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ttk/error.hpp"
#include "ttk/rng.hpp"
#include "ttk/wav.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ttk::synth {

namespace {

constexpr double kTau = 6.28318530717958647692;

const std::vector<std::string> kVocabulary = {
    "so",   "yeah", "okay", "right", "well",  "then", "maybe", "look",  "wait", "sure", "good", "fine",
    "roll", "move", "door", "torch", "sword", "path", "check", "north", "stop", "here", "there", "next"};

struct JointSpec {
  const char* name;
  double x, y, z;
};

const std::array<JointSpec, 10> kJoints = {{{"pelvis", 0.0, 1.00, 0.0},
                                            {"spine", 0.0, 1.25, 0.0},
                                            {"neck", 0.0, 1.50, 0.0},
                                            {"head", 0.0, 1.65, 0.0},
                                            {"l_shoulder", -0.20, 1.45, 0.0},
                                            {"l_elbow", -0.25, 1.20, 0.0},
                                            {"l_wrist", -0.25, 0.95, 0.10},
                                            {"r_shoulder", 0.20, 1.45, 0.0},
                                            {"r_elbow", 0.25, 1.20, 0.0},
                                            {"r_wrist", 0.25, 0.95, 0.10}}};

// arm joints animated by gesture templates
const std::array<int, 4> kActiveJoints = {5, 6, 8, 9};

// per-type frequency (Hz), oscillation axis emphasis, and a static pose
// displacement held for the gesture duration; class order iconic,
// metaphoric, deictic, discourse
const std::array<double, 4> kTypeFreq = {1.0, 1.7, 2.6, 3.6};
const std::array<std::array<double, 3>, 4> kTypeAxis = {{{0.8, 0.2, 0.8},
                                                         {0.2, 1.0, 0.2},
                                                         {0.3, 0.2, 1.0},
                                                         {1.0, 0.3, 0.2}}};
const std::array<std::array<double, 3>, 4> kTypePose = {{{0.12, 0.04, 0.00},
                                                         {0.00, 0.14, 0.04},
                                                         {-0.04, 0.02, 0.14},
                                                         {-0.12, 0.06, -0.06}}};

struct RenderedGesture {
  double onset, offset;
  int type;
  double scale;
  double phase;
};

uint64_t fnv1a_update(uint64_t h, const char* data, size_t n) {
  for (size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(data[i]);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

const std::vector<std::string>& synth_joint_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& j : kJoints) out.push_back(j.name);
    return out;
  }();
  return names;
}

void validate_config(const SynthConfig& cfg) {
  if (cfg.n_speakers < 1) throw ValidationError("synth config: n_speakers must be >= 1");
  if (cfg.session_length_s <= 1.0) throw ValidationError("synth config: session_length_s must be > 1");
  if (cfg.hold_prob.size() != 1 && static_cast<int>(cfg.hold_prob.size()) != cfg.n_speakers)
    throw ValidationError("synth config: hold_prob must have 1 or n_speakers entries");
  for (double p : cfg.hold_prob)
    if (p < 0.0 || p > 1.0) throw ValidationError("synth config: hold probabilities must lie in [0,1]");
  for (double r : cfg.gesture_rates)
    if (r < 0.0 || r > 1.0) throw ValidationError("synth config: gesture rates must lie in [0,1]");
  if (cfg.planted_type) {
    for (int s = 0; s < cfg.n_speakers; ++s) {
      double p_yield = 1.0 - cfg.hold_prob_for(s) + cfg.planted_delta;
      if (p_yield < 0.0 || p_yield > 1.0)
        throw ValidationError("synth config: infeasible planted_delta, P(yield) = " + std::to_string(p_yield) +
                              " for speaker " + std::to_string(s));
    }
  }
  if (cfg.words_per_ipu[0] < 1 || cfg.words_per_ipu[1] < cfg.words_per_ipu[0])
    throw ValidationError("synth config: bad words_per_ipu range");
  if (cfg.intra_pause_s[1] >= 0.200)
    throw ValidationError("synth config: intra_pause_s must stay below the 200 ms threshold");
  if (cfg.turn_gap_s[0] < 0.200)
    throw ValidationError("synth config: turn_gap_s must stay at or above the 200 ms threshold");
  if (cfg.frame_rate_hz <= 0 || cfg.sample_rate_hz <= 0)
    throw ValidationError("synth config: rates must be positive");
  if (cfg.word_duration_s[0] * cfg.words_per_ipu[0] < 0.300)
    throw ValidationError("synth config: shortest possible IPU would fall below the 300 ms merge threshold");
}

GeneratedSession generate_session(const SynthConfig& cfg, int session_index) {
  validate_config(cfg);
  Rng rng = Rng(cfg.seed).split(1000 + static_cast<uint64_t>(session_index));

  GeneratedSession out;
  auto& session = out.session;
  {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "synth_%03d", session_index);
    session.session_id = buf;
  }
  session.duration_s = cfg.session_length_s;
  session.speakers.resize(static_cast<size_t>(cfg.n_speakers));
  std::vector<std::vector<RenderedGesture>> rendered(static_cast<size_t>(cfg.n_speakers));
  for (int s = 0; s < cfg.n_speakers; ++s) session.speakers[static_cast<size_t>(s)].speaker_id = "spk" + std::to_string(s);

  // ------------------------------------------------------------------ timeline
  double t = rng.uniform(0.3, 0.8);
  int speaker = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_speakers)));
  while (true) {
    int n_words = cfg.words_per_ipu[0] +
                  static_cast<int>(rng.below(static_cast<uint64_t>(cfg.words_per_ipu[1] - cfg.words_per_ipu[0] + 1)));
    std::vector<corpus::TimedWord> words;
    double wt = t;
    for (int w = 0; w < n_words; ++w) {
      if (w > 0) wt += rng.uniform(cfg.intra_pause_s[0], cfg.intra_pause_s[1]);
      double dur = rng.uniform(cfg.word_duration_s[0], cfg.word_duration_s[1]);
      words.push_back({kVocabulary[rng.below(kVocabulary.size())], wt, wt + dur});
      wt += dur;
    }
    if (wt > cfg.session_length_s - 0.3) break;  // would not fit; stop before emitting

    GroundTruthTurn truth;
    truth.speaker_id = session.speakers[static_cast<size_t>(speaker)].speaker_id;
    truth.onset = words.front().onset;
    truth.offset = words.back().offset;

    bool planted_present = false;
    for (int g = 0; g < 4; ++g) {
      if (rng.uniform() >= cfg.gesture_rates[static_cast<size_t>(g)]) continue;
      double g_dur = rng.uniform(cfg.gesture_duration_s[0], cfg.gesture_duration_s[1]);
      double latest = std::max(truth.onset, truth.offset - g_dur);
      double g_on = rng.uniform(truth.onset, latest);
      double g_off = std::min(truth.offset, g_on + g_dur);
      if (g_off - g_on < 0.05) continue;
      corpus::GestureSpan span{g_on, g_off, static_cast<corpus::GestureType>(g)};
      session.speakers[static_cast<size_t>(speaker)].gestures.push_back(span);
      rendered[static_cast<size_t>(speaker)].push_back(
          {g_on, g_off, g, rng.uniform(0.7, 1.4), rng.uniform(0.0, kTau)});
      if (cfg.planted_type && static_cast<corpus::GestureType>(g) == *cfg.planted_type) planted_present = true;
    }

    double p_yield = 1.0 - cfg.hold_prob_for(speaker);
    if (planted_present) p_yield += cfg.planted_delta;
    truth.yield = rng.uniform() < p_yield;

    auto& track = session.speakers[static_cast<size_t>(speaker)];
    track.words.insert(track.words.end(), words.begin(), words.end());

    int next_speaker = speaker;
    if (truth.yield && cfg.n_speakers > 1) {
      auto pick = static_cast<int>(rng.below(static_cast<uint64_t>(cfg.n_speakers - 1)));
      next_speaker = pick >= speaker ? pick + 1 : pick;
    }
    truth.next_speaker_id = session.speakers[static_cast<size_t>(next_speaker)].speaker_id;
    out.truth.push_back(truth);

    t = wt + rng.uniform(cfg.turn_gap_s[0], cfg.turn_gap_s[1]);
    speaker = next_speaker;
  }
  if (out.truth.empty()) throw RuntimeFailure("synth: session too short generated zero turns");
  // session-final turn has no successor
  out.truth.back().yield = false;
  out.truth.back().next_speaker_id.reset();

  // ------------------------------------------------------------------- motion
  for (auto& list : rendered)
    std::sort(list.begin(), list.end(), [](const RenderedGesture& a, const RenderedGesture& b) { return a.onset < b.onset; });
  auto frames_total = static_cast<int64_t>(std::llround(cfg.session_length_s * cfg.frame_rate_hz));
  int J = static_cast<int>(kJoints.size());
  for (int s = 0; s < cfg.n_speakers; ++s) {
    Rng mrng = rng.split(10 + static_cast<uint64_t>(s));
    double theta = mrng.uniform(0.0, kTau);
    // posture drift knots every 4 s, linearly interpolated
    auto n_knots = static_cast<size_t>(cfg.session_length_s / 4.0) + 2;
    std::vector<std::array<double, 3>> knots(n_knots);
    for (auto& k : knots)
      k = {mrng.normal(0, cfg.posture_sigma), mrng.normal(0, cfg.posture_sigma * 0.25),
           mrng.normal(0, cfg.posture_sigma)};

    corpus::MotionSequence motion;
    motion.frame_rate_hz = cfg.frame_rate_hz;
    motion.joint_names = synth_joint_names();
    motion.frames.resize(static_cast<size_t>(frames_total) * J * 3);

    const auto& gestures = rendered[static_cast<size_t>(s)];
    size_t gesture_cursor = 0;
    for (int64_t f = 0; f < frames_total; ++f) {
      double time = static_cast<double>(f) / cfg.frame_rate_hz;
      double gx = 0.10 * std::sin(kTau * 0.05 * time + theta);
      double gz = 0.10 * std::cos(kTau * 0.04 * time + theta);
      double knot_pos = time / 4.0;
      auto k0 = static_cast<size_t>(knot_pos);
      double frac = knot_pos - static_cast<double>(k0);
      auto k1 = std::min(k0 + 1, knots.size() - 1);
      std::array<double, 3> posture = {knots[k0][0] + frac * (knots[k1][0] - knots[k0][0]),
                                       knots[k0][1] + frac * (knots[k1][1] - knots[k0][1]),
                                       knots[k0][2] + frac * (knots[k1][2] - knots[k0][2])};
      while (gesture_cursor < gestures.size() && gestures[gesture_cursor].offset < time) ++gesture_cursor;
      const RenderedGesture* active = nullptr;
      for (size_t g = gesture_cursor; g < gestures.size() && gestures[g].onset <= time; ++g)
        if (time >= gestures[g].onset && time < gestures[g].offset) {
          active = &gestures[g];
          break;
        }

      float* frame = motion.frames.data() + static_cast<size_t>(f) * J * 3;
      for (int j = 0; j < J; ++j) {
        double px = kJoints[static_cast<size_t>(j)].x + gx;
        double py = kJoints[static_cast<size_t>(j)].y;
        double pz = kJoints[static_cast<size_t>(j)].z + gz;
        if (j != 0) {
          px += posture[0];
          py += posture[1];
          pz += posture[2];
          double sway = cfg.idle_amp * std::sin(kTau * 0.3 * time + theta + j);
          px += sway;
          py += 0.5 * sway;
          bool is_active = std::find(kActiveJoints.begin(), kActiveJoints.end(), j) != kActiveJoints.end();
          if (active != nullptr && is_active) {
            const auto& axis = kTypeAxis[static_cast<size_t>(active->type)];
            const auto& pose = kTypePose[static_cast<size_t>(active->type)];
            double osc = std::sin(kTau * kTypeFreq[static_cast<size_t>(active->type)] * (time - active->onset) +
                                  active->phase + 0.7 * j);
            double amp = cfg.gesture_amp * active->scale;
            double side = (j >= 7) ? 1.0 : -1.0;  // mirror the pose across arms
            px += amp * axis[0] * osc + pose[0] * side;
            py += amp * axis[1] * osc + pose[1];
            pz += amp * axis[2] * osc + pose[2];
          }
          px += mrng.normal(0, cfg.noise_sigma);
          py += mrng.normal(0, cfg.noise_sigma);
          pz += mrng.normal(0, cfg.noise_sigma);
        }
        frame[j * 3 + 0] = static_cast<float>(px);
        frame[j * 3 + 1] = static_cast<float>(py);
        frame[j * 3 + 2] = static_cast<float>(pz);
      }
    }
    session.speakers[static_cast<size_t>(s)].motion = std::move(motion);
  }

  // -------------------------------------------------------------------- audio
  if (cfg.write_audio) {
    out.audio.resize(static_cast<size_t>(cfg.n_speakers));
    auto samples_total = static_cast<size_t>(std::llround(cfg.session_length_s * cfg.sample_rate_hz));
    for (int s = 0; s < cfg.n_speakers; ++s) {
      auto& wave = out.audio[static_cast<size_t>(s)];
      wave.assign(samples_total, 0.0);
      double tone = cfg.base_tone_hz + cfg.tone_step_hz * s;
      for (const auto& w : session.speakers[static_cast<size_t>(s)].words) {
        auto i0 = static_cast<size_t>(std::max(0.0, w.onset * cfg.sample_rate_hz));
        auto i1 = std::min(samples_total, static_cast<size_t>(w.offset * cfg.sample_rate_hz));
        double ramp = 0.010 * cfg.sample_rate_hz;
        for (size_t i = i0; i < i1; ++i) {
          double time = static_cast<double>(i) / cfg.sample_rate_hz;
          double env = 1.0;
          double into = static_cast<double>(i) - static_cast<double>(i0);
          double left = static_cast<double>(i1) - static_cast<double>(i) - 1.0;
          if (into < ramp) env = into / ramp;
          if (left < ramp) env = std::min(env, left / ramp);
          wave[i] = cfg.audio_amplitude * env * std::sin(kTau * tone * time);
        }
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config JSON
// ---------------------------------------------------------------------------

namespace {

std::array<double, 2> range_from(const json& v, const std::string& key) {
  if (!v.is_array() || v.size() != 2) throw ValidationError("synth config: " + key + " must be [lo, hi]");
  return {v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

SynthConfig synth_config_from_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("synth config: parse error: ") + e.what());
  }
  SynthConfig cfg;
  static const std::vector<std::string> known = {
      "n_speakers",      "session_length_s", "hold_prob",        "word_duration_s", "intra_pause_s",
      "turn_gap_s",      "words_per_ipu",    "gesture_rates",    "planted",         "frame_rate_hz",
      "noise_sigma",     "gesture_amp",      "posture_sigma",    "idle_amp",        "gesture_duration_s",
      "sample_rate_hz",  "base_tone_hz",     "tone_step_hz",     "audio_amplitude", "write_audio",
      "seed"};
  for (auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("synth config: unknown key '" + key + "'");
  if (doc.contains("n_speakers")) cfg.n_speakers = doc["n_speakers"].get<int>();
  if (doc.contains("session_length_s")) cfg.session_length_s = doc["session_length_s"].get<double>();
  if (doc.contains("hold_prob")) {
    if (doc["hold_prob"].is_array())
      cfg.hold_prob = doc["hold_prob"].get<std::vector<double>>();
    else
      cfg.hold_prob = {doc["hold_prob"].get<double>()};
  }
  if (doc.contains("word_duration_s")) cfg.word_duration_s = range_from(doc["word_duration_s"], "word_duration_s");
  if (doc.contains("intra_pause_s")) cfg.intra_pause_s = range_from(doc["intra_pause_s"], "intra_pause_s");
  if (doc.contains("turn_gap_s")) cfg.turn_gap_s = range_from(doc["turn_gap_s"], "turn_gap_s");
  if (doc.contains("words_per_ipu")) {
    auto r = doc["words_per_ipu"];
    if (!r.is_array() || r.size() != 2) throw ValidationError("synth config: words_per_ipu must be [min, max]");
    cfg.words_per_ipu = {r[0].get<int>(), r[1].get<int>()};
  }
  if (doc.contains("gesture_rates")) {
    auto& g = doc["gesture_rates"];
    static const char* names[4] = {"iconic", "metaphoric", "deictic", "discourse"};
    for (auto& [key, val] : g.items()) {
      bool ok = false;
      for (int i = 0; i < 4; ++i)
        if (key == names[i]) {
          cfg.gesture_rates[static_cast<size_t>(i)] = val.get<double>();
          ok = true;
        }
      if (!ok) throw ValidationError("synth config: unknown gesture type '" + key + "' in gesture_rates");
    }
  }
  if (doc.contains("planted")) {
    auto& p = doc["planted"];
    if (p.is_null()) {
      cfg.planted_type.reset();
    } else {
      for (auto& [key, _] : p.items())
        if (key != "gesture_type" && key != "delta")
          throw ValidationError("synth config: unknown key 'planted." + key + "'");
      if (p.contains("gesture_type"))
        cfg.planted_type = corpus::gesture_type_from_string(p["gesture_type"].get<std::string>());
      if (p.contains("delta")) cfg.planted_delta = p["delta"].get<double>();
    }
  }
  if (doc.contains("frame_rate_hz")) cfg.frame_rate_hz = doc["frame_rate_hz"].get<double>();
  if (doc.contains("noise_sigma")) cfg.noise_sigma = doc["noise_sigma"].get<double>();
  if (doc.contains("gesture_amp")) cfg.gesture_amp = doc["gesture_amp"].get<double>();
  if (doc.contains("posture_sigma")) cfg.posture_sigma = doc["posture_sigma"].get<double>();
  if (doc.contains("idle_amp")) cfg.idle_amp = doc["idle_amp"].get<double>();
  if (doc.contains("gesture_duration_s"))
    cfg.gesture_duration_s = range_from(doc["gesture_duration_s"], "gesture_duration_s");
  if (doc.contains("sample_rate_hz")) cfg.sample_rate_hz = doc["sample_rate_hz"].get<double>();
  if (doc.contains("base_tone_hz")) cfg.base_tone_hz = doc["base_tone_hz"].get<double>();
  if (doc.contains("tone_step_hz")) cfg.tone_step_hz = doc["tone_step_hz"].get<double>();
  if (doc.contains("audio_amplitude")) cfg.audio_amplitude = doc["audio_amplitude"].get<double>();
  if (doc.contains("write_audio")) cfg.write_audio = doc["write_audio"].get<bool>();
  if (doc.contains("seed")) cfg.seed = doc["seed"].get<uint64_t>();
  validate_config(cfg);
  return cfg;
}

std::string synth_config_to_json(const SynthConfig& cfg) {
  json doc;
  doc["n_speakers"] = cfg.n_speakers;
  doc["session_length_s"] = cfg.session_length_s;
  doc["hold_prob"] = cfg.hold_prob;
  doc["word_duration_s"] = cfg.word_duration_s;
  doc["intra_pause_s"] = cfg.intra_pause_s;
  doc["turn_gap_s"] = cfg.turn_gap_s;
  doc["words_per_ipu"] = cfg.words_per_ipu;
  doc["gesture_rates"] = {{"iconic", cfg.gesture_rates[0]},
                          {"metaphoric", cfg.gesture_rates[1]},
                          {"deictic", cfg.gesture_rates[2]},
                          {"discourse", cfg.gesture_rates[3]}};
  if (cfg.planted_type)
    doc["planted"] = {{"gesture_type", corpus::to_string(*cfg.planted_type)}, {"delta", cfg.planted_delta}};
  else
    doc["planted"] = nullptr;
  doc["frame_rate_hz"] = cfg.frame_rate_hz;
  doc["noise_sigma"] = cfg.noise_sigma;
  doc["gesture_amp"] = cfg.gesture_amp;
  doc["posture_sigma"] = cfg.posture_sigma;
  doc["idle_amp"] = cfg.idle_amp;
  doc["gesture_duration_s"] = cfg.gesture_duration_s;
  doc["sample_rate_hz"] = cfg.sample_rate_hz;
  doc["base_tone_hz"] = cfg.base_tone_hz;
  doc["tone_step_hz"] = cfg.tone_step_hz;
  doc["audio_amplitude"] = cfg.audio_amplitude;
  doc["write_audio"] = cfg.write_audio;
  doc["seed"] = cfg.seed;
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Benchmark directory
// ---------------------------------------------------------------------------

std::vector<GroundTruthTurn> read_truth_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("cannot open truth file " + path);
  std::vector<GroundTruthTurn> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    json doc = json::parse(line);
    GroundTruthTurn t;
    t.speaker_id = doc.at("speaker_id").get<std::string>();
    t.onset = doc.at("onset").get<double>();
    t.offset = doc.at("offset").get<double>();
    t.yield = doc.at("label").get<std::string>() == "yield";
    if (doc.contains("next_speaker_id")) t.next_speaker_id = doc["next_speaker_id"].get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

BenchmarkManifest generate_benchmark(const SynthConfig& cfg, int n_sessions, const std::string& out_dir) {
  validate_config(cfg);
  if (n_sessions < 1) throw ValidationError("generate_benchmark: n_sessions must be >= 1");
  fs::create_directories(out_dir);

  BenchmarkManifest manifest;
  json doc;
  doc["config"] = json::parse(synth_config_to_json(cfg));
  doc["sessions"] = json::array();
  uint64_t hash = 0xCBF29CE484222325ULL;
  for (int i = 0; i < n_sessions; ++i) {
    auto generated = generate_session(cfg, i);
    const auto& sid = generated.session.session_id;
    std::string session_file = sid + ".json";
    // audio sidecars must exist before write_session records their names
    if (cfg.write_audio) {
      for (size_t s = 0; s < generated.audio.size(); ++s) {
        auto& track = generated.session.speakers[s];
        std::string wav_name = sid + "_" + track.speaker_id + ".wav";
        wav::write_wav({cfg.sample_rate_hz, generated.audio[s]}, (fs::path(out_dir) / wav_name).string());
        track.audio_path = (fs::path(out_dir) / wav_name).string();
      }
    }
    corpus::write_session(generated.session, (fs::path(out_dir) / session_file).string());

    std::ofstream truth((fs::path(out_dir) / (sid + ".truth.jsonl")).string(), std::ios::trunc);
    int64_t holds = 0;
    for (const auto& t : generated.truth) {
      json line;
      line["speaker_id"] = t.speaker_id;
      line["onset"] = t.onset;
      line["offset"] = t.offset;
      line["label"] = t.yield ? "yield" : "hold";
      if (t.next_speaker_id) line["next_speaker_id"] = *t.next_speaker_id;
      truth << line.dump() << "\n";
      if (!t.yield) ++holds;
    }

    std::ifstream sf((fs::path(out_dir) / session_file).string(), std::ios::binary);
    std::ostringstream buf;
    buf << sf.rdbuf();
    auto bytes = buf.str();
    hash = fnv1a_update(hash, bytes.data(), bytes.size());

    json entry;
    entry["id"] = sid;
    entry["file"] = session_file;
    entry["turns"] = generated.truth.size();
    entry["holds"] = holds;
    doc["sessions"].push_back(entry);
    manifest.total_turns += static_cast<int64_t>(generated.truth.size());
    manifest.total_holds += holds;
  }
  doc["totals"] = {{"turns", manifest.total_turns}, {"holds", manifest.total_holds}};
  {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    manifest.content_hash = buf;
  }
  doc["content_hash"] = manifest.content_hash;
  manifest.json = doc.dump(2);
  std::ofstream mf((fs::path(out_dir) / "manifest.json").string(), std::ios::trunc);
  if (!mf) throw RuntimeFailure("cannot write manifest in " + out_dir);
  mf << manifest.json << "\n";
  return manifest;
}

}  // namespace ttk::synth
