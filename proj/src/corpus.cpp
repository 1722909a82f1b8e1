#include "ttk/corpus.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "ttk/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ttk::corpus {

const char* to_string(GestureType t) {
  switch (t) {
    case GestureType::iconic: return "iconic";
    case GestureType::metaphoric: return "metaphoric";
    case GestureType::deictic: return "deictic";
    case GestureType::discourse: return "discourse";
  }
  return "?";
}

GestureType gesture_type_from_string(const std::string& s) {
  if (s == "iconic") return GestureType::iconic;
  if (s == "metaphoric") return GestureType::metaphoric;
  if (s == "deictic") return GestureType::deictic;
  if (s == "discourse") return GestureType::discourse;
  throw ValidationError("unknown gesture type '" + s + "' (accepted: iconic, metaphoric, deictic, discourse)");
}

const SpeakerTrack* Session::find_speaker(const std::string& id) const {
  for (const auto& t : speakers)
    if (t.speaker_id == id) return &t;
  return nullptr;
}

std::string span_key(double onset, double offset) {
  auto ms = [](double s) { return static_cast<long long>(std::llround(s * 1000.0)); };
  return std::to_string(ms(onset)) + "-" + std::to_string(ms(offset));
}

// ---------------------------------------------------------------------------
// Motion binary: "GMO1", u32 F, u32 J, f32 frame_rate, J x (u32 len + name),
// then F*J*3 f32 little-endian values (frame-major, joint-minor, xyz).
// ---------------------------------------------------------------------------

namespace {

template <typename V>
void put(std::ofstream& os, V v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V get(std::ifstream& is, const char* what) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!is) throw RuntimeFailure(std::string("motion file: truncated while reading ") + what);
  return v;
}

}  // namespace

void write_motion(const MotionSequence& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeFailure("cannot open " + path + " for writing");
  os.write("GMO1", 4);
  put<uint32_t>(os, static_cast<uint32_t>(m.frame_count()));
  put<uint32_t>(os, static_cast<uint32_t>(m.joint_count()));
  put<float>(os, static_cast<float>(m.frame_rate_hz));
  for (const auto& name : m.joint_names) {
    put<uint32_t>(os, static_cast<uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  os.write(reinterpret_cast<const char*>(m.frames.data()), static_cast<std::streamsize>(m.frames.size() * 4));
  if (!os) throw RuntimeFailure("write failed for " + path);
}

MotionSequence load_motion(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open motion file " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "GMO1", 4) != 0) throw ValidationError("motion file " + path + ": bad magic");
  uint32_t f = get<uint32_t>(is, "frame count");
  uint32_t j = get<uint32_t>(is, "joint count");
  float rate = get<float>(is, "frame rate");
  MotionSequence m;
  m.frame_rate_hz = rate;
  for (uint32_t k = 0; k < j; ++k) {
    uint32_t len = get<uint32_t>(is, "joint name length");
    std::string name(len, '\0');
    is.read(name.data(), len);
    if (!is) throw RuntimeFailure("motion file " + path + ": truncated joint name");
    m.joint_names.push_back(std::move(name));
  }
  uint64_t count = static_cast<uint64_t>(f) * j * 3;
  m.frames.resize(count);
  is.read(reinterpret_cast<char*>(m.frames.data()), static_cast<std::streamsize>(count * 4));
  if (static_cast<uint64_t>(is.gcount()) != count * 4)
    throw RuntimeFailure("motion file " + path + ": payload size mismatch (header declares " + std::to_string(f) +
                         " frames x " + std::to_string(j) + " joints)");
  is.peek();
  if (!is.eof()) throw RuntimeFailure("motion file " + path + ": trailing bytes after payload");
  for (float v : m.frames)
    if (!std::isfinite(v)) throw ValidationError("motion file " + path + ": non-finite value");
  return m;
}

// ---------------------------------------------------------------------------
// Embeddings JSON: { "<onsetms>-<offsetms>": [..], ... }, all same length.
// ---------------------------------------------------------------------------

std::map<std::string, std::vector<double>> load_embeddings(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("cannot open embeddings file " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("embeddings file " + path + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("embeddings file " + path + ": top level must be an object");
  std::map<std::string, std::vector<double>> out;
  size_t dim = 0;
  for (auto& [key, val] : doc.items()) {
    if (!val.is_array()) throw ValidationError("embeddings file " + path + ": value for " + key + " is not an array");
    std::vector<double> vec;
    for (auto& x : val) {
      if (!x.is_number()) throw ValidationError("embeddings file " + path + ": non-numeric entry under " + key);
      vec.push_back(x.get<double>());
    }
    if (out.empty()) {
      dim = vec.size();
    } else if (vec.size() != dim) {
      throw ValidationError("embeddings file " + path + ": mixed dimensions (" + std::to_string(vec.size()) + " vs " +
                            std::to_string(dim) + " at key " + key + ")");
    }
    out.emplace(key, std::move(vec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Session JSON
// ---------------------------------------------------------------------------

namespace {

void reject_unknown_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw ValidationError(where + ": unknown key '" + key + "'");
}

double require_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  if (!obj[key].is_number()) throw ValidationError(where + "." + key + ": expected a number");
  return obj[key].get<double>();
}

std::string require_string(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ValidationError(where + ": missing key '" + key + "'");
  if (!obj[key].is_string()) throw ValidationError(where + "." + key + ": expected a string");
  return obj[key].get<std::string>();
}

}  // namespace

Session load_session(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("cannot open session file " + path);
  json doc;
  try {
    doc = json::parse(is);
  } catch (const json::exception& e) {
    throw ValidationError("session file " + path + ": parse error: " + e.what());
  }
  if (!doc.is_object()) throw ValidationError("session file " + path + ": top level must be an object");
  reject_unknown_keys(doc, {"session_id", "duration_s", "speakers"}, "session");

  Session s;
  s.session_id = require_string(doc, "session_id", "session");
  s.duration_s = require_number(doc, "duration_s", "session");
  if (!doc.contains("speakers") || !doc["speakers"].is_array())
    throw ValidationError("session file " + path + ": 'speakers' must be an array");

  fs::path base = fs::path(path).parent_path();
  int si = 0;
  for (const auto& sp : doc["speakers"]) {
    std::string where = "speakers[" + std::to_string(si) + "]";
    if (!sp.is_object()) throw ValidationError(where + ": expected an object");
    reject_unknown_keys(sp, {"speaker_id", "words", "gestures", "motion_path", "audio_path", "embeddings_path"}, where);
    SpeakerTrack t;
    t.speaker_id = require_string(sp, "speaker_id", where);
    if (sp.contains("words")) {
      if (!sp["words"].is_array()) throw ValidationError(where + ".words: expected an array");
      int wi = 0;
      for (const auto& w : sp["words"]) {
        std::string wwhere = where + ".words[" + std::to_string(wi) + "]";
        reject_unknown_keys(w, {"text", "onset", "offset"}, wwhere);
        TimedWord word;
        word.text = require_string(w, "text", wwhere);
        word.onset = require_number(w, "onset", wwhere);
        word.offset = require_number(w, "offset", wwhere);
        t.words.push_back(std::move(word));
        ++wi;
      }
    }
    if (sp.contains("gestures")) {
      if (!sp["gestures"].is_array()) throw ValidationError(where + ".gestures: expected an array");
      int gi = 0;
      for (const auto& g : sp["gestures"]) {
        std::string gwhere = where + ".gestures[" + std::to_string(gi) + "]";
        reject_unknown_keys(g, {"onset", "offset", "type"}, gwhere);
        GestureSpan span;
        span.onset = require_number(g, "onset", gwhere);
        span.offset = require_number(g, "offset", gwhere);
        span.gtype = gesture_type_from_string(require_string(g, "type", gwhere));
        t.gestures.push_back(span);
        ++gi;
      }
    }
    if (sp.contains("motion_path") && !sp["motion_path"].is_null())
      t.motion = load_motion((base / sp["motion_path"].get<std::string>()).string());
    if (sp.contains("audio_path") && !sp["audio_path"].is_null())
      t.audio_path = (base / sp["audio_path"].get<std::string>()).string();
    if (sp.contains("embeddings_path") && !sp["embeddings_path"].is_null()) {
      t.embeddings = load_embeddings((base / sp["embeddings_path"].get<std::string>()).string());
      t.has_embeddings = true;
    }
    s.speakers.push_back(std::move(t));
    ++si;
  }

  auto violations = validate_session(s);
  if (!violations.empty()) {
    std::ostringstream os;
    os << "session file " << path << ": " << violations.size() << " violation(s):";
    for (const auto& v : violations) os << "\n  " << v.path << ": " << v.message;
    throw ValidationError(os.str());
  }
  return s;
}

void write_session(const Session& s, const std::string& path) {
  fs::path base = fs::path(path).parent_path();
  fs::path stem = fs::path(path).stem();
  json doc;
  doc["session_id"] = s.session_id;
  doc["duration_s"] = s.duration_s;
  doc["speakers"] = json::array();
  for (const auto& t : s.speakers) {
    json sp;
    sp["speaker_id"] = t.speaker_id;
    sp["words"] = json::array();
    for (const auto& w : t.words) sp["words"].push_back({{"text", w.text}, {"onset", w.onset}, {"offset", w.offset}});
    sp["gestures"] = json::array();
    for (const auto& g : t.gestures)
      sp["gestures"].push_back({{"onset", g.onset}, {"offset", g.offset}, {"type", to_string(g.gtype)}});
    if (t.motion) {
      std::string motion_name = (stem.string() + "_" + t.speaker_id + ".gmo");
      write_motion(*t.motion, (base / motion_name).string());
      sp["motion_path"] = motion_name;
    }
    if (t.audio_path) sp["audio_path"] = fs::path(*t.audio_path).filename().string();
    if (t.has_embeddings) {
      std::string emb_name = stem.string() + "_" + t.speaker_id + ".emb.json";
      json emb;
      for (const auto& [key, vec] : t.embeddings) emb[key] = vec;
      std::ofstream eo((base / emb_name).string(), std::ios::trunc);
      if (!eo) throw RuntimeFailure("cannot write embeddings sidecar for " + t.speaker_id);
      eo << emb.dump() << "\n";
      sp["embeddings_path"] = emb_name;
    }
    doc["speakers"].push_back(std::move(sp));
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw RuntimeFailure("cannot open " + path + " for writing");
  os << doc.dump(2) << "\n";
  if (!os) throw RuntimeFailure("write failed for " + path);
}

// ---------------------------------------------------------------------------
// Annotation CSV
// ---------------------------------------------------------------------------

SpeakerTrack import_annotation_csv(const std::string& path, SpeakerTrack track) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("cannot open annotation file " + path);
  std::string line;
  if (!std::getline(is, line)) throw ValidationError("annotation file " + path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "onset_s,offset_s,gesture_type")
    throw ValidationError("annotation file " + path + ": expected header onset_s,offset_s,gesture_type");
  int row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::string where = path + " row " + std::to_string(row);
    std::istringstream ss(line);
    std::string onset_s, offset_s, type_s;
    if (!std::getline(ss, onset_s, ',') || !std::getline(ss, offset_s, ',') || !std::getline(ss, type_s))
      throw ValidationError(where + ": expected 3 comma-separated fields");
    GestureSpan span;
    size_t pos = 0;
    try {
      span.onset = std::stod(onset_s, &pos);
      if (pos != onset_s.size()) throw std::invalid_argument("trailing");
      span.offset = std::stod(offset_s, &pos);
      if (pos != offset_s.size()) throw std::invalid_argument("trailing");
    } catch (const std::exception&) {
      throw ValidationError(where + ": non-numeric timestamp");
    }
    span.gtype = gesture_type_from_string(type_s);
    if (!(span.onset < span.offset)) throw ValidationError(where + ": onset must be < offset");
    track.gestures.push_back(span);
  }
  return track;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

std::vector<Violation> validate_session(const Session& s) {
  std::vector<Violation> out;
  auto flag = [&out](std::string path, std::string msg) { out.push_back({std::move(path), std::move(msg)}); };

  if (s.duration_s < 0) flag("duration_s", "must be non-negative");
  std::set<std::string> seen_ids;
  for (size_t si = 0; si < s.speakers.size(); ++si) {
    const auto& t = s.speakers[si];
    std::string base = "speakers[" + std::to_string(si) + "]";
    if (!seen_ids.insert(t.speaker_id).second) flag(base + ".speaker_id", "duplicate speaker id '" + t.speaker_id + "'");
    for (size_t wi = 0; wi < t.words.size(); ++wi) {
      const auto& w = t.words[wi];
      std::string wp = base + ".words[" + std::to_string(wi) + "]";
      if (!(w.offset > w.onset)) flag(wp, "offset must be > onset");
      if (w.onset < 0) flag(wp, "onset must be >= 0");
      if (w.offset > s.duration_s) flag(wp, "word extends past duration_s");
      if (wi > 0 && w.onset < t.words[wi - 1].onset) flag(wp, "words not sorted by onset");
    }
    for (size_t gi = 0; gi < t.gestures.size(); ++gi) {
      const auto& g = t.gestures[gi];
      std::string gp = base + ".gestures[" + std::to_string(gi) + "]";
      if (!(g.offset > g.onset)) flag(gp, "offset must be > onset");
      if (g.onset < 0 || g.offset > s.duration_s) flag(gp, "gesture span lies outside [0, duration_s]");
    }
    if (t.motion) {
      std::string mp = base + ".motion";
      const auto& m = *t.motion;
      if (m.frame_rate_hz <= 0) flag(mp, "frame_rate_hz must be positive");
      bool has_pelvis = false;
      for (const auto& n : m.joint_names) has_pelvis = has_pelvis || n == "pelvis";
      if (!has_pelvis) flag(mp, "joint_names must include 'pelvis'");
      if (m.frame_rate_hz > 0) {
        int64_t expected = static_cast<int64_t>(std::llround(s.duration_s * m.frame_rate_hz));
        if (std::llabs(m.frame_count() - expected) > 1)
          flag(mp, "frame count " + std::to_string(m.frame_count()) + " not within 1 of duration*rate (" +
                       std::to_string(expected) + ")");
      }
      for (float v : m.frames)
        if (!std::isfinite(v)) {
          flag(mp, "non-finite frame value");
          break;
        }
    }
    if (t.has_embeddings) {
      size_t dim = 0;
      for (const auto& [key, vec] : t.embeddings) {
        if (dim == 0) dim = vec.size();
        if (vec.size() != dim) {
          flag(base + ".embeddings", "mixed embedding dimensions");
          break;
        }
      }
    }
  }
  return out;
}

}  // namespace ttk::corpus
