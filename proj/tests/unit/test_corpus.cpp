#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "json.hpp"
#include "ttk/corpus.hpp"
#include "ttk/error.hpp"

namespace fs = std::filesystem;
using namespace ttk;

namespace {

fs::path temp_dir() {
  auto dir = fs::temp_directory_path() / "ttk_corpus_test";
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& body) {
  std::ofstream os(p, std::ios::trunc);
  os << body;
}

corpus::Session make_session() {
  corpus::Session s;
  s.session_id = "sess";
  s.duration_s = 10.0;
  corpus::SpeakerTrack t;
  t.speaker_id = "a";
  t.words = {{"hi", 0.25, 0.5}, {"there", 0.625, 1.0}};
  t.gestures = {{1.0, 2.5, corpus::GestureType::deictic}};
  corpus::MotionSequence m;
  m.frame_rate_hz = 2.0;
  m.joint_names = {"pelvis", "head"};
  m.frames.resize(20 * 2 * 3);
  for (size_t i = 0; i < m.frames.size(); ++i) m.frames[i] = static_cast<float>(i) * 0.125f;
  t.motion = std::move(m);
  s.speakers.push_back(std::move(t));
  return s;
}

}  // namespace

TEST_CASE("session json round-trip is structurally identical with bit-exact timestamps") {
  auto dir = temp_dir();
  auto s = make_session();
  s.speakers[0].embeddings["250-500"] = {0.5, -1.25};
  s.speakers[0].has_embeddings = true;
  auto path = (dir / "roundtrip.json").string();
  corpus::write_session(s, path);
  auto loaded = corpus::load_session(path);
  CHECK(loaded.session_id == s.session_id);
  CHECK(loaded.duration_s == s.duration_s);
  REQUIRE(loaded.speakers.size() == 1);
  const auto& a = loaded.speakers[0];
  const auto& b = s.speakers[0];
  REQUIRE(a.words.size() == b.words.size());
  for (size_t i = 0; i < a.words.size(); ++i) {
    CHECK(a.words[i].text == b.words[i].text);
    CHECK(a.words[i].onset == b.words[i].onset);    // bit-exact
    CHECK(a.words[i].offset == b.words[i].offset);
  }
  REQUIRE(a.gestures.size() == 1);
  CHECK(a.gestures[0].onset == 1.0);
  CHECK(a.gestures[0].gtype == corpus::GestureType::deictic);
  REQUIRE(a.motion.has_value());
  CHECK(a.motion->frames == b.motion->frames);
  CHECK(a.motion->joint_names == b.motion->joint_names);
  CHECK(a.embeddings == b.embeddings);
}

TEST_CASE("minimal session: one speaker, zero words") {
  auto dir = temp_dir();
  auto path = dir / "minimal.json";
  write_text(path, R"({"session_id":"m","duration_s":1.0,"speakers":[{"speaker_id":"a"}]})");
  auto s = corpus::load_session(path.string());
  REQUIRE(s.speakers.size() == 1);
  CHECK(s.speakers[0].words.empty());
  CHECK(s.speakers[0].gestures.empty());
  CHECK_FALSE(s.speakers[0].motion.has_value());
}

TEST_CASE("word with offset < onset is rejected naming the word index") {
  auto dir = temp_dir();
  auto path = dir / "badword.json";
  write_text(path, R"({"session_id":"m","duration_s":5.0,"speakers":[{"speaker_id":"a",
    "words":[{"text":"ok","onset":0.1,"offset":0.2},{"text":"bad","onset":1.0,"offset":0.5}]}]})");
  CHECK_THROWS_WITH_AS(corpus::load_session(path.string()), doctest::Contains("words[1]"), ValidationError);
}

TEST_CASE("unknown keys are rejected") {
  auto dir = temp_dir();
  auto path = dir / "unknown.json";
  write_text(path, R"({"session_id":"m","duration_s":1.0,"speakers":[],"extra":1})");
  CHECK_THROWS_WITH_AS(corpus::load_session(path.string()), doctest::Contains("extra"), ValidationError);
  write_text(path, R"({"session_id":"m","duration_s":1.0,"speakers":[{"speaker_id":"a","wordz":[]}]})");
  CHECK_THROWS_WITH_AS(corpus::load_session(path.string()), doctest::Contains("wordz"), ValidationError);
}

TEST_CASE("motion binary: hand-composed file reads back exact positions") {
  auto dir = temp_dir();
  auto path = dir / "hand.gmo";
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  os.write("GMO1", 4);
  auto put32 = [&os](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto putf = [&os](float v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  put32(1);  // F
  put32(2);  // J
  putf(30.0f);
  put32(6);
  os.write("pelvis", 6);
  put32(4);
  os.write("head", 4);
  const float vals[6] = {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f};
  os.write(reinterpret_cast<const char*>(vals), sizeof(vals));
  os.close();

  // header 16 + names (4+6)+(4+4) + payload 1*2*3*4 = 58 bytes, exactly
  CHECK(fs::file_size(path) == 16 + 18 + 24);

  auto m = corpus::load_motion(path.string());
  CHECK(m.frame_count() == 1);
  CHECK(m.joint_count() == 2);
  CHECK(m.frame_rate_hz == 30.0);
  CHECK(m.joint_names == std::vector<std::string>{"pelvis", "head"});
  for (int i = 0; i < 6; ++i) CHECK(m.frames[static_cast<size_t>(i)] == vals[i]);
}

TEST_CASE("motion binary: zero-frame file is valid") {
  auto dir = temp_dir();
  corpus::MotionSequence m;
  m.frame_rate_hz = 25.0;
  m.joint_names = {"pelvis"};
  auto path = (dir / "empty.gmo").string();
  corpus::write_motion(m, path);
  auto loaded = corpus::load_motion(path);
  CHECK(loaded.frame_count() == 0);
  CHECK(loaded.joint_count() == 1);
}

TEST_CASE("motion binary: truncated payload and trailing bytes are errors") {
  auto dir = temp_dir();
  corpus::MotionSequence m;
  m.frame_rate_hz = 25.0;
  m.joint_names = {"pelvis"};
  m.frames.assign(2 * 1 * 3, 1.0f);
  auto path = (dir / "trunc.gmo").string();
  corpus::write_motion(m, path);
  auto size = fs::file_size(path);
  fs::resize_file(path, size - 4);
  CHECK_THROWS_WITH_AS(corpus::load_motion(path), doctest::Contains("size mismatch"), RuntimeFailure);
  corpus::write_motion(m, path);
  {
    std::ofstream os(path, std::ios::binary | std::ios::app);
    os.write("xx", 2);
  }
  CHECK_THROWS_WITH_AS(corpus::load_motion(path), doctest::Contains("trailing"), RuntimeFailure);
}

TEST_CASE("annotation csv import") {
  auto dir = temp_dir();
  corpus::SpeakerTrack track;
  track.speaker_id = "a";

  SUBCASE("well-formed row maps directly") {
    auto path = dir / "ok.csv";
    write_text(path, "onset_s,offset_s,gesture_type\n1.0,2.5,deictic\n");
    auto out = corpus::import_annotation_csv(path.string(), track);
    REQUIRE(out.gestures.size() == 1);
    CHECK(out.gestures[0].onset == 1.0);
    CHECK(out.gestures[0].offset == 2.5);
    CHECK(out.gestures[0].gtype == corpus::GestureType::deictic);
  }
  SUBCASE("header-only file leaves the track unchanged") {
    auto path = dir / "empty.csv";
    write_text(path, "onset_s,offset_s,gesture_type\n");
    auto out = corpus::import_annotation_csv(path.string(), track);
    CHECK(out.gestures.empty());
  }
  SUBCASE("unknown type lists the accepted vocabulary") {
    auto path = dir / "beat.csv";
    write_text(path, "onset_s,offset_s,gesture_type\n1.0,2.0,beat\n");
    CHECK_THROWS_WITH_AS(corpus::import_annotation_csv(path.string(), track),
                         doctest::Contains("iconic, metaphoric, deictic, discourse"), ValidationError);
  }
  SUBCASE("non-numeric timestamps are rejected") {
    auto path = dir / "nan.csv";
    write_text(path, "onset_s,offset_s,gesture_type\nabc,2.0,deictic\n");
    CHECK_THROWS_WITH_AS(corpus::import_annotation_csv(path.string(), track), doctest::Contains("non-numeric"),
                         ValidationError);
  }
}

TEST_CASE("validate_session flags every type invariant") {
  auto s = make_session();
  CHECK(corpus::validate_session(s).empty());

  SUBCASE("duplicate speaker id") {
    s.speakers.push_back(s.speakers[0]);
    auto v = corpus::validate_session(s);
    REQUIRE(v.size() >= 1);
    CHECK(v[0].message.find("duplicate") != std::string::npos);
  }
  SUBCASE("gesture span outside duration") {
    s.speakers[0].gestures.push_back({9.0, 11.0, corpus::GestureType::iconic});
    auto v = corpus::validate_session(s);
    REQUIRE(v.size() == 1);
    CHECK(v[0].path.find("gestures[1]") != std::string::npos);
  }
  SUBCASE("unsorted words") {
    s.speakers[0].words.push_back({"early", 0.1, 0.2});
    CHECK(!corpus::validate_session(s).empty());
  }
  SUBCASE("word offset not after onset") {
    s.speakers[0].words[0] = {"zero", 0.5, 0.5};
    CHECK(!corpus::validate_session(s).empty());
  }
  SUBCASE("negative onset") {
    s.speakers[0].words[0] = {"neg", -0.1, 0.2};
    CHECK(!corpus::validate_session(s).empty());
  }
  SUBCASE("missing pelvis joint") {
    s.speakers[0].motion->joint_names = {"root", "head"};
    auto v = corpus::validate_session(s);
    REQUIRE(!v.empty());
    CHECK(v[0].message.find("pelvis") != std::string::npos);
  }
  SUBCASE("frame count disagrees with duration") {
    s.speakers[0].motion->frames.resize(5 * 2 * 3);
    CHECK(!corpus::validate_session(s).empty());
  }
  SUBCASE("non-finite motion values") {
    s.speakers[0].motion->frames[3] = std::numeric_limits<float>::quiet_NaN();
    CHECK(!corpus::validate_session(s).empty());
  }
}

TEST_CASE("embeddings files with mixed dimensions are rejected on load") {
  auto dir = temp_dir();
  auto path = dir / "emb.json";
  write_text(path, R"({"0-500":[1.0,2.0],"500-900":[1.0,2.0,3.0]})");
  CHECK_THROWS_WITH_AS(corpus::load_embeddings(path.string()), doctest::Contains("mixed dimensions"), ValidationError);
  write_text(path, R"({"0-500":[1.0,2.0],"500-900":[3.0,4.0]})");
  auto m = corpus::load_embeddings(path.string());
  CHECK(m.size() == 2);
  CHECK(m["0-500"] == std::vector<double>{1.0, 2.0});
}

TEST_CASE("span keys round to milliseconds") {
  CHECK(corpus::span_key(0.25, 0.5) == "250-500");
  CHECK(corpus::span_key(1.0004, 2.0006) == "1000-2001");
}
