#include "ttk/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ttk/error.hpp"
#include "ttk/rng.hpp"

using nlohmann::json;

namespace ttk::seg {

const char* to_string(TurnLabel l) { return l == TurnLabel::hold ? "hold" : "yield"; }

const char* to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "?";
}

TurnLabel label_from_string(const std::string& s) {
  if (s == "hold") return TurnLabel::hold;
  if (s == "yield") return TurnLabel::yield;
  throw ValidationError("unknown turn label '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val") return Split::val;
  if (s == "test") return Split::test;
  if (s == "unassigned") return Split::unassigned;
  throw ValidationError("unknown split '" + s + "'");
}

std::string TurnInstance::transcript() const {
  std::string out;
  for (const auto& w : ipu.words) {
    if (!out.empty()) out += ' ';
    out += w.text;
  }
  return out;
}

std::vector<Ipu> build_ipus(const corpus::SpeakerTrack& track, double gap_threshold_s) {
  std::vector<Ipu> out;
  for (const auto& w : track.words) {
    bool start_new = out.empty() || (w.onset - out.back().words.back().offset >= gap_threshold_s);
    if (start_new) {
      Ipu ipu;
      ipu.speaker_id = track.speaker_id;
      ipu.onset = w.onset;
      out.push_back(std::move(ipu));
    }
    out.back().words.push_back(w);
    out.back().offset = w.offset;
  }
  return out;
}

std::vector<Ipu> merge_short_ipus(std::vector<Ipu> ipus, double min_duration_s) {
  auto merge_into = [](Ipu& dst, Ipu& src) {
    // src and dst are adjacent in time; keep words ordered
    if (src.onset < dst.onset) {
      dst.words.insert(dst.words.begin(), src.words.begin(), src.words.end());
      dst.onset = src.onset;
    } else {
      dst.words.insert(dst.words.end(), src.words.begin(), src.words.end());
      dst.offset = src.offset;
    }
  };
  bool changed = true;
  while (changed) {
    changed = false;
    for (size_t i = 0; i < ipus.size(); ++i) {
      if (ipus[i].duration() >= min_duration_s) continue;
      bool has_prev = i > 0;
      bool has_next = i + 1 < ipus.size();
      if (!has_prev && !has_next) continue;
      size_t target;
      if (!has_prev) {
        target = i + 1;
      } else if (!has_next) {
        target = i - 1;
      } else {
        double gap_prev = ipus[i].onset - ipus[i - 1].offset;
        double gap_next = ipus[i + 1].onset - ipus[i].offset;
        target = (gap_prev <= gap_next) ? i - 1 : i + 1;
      }
      merge_into(ipus[target], ipus[i]);
      ipus.erase(ipus.begin() + static_cast<std::ptrdiff_t>(i));
      changed = true;
      break;
    }
  }
  return ipus;
}

std::vector<TurnInstance> label_turns(const corpus::Session& session,
                                      const std::map<std::string, std::vector<Ipu>>& ipus_by_speaker,
                                      double overlap_grace_s) {
  // flatten all IPUs, order by (onset, speaker) for deterministic successor picks
  std::vector<const Ipu*> all;
  for (const auto& [sid, ipus] : ipus_by_speaker)
    for (const auto& ipu : ipus) all.push_back(&ipu);
  std::sort(all.begin(), all.end(), [](const Ipu* a, const Ipu* b) {
    if (a->onset != b->onset) return a->onset < b->onset;
    return a->speaker_id < b->speaker_id;
  });

  std::vector<TurnInstance> out;
  for (const Ipu* ipu : all) {
    TurnInstance turn;
    turn.session_id = session.session_id;
    turn.ipu = *ipu;
    double cutoff = ipu->offset - overlap_grace_s;
    const Ipu* successor = nullptr;
    for (const Ipu* cand : all) {
      if (cand == ipu) continue;
      if (cand->onset > cutoff) {
        successor = cand;
        break;  // `all` is onset-sorted: first hit is the smallest onset
      }
    }
    if (successor == nullptr) {
      turn.label = TurnLabel::hold;
    } else {
      turn.next_speaker_id = successor->speaker_id;
      turn.label = successor->speaker_id == ipu->speaker_id ? TurnLabel::hold : TurnLabel::yield;
    }
    out.push_back(std::move(turn));
  }
  return out;
}

TurnInstance attach_gestures(TurnInstance turn, const corpus::SpeakerTrack& track) {
  turn.gestures.clear();
  for (const auto& g : track.gestures) {
    double lo = std::max(g.onset, turn.ipu.onset);
    double hi = std::min(g.offset, turn.ipu.offset);
    if (hi - lo > 0.0) turn.gestures.push_back(g);
  }
  return turn;
}

namespace {

void split_block(std::vector<TurnInstance*>& block, double train_ratio, double val_ratio, double test_ratio,
                 Rng& rng) {
  size_t n = block.size();
  if (n < 3) {
    for (auto* t : block) t->split = Split::train;
    return;
  }
  rng.shuffle(block);
  auto n_train = static_cast<size_t>(std::floor(static_cast<double>(n) * train_ratio));
  auto n_val = static_cast<size_t>(std::floor(static_cast<double>(n) * val_ratio));
  auto n_test = static_cast<size_t>(std::floor(static_cast<double>(n) * test_ratio));
  n_train += n - (n_train + n_val + n_test);  // remainder to train
  size_t i = 0;
  for (; i < n_train; ++i) block[i]->split = Split::train;
  for (; i < n_train + n_val; ++i) block[i]->split = Split::val;
  for (; i < n; ++i) block[i]->split = Split::test;
}

}  // namespace

void split_dataset(std::vector<TurnInstance>& turns, double train_ratio, double val_ratio, double test_ratio,
                   uint64_t seed, bool stratify_by_session) {
  if (std::abs(train_ratio + val_ratio + test_ratio - 1.0) > 1e-9)
    throw ValidationError("split ratios must sum to 1");
  Rng rng(seed);
  if (!stratify_by_session) {
    std::vector<TurnInstance*> block;
    block.reserve(turns.size());
    for (auto& t : turns) block.push_back(&t);
    split_block(block, train_ratio, val_ratio, test_ratio, rng);
    return;
  }
  // per-session blocks, iterated in first-appearance order
  std::vector<std::string> order;
  std::map<std::string, std::vector<TurnInstance*>> blocks;
  for (auto& t : turns) {
    if (!blocks.count(t.session_id)) order.push_back(t.session_id);
    blocks[t.session_id].push_back(&t);
  }
  uint64_t stream = 0;
  for (const auto& sid : order) {
    Rng child = rng.split(stream++);
    split_block(blocks[sid], train_ratio, val_ratio, test_ratio, child);
  }
}

CorpusStats corpus_stats(const std::vector<TurnInstance>& turns) {
  CorpusStats stats;
  auto fill = [&turns](TurnLabel label, CorpusStats::Row& row) {
    int64_t counts[4] = {0, 0, 0, 0};  // iconic, metaphoric, deictic, discourse
    int64_t total_gestures = 0;
    for (const auto& t : turns) {
      if (t.label != label) continue;
      ++row.total_turns;
      if (!t.gestures.empty()) ++row.turns_with_gesture;
      for (const auto& g : t.gestures) {
        ++counts[static_cast<int>(g.gtype)];
        ++total_gestures;
      }
    }
    if (total_gestures > 0) {
      row.has_gestures = true;
      auto pct = [total_gestures](int64_t c) { return 100.0 * static_cast<double>(c) / static_cast<double>(total_gestures); };
      row.pct_iconic = pct(counts[0]);
      row.pct_metaphoric = pct(counts[1]);
      row.pct_deictic = pct(counts[2]);
      row.pct_discourse = pct(counts[3]);
    }
  };
  fill(TurnLabel::hold, stats.hold);
  fill(TurnLabel::yield, stats.yield);
  return stats;
}

std::string format_stats(const CorpusStats& stats) {
  std::ostringstream os;
  os << "label   de%    di%    ic%    me%    turns w sem gesture (total)\n";
  auto row = [&os](const char* name, const CorpusStats::Row& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-7s %-6.1f %-6.1f %-6.1f %-6.1f %lld (%lld)\n", name, r.pct_deictic,
                  r.pct_discourse, r.pct_iconic, r.pct_metaphoric, static_cast<long long>(r.turns_with_gesture),
                  static_cast<long long>(r.total_turns));
    os << buf;
  };
  row("hold", stats.hold);
  row("yield", stats.yield);
  return os.str();
}

void write_turns_jsonl(const std::vector<TurnInstance>& turns, const std::string& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw RuntimeFailure("cannot open " + path + " for writing");
  for (const auto& t : turns) {
    json line;
    line["session_id"] = t.session_id;
    line["speaker_id"] = t.ipu.speaker_id;
    line["onset"] = t.ipu.onset;
    line["offset"] = t.ipu.offset;
    line["transcript"] = t.transcript();
    line["label"] = to_string(t.label);
    line["gestures"] = json::array();
    for (const auto& g : t.gestures)
      line["gestures"].push_back({{"onset", g.onset}, {"offset", g.offset}, {"type", corpus::to_string(g.gtype)}});
    line["split"] = to_string(t.split);
    if (t.next_speaker_id) line["next_speaker_id"] = *t.next_speaker_id;
    os << line.dump() << "\n";
  }
  if (!os) throw RuntimeFailure("write failed for " + path);
}

std::vector<TurnInstance> read_turns_jsonl(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw RuntimeFailure("cannot open turns file " + path);
  std::vector<TurnInstance> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    json doc;
    try {
      doc = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    TurnInstance t;
    t.session_id = doc.at("session_id").get<std::string>();
    t.ipu.speaker_id = doc.at("speaker_id").get<std::string>();
    t.ipu.onset = doc.at("onset").get<double>();
    t.ipu.offset = doc.at("offset").get<double>();
    std::istringstream words(doc.at("transcript").get<std::string>());
    std::string tok;
    while (words >> tok) t.ipu.words.push_back({tok, t.ipu.onset, t.ipu.offset});
    t.label = label_from_string(doc.at("label").get<std::string>());
    for (const auto& g : doc.at("gestures")) {
      corpus::GestureSpan span;
      span.onset = g.at("onset").get<double>();
      span.offset = g.at("offset").get<double>();
      span.gtype = corpus::gesture_type_from_string(g.at("type").get<std::string>());
      t.gestures.push_back(span);
    }
    t.split = split_from_string(doc.at("split").get<std::string>());
    if (doc.contains("next_speaker_id")) t.next_speaker_id = doc["next_speaker_id"].get<std::string>();
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<TurnInstance> segment_session(const corpus::Session& session, double gap_threshold_s,
                                          double min_duration_s, double overlap_grace_s) {
  std::map<std::string, std::vector<Ipu>> by_speaker;
  for (const auto& track : session.speakers)
    by_speaker[track.speaker_id] = merge_short_ipus(build_ipus(track, gap_threshold_s), min_duration_s);
  auto turns = label_turns(session, by_speaker, overlap_grace_s);
  for (auto& t : turns) {
    const auto* track = session.find_speaker(t.ipu.speaker_id);
    if (track) t = attach_gestures(std::move(t), *track);
  }
  return turns;
}

}  // namespace ttk::seg
