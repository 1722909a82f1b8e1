#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ttk/corpus.hpp"

namespace ttk::seg {

struct Ipu {
  std::string speaker_id;
  double onset = 0.0;   // first word onset
  double offset = 0.0;  // last word offset
  std::vector<corpus::TimedWord> words;

  double duration() const { return offset - onset; }
};

enum class TurnLabel { hold, yield };
enum class Split { train, val, test, unassigned };

const char* to_string(TurnLabel l);
const char* to_string(Split s);
TurnLabel label_from_string(const std::string& s);
Split split_from_string(const std::string& s);

struct TurnInstance {
  std::string session_id;
  Ipu ipu;
  TurnLabel label = TurnLabel::hold;
  std::vector<corpus::GestureSpan> gestures;  // spans overlapping the IPU
  std::optional<std::string> next_speaker_id;
  Split split = Split::unassigned;

  std::string transcript() const;
};

struct CorpusStats {
  struct Row {
    int64_t total_turns = 0;
    int64_t turns_with_gesture = 0;
    // percentages over gesture instances, Table-1 column order
    double pct_deictic = 0.0;
    double pct_discourse = 0.0;
    double pct_iconic = 0.0;
    double pct_metaphoric = 0.0;
    bool has_gestures = false;  // false => percentages reported as 0
  };
  Row hold;
  Row yield;
};

// One IPU starts whenever the silence before a word reaches gap_threshold.
std::vector<Ipu> build_ipus(const corpus::SpeakerTrack& track, double gap_threshold_s = 0.200);

// Absorbs IPUs shorter than min_duration into the temporally nearer
// neighbor (tie: the earlier one); repeats until none remain.
std::vector<Ipu> merge_short_ipus(std::vector<Ipu> ipus, double min_duration_s = 0.300);

// Successor = IPU with smallest onset strictly greater than offset -
// overlap_grace (any speaker). No successor => hold.
std::vector<TurnInstance> label_turns(const corpus::Session& session,
                                      const std::map<std::string, std::vector<Ipu>>& ipus_by_speaker,
                                      double overlap_grace_s = 0.0);

// Attaches the speaker's gesture spans with strictly positive overlap.
TurnInstance attach_gestures(TurnInstance turn, const corpus::SpeakerTrack& track);

// Seeded uniform shuffle; sizes are floor(n*ratio) with the remainder
// going to train. Fewer than 3 turns => all train. When stratified,
// the rule is applied per session.
void split_dataset(std::vector<TurnInstance>& turns, double train_ratio, double val_ratio, double test_ratio,
                   uint64_t seed, bool stratify_by_session = false);

CorpusStats corpus_stats(const std::vector<TurnInstance>& turns);

std::string format_stats(const CorpusStats& stats);

// JSON-lines turn dataset.
void write_turns_jsonl(const std::vector<TurnInstance>& turns, const std::string& path);
std::vector<TurnInstance> read_turns_jsonl(const std::string& path);

// Full pipeline for one session: build, merge, label, attach.
std::vector<TurnInstance> segment_session(const corpus::Session& session, double gap_threshold_s = 0.200,
                                          double min_duration_s = 0.300, double overlap_grace_s = 0.0);

}  // namespace ttk::seg
