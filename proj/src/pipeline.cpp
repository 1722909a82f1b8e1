#include "ttk/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ttk/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace ttk::pipeline {

void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw RuntimeFailure("cannot open " + tmp.string() + " for writing");
    os << content;
    if (!os) throw RuntimeFailure("write failed for " + tmp.string());
  }
  fs::rename(tmp, target);
}

namespace {

std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeFailure("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// synth / segment / stats
// ---------------------------------------------------------------------------

std::string synth_command(const std::string& config_json, int sessions, const std::string& out_dir) {
  auto cfg = synth::synth_config_from_json(config_json.empty() ? "{}" : config_json);
  auto manifest = synth::generate_benchmark(cfg, sessions, out_dir);
  return manifest.json;
}

std::string segment_command(const std::string& corpus_dir, const SegmentOptions& options,
                            const std::string& out_path) {
  auto sessions = harness::load_corpus_dir(corpus_dir);
  std::vector<seg::TurnInstance> turns;
  for (const auto& [sid, session] : sessions) {
    auto session_turns = seg::segment_session(session, options.gap_ms / 1000.0, options.min_ipu_ms / 1000.0,
                                              options.overlap_grace_ms / 1000.0);
    turns.insert(turns.end(), session_turns.begin(), session_turns.end());
  }
  seg::split_dataset(turns, options.train_ratio, options.val_ratio, options.test_ratio, options.seed,
                     options.stratify_by_session);

  json resolved;
  resolved["corpus"] = corpus_dir;
  resolved["gap_ms"] = options.gap_ms;
  resolved["min_ipu_ms"] = options.min_ipu_ms;
  resolved["overlap_grace_ms"] = options.overlap_grace_ms;
  resolved["ratios"] = {options.train_ratio, options.val_ratio, options.test_ratio};
  resolved["seed"] = options.seed;
  resolved["stratify_by_session"] = options.stratify_by_session;

  // atomic: write via temp path, then move
  {
    std::string tmp = out_path + ".tmp";
    seg::write_turns_jsonl(turns, tmp);
    fs::rename(tmp, out_path);
  }
  write_file_atomic(out_path + ".meta.json", resolved.dump(2) + "\n");

  int64_t holds = 0;
  for (const auto& t : turns)
    if (t.label == seg::TurnLabel::hold) ++holds;
  json summary;
  summary["config"] = resolved;
  summary["turns"] = turns.size();
  summary["holds"] = holds;
  summary["yields"] = static_cast<int64_t>(turns.size()) - holds;
  summary["out"] = out_path;
  return summary.dump(2);
}

StatsResult stats_command(const std::string& turns_path) {
  auto turns = seg::read_turns_jsonl(turns_path);
  auto stats = seg::corpus_stats(turns);
  json doc;
  auto row = [](const seg::CorpusStats::Row& r) {
    json out;
    out["total_turns"] = r.total_turns;
    out["turns_with_gesture"] = r.turns_with_gesture;
    out["pct_deictic"] = r.pct_deictic;
    out["pct_discourse"] = r.pct_discourse;
    out["pct_iconic"] = r.pct_iconic;
    out["pct_metaphoric"] = r.pct_metaphoric;
    out["has_gestures"] = r.has_gestures;
    return out;
  };
  doc["hold"] = row(stats.hold);
  doc["yield"] = row(stats.yield);
  return {doc.dump(2), seg::format_stats(stats)};
}

// ---------------------------------------------------------------------------
// VQ-VAE training / loading / tokenization
// ---------------------------------------------------------------------------

namespace {

std::vector<harness::SpanKey> test_spans_from(const std::vector<seg::TurnInstance>& turns) {
  std::vector<harness::SpanKey> spans;
  for (const auto& t : turns)
    if (t.split == seg::Split::test)
      spans.push_back({t.session_id, t.ipu.speaker_id, t.ipu.onset, t.ipu.offset});
  return spans;
}

json vqvae_config_to_json(const vqvae::VqvaeConfig& cfg) {
  json out;
  out["input_channels"] = cfg.input_channels;
  out["hidden"] = cfg.hidden;
  out["embed_dim"] = cfg.embed_dim;
  out["codebook_size"] = cfg.codebook_size;
  out["beta"] = cfg.beta;
  out["recon_weight"] = cfg.recon_weight;
  out["semantic_weight"] = cfg.semantic_weight;
  out["epochs"] = cfg.epochs;
  out["batch_size"] = cfg.batch_size;
  out["lr"] = cfg.lr;
  out["weight_decay"] = cfg.weight_decay;
  out["seed"] = cfg.seed;
  return out;
}

vqvae::VqvaeConfig vqvae_config_from_json(const json& doc) {
  vqvae::VqvaeConfig cfg;
  cfg.input_channels = doc.at("input_channels").get<int>();
  cfg.hidden = doc.at("hidden").get<int>();
  cfg.embed_dim = doc.at("embed_dim").get<int>();
  cfg.codebook_size = doc.at("codebook_size").get<int>();
  cfg.beta = doc.at("beta").get<double>();
  cfg.recon_weight = doc.at("recon_weight").get<double>();
  cfg.semantic_weight = doc.at("semantic_weight").get<double>();
  cfg.epochs = doc.at("epochs").get<int>();
  cfg.batch_size = doc.at("batch_size").get<int>();
  cfg.lr = doc.at("lr").get<double>();
  cfg.weight_decay = doc.at("weight_decay").get<double>();
  cfg.seed = doc.at("seed").get<uint64_t>();
  return cfg;
}

}  // namespace

std::string train_vqvae_command(const std::string& turns_path, const std::string& corpus_dir,
                                const VqvaeTrainOptions& options, const std::string& out_path) {
  auto turns = seg::read_turns_jsonl(turns_path);
  auto sessions = harness::load_corpus_dir(corpus_dir);
  auto windows =
      harness::make_labeled_windows(sessions, options.window_s, options.hop_s, options.joints, test_spans_from(turns));
  if (windows.empty()) throw ValidationError("train-vqvae: no motion windows available");

  vqvae::VqvaeConfig cfg;
  cfg.input_channels = windows[0].window.joint_count * 3;
  cfg.hidden = options.hidden;
  cfg.embed_dim = options.embed_dim;
  cfg.codebook_size = options.codebook_size;
  cfg.beta = options.beta;
  cfg.semantic_weight = options.semantic ? 0.1 : 0.0;
  cfg.epochs = options.epochs;
  cfg.batch_size = options.batch_size;
  cfg.lr = options.lr;
  cfg.weight_decay = options.weight_decay;
  cfg.seed = options.seed;

  auto [model, log] = vqvae::train_vqvae<harness::Scalar>(windows, cfg);

  {
    std::string tmp = out_path + ".tmp";
    vqvae::save_vqvae(model, tmp);
    fs::rename(tmp, out_path);
  }
  json sidecar;
  sidecar["kind"] = "vqvae";
  sidecar["config"] = vqvae_config_to_json(model.config());
  sidecar["downsample"] = vqvae::kDownsample;
  sidecar["window_s"] = options.window_s;
  sidecar["hop_s"] = options.hop_s;
  sidecar["joints"] = options.joints;
  sidecar["windows"] = windows.size();
  write_file_atomic(out_path + ".json", sidecar.dump(2) + "\n");

  json logdoc;
  logdoc["config"] = sidecar;
  logdoc["epochs"] = json::array();
  for (const auto& e : log.epochs)
    logdoc["epochs"].push_back({{"total", e.total},
                                {"recon", e.recon},
                                {"vq", e.vq},
                                {"commit", e.commit},
                                {"semantic", e.semantic},
                                {"usage_entropy", e.usage_entropy}});
  return logdoc.dump(2);
}

vqvae::Vqvae<harness::Scalar> load_vqvae_checkpoint(const std::string& path, vqvae::VqvaeConfig* out_config,
                                                    std::string* sidecar_json) {
  auto sidecar_path = path + ".json";
  if (!fs::exists(sidecar_path)) throw ValidationError("vqvae checkpoint sidecar not found: " + sidecar_path);
  json sidecar = json::parse(read_file(sidecar_path));
  auto cfg = vqvae_config_from_json(sidecar.at("config"));
  if (out_config != nullptr) *out_config = cfg;
  if (sidecar_json != nullptr) *sidecar_json = sidecar.dump();
  return vqvae::load_vqvae<harness::Scalar>(cfg, path);
}

std::string tokenize_command(const std::string& model_path, const std::string& turns_path,
                             const std::string& corpus_dir, double window_s, const std::string& out_path) {
  auto model = load_vqvae_checkpoint(model_path);
  auto turns = seg::read_turns_jsonl(turns_path);
  auto sessions = harness::load_corpus_dir(corpus_dir);
  std::string sidecar_json;
  {
    json side = json::parse(read_file(model_path + ".json"));
    sidecar_json = side.dump();
  }

  std::ostringstream lines;
  int64_t with_tokens = 0;
  for (const auto& turn : turns) {
    auto sit = sessions.find(turn.session_id);
    if (sit == sessions.end()) throw ValidationError("tokenize: unknown session " + turn.session_id);
    const auto* track = sit->second.find_speaker(turn.ipu.speaker_id);
    json line;
    line["session_id"] = turn.session_id;
    line["speaker_id"] = turn.ipu.speaker_id;
    line["onset"] = turn.ipu.onset;
    line["offset"] = turn.ipu.offset;
    if (track != nullptr && track->motion) {
      auto window = feat::extract_motion_window(*track->motion, turn.ipu.onset, turn.ipu.offset, window_s);
      auto seq = model.tokenize(window, turn.ipu.onset, turn.ipu.offset);
      line["token_ids"] = seq.token_ids;
      std::vector<int> mask(seq.mask.begin(), seq.mask.end());
      line["mask"] = mask;
      line["no_motion"] = seq.no_motion;
      if (!seq.no_motion) ++with_tokens;
    } else {
      line["token_ids"] = json::array();
      line["mask"] = json::array();
      line["no_motion"] = true;
    }
    lines << line.dump() << "\n";
  }
  write_file_atomic(out_path, lines.str());
  json meta;
  meta["model"] = model_path;
  meta["model_config"] = json::parse(sidecar_json);
  meta["window_s"] = window_s;
  meta["turns"] = turns.size();
  meta["turns_with_tokens"] = with_tokens;
  write_file_atomic(out_path + ".meta.json", meta.dump(2) + "\n");
  return meta.dump(2);
}

// ---------------------------------------------------------------------------
// Turn model training / evaluation
// ---------------------------------------------------------------------------

namespace {

json feature_config_to_json(const harness::FeatureConfig& f) {
  json out;
  out["text_provider"] = f.text_provider;
  out["text_dim"] = f.text_dim;
  out["audio_provider"] = f.audio_provider;
  out["audio_bands"] = f.audio_bands;
  out["motion_window_s"] = f.motion_window_s;
  out["motion_joints"] = f.motion_joints;
  return out;
}

harness::FeatureConfig feature_config_from_json(const json& doc, const std::string& where) {
  harness::FeatureConfig f;
  static const std::vector<std::string> known = {"text_provider", "text_dim",        "audio_provider",
                                                 "audio_bands",   "motion_window_s", "motion_joints"};
  for (auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError(where + ": unknown key '" + key + "'");
  if (doc.contains("text_provider")) f.text_provider = doc["text_provider"].get<std::string>();
  if (doc.contains("text_dim")) f.text_dim = doc["text_dim"].get<int>();
  if (doc.contains("audio_provider")) f.audio_provider = doc["audio_provider"].get<std::string>();
  if (doc.contains("audio_bands")) f.audio_bands = doc["audio_bands"].get<int>();
  if (doc.contains("motion_window_s")) f.motion_window_s = doc["motion_window_s"].get<double>();
  if (doc.contains("motion_joints")) f.motion_joints = doc["motion_joints"].get<std::vector<std::string>>();
  if (f.text_provider != "hashed" && f.text_provider != "precomputed")
    throw ValidationError(where + ".text_provider: must be 'hashed' or 'precomputed'");
  if (f.audio_provider != "spectral" && f.audio_provider != "precomputed")
    throw ValidationError(where + ".audio_provider: must be 'spectral' or 'precomputed'");
  return f;
}

json model_config_to_json(const model::TurnModelConfig& m) {
  json out;
  out["modalities"] = json::array();
  for (auto mod : m.modalities) out["modalities"].push_back(model::to_string(mod));
  out["fusion"] = model::to_string(m.fusion);
  out["d"] = m.d;
  out["lmf_rank"] = m.lmf_rank;
  out["text_dim"] = m.text_dim;
  out["audio_dim"] = m.audio_dim;
  out["code_dim"] = m.code_dim;
  out["codebook_size"] = m.codebook_size;
  out["max_tokens"] = m.max_tokens;
  out["heads"] = m.heads;
  out["ff_dim"] = m.ff_dim;
  return out;
}

}  // namespace

TrainRunConfig parse_train_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text.empty() ? "{}" : json_text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("train config: parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "corpus", "turns",      "vqvae",        "modalities",       "fusion",    "d",
      "lmf_rank", "heads",    "ff_dim",       "epochs",           "batch_size", "lr",
      "weight_decay", "class_weighting", "seeds", "features",     "model_out", "out"};
  for (auto& [key, _] : doc.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw ValidationError("train config: unknown key '" + key + "'");

  TrainRunConfig cfg;
  if (doc.contains("corpus")) cfg.corpus_dir = doc["corpus"].get<std::string>();
  if (doc.contains("turns")) cfg.turns_path = doc["turns"].get<std::string>();
  if (doc.contains("vqvae")) cfg.vqvae_path = doc["vqvae"].get<std::string>();
  if (doc.contains("modalities")) {
    cfg.train.model.modalities.clear();
    for (const auto& m : doc["modalities"])
      cfg.train.model.modalities.push_back(model::modality_from_string(m.get<std::string>()));
  }
  if (doc.contains("fusion")) cfg.train.model.fusion = model::fusion_from_string(doc["fusion"].get<std::string>());
  if (doc.contains("d")) cfg.train.model.d = doc["d"].get<int>();
  if (doc.contains("lmf_rank")) cfg.train.model.lmf_rank = doc["lmf_rank"].get<int>();
  if (doc.contains("heads")) cfg.train.model.heads = doc["heads"].get<int>();
  if (doc.contains("ff_dim")) cfg.train.model.ff_dim = doc["ff_dim"].get<int>();
  if (doc.contains("epochs")) cfg.train.epochs = doc["epochs"].get<int>();
  if (doc.contains("batch_size")) cfg.train.batch_size = doc["batch_size"].get<int>();
  if (doc.contains("lr")) cfg.train.lr = doc["lr"].get<double>();
  if (doc.contains("weight_decay")) cfg.train.weight_decay = doc["weight_decay"].get<double>();
  if (doc.contains("class_weighting")) cfg.train.class_weighting = doc["class_weighting"].get<bool>();
  if (doc.contains("seeds")) cfg.seeds = doc["seeds"].get<std::vector<uint64_t>>();
  if (doc.contains("features")) cfg.features = feature_config_from_json(doc["features"], "train config.features");
  if (doc.contains("model_out")) cfg.model_out = doc["model_out"].get<std::string>();

  if (cfg.corpus_dir.empty()) throw ValidationError("train config: 'corpus' is required");
  if (cfg.turns_path.empty()) throw ValidationError("train config: 'turns' is required");
  if (cfg.train.model.modalities.empty()) throw ValidationError("train config: 'modalities' must be non-empty");
  if (cfg.train.model.has(model::Modality::gesture) && cfg.vqvae_path.empty())
    throw ValidationError("train config: gesture modality requires 'vqvae'");

  json resolved;
  resolved["corpus"] = cfg.corpus_dir;
  resolved["turns"] = cfg.turns_path;
  resolved["vqvae"] = cfg.vqvae_path;
  resolved["model"] = model_config_to_json(cfg.train.model);
  resolved["epochs"] = cfg.train.epochs;
  resolved["batch_size"] = cfg.train.batch_size;
  resolved["lr"] = cfg.train.lr;
  resolved["weight_decay"] = cfg.train.weight_decay;
  resolved["class_weighting"] = cfg.train.class_weighting;
  resolved["seeds"] = cfg.seeds;
  resolved["features"] = feature_config_to_json(cfg.features);
  resolved["model_out"] = cfg.model_out;
  cfg.resolved_json = resolved.dump();
  return cfg;
}

std::string train_command(const TrainRunConfig& config, const std::string& report_out) {
  auto turns = seg::read_turns_jsonl(config.turns_path);
  auto sessions = harness::load_corpus_dir(config.corpus_dir);

  std::optional<vqvae::Vqvae<harness::Scalar>> tokenizer;
  if (config.train.model.has(model::Modality::gesture)) tokenizer.emplace(load_vqvae_checkpoint(config.vqvae_path));

  auto dataset = harness::build_dataset(turns, sessions, config.features, tokenizer ? &*tokenizer : nullptr);
  harness::ModelCallback save_model;
  if (!config.model_out.empty()) {
    save_model = [&config](uint64_t seed, const model::TurnModel<harness::Scalar>& model) {
      std::string path = config.model_out + ".seed" + std::to_string(seed) + ".ckpt";
      std::string tmp = path + ".tmp";
      ckpt::save(tmp, model.snapshot());
      fs::rename(tmp, path);
      json sidecar;
      sidecar["kind"] = "turn_model";
      sidecar["model"] = model_config_to_json(model.config());
      sidecar["features"] = feature_config_to_json(config.features);
      sidecar["vqvae"] = config.vqvae_path;
      sidecar["seed"] = seed;
      sidecar["train"] = json::parse(config.resolved_json);
      write_file_atomic(path + ".json", sidecar.dump(2) + "\n");
    };
  }
  auto report = harness::run_seeds(dataset, config.train, config.seeds, config.resolved_json, save_model);

  auto text = harness::report_to_json(report);
  if (!report_out.empty()) write_file_atomic(report_out, text + "\n");
  return text;
}

std::string evaluate_command(const std::string& model_path, const std::string& turns_path,
                             const std::string& corpus_dir, const std::string& split,
                             const std::string& report_out) {
  auto sidecar_path = model_path + ".json";
  if (!fs::exists(sidecar_path)) throw ValidationError("turn model sidecar not found: " + sidecar_path);
  json sidecar = json::parse(read_file(sidecar_path));
  if (sidecar.value("kind", "") != "turn_model") throw ValidationError("not a turn model checkpoint: " + model_path);

  model::TurnModelConfig mcfg;
  {
    const auto& m = sidecar.at("model");
    mcfg.modalities.clear();
    for (const auto& mod : m.at("modalities")) mcfg.modalities.push_back(model::modality_from_string(mod.get<std::string>()));
    mcfg.fusion = model::fusion_from_string(m.at("fusion").get<std::string>());
    mcfg.d = m.at("d").get<int>();
    mcfg.lmf_rank = m.at("lmf_rank").get<int>();
    mcfg.text_dim = m.at("text_dim").get<int>();
    mcfg.audio_dim = m.at("audio_dim").get<int>();
    mcfg.code_dim = m.at("code_dim").get<int>();
    mcfg.codebook_size = m.at("codebook_size").get<int>();
    mcfg.max_tokens = m.at("max_tokens").get<int>();
    mcfg.heads = m.at("heads").get<int>();
    mcfg.ff_dim = m.at("ff_dim").get<int>();
  }
  auto features = feature_config_from_json(sidecar.at("features"), "model sidecar.features");

  auto turns = seg::read_turns_jsonl(turns_path);
  auto sessions = harness::load_corpus_dir(corpus_dir);
  std::optional<vqvae::Vqvae<harness::Scalar>> tokenizer;
  if (mcfg.has(model::Modality::gesture)) tokenizer.emplace(load_vqvae_checkpoint(sidecar.at("vqvae").get<std::string>()));
  auto dataset = harness::build_dataset(turns, sessions, features, tokenizer ? &*tokenizer : nullptr);
  if (dataset.max_tokens > mcfg.max_tokens)
    throw ValidationError("evaluate: token sequences longer than the stored model supports; re-train or shrink the motion window");

  Rng rng(0);
  model::TurnModel<harness::Scalar> model(mcfg, dataset.codebook, rng);
  {
    nn::NamedParams<harness::Scalar> named;
    model.named_params(named);
    ckpt::apply_to_params(ckpt::load(model_path), named);
  }
  auto eval = harness::evaluate(model, dataset, seg::split_from_string(split));

  harness::ExperimentReport report;
  report.config_json = sidecar.dump();
  harness::SeedResult r;
  r.seed = sidecar.value("seed", 0ULL);
  r.test = eval.metrics;
  r.predictions = eval.predictions;
  r.gate_means = eval.gate_means;
  report.seeds.push_back(std::move(r));
  report.mean = eval.metrics;
  report.mean.confusion = {{{0, 0}, {0, 0}}};
  report.modality_weight_means = eval.gate_means;
  report.labels = eval.labels;

  auto text = harness::report_to_json(report);
  if (!report_out.empty()) write_file_atomic(report_out, text + "\n");
  return text;
}

std::string compare_command(const std::string& report_a, const std::string& report_b, int iterations, uint64_t seed) {
  auto a = harness::report_from_json(read_file(report_a));
  auto b = harness::report_from_json(read_file(report_b));
  if (a.labels != b.labels) throw ValidationError("compare: reports were evaluated on different label sequences");
  if (a.seeds.size() != b.seeds.size()) throw ValidationError("compare: reports have different seed counts");
  std::vector<int> preds_a, preds_b, labels;
  for (size_t s = 0; s < a.seeds.size(); ++s) {
    if (a.seeds[s].predictions.size() != a.labels.size() || b.seeds[s].predictions.size() != b.labels.size())
      throw ValidationError("compare: prediction/label length mismatch in report");
    preds_a.insert(preds_a.end(), a.seeds[s].predictions.begin(), a.seeds[s].predictions.end());
    preds_b.insert(preds_b.end(), b.seeds[s].predictions.begin(), b.seeds[s].predictions.end());
    labels.insert(labels.end(), a.labels.begin(), a.labels.end());
  }
  double p = metrics::significance(preds_a, preds_b, labels, iterations, seed);
  json out;
  out["a"] = report_a;
  out["b"] = report_b;
  out["macro_f1_a"] = metrics::macro_f1(preds_a, labels);
  out["macro_f1_b"] = metrics::macro_f1(preds_b, labels);
  out["iterations"] = iterations;
  out["seed"] = seed;
  out["p_value"] = p;
  return out.dump(2);
}

std::string analyze_command(const std::string& model_path, const std::string& vqvae_path,
                            const std::string& turns_path, const std::string& corpus_dir,
                            const std::string& out_dir) {
  if (model_path.empty() && vqvae_path.empty())
    throw ValidationError("analyze: need --model and/or --vqvae");
  fs::create_directories(out_dir);
  json summary;

  if (!vqvae_path.empty()) {
    vqvae::VqvaeConfig cfg;
    std::string sidecar_json;
    auto model = load_vqvae_checkpoint(vqvae_path, &cfg, &sidecar_json);
    json sidecar = json::parse(sidecar_json);
    double window_s = sidecar.value("window_s", 2.0);
    double hop_s = sidecar.value("hop_s", 0.5);
    auto joints = sidecar.value("joints", std::vector<std::string>{});
    auto sessions = harness::load_corpus_dir(corpus_dir);
    auto windows = harness::make_labeled_windows(sessions, window_s, hop_s, joints);
    auto rows = harness::export_embedding_projection(model, windows, false);
    std::ostringstream csv;
    csv << "x,y,type\n";
    for (const auto& r : rows) csv << r.x << "," << r.y << "," << r.type << "\n";
    auto path = (fs::path(out_dir) / "gesture_projection.csv").string();
    write_file_atomic(path, csv.str());
    summary["projection"] = {{"file", path}, {"rows", rows.size()}};
  }

  if (!model_path.empty()) {
    auto report_json = evaluate_command(model_path, turns_path, corpus_dir, "test", "");
    auto report = harness::report_from_json(report_json);
    if (report.modality_weight_means.empty())
      throw ValidationError("analyze: modality weights require an MoE model");
    json sidecar = json::parse(read_file(model_path + ".json"));
    std::vector<std::string> names;
    for (const auto& m : sidecar.at("model").at("modalities")) names.push_back(m.get<std::string>());
    std::ostringstream csv;
    csv << "modality,mean_weight\n";
    for (size_t i = 0; i < names.size(); ++i) csv << names[i] << "," << report.modality_weight_means[i] << "\n";
    auto path = (fs::path(out_dir) / "modality_weights.csv").string();
    write_file_atomic(path, csv.str());
    summary["modality_weights"] = {{"file", path}, {"means", report.modality_weight_means}};
  }
  return summary.dump(2);
}

}  // namespace ttk::pipeline
