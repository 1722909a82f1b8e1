#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "ttk/error.hpp"
#include "ttk/pipeline.hpp"

using nlohmann::json;

namespace {

std::string read_file_or_die(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ttk::RuntimeFailure("cannot open " + path);
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::vector<uint64_t> parse_seed_list(const std::string& csv) {
  std::vector<uint64_t> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    out.push_back(std::stoull(item));
  }
  if (out.empty()) throw ttk::ValidationError("expected a comma-separated seed list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"turn-taking prediction toolkit: corpus synthesis, IPU segmentation, gesture tokenization, and multimodal fusion experiments"};
  app.require_subcommand(1);

  // ---------------------------------------------------------------- synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark corpus");
  std::string synth_config, synth_out = "corpus";
  int synth_sessions = 4;
  bool synth_quiet = false;
  uint64_t synth_seed = 0;
  bool synth_seed_set = false;
  synth->add_option("--config", synth_config, "synth config JSON file");
  synth->add_option("--sessions", synth_sessions, "number of sessions")->capture_default_str();
  synth->add_option("--out", synth_out, "output corpus directory")->capture_default_str();
  synth->add_flag("--quiet", synth_quiet, "suppress manifest output");
  synth->add_option("--seed", synth_seed, "override the config seed")->each([&synth_seed_set](const std::string&) { synth_seed_set = true; });

  // -------------------------------------------------------------- segment
  auto* segment = app.add_subcommand("segment", "convert a corpus into labeled turn instances");
  std::string seg_corpus, seg_out = "turns.jsonl";
  ttk::pipeline::SegmentOptions seg_opts;
  segment->add_option("--corpus", seg_corpus, "corpus directory")->required();
  segment->add_option("--gap-ms", seg_opts.gap_ms, "IPU silence threshold (ms)")->capture_default_str();
  segment->add_option("--min-ipu-ms", seg_opts.min_ipu_ms, "short-IPU merge threshold (ms)")->capture_default_str();
  segment->add_option("--overlap-grace-ms", seg_opts.overlap_grace_ms, "successor overlap grace (ms)")->capture_default_str();
  segment->add_option("--train-ratio", seg_opts.train_ratio)->capture_default_str();
  segment->add_option("--val-ratio", seg_opts.val_ratio)->capture_default_str();
  segment->add_option("--test-ratio", seg_opts.test_ratio)->capture_default_str();
  segment->add_option("--seed", seg_opts.seed, "split shuffle seed")->capture_default_str();
  segment->add_flag("--stratified", seg_opts.stratify_by_session, "apply the split per session");
  segment->add_option("--out", seg_out, "output turns JSONL")->capture_default_str();

  // ---------------------------------------------------------------- stats
  auto* stats = app.add_subcommand("stats", "print the gesture-type distribution per turn label");
  std::string stats_turns;
  bool stats_json = false;
  stats->add_option("--turns", stats_turns, "turns JSONL")->required();
  stats->add_flag("--json", stats_json, "emit JSON instead of the table");

  // ----------------------------------------------------------- train-vqvae
  auto* trainvq = app.add_subcommand("train-vqvae", "train the gesture tokenizer");
  std::string vq_turns, vq_corpus, vq_out = "vq.ckpt", vq_semantic = "on";
  ttk::pipeline::VqvaeTrainOptions vq_opts;
  trainvq->add_option("--turns", vq_turns, "turns JSONL (test-split windows are excluded)")->required();
  trainvq->add_option("--corpus", vq_corpus, "corpus directory")->required();
  trainvq->add_option("--semantic", vq_semantic, "semantic alignment loss: on|off")->capture_default_str();
  trainvq->add_option("--epochs", vq_opts.epochs)->capture_default_str();
  trainvq->add_option("--batch-size", vq_opts.batch_size)->capture_default_str();
  trainvq->add_option("--lr", vq_opts.lr)->capture_default_str();
  trainvq->add_option("--weight-decay", vq_opts.weight_decay)->capture_default_str();
  trainvq->add_option("--hidden", vq_opts.hidden)->capture_default_str();
  trainvq->add_option("--embed-dim", vq_opts.embed_dim)->capture_default_str();
  trainvq->add_option("--codebook", vq_opts.codebook_size)->capture_default_str();
  trainvq->add_option("--beta", vq_opts.beta, "commitment weight")->capture_default_str();
  trainvq->add_option("--window-s", vq_opts.window_s, "training window length (s)")->capture_default_str();
  trainvq->add_option("--hop-s", vq_opts.hop_s, "window hop (s)")->capture_default_str();
  trainvq->add_option("--seed", vq_opts.seed)->capture_default_str();
  trainvq->add_option("--out", vq_out, "checkpoint path")->capture_default_str();

  // -------------------------------------------------------------- tokenize
  auto* tokenize = app.add_subcommand("tokenize", "tokenize turn motion windows with a trained tokenizer");
  std::string tok_model, tok_turns, tok_corpus, tok_out = "tokens.jsonl";
  double tok_window = 4.0;
  tokenize->add_option("--model", tok_model, "vqvae checkpoint")->required();
  tokenize->add_option("--turns", tok_turns, "turns JSONL")->required();
  tokenize->add_option("--corpus", tok_corpus, "corpus directory")->required();
  tokenize->add_option("--window-s", tok_window, "trailing motion window (s)")->capture_default_str();
  tokenize->add_option("--out", tok_out)->capture_default_str();

  // ----------------------------------------------------------------- train
  auto* train = app.add_subcommand("train", "train and evaluate turn-taking models over seeds");
  std::string tr_config, tr_corpus, tr_turns, tr_vqvae, tr_modalities, tr_fusion, tr_seeds, tr_model_out;
  std::string tr_out = "report.json";
  int tr_epochs = -1, tr_batch = -1, tr_d = -1;
  double tr_lr = -1.0;
  train->add_option("--config", tr_config, "run config JSON file (flags override)");
  train->add_option("--corpus", tr_corpus);
  train->add_option("--turns", tr_turns);
  train->add_option("--vqvae", tr_vqvae, "gesture tokenizer checkpoint");
  train->add_option("--modalities", tr_modalities, "comma list from text,audio,gesture");
  train->add_option("--fusion", tr_fusion, "moe|concat|lmf");
  train->add_option("--d", tr_d, "expert output dim");
  train->add_option("--epochs", tr_epochs);
  train->add_option("--batch-size", tr_batch);
  train->add_option("--lr", tr_lr);
  train->add_option("--seeds", tr_seeds, "comma list, default 0,1,2");
  train->add_option("--model-out", tr_model_out, "prefix for per-seed checkpoints");
  train->add_option("--out", tr_out, "report path")->capture_default_str();

  // -------------------------------------------------------------- evaluate
  auto* evaluate = app.add_subcommand("evaluate", "evaluate a stored turn model on a split");
  std::string ev_model, ev_turns, ev_corpus, ev_split = "test", ev_out;
  evaluate->add_option("--model", ev_model)->required();
  evaluate->add_option("--turns", ev_turns)->required();
  evaluate->add_option("--corpus", ev_corpus)->required();
  evaluate->add_option("--split", ev_split)->capture_default_str();
  evaluate->add_option("--out", ev_out, "report path (optional)");

  // --------------------------------------------------------------- compare
  auto* compare = app.add_subcommand("compare", "significance test between two stored reports");
  std::string cmp_a, cmp_b;
  int cmp_iters = 10000;
  uint64_t cmp_seed = 0;
  compare->add_option("--a", cmp_a)->required();
  compare->add_option("--b", cmp_b)->required();
  compare->add_option("--iterations", cmp_iters)->capture_default_str();
  compare->add_option("--seed", cmp_seed)->capture_default_str();

  // --------------------------------------------------------------- analyze
  auto* analyze = app.add_subcommand("analyze", "export embedding projection and modality weight tables");
  std::string an_model, an_vqvae, an_turns, an_corpus, an_out = "analysis";
  analyze->add_option("--model", an_model, "turn model checkpoint (for modality weights)");
  analyze->add_option("--vqvae", an_vqvae, "vqvae checkpoint (for the gesture projection)");
  analyze->add_option("--turns", an_turns);
  analyze->add_option("--corpus", an_corpus);
  analyze->add_option("--out-dir", an_out)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (*synth) {
      std::string cfg_text = synth_config.empty() ? "{}" : read_file_or_die(synth_config);
      if (synth_seed_set) {
        auto doc = json::parse(cfg_text);
        doc["seed"] = synth_seed;
        cfg_text = doc.dump();
      }
      auto manifest = ttk::pipeline::synth_command(cfg_text, synth_sessions, synth_out);
      if (!synth_quiet) std::cout << manifest << "\n";
    } else if (*segment) {
      std::cout << ttk::pipeline::segment_command(seg_corpus, seg_opts, seg_out) << "\n";
    } else if (*stats) {
      auto result = ttk::pipeline::stats_command(stats_turns);
      std::cout << (stats_json ? result.json + "\n" : result.text);
    } else if (*trainvq) {
      if (vq_semantic != "on" && vq_semantic != "off")
        throw ttk::ValidationError("--semantic must be 'on' or 'off'");
      vq_opts.semantic = vq_semantic == "on";
      std::cout << ttk::pipeline::train_vqvae_command(vq_turns, vq_corpus, vq_opts, vq_out) << "\n";
    } else if (*tokenize) {
      std::cout << ttk::pipeline::tokenize_command(tok_model, tok_turns, tok_corpus, tok_window, tok_out) << "\n";
    } else if (*train) {
      json doc = tr_config.empty() ? json::object() : json::parse(read_file_or_die(tr_config));
      if (!tr_corpus.empty()) doc["corpus"] = tr_corpus;
      if (!tr_turns.empty()) doc["turns"] = tr_turns;
      if (!tr_vqvae.empty()) doc["vqvae"] = tr_vqvae;
      if (!tr_modalities.empty()) {
        json mods = json::array();
        std::stringstream ss(tr_modalities);
        std::string item;
        while (std::getline(ss, item, ','))
          if (!item.empty()) mods.push_back(item);
        doc["modalities"] = mods;
      }
      if (!tr_fusion.empty()) doc["fusion"] = tr_fusion;
      if (tr_d > 0) doc["d"] = tr_d;
      if (tr_epochs >= 0) doc["epochs"] = tr_epochs;
      if (tr_batch > 0) doc["batch_size"] = tr_batch;
      if (tr_lr > 0) doc["lr"] = tr_lr;
      if (!tr_seeds.empty()) doc["seeds"] = parse_seed_list(tr_seeds);
      if (!tr_model_out.empty()) doc["model_out"] = tr_model_out;
      auto cfg = ttk::pipeline::parse_train_config(doc.dump());
      auto report = ttk::pipeline::train_command(cfg, tr_out);
      auto parsed = json::parse(report);
      std::cout << "report written to " << tr_out << "\n" << parsed["mean_metrics"].dump(2) << "\n";
    } else if (*evaluate) {
      auto report = ttk::pipeline::evaluate_command(ev_model, ev_turns, ev_corpus, ev_split, ev_out);
      std::cout << report << "\n";
    } else if (*compare) {
      std::cout << ttk::pipeline::compare_command(cmp_a, cmp_b, cmp_iters, cmp_seed) << "\n";
    } else if (*analyze) {
      std::cout << ttk::pipeline::analyze_command(an_model, an_vqvae, an_turns, an_corpus, an_out) << "\n";
    }
  } catch (const ttk::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
