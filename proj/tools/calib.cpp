// scratch calibration driver -- not part of the deliverable build
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "ttk/harness.hpp"
#include "ttk/optim.hpp"
#include "ttk/pipeline.hpp"
#include "ttk/synth.hpp"

using namespace ttk;
namespace fs = std::filesystem;

static double now_s() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}

// Multinomial logistic probe on pooled quantized embeddings.
static double linear_probe_accuracy(const vqvae::Vqvae<float>& model,
                                    const std::vector<vqvae::LabeledWindow>& train_w,
                                    const std::vector<vqvae::LabeledWindow>& test_w, uint64_t seed) {
  auto pool = [&model](const vqvae::LabeledWindow& lw) {
    auto seq = model.tokenize(lw.window);
    int L = seq.length(), D = model.config().embed_dim;
    std::vector<float> pooled(static_cast<size_t>(D), 0.0f);
    for (int l = 0; l < L; ++l)
      for (int d = 0; d < D; ++d) pooled[static_cast<size_t>(d)] += seq.quantized[static_cast<size_t>(l) * D + d] / L;
    return pooled;
  };
  std::vector<std::vector<float>> xtr, xte;
  std::vector<int> ytr, yte;
  for (const auto& w : train_w)
    if (w.semantic_label != vqvae::kNoneClass) {
      xtr.push_back(pool(w));
      ytr.push_back(w.semantic_label);
    }
  for (const auto& w : test_w)
    if (w.semantic_label != vqvae::kNoneClass) {
      xte.push_back(pool(w));
      yte.push_back(w.semantic_label);
    }
  if (xtr.empty() || xte.empty()) return 0.0;
  int D = model.config().embed_dim;
  Rng rng(seed);
  nn::Linear<float> probe(D, 4, rng);
  optim::AdamW<float> opt({probe.w, probe.b}, 0.05, 0.0);
  std::vector<float> flat;
  for (const auto& x : xtr) flat.insert(flat.end(), x.begin(), x.end());
  auto X = tc::Tensor<float>::from_data({static_cast<int>(xtr.size()), D}, flat);
  for (int it = 0; it < 300; ++it) {
    auto loss = tc::cross_entropy(probe.forward(X), ytr);
    opt.zero_grad();
    tc::backward(loss);
    opt.step();
  }
  tc::NoGradGuard guard;
  std::vector<float> flat_te;
  for (const auto& x : xte) flat_te.insert(flat_te.end(), x.begin(), x.end());
  auto logits = probe.forward(tc::Tensor<float>::from_data({static_cast<int>(xte.size()), D}, flat_te));
  int correct = 0;
  for (size_t i = 0; i < xte.size(); ++i) {
    int best = 0;
    for (int c = 1; c < 4; ++c)
      if (logits.values()[i * 4 + static_cast<size_t>(c)] > logits.values()[i * 4 + static_cast<size_t>(best)]) best = c;
    if (best == yte[i]) ++correct;
  }
  return 100.0 * correct / static_cast<double>(xte.size());
}

int main(int argc, char** argv) {
  std::string mode = argc > 1 ? argv[1] : "matmul";

  if (mode == "matmul") {
    Rng rng(1);
    auto a = tc::Tensor<float>::uniform({256, 256}, -1, 1, rng, false);
    auto b = tc::Tensor<float>::uniform({256, 256}, -1, 1, rng, false);
    double t0 = now_s();
    int iters = 200;
    float sink = 0;
    for (int i = 0; i < iters; ++i) {
      auto c = tc::matmul(a, b);
      sink += c.values()[0];
    }
    double dt = now_s() - t0;
    double gflops = 2.0 * 256 * 256 * 256 * iters / dt / 1e9;
    printf("matmul 256^3: %.2f GFLOP/s (sink %f)\n", gflops, sink);
    return 0;
  }

  if (mode == "exp4") {
    // args: sessions len sigma posture epochs hidden embed K window hop amp
    int sessions = argc > 2 ? atoi(argv[2]) : 4;
    double len = argc > 3 ? atof(argv[3]) : 150.0;
    double sigma = argc > 4 ? atof(argv[4]) : 0.05;
    double posture = argc > 5 ? atof(argv[5]) : 0.12;
    int epochs = argc > 6 ? atoi(argv[6]) : 20;
    int hidden = argc > 7 ? atoi(argv[7]) : 24;
    int embed = argc > 8 ? atoi(argv[8]) : 24;
    int K = argc > 9 ? atoi(argv[9]) : 64;
    double window_s = argc > 10 ? atof(argv[10]) : 1.6;
    double hop_s = argc > 11 ? atof(argv[11]) : 0.4;
    double amp = argc > 12 ? atof(argv[12]) : 0.25;

    synth::SynthConfig scfg;
    scfg.n_speakers = 2;
    scfg.session_length_s = len;
    scfg.frame_rate_hz = 15.0;
    scfg.noise_sigma = sigma;
    scfg.posture_sigma = posture;
    scfg.gesture_amp = amp;
    scfg.write_audio = false;
    scfg.gesture_rates = {0.22, 0.22, 0.22, 0.22};
    scfg.planted_type.reset();
    scfg.words_per_ipu = {3, 6};
    scfg.word_duration_s = {0.15, 0.30};
    scfg.gesture_duration_s = {0.9, 1.4};
    scfg.seed = 77;

    harness::SessionMap smap;
    for (int i = 0; i < sessions; ++i) {
      auto gen = synth::generate_session(scfg, i);
      smap.emplace(gen.session.session_id, std::move(gen.session));
    }
    auto all = harness::make_labeled_windows(smap, window_s, hop_s, {});
    int sem_count = 0;
    for (auto& w : all)
      if (w.semantic_label != vqvae::kNoneClass) ++sem_count;
    printf("windows=%zu labeled=%d\n", all.size(), sem_count);

    // held-out split by parity
    std::vector<vqvae::LabeledWindow> train_w, test_w;
    for (size_t i = 0; i < all.size(); ++i) (i % 5 == 0 ? test_w : train_w).push_back(all[i]);

    for (int seed = 0; seed < 3; ++seed) {
      double t0 = now_s();
      vqvae::VqvaeConfig vcfg;
      vcfg.hidden = hidden;
      vcfg.embed_dim = embed;
      vcfg.codebook_size = K;
      vcfg.epochs = epochs;
      vcfg.batch_size = 128;
      vcfg.seed = static_cast<uint64_t>(seed);
      vcfg.semantic_weight = 0.1;
      auto [sem_model, sem_log] = vqvae::train_vqvae<float>(train_w, vcfg);
      vcfg.semantic_weight = 0.0;
      auto [raw_model, raw_log] = vqvae::train_vqvae<float>(train_w, vcfg);
      double acc_sem = linear_probe_accuracy(sem_model, train_w, test_w, 99);
      double acc_raw = linear_probe_accuracy(raw_model, train_w, test_w, 99);
      printf("seed %d: sem=%.1f raw=%.1f gap=%.1f recon_sem=%.4f recon_raw=%.4f entropy=%.2f time=%.0fs\n", seed,
             acc_sem, acc_raw, acc_sem - acc_raw, sem_log.epochs.back().recon, raw_log.epochs.back().recon,
             sem_log.epochs.back().usage_entropy, now_s() - t0);
    }
    return 0;
  }

  if (mode == "exp5") {
    // args: sessions len epochs d delta
    int sessions = argc > 2 ? atoi(argv[2]) : 8;
    double len = argc > 3 ? atof(argv[3]) : 300.0;
    int epochs = argc > 4 ? atoi(argv[4]) : 10;
    int d = argc > 5 ? atoi(argv[5]) : 48;
    double delta = argc > 6 ? atof(argv[6]) : 0.25;

    auto dir = fs::temp_directory_path() / "ttk_calib_corpus";
    fs::remove_all(dir);
    synth::SynthConfig scfg;
    scfg.n_speakers = 2;
    scfg.session_length_s = len;
    scfg.frame_rate_hz = 15.0;
    scfg.sample_rate_hz = 1000.0;
    scfg.base_tone_hz = 120.0;
    scfg.tone_step_hz = 80.0;
    scfg.planted_delta = delta;
    scfg.words_per_ipu = {3, 6};
    scfg.word_duration_s = {0.15, 0.30};
    scfg.gesture_duration_s = {0.9, 1.4};
    scfg.seed = 101;
    double t0 = now_s();
    auto manifest = synth::generate_benchmark(scfg, sessions, dir.string());
    printf("corpus: %lld turns (%.0fs)\n", static_cast<long long>(manifest.total_turns), now_s() - t0);

    t0 = now_s();
    pipeline::SegmentOptions seg_opts;
    auto summary = pipeline::segment_command(dir.string(), seg_opts, (dir / "turns.jsonl").string());
    printf("segmented (%.0fs)\n", now_s() - t0);

    t0 = now_s();
    pipeline::VqvaeTrainOptions vq;
    vq.epochs = 12;
    vq.batch_size = 128;
    vq.hidden = 24;
    vq.embed_dim = 24;
    vq.codebook_size = 64;
    vq.window_s = 1.6;
    vq.hop_s = 0.4;
    vq.semantic = true;
    pipeline::train_vqvae_command((dir / "turns.jsonl").string(), dir.string(), vq, (dir / "vq_sem.ckpt").string());
    vq.semantic = false;
    pipeline::train_vqvae_command((dir / "turns.jsonl").string(), dir.string(), vq, (dir / "vq_raw.ckpt").string());
    printf("vqvae trained (%.0fs)\n", now_s() - t0);

    auto turns = seg::read_turns_jsonl((dir / "turns.jsonl").string());
    auto smap = harness::load_corpus_dir(dir.string());
    harness::FeatureConfig feats;
    feats.text_dim = 96;
    feats.audio_bands = 13;
    feats.motion_window_s = 3.2;

    auto run = [&](const char* name, const std::vector<model::Modality>& mods, model::FusionKind fusion,
                   const std::string& vq_path) {
      double t1 = now_s();
      std::optional<vqvae::Vqvae<float>> tok;
      if (!vq_path.empty()) tok.emplace(pipeline::load_vqvae_checkpoint(vq_path));
      auto dataset = harness::build_dataset(turns, smap, feats, tok ? &*tok : nullptr);
      harness::TrainConfig tcfg;
      tcfg.model.modalities = mods;
      tcfg.model.fusion = fusion;
      tcfg.model.d = d;
      tcfg.epochs = epochs;
      auto report = harness::run_seeds(dataset, tcfg, {0, 1, 2}, "{}");
      printf("%-12s macro=%.2f acc=%.2f yieldF1=%.2f", name, report.mean.macro_f1, report.mean.accuracy,
             report.mean.f1_yield);
      if (!report.modality_weight_means.empty()) {
        printf(" gates=[");
        for (double w : report.modality_weight_means) printf("%.3f ", w);
        printf("]");
      }
      printf(" (%.0fs)\n", now_s() - t1);
      return report;
    };

    using M = model::Modality;
    run("TA", {M::text, M::audio}, model::FusionKind::moe, "");
    run("TAG-sem", {M::text, M::audio, M::gesture}, model::FusionKind::moe, (dir / "vq_sem.ckpt").string());
    run("TAG-raw", {M::text, M::audio, M::gesture}, model::FusionKind::moe, (dir / "vq_raw.ckpt").string());
    run("concat", {M::text, M::audio, M::gesture}, model::FusionKind::concat, (dir / "vq_sem.ckpt").string());
    run("lmf", {M::text, M::audio, M::gesture}, model::FusionKind::lmf, (dir / "vq_sem.ckpt").string());
    return 0;
  }

  std::cerr << "unknown mode\n";
  return 1;
}
