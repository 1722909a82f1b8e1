#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ttk/checkpoint.hpp"
#include "ttk/corpus.hpp"
#include "ttk/features.hpp"
#include "ttk/nn.hpp"
#include "ttk/optim.hpp"
#include "ttk/tensor.hpp"

// Residual convolutional VQ-VAE over motion windows. The encoder downsamples
// time by 4 (two stride-2 stages); the decoder mirrors it with nearest
// upsampling. An auxiliary linear head on pooled quantized latents carries
// the semantic gesture classes; its loss ignores the none class.
namespace ttk::vqvae {

using tc::Tensor;

// Class indices: iconic=0, metaphoric=1, deictic=2, discourse=3, none=4.
constexpr int kNumClasses = 5;
constexpr int kNoneClass = 4;
constexpr int kDownsample = 4;

struct VqvaeConfig {
  int input_channels = 0;  // J' * 3
  int hidden = 256;
  int embed_dim = 256;
  int codebook_size = 256;
  double beta = 0.25;  // commitment weight
  double recon_weight = 1.0;
  double semantic_weight = 0.1;
  int epochs = 120;
  int batch_size = 512;
  double lr = 3e-4;
  double weight_decay = 0.01;
  uint64_t seed = 0;
};

struct LabeledWindow {
  feat::MotionWindow window;
  int semantic_label = kNoneClass;
};

struct GestureTokenSequence {
  std::vector<int> token_ids;
  std::vector<float> quantized;  // L x D, rows copied from the codebook
  std::vector<uint8_t> mask;     // length L; true where any source frame is real
  double onset = 0.0;
  double offset = 0.0;
  bool no_motion = false;

  int length() const { return static_cast<int>(token_ids.size()); }
};

struct EpochStats {
  double total = 0.0;
  double recon = 0.0;
  double vq = 0.0;
  double commit = 0.0;
  double semantic = 0.0;
  double usage_entropy = 0.0;  // normalized to [0,1]
};

struct TrainingLog {
  std::vector<EpochStats> epochs;
};

// >50% coverage of the window's real-frame span; largest coverage wins,
// earlier onset on ties.
inline int semantic_label_for_span(const std::vector<corpus::GestureSpan>& gestures, double start, double end) {
  double span = end - start;
  if (span <= 0) return kNoneClass;
  int best = kNoneClass;
  double best_cov = 0.5;
  for (const auto& g : gestures) {
    double lo = std::max(g.onset, start);
    double hi = std::min(g.offset, end);
    double cov = (hi - lo) / span;
    if (cov > best_cov) {
      best_cov = cov;
      best = static_cast<int>(g.gtype);
    }
  }
  return best;
}

template <typename T>
struct QuantizeResult {
  std::vector<int> token_ids;
  Tensor<T> codes;          // codebook rows, gradient path into the codebook
  Tensor<T> decoder_input;  // straight-through tensor
  Tensor<T> vq_loss;
  Tensor<T> commit_loss;
};

template <typename T>
class Vqvae {
 public:
  Vqvae(VqvaeConfig config, Rng& rng)
      : cfg_(config),
        stem_(config.input_channels, config.hidden, 3, 1, 1, rng),
        down1_(config.hidden, config.hidden, 4, 2, 1, rng),
        enc_res1_(config.hidden, rng),
        down2_(config.hidden, config.hidden, 4, 2, 1, rng),
        enc_res2_(config.hidden, rng),
        to_latent_(config.hidden, config.embed_dim, 3, 1, 1, rng),
        from_latent_(config.embed_dim, config.hidden, 3, 1, 1, rng),
        dec_res1_(config.hidden, rng),
        up1_(config.hidden, config.hidden, 3, 1, 1, rng),
        dec_res2_(config.hidden, rng),
        up2_(config.hidden, config.hidden, 3, 1, 1, rng),
        head_(config.hidden, config.input_channels, 3, 1, 1, rng),
        semantic_head_(config.embed_dim, kNumClasses, rng),
        codebook_(Tensor<T>::normal({config.codebook_size, config.embed_dim}, T(0), T(0.02), rng, true)),
        usage_counts_(static_cast<size_t>(config.codebook_size), 0) {}

  const VqvaeConfig& config() const { return cfg_; }
  Tensor<T>& codebook() { return codebook_; }
  const Tensor<T>& codebook() const { return codebook_; }
  const std::vector<int64_t>& usage_counts() const { return usage_counts_; }
  void reset_usage() { std::fill(usage_counts_.begin(), usage_counts_.end(), 0); }

  // Window as [C, T] channel-major input, T padded to a multiple of 4.
  static Tensor<T> window_tensor(const feat::MotionWindow& w) {
    int C = w.joint_count * 3;
    int T_in = w.frame_count;
    int T_pad = ((T_in + kDownsample - 1) / kDownsample) * kDownsample;
    std::vector<T> data(static_cast<size_t>(C) * T_pad, T(0));
    for (int t = 0; t < T_in; ++t)
      for (int c = 0; c < C; ++c) data[static_cast<size_t>(c) * T_pad + t] = static_cast<T>(w.frames[static_cast<size_t>(t) * C + c]);
    return Tensor<T>::from_data({1, C, T_pad}, std::move(data));
  }

  static Tensor<T> batch_tensor(const std::vector<const feat::MotionWindow*>& windows) {
    if (windows.empty()) throw ValidationError("vqvae: empty batch");
    int C = windows[0]->joint_count * 3;
    int T_in = windows[0]->frame_count;
    int T_pad = ((T_in + kDownsample - 1) / kDownsample) * kDownsample;
    int B = static_cast<int>(windows.size());
    std::vector<T> data(static_cast<size_t>(B) * C * T_pad, T(0));
    for (int b = 0; b < B; ++b) {
      const auto& w = *windows[static_cast<size_t>(b)];
      if (w.joint_count * 3 != C || w.frame_count != T_in) throw ValidationError("vqvae: ragged batch");
      for (int t = 0; t < T_in; ++t)
        for (int c = 0; c < C; ++c)
          data[(static_cast<size_t>(b) * C + c) * T_pad + t] = static_cast<T>(w.frames[static_cast<size_t>(t) * C + c]);
    }
    return Tensor<T>::from_data({B, C, T_pad}, std::move(data));
  }

  // Single normalized window; throws on an all-padding window.
  Tensor<T> encode_window(const feat::MotionWindow& w) const {
    if (w.all_padding()) throw ValidationError("no-motion: window has no real frames");
    return encode(window_tensor(w));
  }

  // [B,C,T] -> latents [B, L=T/4, D]
  Tensor<T> encode(const Tensor<T>& x) const {
    auto h = tc::relu(stem_.forward(x));
    h = enc_res1_.forward(tc::relu(down1_.forward(h)));
    h = enc_res2_.forward(tc::relu(down2_.forward(h)));
    auto z = to_latent_.forward(h);  // [B, D, L]
    return tc::transpose(z, {0, 2, 1});
  }

  // Nearest codebook entry per row; plain squared distance, first strict
  // minimum so ties resolve to the smallest index.
  std::vector<int> nearest_codes(const std::vector<T>& latents, int64_t rows) const {
    int D = cfg_.embed_dim;
    int K = cfg_.codebook_size;
    const auto& entries = codebook_.values();
    std::vector<int> ids(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
      const T* z = latents.data() + r * D;
      T best = std::numeric_limits<T>::max();
      int best_k = 0;
      for (int k = 0; k < K; ++k) {
        const T* e = entries.data() + static_cast<int64_t>(k) * D;
        T dist = 0;
        for (int d = 0; d < D; ++d) {
          T diff = z[d] - e[d];
          dist += diff * diff;
        }
        if (dist < best) {
          best = dist;
          best_k = k;
        }
      }
      ids[static_cast<size_t>(r)] = best_k;
    }
    return ids;
  }

  QuantizeResult<T> quantize(const Tensor<T>& latents) {
    if (latents.ndim() != 3 || latents.dim(2) != cfg_.embed_dim)
      throw ValidationError("vqvae: latents must be [B,L,D] with D = " + std::to_string(cfg_.embed_dim));
    int B = latents.dim(0), L = latents.dim(1);
    QuantizeResult<T> out;
    out.token_ids = nearest_codes(latents.values(), static_cast<int64_t>(B) * L);
    for (int id : out.token_ids) ++usage_counts_[static_cast<size_t>(id)];
    out.codes = tc::embedding_lookup(codebook_, out.token_ids, {B, L});
    out.vq_loss = tc::mse_loss(out.codes, latents.detach());
    out.commit_loss = tc::mse_loss(latents, out.codes.detach());
    out.decoder_input = tc::straight_through(out.codes.detach(), latents);
    return out;
  }

  // [B,L,D] -> [B,C,4L]
  Tensor<T> decode(const Tensor<T>& quantized) const {
    auto h = tc::relu(from_latent_.forward(tc::transpose(quantized, {0, 2, 1})));
    h = dec_res1_.forward(h);
    h = tc::relu(up1_.forward(tc::upsample_nearest(h, 2)));
    h = dec_res2_.forward(h);
    h = tc::relu(up2_.forward(tc::upsample_nearest(h, 2)));
    return head_.forward(h);
  }

  // Linear map of the temporal mean of quantized rows -> [B, 5]
  Tensor<T> semantic_logits(const Tensor<T>& quantized) const {
    return semantic_head_.forward(tc::mean_pool(quantized, 1));
  }

  GestureTokenSequence tokenize(const feat::MotionWindow& window, double onset = 0.0, double offset = 0.0) const {
    GestureTokenSequence seq;
    seq.onset = onset;
    seq.offset = offset;
    if (window.all_padding()) {
      seq.no_motion = true;
      return seq;
    }
    tc::NoGradGuard guard;
    auto x = window_tensor(window);
    auto latents = encode(x);
    int L = latents.dim(1);
    seq.token_ids = nearest_codes(latents.values(), L);
    int D = cfg_.embed_dim;
    seq.quantized.resize(static_cast<size_t>(L) * D);
    for (int l = 0; l < L; ++l)
      for (int d = 0; d < D; ++d)
        seq.quantized[static_cast<size_t>(l) * D + d] =
            static_cast<float>(codebook_.values()[static_cast<size_t>(seq.token_ids[static_cast<size_t>(l)]) * D + d]);
    // mask at 1/4 resolution: latent step is real if any source frame is real
    seq.mask.assign(static_cast<size_t>(L), 0);
    for (int l = 0; l < L; ++l)
      for (int f = 0; f < kDownsample; ++f) {
        size_t src = static_cast<size_t>(l) * kDownsample + f;
        if (src < window.mask.size() && window.mask[src]) seq.mask[static_cast<size_t>(l)] = 1;
      }
    return seq;
  }

  void named_params(nn::NamedParams<T>& out) const {
    stem_.named_params("enc.stem", out);
    down1_.named_params("enc.down1", out);
    enc_res1_.named_params("enc.res1", out);
    down2_.named_params("enc.down2", out);
    enc_res2_.named_params("enc.res2", out);
    to_latent_.named_params("enc.out", out);
    from_latent_.named_params("dec.in", out);
    dec_res1_.named_params("dec.res1", out);
    up1_.named_params("dec.up1", out);
    dec_res2_.named_params("dec.res2", out);
    up2_.named_params("dec.up2", out);
    head_.named_params("dec.head", out);
    semantic_head_.named_params("semantic_head", out);
    out.emplace_back("codebook", codebook_);
  }

  std::vector<Tensor<T>> params() const {
    nn::NamedParams<T> named;
    named_params(named);
    std::vector<Tensor<T>> out;
    for (auto& [_, t] : named) out.push_back(t);
    return out;
  }

  const nn::Linear<T>& semantic_head() const { return semantic_head_; }

 private:
  VqvaeConfig cfg_;
  nn::Conv1dLayer<T> stem_, down1_;
  nn::ResBlock1d<T> enc_res1_;
  nn::Conv1dLayer<T> down2_;
  nn::ResBlock1d<T> enc_res2_;
  nn::Conv1dLayer<T> to_latent_, from_latent_;
  nn::ResBlock1d<T> dec_res1_;
  nn::Conv1dLayer<T> up1_;
  nn::ResBlock1d<T> dec_res2_;
  nn::Conv1dLayer<T> up2_, head_;
  nn::Linear<T> semantic_head_;
  Tensor<T> codebook_;
  std::vector<int64_t> usage_counts_;
};

struct BatchLosses {
  double total = 0, recon = 0, vq = 0, commit = 0, semantic = 0;
};

template <typename T>
BatchLosses vqvae_training_step(Vqvae<T>& model, const std::vector<const feat::MotionWindow*>& windows,
                                const std::vector<int>& labels, optim::AdamW<T>& opt) {
  auto x = Vqvae<T>::batch_tensor(windows);
  auto latents = model.encode(x);
  auto q = model.quantize(latents);
  auto recon = model.decode(q.decoder_input);
  auto recon_loss = tc::mse_loss(recon, x);
  auto loss = tc::add(tc::scale(recon_loss, static_cast<T>(model.config().recon_weight)),
                      tc::add(q.vq_loss, tc::scale(q.commit_loss, static_cast<T>(model.config().beta))));
  BatchLosses out;
  out.semantic = 0.0;
  if (model.config().semantic_weight != 0.0) {
    auto ce = tc::cross_entropy(model.semantic_logits(q.decoder_input), labels, kNoneClass);
    out.semantic = static_cast<double>(ce.item());
    loss = tc::add(loss, tc::scale(ce, static_cast<T>(model.config().semantic_weight)));
  }
  out.recon = static_cast<double>(recon_loss.item());
  out.vq = static_cast<double>(q.vq_loss.item());
  out.commit = static_cast<double>(q.commit_loss.item());
  out.total = static_cast<double>(loss.item());
  opt.zero_grad();
  tc::backward(loss);
  opt.step();
  return out;
}

inline double normalized_entropy(const std::vector<int64_t>& counts) {
  int64_t total = 0;
  for (int64_t c : counts) total += c;
  if (total == 0 || counts.size() < 2) return 0.0;
  double h = 0.0;
  for (int64_t c : counts) {
    if (c == 0) continue;
    double p = static_cast<double>(c) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h / std::log(static_cast<double>(counts.size()));
}

template <typename T>
std::pair<Vqvae<T>, TrainingLog> train_vqvae(const std::vector<LabeledWindow>& windows, const VqvaeConfig& config) {
  if (windows.empty()) throw ValidationError("train_vqvae: need at least one window");
  VqvaeConfig cfg = config;
  if (cfg.input_channels == 0) cfg.input_channels = windows[0].window.joint_count * 3;
  Rng init_rng = Rng(cfg.seed).split(0);
  Vqvae<T> model(cfg, init_rng);
  auto opt = optim::AdamW<T>(model.params(), cfg.lr, cfg.weight_decay);
  Rng shuffle_rng = Rng(cfg.seed).split(1);

  TrainingLog log;
  std::vector<size_t> order(windows.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    model.reset_usage();
    Rng erng = shuffle_rng.split(static_cast<uint64_t>(epoch));
    erng.shuffle(order);
    EpochStats stats;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += static_cast<size_t>(cfg.batch_size)) {
      size_t stop = std::min(order.size(), start + static_cast<size_t>(cfg.batch_size));
      std::vector<const feat::MotionWindow*> batch;
      std::vector<int> labels;
      for (size_t i = start; i < stop; ++i) {
        batch.push_back(&windows[order[i]].window);
        labels.push_back(windows[order[i]].semantic_label);
      }
      auto losses = vqvae_training_step(model, batch, labels, opt);
      if (!std::isfinite(losses.total))
        throw RuntimeFailure("train_vqvae: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                             std::to_string(batches));
      stats.total += losses.total;
      stats.recon += losses.recon;
      stats.vq += losses.vq;
      stats.commit += losses.commit;
      stats.semantic += losses.semantic;
      ++batches;
    }
    stats.total /= batches;
    stats.recon /= batches;
    stats.vq /= batches;
    stats.commit /= batches;
    stats.semantic /= batches;
    stats.usage_entropy = normalized_entropy(model.usage_counts());
    log.epochs.push_back(stats);
  }
  return {std::move(model), std::move(log)};
}

template <typename T>
void save_vqvae(const Vqvae<T>& model, const std::string& path) {
  nn::NamedParams<T> named;
  model.named_params(named);
  ckpt::save(path, ckpt::from_params(named));
}

template <typename T>
Vqvae<T> load_vqvae(const VqvaeConfig& cfg, const std::string& path) {
  Rng rng(0);
  Vqvae<T> model(cfg, rng);
  nn::NamedParams<T> named;
  model.named_params(named);
  auto archive = ckpt::load(path);
  ckpt::apply_to_params(archive, named);
  return model;
}

}  // namespace ttk::vqvae
