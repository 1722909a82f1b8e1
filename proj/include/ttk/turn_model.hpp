#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ttk/checkpoint.hpp"
#include "ttk/nn.hpp"
#include "ttk/tensor.hpp"

// Per-modality experts, MoE gating and fusion, plus the ConcatFusion and LMF
// baselines, ending in a linear hold/yield classifier.
namespace ttk::model {

using tc::Tensor;

enum class Modality { text, audio, gesture };
enum class FusionKind { moe, concat, lmf };

inline const char* to_string(Modality m) {
  switch (m) {
    case Modality::text: return "text";
    case Modality::audio: return "audio";
    case Modality::gesture: return "gesture";
  }
  return "?";
}

inline const char* to_string(FusionKind f) {
  switch (f) {
    case FusionKind::moe: return "moe";
    case FusionKind::concat: return "concat";
    case FusionKind::lmf: return "lmf";
  }
  return "?";
}

inline Modality modality_from_string(const std::string& s) {
  if (s == "text") return Modality::text;
  if (s == "audio") return Modality::audio;
  if (s == "gesture") return Modality::gesture;
  throw ValidationError("unknown modality '" + s + "' (accepted: text, audio, gesture)");
}

inline FusionKind fusion_from_string(const std::string& s) {
  if (s == "moe") return FusionKind::moe;
  if (s == "concat") return FusionKind::concat;
  if (s == "lmf") return FusionKind::lmf;
  throw ValidationError("unknown fusion '" + s + "' (accepted: moe, concat, lmf)");
}

struct TurnModelConfig {
  std::vector<Modality> modalities = {Modality::text, Modality::audio, Modality::gesture};
  FusionKind fusion = FusionKind::moe;
  int d = 256;
  int lmf_rank = 4;
  int text_dim = 384;
  int audio_dim = 52;
  int code_dim = 256;       // gesture token embedding dim
  int codebook_size = 256;  // gesture vocabulary
  int max_tokens = 32;      // positional table length
  int heads = 4;
  int ff_dim = 128;

  bool has(Modality m) const {
    for (auto x : modalities)
      if (x == m) return true;
    return false;
  }
  int num_modalities() const { return static_cast<int>(modalities.size()); }
};

// One minibatch of per-turn features. Gesture tokens are padded to max_len
// with mask; rows with no motion set `gesture_absent`.
template <typename T>
struct TurnBatch {
  int batch = 0;
  std::vector<T> text;             // batch * text_dim
  std::vector<T> audio;            // batch * audio_dim
  std::vector<int> token_ids;      // batch * max_len
  std::vector<uint8_t> token_mask; // batch * max_len
  std::vector<uint8_t> gesture_absent;  // batch
  int max_len = 0;
  std::vector<int> labels;
};

template <typename T>
struct TurnForward {
  Tensor<T> logits;        // [B,2]
  Tensor<T> gate_weights;  // [B,M] for MoE, empty otherwise
};

template <typename T>
class TurnModel {
 public:
  TurnModel(TurnModelConfig config, const std::vector<float>& codebook_entries, Rng& rng) : cfg_(config) {
    if (cfg_.modalities.empty()) throw ValidationError("turn model: need at least one modality");
    if (cfg_.has(Modality::text)) text_.emplace(cfg_.text_dim, cfg_.d, rng);
    if (cfg_.has(Modality::audio)) audio_.emplace(cfg_.audio_dim, cfg_.d, rng);
    if (cfg_.has(Modality::gesture)) {
      if (static_cast<int64_t>(codebook_entries.size()) !=
          static_cast<int64_t>(cfg_.codebook_size) * cfg_.code_dim)
        throw ValidationError("turn model: codebook size mismatch");
      std::vector<T> cb(codebook_entries.size());
      for (size_t i = 0; i < cb.size(); ++i) cb[i] = static_cast<T>(codebook_entries[i]);
      gesture_.emplace();
      gesture_->codebook = Tensor<T>::from_data({cfg_.codebook_size, cfg_.code_dim}, std::move(cb), false);
      gesture_->pos = Tensor<T>::normal({cfg_.max_tokens, cfg_.code_dim}, T(0), T(0.02), rng, true);
      gesture_->encoder = nn::TransformerEncoderLayer<T>(cfg_.code_dim, cfg_.heads, cfg_.ff_dim, rng);
      gesture_->out = nn::Linear<T>(cfg_.code_dim, cfg_.d, rng);
      absent_emb_ = Tensor<T>::normal({1, cfg_.d}, T(0), T(0.02), rng, true);
    }
    int m = cfg_.num_modalities();
    gate_ = nn::Linear<T>(m * cfg_.d, m, rng);
    if (cfg_.fusion == FusionKind::concat) concat_fuse_.emplace(m * cfg_.d, cfg_.d, rng);
    if (cfg_.fusion == FusionKind::lmf) {
      lmf_factors_.resize(static_cast<size_t>(m));
      for (int mi = 0; mi < m; ++mi)
        for (int r = 0; r < cfg_.lmf_rank; ++r)
          lmf_factors_[static_cast<size_t>(mi)].push_back(nn::kaiming_uniform<T>({cfg_.d + 1, cfg_.d}, cfg_.d + 1, rng));
    }
    classifier_ = nn::Linear<T>(cfg_.d, 2, rng);
  }

  const TurnModelConfig& config() const { return cfg_; }

  // 2-layer perceptron with GELU hidden activation.
  Tensor<T> text_expert(const Tensor<T>& features) const {
    return text_->l2.forward(tc::gelu(text_->l1.forward(features)));
  }
  Tensor<T> audio_expert(const Tensor<T>& features) const {
    return audio_->l2.forward(tc::gelu(audio_->l1.forward(features)));
  }

  // Codebook + learned positions -> 1 encoder layer -> masked mean -> linear.
  // Rows flagged absent contribute a zero vector plus the learned
  // absent-embedding so the gate can route around them.
  Tensor<T> gesture_expert(const TurnBatch<T>& batch) const {
    int B = batch.batch, L = batch.max_len;
    Tensor<T> pooled;
    if (L > 0) {
      if (L > cfg_.max_tokens) throw ValidationError("turn model: token sequence longer than max_tokens");
      auto emb = tc::embedding_lookup(gesture_->codebook, batch.token_ids, {B, L});
      auto pos_slice = tc::embedding_lookup(gesture_->pos, iota(L));
      auto x = tc::add(emb, pos_slice);
      auto enc = gesture_->encoder.forward(x, batch.token_mask);
      pooled = tc::mean_pool(enc, 1, batch.token_mask);
    } else {
      pooled = Tensor<T>::zeros({B, cfg_.code_dim});
    }
    auto out = gesture_->out.forward(pooled);
    std::vector<T> present(static_cast<size_t>(B));
    std::vector<T> absent_col(static_cast<size_t>(B));
    for (int i = 0; i < B; ++i) {
      bool a = batch.gesture_absent[static_cast<size_t>(i)] != 0;
      present[static_cast<size_t>(i)] = a ? T(0) : T(1);
      absent_col[static_cast<size_t>(i)] = a ? T(1) : T(0);
    }
    auto masked = tc::row_scale(out, present);
    auto absent_term = tc::matmul(Tensor<T>::from_data({B, 1}, std::move(absent_col)), absent_emb_);
    return tc::add(masked, absent_term);
  }

  // Softmax over a linear map of the concatenated expert outputs.
  Tensor<T> gate(const std::vector<Tensor<T>>& expert_outputs) const {
    return tc::softmax_lastdim(gate_.forward(tc::concat(expert_outputs, 1)));
  }

  static Tensor<T> fuse_moe(const std::vector<Tensor<T>>& outputs, const Tensor<T>& weights) {
    Tensor<T> fused;
    for (size_t m = 0; m < outputs.size(); ++m) {
      auto term = tc::mul(tc::column(weights, static_cast<int>(m)), outputs[m]);
      fused = (m == 0) ? term : tc::add(fused, term);
    }
    return fused;
  }

  Tensor<T> fuse_concat(const std::vector<Tensor<T>>& outputs) const {
    return tc::gelu(concat_fuse_->forward(tc::concat(outputs, 1)));
  }

  // Low-rank fusion: each expert vector is augmented with a constant 1,
  // mapped through R factor matrices, multiplied elementwise across
  // modalities, and summed over ranks.
  Tensor<T> fuse_lmf(const std::vector<Tensor<T>>& outputs) const {
    int B = outputs[0].dim(0);
    auto ones = Tensor<T>::full({B, 1}, T(1));
    std::vector<Tensor<T>> augmented;
    for (const auto& f : outputs) augmented.push_back(tc::concat<T>({f, ones}, 1));
    Tensor<T> fused;
    for (int r = 0; r < cfg_.lmf_rank; ++r) {
      Tensor<T> term;
      for (size_t m = 0; m < outputs.size(); ++m) {
        auto proj = tc::matmul(augmented[m], lmf_factors_[m][static_cast<size_t>(r)]);
        term = (m == 0) ? proj : tc::mul(term, proj);
      }
      fused = (r == 0) ? term : tc::add(fused, term);
    }
    return fused;
  }

  Tensor<T> classify(const Tensor<T>& fused) const { return classifier_.forward(fused); }

  TurnForward<T> forward(const TurnBatch<T>& batch) const {
    std::vector<Tensor<T>> outputs;
    for (Modality m : cfg_.modalities) {
      switch (m) {
        case Modality::text:
          outputs.push_back(text_expert(Tensor<T>::from_data({batch.batch, cfg_.text_dim}, batch.text)));
          break;
        case Modality::audio:
          outputs.push_back(audio_expert(Tensor<T>::from_data({batch.batch, cfg_.audio_dim}, batch.audio)));
          break;
        case Modality::gesture:
          outputs.push_back(gesture_expert(batch));
          break;
      }
    }
    TurnForward<T> out;
    if (cfg_.fusion == FusionKind::moe) {
      out.gate_weights = gate(outputs);
      out.logits = classify(fuse_moe(outputs, out.gate_weights));
    } else if (cfg_.fusion == FusionKind::concat) {
      out.logits = classify(fuse_concat(outputs));
    } else {
      out.logits = classify(fuse_lmf(outputs));
    }
    return out;
  }

  // Argmax with ties resolved toward hold (class 0).
  static std::vector<int> predictions(const Tensor<T>& logits) {
    std::vector<int> out(static_cast<size_t>(logits.dim(0)));
    for (int i = 0; i < logits.dim(0); ++i)
      out[static_cast<size_t>(i)] = logits.values()[static_cast<size_t>(i) * 2 + 1] > logits.values()[static_cast<size_t>(i) * 2] ? 1 : 0;
    return out;
  }

  void named_params(nn::NamedParams<T>& out) const {
    if (text_) {
      text_->l1.named_params("text.l1", out);
      text_->l2.named_params("text.l2", out);
    }
    if (audio_) {
      audio_->l1.named_params("audio.l1", out);
      audio_->l2.named_params("audio.l2", out);
    }
    if (gesture_) {
      out.emplace_back("gesture.codebook", gesture_->codebook);
      out.emplace_back("gesture.pos", gesture_->pos);
      gesture_->encoder.named_params("gesture.encoder", out);
      gesture_->out.named_params("gesture.out", out);
      out.emplace_back("gesture.absent", absent_emb_);
    }
    gate_.named_params("gate", out);
    if (concat_fuse_) concat_fuse_->named_params("fuse.concat", out);
    for (size_t m = 0; m < lmf_factors_.size(); ++m)
      for (size_t r = 0; r < lmf_factors_[m].size(); ++r)
        out.emplace_back("fuse.lmf." + std::to_string(m) + "." + std::to_string(r), lmf_factors_[m][r]);
    classifier_.named_params("classifier", out);
  }

  // Trainable parameters only (the frozen gesture codebook is excluded).
  std::vector<Tensor<T>> params() const {
    nn::NamedParams<T> named;
    named_params(named);
    std::vector<Tensor<T>> out;
    for (auto& [_, t] : named)
      if (t.requires_grad()) out.push_back(t);
    return out;
  }

  ckpt::Archive snapshot() const {
    nn::NamedParams<T> named;
    named_params(named);
    return ckpt::from_params(named);
  }

  void restore(const ckpt::Archive& archive) {
    nn::NamedParams<T> named;
    named_params(named);
    ckpt::apply_to_params(archive, named);
  }

 private:
  struct Mlp {
    nn::Linear<T> l1, l2;
    Mlp(int in, int d, Rng& rng) : l1(in, d, rng), l2(d, d, rng) {}
  };
  struct GestureExpert {
    Tensor<T> codebook;  // frozen
    Tensor<T> pos;
    nn::TransformerEncoderLayer<T> encoder;
    nn::Linear<T> out;
  };

  static std::vector<int> iota(int n) {
    std::vector<int> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
    return v;
  }

  TurnModelConfig cfg_;
  std::optional<Mlp> text_, audio_;
  std::optional<GestureExpert> gesture_;
  Tensor<T> absent_emb_;  // [1, d]
  nn::Linear<T> gate_;
  std::optional<nn::Linear<T>> concat_fuse_;
  std::vector<std::vector<Tensor<T>>> lmf_factors_;  // [modality][rank] -> [d+1, d]
  nn::Linear<T> classifier_;
};

}  // namespace ttk::model
