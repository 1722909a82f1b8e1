#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "ttk/rng.hpp"
#include "ttk/tensor.hpp"

// Layers on top of the tensor engine. Weight init is fan-in Kaiming uniform
// (bound sqrt(3/fan_in)) for linear/conv, zeros for biases, N(0, 0.02) for
// embedding tables.
namespace ttk::nn {

using tc::Shape;
using tc::Tensor;

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
Tensor<T> kaiming_uniform(Shape shape, int64_t fan_in, Rng& rng) {
  T bound = static_cast<T>(std::sqrt(3.0 / static_cast<double>(fan_in)));
  return Tensor<T>::uniform(std::move(shape), -bound, bound, rng, true);
}

template <typename T>
struct Linear {
  Tensor<T> w;  // [in, out]
  Tensor<T> b;  // [out]

  Linear() = default;
  Linear(int in, int out, Rng& rng)
      : w(kaiming_uniform<T>({in, out}, in, rng)), b(Tensor<T>::zeros({out}, true)) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    if (x.ndim() == 2) return tc::add(tc::matmul(x, w), b);
    if (x.ndim() == 3) {
      int B = x.dim(0), L = x.dim(1), in = x.dim(2);
      auto flat = tc::reshape(x, {B * L, in});
      auto y = tc::add(tc::matmul(flat, w), b);
      return tc::reshape(y, {B, L, w.dim(1)});
    }
    throw ValidationError("Linear: want 2-D or 3-D input, got " + tc::shape_str(x.shape()));
  }

  void named_params(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

template <typename T>
struct Conv1dLayer {
  Tensor<T> w;  // [out_ch, in_ch, k]
  Tensor<T> b;  // [out_ch]
  int stride = 1;
  int padding = 0;

  Conv1dLayer() = default;
  Conv1dLayer(int in_ch, int out_ch, int k, int stride_, int padding_, Rng& rng)
      : w(kaiming_uniform<T>({out_ch, in_ch, k}, static_cast<int64_t>(in_ch) * k, rng)),
        b(Tensor<T>::zeros({out_ch}, true)),
        stride(stride_),
        padding(padding_) {}

  Tensor<T> forward(const Tensor<T>& x) const { return tc::conv1d(x, w, b, stride, padding); }

  void named_params(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".w", w);
    out.emplace_back(prefix + ".b", b);
  }
};

template <typename T>
struct LayerNorm {
  Tensor<T> gamma;
  Tensor<T> beta;
  T eps = T(1e-5);

  LayerNorm() = default;
  explicit LayerNorm(int dim) : gamma(Tensor<T>::full({dim}, T(1), true)), beta(Tensor<T>::zeros({dim}, true)) {}

  Tensor<T> forward(const Tensor<T>& x) const { return tc::layer_norm(x, gamma, beta, eps); }

  void named_params(const std::string& prefix, NamedParams<T>& out) const {
    out.emplace_back(prefix + ".gamma", gamma);
    out.emplace_back(prefix + ".beta", beta);
  }
};

template <typename T>
struct ResBlock1d {
  Conv1dLayer<T> c1, c2;

  ResBlock1d() = default;
  ResBlock1d(int channels, Rng& rng)
      : c1(channels, channels, 3, 1, 1, rng), c2(channels, channels, 3, 1, 1, rng) {}

  Tensor<T> forward(const Tensor<T>& x) const {
    return tc::add(x, c2.forward(tc::relu(c1.forward(tc::relu(x)))));
  }

  void named_params(const std::string& prefix, NamedParams<T>& out) const {
    c1.named_params(prefix + ".c1", out);
    c2.named_params(prefix + ".c2", out);
  }
};

// Post-norm encoder layer: x = LN(x + proj(attn(x))); x = LN(x + ffn(x)).
template <typename T>
struct TransformerEncoderLayer {
  Linear<T> wq, wk, wv, wo, ff1, ff2;
  LayerNorm<T> ln1, ln2;
  int heads = 4;

  TransformerEncoderLayer() = default;
  TransformerEncoderLayer(int d_model, int heads_, int ff_dim, Rng& rng)
      : wq(d_model, d_model, rng),
        wk(d_model, d_model, rng),
        wv(d_model, d_model, rng),
        wo(d_model, d_model, rng),
        ff1(d_model, ff_dim, rng),
        ff2(ff_dim, d_model, rng),
        ln1(d_model),
        ln2(d_model),
        heads(heads_) {}

  Tensor<T> forward(const Tensor<T>& x, const std::vector<uint8_t>& mask = {}) const {
    auto attn = tc::scaled_dot_product_attention(wq.forward(x), wk.forward(x), wv.forward(x), heads, mask);
    auto h = ln1.forward(tc::add(x, wo.forward(attn)));
    auto f = ff2.forward(tc::relu(ff1.forward(h)));
    return ln2.forward(tc::add(h, f));
  }

  void named_params(const std::string& prefix, NamedParams<T>& out) const {
    wq.named_params(prefix + ".wq", out);
    wk.named_params(prefix + ".wk", out);
    wv.named_params(prefix + ".wv", out);
    wo.named_params(prefix + ".wo", out);
    ff1.named_params(prefix + ".ff1", out);
    ff2.named_params(prefix + ".ff2", out);
    ln1.named_params(prefix + ".ln1", out);
    ln2.named_params(prefix + ".ln2", out);
  }
};

}  // namespace ttk::nn
