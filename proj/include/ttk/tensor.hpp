#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "ttk/error.hpp"
#include "ttk/rng.hpp"

// Dense row-major tensors with taped reverse-mode differentiation.
// Single-threaded graph construction; kernels accumulate in a fixed order so
// results are bitwise reproducible for a given seed.
namespace ttk::tc {

using Shape = std::vector<int>;

inline int64_t numel_of(const Shape& s) {
  int64_t n = 1;
  for (int d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

inline thread_local int g_no_grad_depth = 0;

struct NoGradGuard {
  NoGradGuard() { ++g_no_grad_depth; }
  ~NoGradGuard() { --g_no_grad_depth; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

inline bool grad_enabled() { return g_no_grad_depth == 0; }

template <typename T>
struct TensorImpl {
  Shape shape;
  std::vector<T> values;
  std::vector<T> grad;  // empty until touched by backward
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorImpl>> parents;
  std::function<void(TensorImpl&)> backward;

  void ensure_grad() {
    if (grad.size() != values.size()) grad.assign(values.size(), T(0));
  }
};

template <typename T>
class Tensor {
 public:
  Tensor() : impl_(std::make_shared<TensorImpl<T>>()) {}

  Tensor(Shape shape, std::vector<T> values) : impl_(std::make_shared<TensorImpl<T>>()) {
    if (numel_of(shape) != static_cast<int64_t>(values.size()))
      throw ValidationError("tensor: " + std::to_string(values.size()) + " values for shape " + shape_str(shape));
    impl_->shape = std::move(shape);
    impl_->values = std::move(values);
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    Tensor t(shape, std::vector<T>(numel_of(shape), T(0)));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    Tensor t(shape, std::vector<T>(numel_of(shape), value));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    Tensor t({}, std::vector<T>{value});
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor from_data(Shape shape, std::vector<T> values, bool requires_grad = false) {
    Tensor t(std::move(shape), std::move(values));
    t.impl_->requires_grad = requires_grad;
    return t;
  }

  static Tensor uniform(Shape shape, T lo, T hi, Rng& rng, bool requires_grad = true) {
    std::vector<T> v(numel_of(shape));
    for (auto& x : v) x = static_cast<T>(rng.uniform(lo, hi));
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  static Tensor normal(Shape shape, T mean, T stddev, Rng& rng, bool requires_grad = true) {
    std::vector<T> v(numel_of(shape));
    for (auto& x : v) x = static_cast<T>(rng.normal(mean, stddev));
    return from_data(std::move(shape), std::move(v), requires_grad);
  }

  const Shape& shape() const { return impl_->shape; }
  int ndim() const { return static_cast<int>(impl_->shape.size()); }
  int dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
  int64_t numel() const { return static_cast<int64_t>(impl_->values.size()); }

  std::vector<T>& values() { return impl_->values; }
  const std::vector<T>& values() const { return impl_->values; }
  std::vector<T>& grad() {
    impl_->ensure_grad();
    return impl_->grad;
  }
  bool has_grad() const { return !impl_->grad.empty(); }

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool rg) { impl_->requires_grad = rg; }

  T item() const {
    if (numel() != 1) throw ValidationError("item() on tensor of shape " + shape_str(shape()));
    return impl_->values[0];
  }

  Tensor detach() const {
    Tensor t(impl_->shape, impl_->values);
    return t;
  }

  void zero_grad() {
    if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
  }

  bool finite() const {
    for (T v : impl_->values)
      if (!std::isfinite(static_cast<double>(v))) return false;
    return true;
  }

  std::shared_ptr<TensorImpl<T>> impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl<T>> impl_;
};

namespace detail {

template <typename T>
Tensor<T> make_op(Shape shape, std::vector<T> values, std::vector<Tensor<T>> parents,
                  std::function<void(TensorImpl<T>&)> backward) {
  Tensor<T> out(std::move(shape), std::move(values));
  bool need = false;
  if (grad_enabled())
    for (const auto& p : parents) need = need || p.requires_grad();
  if (need) {
    out.impl()->requires_grad = true;
    for (const auto& p : parents) out.impl()->parents.push_back(p.impl());
    out.impl()->backward = std::move(backward);
  }
  return out;
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
  if (a.shape() != b.shape())
    throw ValidationError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic
// ---------------------------------------------------------------------------

// add supports: same shape; b a vector matching a's last dim (bias); b scalar.
template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& av = a.values();
  const auto& bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<T> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) bi->grad[i] += self.grad[i];
      }
    });
  }
  if (b.numel() == 1) {
    std::vector<T> out(av.size());
    T c = bv[0];
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + c;
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        T s = 0;
        for (size_t i = 0; i < self.grad.size(); ++i) s += self.grad[i];
        bi->grad[0] += s;
      }
    });
  }
  if (b.ndim() == 1 && a.ndim() >= 1 && a.shape().back() == b.dim(0)) {
    int64_t cols = b.dim(0);
    int64_t rows = a.numel() / cols;
    std::vector<T> out(av.size());
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] + bv[c];
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi, rows, cols](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c) bi->grad[c] += self.grad[r * cols + c];
      }
    });
  }
  if (b.ndim() == 2 && a.ndim() == 3 && a.dim(1) == b.dim(0) && a.dim(2) == b.dim(1)) {
    // broadcast [L,D] over the batch axis
    int64_t batch = a.dim(0), block = static_cast<int64_t>(b.dim(0)) * b.dim(1);
    std::vector<T> out(av.size());
    for (int64_t q = 0; q < batch; ++q)
      for (int64_t i = 0; i < block; ++i) out[q * block + i] = av[q * block + i] + bv[i];
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi, batch, block](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int64_t q = 0; q < batch; ++q)
          for (int64_t i = 0; i < block; ++i) bi->grad[i] += self.grad[q * block + i];
      }
    });
  }
  if (a.numel() == 1) return add(b, a);
  throw ValidationError("add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
Tensor<T> neg(const Tensor<T>& a) {
  std::vector<T> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = -a.values()[i];
  auto ai = a.impl();
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] -= self.grad[i];
  });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  return add(a, neg(b));
}

// mul supports: same shape; either side scalar; column broadcast [B,1]*[B,D].
template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  const auto& av = a.values();
  const auto& bv = b.values();
  if (a.shape() == b.shape()) {
    std::vector<T> out(av.size());
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i] * bi->values[i];
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) bi->grad[i] += self.grad[i] * ai->values[i];
      }
    });
  }
  if (b.numel() == 1) {
    std::vector<T> out(av.size());
    T c = bv[0];
    for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(a.shape(), std::move(out), {a, b}, [ai, bi, c](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i] * c;
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        T s = 0;
        for (size_t i = 0; i < self.grad.size(); ++i) s += self.grad[i] * ai->values[i];
        bi->grad[0] += s;
      }
    });
  }
  if (a.numel() == 1) return mul(b, a);
  // [B,1] * [B,D]
  if (a.ndim() == 2 && b.ndim() == 2 && a.dim(1) == 1 && a.dim(0) == b.dim(0)) {
    int64_t rows = b.dim(0), cols = b.dim(1);
    std::vector<T> out(bv.size());
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = av[r] * bv[r * cols + c];
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>(b.shape(), std::move(out), {a, b}, [ai, bi, rows, cols](TensorImpl<T>& self) {
      if (ai->requires_grad) {
        ai->ensure_grad();
        for (int64_t r = 0; r < rows; ++r) {
          T s = 0;
          for (int64_t c = 0; c < cols; ++c) s += self.grad[r * cols + c] * bi->values[r * cols + c];
          ai->grad[r] += s;
        }
      }
      if (bi->requires_grad) {
        bi->ensure_grad();
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < cols; ++c) bi->grad[r * cols + c] += self.grad[r * cols + c] * ai->values[r];
      }
    });
  }
  if (b.ndim() == 2 && b.dim(1) == 1 && a.ndim() == 2 && a.dim(0) == b.dim(0)) return mul(b, a);
  throw ValidationError("mul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T c) {
  std::vector<T> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * c;
  auto ai = a.impl();
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai, c](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i] * c;
  });
}

// Per-row constant scaling of a [B,D] tensor; s has no gradient path.
template <typename T>
Tensor<T> row_scale(const Tensor<T>& a, const std::vector<T>& s) {
  if (a.ndim() != 2 || static_cast<size_t>(a.dim(0)) != s.size())
    throw ValidationError("row_scale: want [B,D] with B == scale count");
  int64_t rows = a.dim(0), cols = a.dim(1);
  std::vector<T> out(a.values().size());
  for (int64_t r = 0; r < rows; ++r)
    for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = a.values()[r * cols + c] * s[r];
  auto ai = a.impl();
  auto sv = s;
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai, sv, rows, cols](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t c = 0; c < cols; ++c) ai->grad[r * cols + c] += self.grad[r * cols + c] * sv[r];
  });
}

// ---------------------------------------------------------------------------
// Matrix multiply: [M,K]x[K,N] or batched [B,M,K]x[B,K,N]
// ---------------------------------------------------------------------------

namespace detail {

template <typename T>
void mm_accum(const T* a, const T* b, T* out, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    T* orow = out + i * n;
    const T* arow = a + i * k;
    for (int64_t p = 0; p < k; ++p) {
      T av = arow[p];
      if (av == T(0)) continue;
      const T* brow = b + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
}

// out[i,p] += sum_j g[i,j] * b[p,j]
template <typename T>
void mm_accum_bt(const T* g, const T* b, T* out, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* grow = g + i * n;
    T* orow = out + i * k;
    for (int64_t p = 0; p < k; ++p) {
      const T* brow = b + p * n;
      T s = 0;
      for (int64_t j = 0; j < n; ++j) s += grow[j] * brow[j];
      orow[p] += s;
    }
  }
}

// out[p,j] += sum_i a[i,p] * g[i,j]
template <typename T>
void mm_accum_at(const T* a, const T* g, T* out, int64_t m, int64_t k, int64_t n) {
  for (int64_t i = 0; i < m; ++i) {
    const T* arow = a + i * k;
    const T* grow = g + i * n;
    for (int64_t p = 0; p < k; ++p) {
      T av = arow[p];
      if (av == T(0)) continue;
      T* orow = out + p * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * grow[j];
    }
  }
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.ndim() == 2 && b.ndim() == 2) {
    int64_t m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
    if (k != k2)
      throw ValidationError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> out(m * n, T(0));
    detail::mm_accum(a.values().data(), b.values().data(), out.data(), m, k, n);
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>({static_cast<int>(m), static_cast<int>(n)}, std::move(out), {a, b},
                              [ai, bi, m, k, n](TensorImpl<T>& self) {
                                if (ai->requires_grad) {
                                  ai->ensure_grad();
                                  detail::mm_accum_bt(self.grad.data(), bi->values.data(), ai->grad.data(), m, k, n);
                                }
                                if (bi->requires_grad) {
                                  bi->ensure_grad();
                                  detail::mm_accum_at(ai->values.data(), self.grad.data(), bi->grad.data(), m, k, n);
                                }
                              });
  }
  if (a.ndim() == 3 && b.ndim() == 3) {
    int64_t bsz = a.dim(0), m = a.dim(1), k = a.dim(2);
    if (b.dim(0) != bsz || b.dim(1) != k)
      throw ValidationError("matmul: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    int64_t n = b.dim(2);
    std::vector<T> out(bsz * m * n, T(0));
    for (int64_t q = 0; q < bsz; ++q)
      detail::mm_accum(a.values().data() + q * m * k, b.values().data() + q * k * n, out.data() + q * m * n, m, k, n);
    auto ai = a.impl(), bi = b.impl();
    return detail::make_op<T>({static_cast<int>(bsz), static_cast<int>(m), static_cast<int>(n)}, std::move(out),
                              {a, b}, [ai, bi, bsz, m, k, n](TensorImpl<T>& self) {
                                for (int64_t q = 0; q < bsz; ++q) {
                                  if (ai->requires_grad) {
                                    ai->ensure_grad();
                                    detail::mm_accum_bt(self.grad.data() + q * m * n, bi->values.data() + q * k * n,
                                                        ai->grad.data() + q * m * k, m, k, n);
                                  }
                                  if (bi->requires_grad) {
                                    bi->ensure_grad();
                                    detail::mm_accum_at(ai->values.data() + q * m * k, self.grad.data() + q * m * n,
                                                        bi->grad.data() + q * k * n, m, k, n);
                                  }
                                }
                              });
  }
  throw ValidationError("matmul: want 2-D or 3-D operands, got " + shape_str(a.shape()) + " and " + shape_str(b.shape()));
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
  std::vector<T> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] > T(0) ? a.values()[i] : T(0);
  auto ai = a.impl();
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (ai->values[i] > T(0)) ai->grad[i] += self.grad[i];
  });
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  constexpr double kInvSqrt2 = 0.70710678118654752440;
  constexpr double kInvSqrt2Pi = 0.39894228040143267794;
  std::vector<T> out(a.values().size());
  for (size_t i = 0; i < out.size(); ++i) {
    double x = static_cast<double>(a.values()[i]);
    out[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * kInvSqrt2)));
  }
  auto ai = a.impl();
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      double x = static_cast<double>(ai->values[i]);
      double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      ai->grad[i] += self.grad[i] * static_cast<T>(cdf + x * pdf);
    }
  });
}

// ---------------------------------------------------------------------------
// Softmax / layer norm
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> softmax_lastdim(const Tensor<T>& a) {
  if (a.ndim() < 1) throw ValidationError("softmax: scalar input");
  int64_t cols = a.shape().back();
  int64_t rows = a.numel() / cols;
  std::vector<T> out(a.values().size());
  for (int64_t r = 0; r < rows; ++r) {
    const T* x = a.values().data() + r * cols;
    T* y = out.data() + r * cols;
    T m = x[0];
    for (int64_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
    T s = 0;
    for (int64_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - m);
      s += y[c];
    }
    for (int64_t c = 0; c < cols; ++c) y[c] /= s;
  }
  auto ai = a.impl();
  return detail::make_op<T>(a.shape(), std::move(out), {a}, [ai, rows, cols](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) {
      const T* y = self.values.data() + r * cols;
      const T* g = self.grad.data() + r * cols;
      T dot = 0;
      for (int64_t c = 0; c < cols; ++c) dot += g[c] * y[c];
      for (int64_t c = 0; c < cols; ++c) ai->grad[r * cols + c] += y[c] * (g[c] - dot);
    }
  });
}

template <typename T>
Tensor<T> transpose(const Tensor<T>& a, const std::vector<int>& perm);

template <typename T>
Tensor<T> softmax(const Tensor<T>& a, int axis) {
  int nd = a.ndim();
  if (axis < 0) axis += nd;
  if (axis < 0 || axis >= nd) throw ValidationError("softmax: bad axis");
  if (axis == nd - 1) return softmax_lastdim(a);
  std::vector<int> perm(nd);
  std::iota(perm.begin(), perm.end(), 0);
  std::swap(perm[axis], perm[nd - 1]);
  return transpose(softmax_lastdim(transpose(a, perm)), perm);
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta, T eps = T(1e-5)) {
  if (x.ndim() < 1) throw ValidationError("layer_norm: scalar input");
  int64_t cols = x.shape().back();
  if (gamma.numel() != cols || beta.numel() != cols) throw ValidationError("layer_norm: gain/bias length mismatch");
  int64_t rows = x.numel() / cols;
  std::vector<T> out(x.values().size());
  std::vector<T> inv_std(rows), mean(rows);
  for (int64_t r = 0; r < rows; ++r) {
    const T* v = x.values().data() + r * cols;
    T mu = 0;
    for (int64_t c = 0; c < cols; ++c) mu += v[c];
    mu /= static_cast<T>(cols);
    T var = 0;
    for (int64_t c = 0; c < cols; ++c) var += (v[c] - mu) * (v[c] - mu);
    var /= static_cast<T>(cols);
    T is = T(1) / std::sqrt(var + eps);
    mean[r] = mu;
    inv_std[r] = is;
    for (int64_t c = 0; c < cols; ++c) out[r * cols + c] = (v[c] - mu) * is * gamma.values()[c] + beta.values()[c];
  }
  auto xi = x.impl(), gi = gamma.impl(), bi = beta.impl();
  return detail::make_op<T>(
      x.shape(), std::move(out), {x, gamma, beta},
      [xi, gi, bi, rows, cols, mean, inv_std](TensorImpl<T>& self) {
        for (int64_t r = 0; r < rows; ++r) {
          const T* v = xi->values.data() + r * cols;
          const T* g = self.grad.data() + r * cols;
          T mu = mean[r], is = inv_std[r];
          if (gi->requires_grad) {
            gi->ensure_grad();
            for (int64_t c = 0; c < cols; ++c) gi->grad[c] += g[c] * (v[c] - mu) * is;
          }
          if (bi->requires_grad) {
            bi->ensure_grad();
            for (int64_t c = 0; c < cols; ++c) bi->grad[c] += g[c];
          }
          if (xi->requires_grad) {
            xi->ensure_grad();
            // dL/dx via normalized-value identity
            T sum_dy = 0, sum_dy_xhat = 0;
            for (int64_t c = 0; c < cols; ++c) {
              T dy = g[c] * gi->values[c];
              sum_dy += dy;
              sum_dy_xhat += dy * (v[c] - mu) * is;
            }
            for (int64_t c = 0; c < cols; ++c) {
              T xhat = (v[c] - mu) * is;
              T dy = g[c] * gi->values[c];
              xi->grad[r * cols + c] +=
                  (dy - sum_dy / static_cast<T>(cols) - xhat * sum_dy_xhat / static_cast<T>(cols)) * is;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// Shape ops
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
  if (numel_of(shape) != a.numel())
    throw ValidationError("reshape: numel mismatch " + shape_str(a.shape()) + " -> " + shape_str(shape));
  auto ai = a.impl();
  return detail::make_op<T>(std::move(shape), a.values(), {a}, [ai](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[i] += self.grad[i];
  });
}

namespace detail {

inline std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i) st[i] = st[i + 1] * s[i + 1];
  return st;
}

// dst[idx] = src[perm(idx)] mapping table for a permutation
inline std::vector<int64_t> permutation_map(const Shape& in_shape, const std::vector<int>& perm) {
  Shape out_shape(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) out_shape[i] = in_shape[perm[i]];
  auto in_st = row_major_strides(in_shape);
  auto out_st = row_major_strides(out_shape);
  int64_t n = numel_of(in_shape);
  std::vector<int64_t> map(n);
  std::vector<int64_t> idx(perm.size(), 0);
  for (int64_t flat = 0; flat < n; ++flat) {
    int64_t src = 0;
    int64_t rem = flat;
    for (size_t d = 0; d < perm.size(); ++d) {
      int64_t coord = rem / out_st[d];
      rem %= out_st[d];
      src += coord * in_st[perm[d]];
    }
    map[flat] = src;
  }
  return map;
}

}  // namespace detail

template <typename T>
Tensor<T> transpose(const Tensor<T>& a, const std::vector<int>& perm) {
  if (static_cast<int>(perm.size()) != a.ndim()) throw ValidationError("transpose: perm rank mismatch");
  Shape out_shape(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) out_shape[i] = a.dim(perm[i]);
  auto map = detail::permutation_map(a.shape(), perm);
  std::vector<T> out(a.numel());
  for (int64_t i = 0; i < a.numel(); ++i) out[i] = a.values()[map[i]];
  auto ai = a.impl();
  return detail::make_op<T>(std::move(out_shape), std::move(out), {a}, [ai, map](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) ai->grad[map[i]] += self.grad[i];
  });
}

template <typename T>
Tensor<T> concat(const std::vector<Tensor<T>>& parts, int axis) {
  if (parts.empty()) throw ValidationError("concat: no inputs");
  int nd = parts[0].ndim();
  if (axis < 0) axis += nd;
  if (axis < 0 || axis >= nd) throw ValidationError("concat: bad axis");
  Shape out_shape = parts[0].shape();
  int64_t axis_total = 0;
  for (const auto& p : parts) {
    if (p.ndim() != nd) throw ValidationError("concat: rank mismatch");
    for (int d = 0; d < nd; ++d)
      if (d != axis && p.dim(d) != out_shape[d])
        throw ValidationError("concat: shape mismatch " + shape_str(p.shape()) + " vs " + shape_str(out_shape));
    axis_total += p.dim(axis);
  }
  out_shape[axis] = static_cast<int>(axis_total);
  int64_t outer = 1, inner = 1;
  for (int d = 0; d < axis; ++d) outer *= out_shape[d];
  for (int d = axis + 1; d < nd; ++d) inner *= out_shape[d];
  std::vector<T> out(numel_of(out_shape));
  std::vector<int64_t> offsets(parts.size());
  int64_t off = 0;
  for (size_t p = 0; p < parts.size(); ++p) {
    offsets[p] = off;
    int64_t block = parts[p].dim(axis) * inner;
    for (int64_t o = 0; o < outer; ++o)
      std::copy_n(parts[p].values().data() + o * block, block, out.data() + o * axis_total * inner + off * inner);
    off += parts[p].dim(axis);
  }
  std::vector<std::shared_ptr<TensorImpl<T>>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  std::vector<int> sizes;
  for (const auto& p : parts) sizes.push_back(p.dim(axis));
  return detail::make_op<T>(out_shape, std::move(out), parts,
                            [impls, offsets, sizes, outer, inner, axis_total](TensorImpl<T>& self) {
                              for (size_t p = 0; p < impls.size(); ++p) {
                                if (!impls[p]->requires_grad) continue;
                                impls[p]->ensure_grad();
                                int64_t block = sizes[p] * inner;
                                for (int64_t o = 0; o < outer; ++o) {
                                  const T* src = self.grad.data() + o * axis_total * inner + offsets[p] * inner;
                                  T* dst = impls[p]->grad.data() + o * block;
                                  for (int64_t i = 0; i < block; ++i) dst[i] += src[i];
                                }
                              }
                            });
}

// Column m of a [B,M] tensor as [B,1].
template <typename T>
Tensor<T> column(const Tensor<T>& a, int m) {
  if (a.ndim() != 2 || m < 0 || m >= a.dim(1)) throw ValidationError("column: bad index");
  int64_t rows = a.dim(0), cols = a.dim(1);
  std::vector<T> out(rows);
  for (int64_t r = 0; r < rows; ++r) out[r] = a.values()[r * cols + m];
  auto ai = a.impl();
  return detail::make_op<T>({static_cast<int>(rows), 1}, std::move(out), {a}, [ai, m, rows, cols](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    for (int64_t r = 0; r < rows; ++r) ai->grad[r * cols + m] += self.grad[r];
  });
}

template <typename T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  if (x.ndim() != 3 || factor < 1) throw ValidationError("upsample_nearest: want [B,C,L]");
  int64_t b = x.dim(0), c = x.dim(1), l = x.dim(2);
  std::vector<T> out(b * c * l * factor);
  for (int64_t i = 0; i < b * c; ++i)
    for (int64_t t = 0; t < l; ++t)
      for (int f = 0; f < factor; ++f) out[i * l * factor + t * factor + f] = x.values()[i * l + t];
  auto xi = x.impl();
  return detail::make_op<T>({static_cast<int>(b), static_cast<int>(c), static_cast<int>(l * factor)}, std::move(out),
                            {x}, [xi, b, c, l, factor](TensorImpl<T>& self) {
                              if (!xi->requires_grad) return;
                              xi->ensure_grad();
                              for (int64_t i = 0; i < b * c; ++i)
                                for (int64_t t = 0; t < l; ++t) {
                                  T s = 0;
                                  for (int f = 0; f < factor; ++f) s += self.grad[i * l * factor + t * factor + f];
                                  xi->grad[i * l + t] += s;
                                }
                            });
}

// ---------------------------------------------------------------------------
// Convolution: x [B,Ci,L], w [Co,Ci,K], bias [Co] optional
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& bias, int stride, int padding) {
  if (x.ndim() != 3 || w.ndim() != 3)
    throw ValidationError("conv1d: want x [B,Ci,L], w [Co,Ci,K], got " + shape_str(x.shape()) + " and " + shape_str(w.shape()));
  int64_t B = x.dim(0), Ci = x.dim(1), L = x.dim(2);
  int64_t Co = w.dim(0), K = w.dim(2);
  if (w.dim(1) != Ci) throw ValidationError("conv1d: channel mismatch " + shape_str(x.shape()) + " vs " + shape_str(w.shape()));
  bool has_bias = bias.numel() > 0;
  if (has_bias && bias.numel() != Co) throw ValidationError("conv1d: bias length mismatch");
  if (stride < 1) throw ValidationError("conv1d: stride must be >= 1");
  int64_t Lout = (L + 2 * padding - K) / stride + 1;
  if (L + 2 * padding < K) throw ValidationError("conv1d: kernel longer than padded input");
  std::vector<T> out(B * Co * Lout, T(0));
  const T* xv = x.values().data();
  const T* wv = w.values().data();
  for (int64_t bi = 0; bi < B; ++bi)
    for (int64_t co = 0; co < Co; ++co) {
      T* orow = out.data() + (bi * Co + co) * Lout;
      if (has_bias) {
        T bv = bias.values()[co];
        for (int64_t t = 0; t < Lout; ++t) orow[t] = bv;
      }
      for (int64_t ci = 0; ci < Ci; ++ci) {
        const T* xrow = xv + (bi * Ci + ci) * L;
        const T* wrow = wv + (co * Ci + ci) * K;
        for (int64_t t = 0; t < Lout; ++t) {
          int64_t base = t * stride - padding;
          T s = 0;
          for (int64_t k = 0; k < K; ++k) {
            int64_t pos = base + k;
            if (pos >= 0 && pos < L) s += xrow[pos] * wrow[k];
          }
          orow[t] += s;
        }
      }
    }
  auto xi = x.impl(), wi = w.impl(), bi_ = bias.impl();
  std::vector<Tensor<T>> parents = {x, w};
  if (has_bias) parents.push_back(bias);
  return detail::make_op<T>(
      {static_cast<int>(B), static_cast<int>(Co), static_cast<int>(Lout)}, std::move(out), parents,
      [xi, wi, bi_, has_bias, B, Ci, L, Co, K, Lout, stride, padding](TensorImpl<T>& self) {
        if (xi->requires_grad) xi->ensure_grad();
        if (wi->requires_grad) wi->ensure_grad();
        if (has_bias && bi_->requires_grad) bi_->ensure_grad();
        for (int64_t b = 0; b < B; ++b)
          for (int64_t co = 0; co < Co; ++co) {
            const T* grow = self.grad.data() + (b * Co + co) * Lout;
            if (has_bias && bi_->requires_grad) {
              T s = 0;
              for (int64_t t = 0; t < Lout; ++t) s += grow[t];
              bi_->grad[co] += s;
            }
            for (int64_t ci = 0; ci < Ci; ++ci) {
              const T* xrow = xi->values.data() + (b * Ci + ci) * L;
              const T* wrow = wi->values.data() + (co * Ci + ci) * K;
              T* dxrow = xi->requires_grad ? xi->grad.data() + (b * Ci + ci) * L : nullptr;
              T* dwrow = wi->requires_grad ? wi->grad.data() + (co * Ci + ci) * K : nullptr;
              for (int64_t t = 0; t < Lout; ++t) {
                T g = grow[t];
                if (g == T(0)) continue;
                int64_t base = t * stride - padding;
                for (int64_t k = 0; k < K; ++k) {
                  int64_t pos = base + k;
                  if (pos < 0 || pos >= L) continue;
                  if (dxrow) dxrow[pos] += g * wrow[k];
                  if (dwrow) dwrow[k] += g * xrow[pos];
                }
              }
            }
          }
      });
}

template <typename T>
Tensor<T> conv1d(const Tensor<T>& x, const Tensor<T>& w, int stride, int padding) {
  return conv1d(x, w, Tensor<T>::zeros({0}), stride, padding);
}

// ---------------------------------------------------------------------------
// Reductions / pooling
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  T s = 0;
  for (T v : a.values()) s += v;
  auto ai = a.impl();
  return detail::make_op<T>({}, {s}, {a}, [ai](TensorImpl<T>& self) {
    if (!ai->requires_grad) return;
    ai->ensure_grad();
    T g = self.grad[0];
    for (auto& v : ai->grad) v += g;
  });
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  if (a.numel() == 0) throw ValidationError("mean_all: empty tensor");
  return scale(sum_all(a), T(1) / static_cast<T>(a.numel()));
}

// Mean along `axis`. With a mask (length = dim(axis) entries per slice,
// 3-D [B,L,D] with axis=1 and mask flattened [B*L]), padded positions are
// excluded; an all-false slice yields zero.
template <typename T>
Tensor<T> mean_pool(const Tensor<T>& a, int axis, const std::vector<uint8_t>& mask = {}) {
  int nd = a.ndim();
  if (axis < 0) axis += nd;
  if (axis < 0 || axis >= nd) throw ValidationError("mean_pool: bad axis");
  int64_t outer = 1, inner = 1, n = a.dim(axis);
  for (int d = 0; d < axis; ++d) outer *= a.dim(d);
  for (int d = axis + 1; d < nd; ++d) inner *= a.dim(d);
  bool masked = !mask.empty();
  if (masked && static_cast<int64_t>(mask.size()) != outer * n)
    throw ValidationError("mean_pool: mask length mismatch");
  Shape out_shape;
  for (int d = 0; d < nd; ++d)
    if (d != axis) out_shape.push_back(a.dim(d));
  std::vector<T> out(outer * inner, T(0));
  std::vector<T> inv_count(outer);
  for (int64_t o = 0; o < outer; ++o) {
    int64_t cnt = 0;
    for (int64_t t = 0; t < n; ++t) {
      if (masked && !mask[o * n + t]) continue;
      ++cnt;
      const T* src = a.values().data() + (o * n + t) * inner;
      T* dst = out.data() + o * inner;
      for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
    }
    T ic = cnt > 0 ? T(1) / static_cast<T>(cnt) : T(0);
    inv_count[o] = ic;
    T* dst = out.data() + o * inner;
    for (int64_t i = 0; i < inner; ++i) dst[i] *= ic;
  }
  auto ai = a.impl();
  auto mk = mask;
  return detail::make_op<T>(out_shape, std::move(out), {a},
                            [ai, mk, outer, inner, n, masked, inv_count](TensorImpl<T>& self) {
                              if (!ai->requires_grad) return;
                              ai->ensure_grad();
                              for (int64_t o = 0; o < outer; ++o) {
                                T ic = inv_count[o];
                                if (ic == T(0)) continue;
                                const T* g = self.grad.data() + o * inner;
                                for (int64_t t = 0; t < n; ++t) {
                                  if (masked && !mk[o * n + t]) continue;
                                  T* dst = ai->grad.data() + (o * n + t) * inner;
                                  for (int64_t i = 0; i < inner; ++i) dst[i] += g[i] * ic;
                                }
                              }
                            });
}

// ---------------------------------------------------------------------------
// Embedding lookup: table [K,D], ids arbitrary shape
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> embedding_lookup(const Tensor<T>& table, const std::vector<int>& ids, Shape id_shape = {}) {
  if (table.ndim() != 2) throw ValidationError("embedding_lookup: table must be [K,D]");
  int64_t K = table.dim(0), D = table.dim(1);
  if (id_shape.empty()) id_shape = {static_cast<int>(ids.size())};
  if (numel_of(id_shape) != static_cast<int64_t>(ids.size()))
    throw ValidationError("embedding_lookup: id shape mismatch");
  for (int id : ids)
    if (id < 0 || id >= K)
      throw ValidationError("embedding_lookup: id " + std::to_string(id) + " out of range [0," + std::to_string(K) + ")");
  Shape out_shape = id_shape;
  out_shape.push_back(static_cast<int>(D));
  std::vector<T> out(ids.size() * D);
  for (size_t i = 0; i < ids.size(); ++i)
    std::copy_n(table.values().data() + static_cast<int64_t>(ids[i]) * D, D, out.data() + i * D);
  auto ti = table.impl();
  return detail::make_op<T>(std::move(out_shape), std::move(out), {table}, [ti, ids, D](TensorImpl<T>& self) {
    if (!ti->requires_grad) return;
    ti->ensure_grad();
    for (size_t i = 0; i < ids.size(); ++i) {
      const T* g = self.grad.data() + i * D;
      T* dst = ti->grad.data() + static_cast<int64_t>(ids[i]) * D;
      for (int64_t d = 0; d < D; ++d) dst[d] += g[d];
    }
  });
}

// ---------------------------------------------------------------------------
// Attention (composite): Q,K,V [B,L,D]; key positions with mask=false are
// excluded via additive -1e30 logits. Encoder-style, no causal mask.
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> scaled_dot_product_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads,
                                       const std::vector<uint8_t>& mask = {}) {
  if (q.ndim() != 3 || k.shape() != q.shape() || v.shape() != q.shape())
    throw ValidationError("attention: want matching [B,L,D] inputs");
  int B = q.dim(0), L = q.dim(1), D = q.dim(2);
  if (heads < 1 || D % heads != 0) throw ValidationError("attention: heads must divide model dim");
  int Dh = D / heads;
  if (!mask.empty() && static_cast<int64_t>(mask.size()) != static_cast<int64_t>(B) * L)
    throw ValidationError("attention: mask length mismatch");
  auto split = [&](const Tensor<T>& x) {
    // [B,L,D] -> [B*H, L, Dh]
    auto r = reshape(x, {B, L, heads, Dh});
    auto t = transpose(r, {0, 2, 1, 3});
    return reshape(t, {B * heads, L, Dh});
  };
  auto qh = split(q), kh = split(k), vh = split(v);
  auto scores = scale(matmul(qh, transpose(kh, {0, 2, 1})), static_cast<T>(1.0 / std::sqrt(static_cast<double>(Dh))));
  if (!mask.empty()) {
    std::vector<T> add_mask(static_cast<size_t>(B) * heads * L * L, T(0));
    for (int b = 0; b < B; ++b)
      for (int h = 0; h < heads; ++h)
        for (int i = 0; i < L; ++i)
          for (int j = 0; j < L; ++j)
            if (!mask[static_cast<size_t>(b) * L + j])
              add_mask[((static_cast<size_t>(b) * heads + h) * L + i) * L + j] = T(-1e30);
    scores = add(scores, Tensor<T>::from_data({B * heads, L, L}, std::move(add_mask)));
  }
  auto weights = softmax_lastdim(scores);
  auto ctx = matmul(weights, vh);  // [B*H, L, Dh]
  auto merged = transpose(reshape(ctx, {B, heads, L, Dh}), {0, 2, 1, 3});
  return reshape(merged, {B, L, D});
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

template <typename T>
Tensor<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
  detail::check_same_shape(pred, target, "mse_loss");
  int64_t n = pred.numel();
  if (n == 0) throw ValidationError("mse_loss: empty input");
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) {
    double d = static_cast<double>(pred.values()[i]) - static_cast<double>(target.values()[i]);
    acc += d * d;
  }
  T loss = static_cast<T>(acc / static_cast<double>(n));
  auto pi = pred.impl(), ti = target.impl();
  return detail::make_op<T>({}, {loss}, {pred, target}, [pi, ti, n](TensorImpl<T>& self) {
    T g = self.grad[0] * T(2) / static_cast<T>(n);
    if (pi->requires_grad) {
      pi->ensure_grad();
      for (int64_t i = 0; i < n; ++i) pi->grad[i] += g * (pi->values[i] - ti->values[i]);
    }
    if (ti->requires_grad) {
      ti->ensure_grad();
      for (int64_t i = 0; i < n; ++i) ti->grad[i] -= g * (pi->values[i] - ti->values[i]);
    }
  });
}

// Mean negative log-softmax over rows whose label != ignore_class.
// Optional per-class weights turn the mean into a weighted mean.
template <typename T>
Tensor<T> cross_entropy(const Tensor<T>& logits, const std::vector<int>& labels, int ignore_class = -1,
                        const std::vector<T>& class_weights = {}) {
  if (logits.ndim() != 2) throw ValidationError("cross_entropy: logits must be [B,C]");
  int64_t B = logits.dim(0), C = logits.dim(1);
  if (static_cast<int64_t>(labels.size()) != B) throw ValidationError("cross_entropy: label count mismatch");
  if (!class_weights.empty() && static_cast<int64_t>(class_weights.size()) != C)
    throw ValidationError("cross_entropy: class weight count mismatch");
  for (int l : labels)
    if (l < 0 || l >= C)
      throw ValidationError("cross_entropy: label " + std::to_string(l) + " out of range [0," + std::to_string(C) + ")");
  std::vector<T> probs(B * C);
  double total = 0, weight_sum = 0;
  for (int64_t r = 0; r < B; ++r) {
    const T* x = logits.values().data() + r * C;
    T* p = probs.data() + r * C;
    T m = x[0];
    for (int64_t c = 1; c < C; ++c) m = std::max(m, x[c]);
    double s = 0;
    for (int64_t c = 0; c < C; ++c) {
      p[c] = std::exp(x[c] - m);
      s += static_cast<double>(p[c]);
    }
    for (int64_t c = 0; c < C; ++c) p[c] = static_cast<T>(static_cast<double>(p[c]) / s);
    if (labels[r] == ignore_class) continue;
    double w = class_weights.empty() ? 1.0 : static_cast<double>(class_weights[labels[r]]);
    double logp = static_cast<double>(x[labels[r]] - m) - std::log(s);
    total -= w * logp;
    weight_sum += w;
  }
  T loss = weight_sum > 0 ? static_cast<T>(total / weight_sum) : T(0);
  if (weight_sum == 0) return Tensor<T>::scalar(T(0));  // every row ignored: no gradient path
  auto li = logits.impl();
  auto lbls = labels;
  auto cw = class_weights;
  return detail::make_op<T>({}, {loss}, {logits},
                            [li, lbls, cw, ignore_class, B, C, probs, weight_sum](TensorImpl<T>& self) {
                              if (!li->requires_grad) return;
                              li->ensure_grad();
                              T g = self.grad[0] / static_cast<T>(weight_sum);
                              for (int64_t r = 0; r < B; ++r) {
                                if (lbls[r] == ignore_class) continue;
                                T w = cw.empty() ? T(1) : cw[lbls[r]];
                                const T* p = probs.data() + r * C;
                                for (int64_t c = 0; c < C; ++c) {
                                  T delta = (c == lbls[r]) ? T(1) : T(0);
                                  li->grad[r * C + c] += g * w * (p[c] - delta);
                                }
                              }
                            });
}

// Forward value = quantized; backward routes the gradient to pre_quant only.
template <typename T>
Tensor<T> straight_through(const Tensor<T>& quantized, const Tensor<T>& pre_quant) {
  detail::check_same_shape(quantized, pre_quant, "straight_through");
  auto pi = pre_quant.impl();
  return detail::make_op<T>(quantized.shape(), quantized.values(), {pre_quant}, [pi](TensorImpl<T>& self) {
    if (!pi->requires_grad) return;
    pi->ensure_grad();
    for (size_t i = 0; i < self.grad.size(); ++i) pi->grad[i] += self.grad[i];
  });
}

// ---------------------------------------------------------------------------
// Reverse pass
// ---------------------------------------------------------------------------

template <typename T>
void backward(Tensor<T> loss) {
  if (loss.numel() != 1) throw ValidationError("backward: loss must be scalar, got " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;
  // iterative post-order over parents
  std::vector<TensorImpl<T>*> order;
  std::unordered_set<TensorImpl<T>*> visited;
  struct Frame {
    TensorImpl<T>* node;
    size_t next_child;
  };
  std::vector<Frame> stack;
  stack.push_back({loss.impl().get(), 0});
  visited.insert(loss.impl().get());
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next_child < f.node->parents.size()) {
      TensorImpl<T>* child = f.node->parents[f.next_child++].get();
      if (child->requires_grad && !visited.count(child)) {
        visited.insert(child);
        stack.push_back({child, 0});
      }
    } else {
      order.push_back(f.node);
      stack.pop_back();
    }
  }
  loss.impl()->ensure_grad();
  loss.impl()->grad[0] = T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorImpl<T>* node = *it;
    if (node->backward) {
      node->ensure_grad();
      node->backward(*node);
    }
  }
}

}  // namespace ttk::tc
