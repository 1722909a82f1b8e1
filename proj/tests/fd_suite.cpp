#include <functional>

#include "fd_check.hpp"
#include "ttk/nn.hpp"

// One entry per differentiable operation; shapes drawn fresh per instance.
// relu inputs are kept away from the kink.

namespace fd {

namespace tc = ttk::tc;

std::vector<CheckResult> run_gradient_suite(int shapes_per_op, uint64_t seed) {
  ttk::Rng master(seed);
  std::vector<CheckResult> results;

  auto run = [&](const std::string& name, const std::function<CheckResult(ttk::Rng&)>& one) {
    for (int i = 0; i < shapes_per_op; ++i) {
      ttk::Rng rng = master.split(static_cast<uint64_t>(results.size() * 1000 + i));
      auto r = one(rng);
      r.name = name + "#" + std::to_string(i);
      results.push_back(r);
    }
  };

  auto dims = [](ttk::Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.below(static_cast<uint64_t>(hi - lo + 1))); };

  run("add_same", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 5)}, rng);
    auto b = random_tensor(a.shape(), rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::add(a, b)); });
  });
  run("add_bias_vec", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 5)}, rng);
    auto b = random_tensor({a.dim(1)}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::add(a, b)); });
  });
  run("add_scalar", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto b = random_tensor({}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::add(a, b)); });
  });
  run("add_batch_bcast", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 3), dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto b = random_tensor({a.dim(1), a.dim(2)}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::add(a, b)); });
  });
  run("sub", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto b = random_tensor(a.shape(), rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::sub(a, b)); });
  });
  run("mul_same", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto b = random_tensor(a.shape(), rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::mul(a, b)); });
  });
  run("mul_scalar", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto b = random_tensor({}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::mul(a, b)); });
  });
  run("mul_column", [&](ttk::Rng& rng) {
    auto b = random_tensor({dims(rng, 2, 4), dims(rng, 2, 5)}, rng);
    auto a = random_tensor({b.dim(0), 1}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::mul(a, b)); });
  });
  run("scale", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 5), dims(rng, 2, 5)}, rng);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::scale(a, 1.7)); });
  });
  run("row_scale", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 5)}, rng);
    std::vector<double> s(static_cast<size_t>(a.dim(0)));
    for (auto& x : s) x = rng.uniform(-1, 1);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::row_scale(a, s)); });
  });
  run("neg", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 5)}, rng);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::neg(a)); });
  });
  run("matmul2d", [&](ttk::Rng& rng) {
    int m = dims(rng, 2, 4), k = dims(rng, 2, 4), n = dims(rng, 2, 4);
    auto a = random_tensor({m, k}, rng);
    auto b = random_tensor({k, n}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::matmul(a, b)); });
  });
  run("matmul3d", [&](ttk::Rng& rng) {
    int q = dims(rng, 2, 3), m = dims(rng, 2, 3), k = dims(rng, 2, 3), n = dims(rng, 2, 3);
    auto a = random_tensor({q, m, k}, rng);
    auto b = random_tensor({q, k, n}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::matmul(a, b)); });
  });
  run("relu", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 3, 6), dims(rng, 3, 6)}, rng);
    for (auto& v : a.values()) v += (v >= 0 ? 0.2 : -0.2);  // keep clear of the kink
    return check_gradients("", {a}, [&] { return weighted_sum(tc::relu(a)); });
  });
  run("gelu", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 3, 6), dims(rng, 3, 6)}, rng, -2.0, 2.0);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::gelu(a)); });
  });
  run("softmax_last", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 6)}, rng, -2.0, 2.0);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::softmax_lastdim(a)); });
  });
  run("softmax_axis0", [&](ttk::Rng& rng) {
    auto a = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng, -2.0, 2.0);
    return check_gradients("", {a}, [&] { return weighted_sum(tc::softmax(a, 0)); });
  });
  run("layer_norm", [&](ttk::Rng& rng) {
    auto x = random_tensor({dims(rng, 2, 4), dims(rng, 3, 6)}, rng);
    auto g = random_tensor({x.dim(1)}, rng, 0.5, 1.5);
    auto b = random_tensor({x.dim(1)}, rng);
    return check_gradients("", {x, g, b}, [&] { return weighted_sum(tc::layer_norm(x, g, b)); });
  });
  run("conv1d_s1", [&](ttk::Rng& rng) {
    int B = dims(rng, 1, 2), Ci = dims(rng, 2, 3), L = dims(rng, 5, 8), Co = dims(rng, 2, 3);
    auto x = random_tensor({B, Ci, L}, rng);
    auto w = random_tensor({Co, Ci, 3}, rng);
    auto b = random_tensor({Co}, rng);
    return check_gradients("", {x, w, b}, [&] { return weighted_sum(tc::conv1d(x, w, b, 1, 1)); });
  });
  run("conv1d_s2", [&](ttk::Rng& rng) {
    int B = dims(rng, 1, 2), Ci = dims(rng, 2, 3), L = 2 * dims(rng, 3, 5), Co = dims(rng, 2, 3);
    auto x = random_tensor({B, Ci, L}, rng);
    auto w = random_tensor({Co, Ci, 4}, rng);
    auto b = random_tensor({Co}, rng);
    return check_gradients("", {x, w, b}, [&] { return weighted_sum(tc::conv1d(x, w, b, 2, 1)); });
  });
  run("conv1d_nobias", [&](ttk::Rng& rng) {
    int B = dims(rng, 1, 2), Ci = dims(rng, 2, 3), L = dims(rng, 5, 8), Co = dims(rng, 2, 3);
    auto x = random_tensor({B, Ci, L}, rng);
    auto w = random_tensor({Co, Ci, 3}, rng);
    return check_gradients("", {x, w}, [&] { return weighted_sum(tc::conv1d(x, w, 1, 0)); });
  });
  run("upsample_nearest", [&](ttk::Rng& rng) {
    auto x = random_tensor({dims(rng, 1, 2), dims(rng, 2, 3), dims(rng, 3, 5)}, rng);
    return check_gradients("", {x}, [&] { return weighted_sum(tc::upsample_nearest(x, 2)); });
  });
  run("concat_axis1", [&](ttk::Rng& rng) {
    int B = dims(rng, 2, 3);
    auto a = random_tensor({B, dims(rng, 2, 4)}, rng);
    auto b = random_tensor({B, dims(rng, 2, 4)}, rng);
    return check_gradients("", {a, b}, [&] { return weighted_sum(tc::concat<double>({a, b}, 1)); });
  });
  run("reshape_transpose", [&](ttk::Rng& rng) {
    int B = dims(rng, 2, 3), L = dims(rng, 2, 3), D = 2 * dims(rng, 1, 2);
    auto x = random_tensor({B, L, D}, rng);
    return check_gradients("", {x}, [&] {
      auto t = tc::transpose(tc::reshape(x, {B, L, 2, D / 2}), {0, 2, 1, 3});
      return weighted_sum(tc::reshape(t, {B * 2, L, D / 2}));
    });
  });
  run("column", [&](ttk::Rng& rng) {
    auto x = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    int c = static_cast<int>(rng.below(static_cast<uint64_t>(x.dim(1))));
    return check_gradients("", {x}, [&] { return weighted_sum(tc::column(x, c)); });
  });
  run("embedding_lookup", [&](ttk::Rng& rng) {
    int K = dims(rng, 3, 6), D = dims(rng, 2, 4), N = dims(rng, 2, 6);
    auto table = random_tensor({K, D}, rng);
    std::vector<int> ids(static_cast<size_t>(N));
    for (auto& id : ids) id = static_cast<int>(rng.below(static_cast<uint64_t>(K)));
    return check_gradients("", {table}, [&] { return weighted_sum(tc::embedding_lookup(table, ids)); });
  });
  run("mean_pool_axis", [&](ttk::Rng& rng) {
    auto x = random_tensor({dims(rng, 2, 3), dims(rng, 2, 4), dims(rng, 2, 3)}, rng);
    int axis = static_cast<int>(rng.below(3));
    return check_gradients("", {x}, [&] { return weighted_sum(tc::mean_pool(x, axis)); });
  });
  run("mean_pool_masked", [&](ttk::Rng& rng) {
    int B = dims(rng, 2, 3), L = dims(rng, 3, 5), D = dims(rng, 2, 3);
    auto x = random_tensor({B, L, D}, rng);
    std::vector<uint8_t> mask(static_cast<size_t>(B) * L);
    for (int b = 0; b < B; ++b) {
      int real = 1 + static_cast<int>(rng.below(static_cast<uint64_t>(L)));
      for (int l = 0; l < L; ++l) mask[static_cast<size_t>(b) * L + l] = l < real ? 1 : 0;
    }
    return check_gradients("", {x}, [&] { return weighted_sum(tc::mean_pool(x, 1, mask)); });
  });
  run("sum_mean_all", [&](ttk::Rng& rng) {
    auto x = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    return check_gradients("", {x}, [&] { return tc::add(tc::sum_all(x), tc::mean_all(x)); });
  });
  run("attention", [&](ttk::Rng& rng) {
    int B = dims(rng, 1, 2), L = dims(rng, 2, 4), H = 2, D = 2 * dims(rng, 2, 3);
    auto q = random_tensor({B, L, D}, rng);
    auto k = random_tensor({B, L, D}, rng);
    auto v = random_tensor({B, L, D}, rng);
    return check_gradients("", {q, k, v},
                           [&] { return weighted_sum(tc::scaled_dot_product_attention(q, k, v, H)); });
  });
  run("attention_masked", [&](ttk::Rng& rng) {
    int B = 2, L = 4, H = 2, D = 4;
    auto q = random_tensor({B, L, D}, rng);
    auto k = random_tensor({B, L, D}, rng);
    auto v = random_tensor({B, L, D}, rng);
    std::vector<uint8_t> mask = {1, 1, 1, 0, 1, 1, 0, 0};
    return check_gradients("", {q, k, v},
                           [&] { return weighted_sum(tc::scaled_dot_product_attention(q, k, v, H, mask)); });
  });
  run("mse", [&](ttk::Rng& rng) {
    auto p = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto t = random_tensor(p.shape(), rng);
    return check_gradients("", {p, t}, [&] { return tc::mse_loss(p, t); });
  });
  run("cross_entropy", [&](ttk::Rng& rng) {
    int B = dims(rng, 2, 5), C = dims(rng, 2, 5);
    auto logits = random_tensor({B, C}, rng, -2.0, 2.0);
    std::vector<int> labels(static_cast<size_t>(B));
    for (auto& l : labels) l = static_cast<int>(rng.below(static_cast<uint64_t>(C)));
    return check_gradients("", {logits}, [&] { return tc::cross_entropy(logits, labels); });
  });
  run("cross_entropy_ignore", [&](ttk::Rng& rng) {
    int B = 5, C = 5;
    auto logits = random_tensor({B, C}, rng, -2.0, 2.0);
    std::vector<int> labels = {4, 1, 4, 2, 0};  // class 4 ignored
    return check_gradients("", {logits}, [&] { return tc::cross_entropy(logits, labels, 4); });
  });
  run("cross_entropy_weighted", [&](ttk::Rng& rng) {
    int B = 4, C = 3;
    auto logits = random_tensor({B, C}, rng, -2.0, 2.0);
    std::vector<int> labels = {0, 1, 2, 1};
    std::vector<double> weights = {0.5, 2.0, 1.0};
    return check_gradients("", {logits}, [&] { return tc::cross_entropy(logits, labels, -1, weights); });
  });
  run("straight_through", [&](ttk::Rng& rng) {
    // The estimator's forward ignores pre_quant, so FD runs on the surrogate
    // pre + const(q - pre0): same forward values, and its Jacobian is the
    // identity the estimator claims. The estimator's analytic gradient must
    // match the surrogate's.
    auto pre = random_tensor({dims(rng, 2, 4), dims(rng, 2, 4)}, rng);
    auto q = random_tensor(pre.shape(), rng);
    std::vector<double> delta(q.values());
    for (size_t i = 0; i < delta.size(); ++i) delta[i] -= pre.values()[i];
    auto offset = DTensor::from_data(pre.shape(), delta);
    auto result = check_gradients("", {pre}, [&] { return weighted_sum(tc::add(pre, offset)); });

    auto st_in = DTensor::from_data(pre.shape(), pre.values(), true);
    auto st_loss = weighted_sum(tc::straight_through(q, st_in));
    tc::backward(st_loss);
    auto surrogate = DTensor::from_data(pre.shape(), pre.values(), true);
    auto sur_loss = weighted_sum(tc::add(surrogate, offset));
    tc::backward(sur_loss);
    if (std::abs(st_loss.item() - sur_loss.item()) > 1e-9) result.ok = false;
    for (size_t i = 0; i < st_in.grad().size(); ++i) {
      double err = std::abs(st_in.grad()[i] - surrogate.grad()[i]);
      result.max_err = std::max(result.max_err, err);
      if (err > 1e-12) result.ok = false;
    }
    return result;
  });
  run("linear_layer", [&](ttk::Rng& rng) {
    int in = dims(rng, 2, 4), out_d = dims(rng, 2, 4), B = dims(rng, 2, 3);
    ttk::nn::Linear<double> lin(in, out_d, rng);
    auto x = random_tensor({B, in}, rng);
    return check_gradients("", {x, lin.w, lin.b}, [&] { return weighted_sum(lin.forward(x)); });
  });
  run("transformer_layer", [&](ttk::Rng& rng) {
    int D = 4, B = 2, L = 3;
    ttk::nn::TransformerEncoderLayer<double> layer(D, 2, 6, rng);
    auto x = random_tensor({B, L, D}, rng);
    std::vector<uint8_t> mask = {1, 1, 0, 1, 1, 1};
    std::vector<fd::DTensor> leaves = {x, layer.wq.w, layer.wv.b, layer.ff1.w, layer.ln1.gamma, layer.ln2.beta};
    return check_gradients("", leaves, [&] { return weighted_sum(layer.forward(x, mask)); });
  });

  return results;
}

}  // namespace fd
