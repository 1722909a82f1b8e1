#include "ttk/metrics.hpp"

#include <cmath>

#include "ttk/error.hpp"
#include "ttk/rng.hpp"

namespace ttk::metrics {

namespace {

double f1_for_class(const std::array<std::array<int64_t, 2>, 2>& cm, int cls) {
  int64_t tp = cm[cls][cls];
  int64_t predicted = cm[0][cls] + cm[1][cls];
  int64_t actual = cm[cls][0] + cm[cls][1];
  double precision = predicted > 0 ? static_cast<double>(tp) / static_cast<double>(predicted) : 0.0;
  double recall = actual > 0 ? static_cast<double>(tp) / static_cast<double>(actual) : 0.0;
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size()) throw ValidationError("metrics: prediction/label length mismatch");
  Metrics m;
  for (size_t i = 0; i < labels.size(); ++i) {
    int a = labels[i], p = predictions[i];
    if (a < 0 || a > 1 || p < 0 || p > 1) throw ValidationError("metrics: labels must be 0 or 1");
    ++m.confusion[static_cast<size_t>(a)][static_cast<size_t>(p)];
  }
  int64_t n = m.total();
  int64_t correct = m.confusion[0][0] + m.confusion[1][1];
  m.accuracy = n > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(n) : 0.0;
  m.f1_hold = 100.0 * f1_for_class(m.confusion, 0);
  m.f1_yield = 100.0 * f1_for_class(m.confusion, 1);
  m.macro_f1 = 0.5 * (m.f1_hold + m.f1_yield);
  return m;
}

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels) {
  return compute_metrics(predictions, labels).macro_f1;
}

double significance(const std::vector<int>& preds_a, const std::vector<int>& preds_b, const std::vector<int>& labels,
                    int iterations, uint64_t seed) {
  if (preds_a.size() != preds_b.size() || preds_a.size() != labels.size())
    throw ValidationError("significance: input length mismatch");
  if (iterations < 1) throw ValidationError("significance: iterations must be >= 1");
  double observed = std::abs(macro_f1(preds_a, labels) - macro_f1(preds_b, labels));
  Rng rng(seed);
  std::vector<int> pa = preds_a, pb = preds_b;
  int64_t hits = 0;
  for (int it = 0; it < iterations; ++it) {
    for (size_t i = 0; i < pa.size(); ++i) {
      bool swap = (rng.next_u64() & 1) != 0;
      pa[i] = swap ? preds_b[i] : preds_a[i];
      pb[i] = swap ? preds_a[i] : preds_b[i];
    }
    double permuted = std::abs(macro_f1(pa, labels) - macro_f1(pb, labels));
    if (permuted >= observed) ++hits;
  }
  return static_cast<double>(hits + 1) / static_cast<double>(iterations + 1);
}

}  // namespace ttk::metrics
