#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace ttk::metrics {

// Binary labels: 0 = hold, 1 = yield. All scores in percent.
struct Metrics {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  double f1_hold = 0.0;
  double f1_yield = 0.0;
  std::array<std::array<int64_t, 2>, 2> confusion = {{{0, 0}, {0, 0}}};  // [actual][predicted]

  int64_t total() const { return confusion[0][0] + confusion[0][1] + confusion[1][0] + confusion[1][1]; }
};

Metrics compute_metrics(const std::vector<int>& predictions, const std::vector<int>& labels);

double macro_f1(const std::vector<int>& predictions, const std::vector<int>& labels);

// Approximate randomization over per-example prediction swaps; the statistic
// is the macro-F1 difference. p = (count(|d_perm| >= |d_obs|) + 1) / (iters + 1).
double significance(const std::vector<int>& preds_a, const std::vector<int>& preds_b, const std::vector<int>& labels,
                    int iterations = 10000, uint64_t seed = 0);

}  // namespace ttk::metrics
