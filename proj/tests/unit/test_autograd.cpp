#include "doctest.h"
#include "fd_check.hpp"

// Spot finite-difference run; the acceptance suite runs the full width.
TEST_CASE("gradient suite (finite differences, 64-bit)") {
  auto results = fd::run_gradient_suite(2, 99);
  for (const auto& r : results) {
    INFO(r.name, " max_err=", r.max_err);
    CHECK(r.ok);
  }
}
