#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "jeit/loss.hpp"
#include "jeit/numerics.hpp"

namespace jeit {

// Sums path probabilities over every monotone alignment that ends in a
// blank at the last frame. Exponential; meant for T, U <= 4.
double brute_force_nll(const PosteriorProvider& posterior, std::span<const int> labels,
                       std::size_t frames);

using TransducerNll =
    std::function<double(const PosteriorProvider&, std::span<const int>, std::size_t)>;

struct OracleReport {
  std::size_t trials = 0;
  double max_error = 0.0;
  bool passed = false;
};

// Random instances with T <= 4, U <= 3 and up to 3 symbols, comparing `dp`
// against brute_force_nll.
OracleReport oracle_check(std::size_t trials, std::uint64_t seed, double tolerance = 1e-9,
                          const TransducerNll& dp = rnnt_nll);

struct GradReport {
  GradCheckResult result;
  bool passed = false;
};

// Full JEIT objective on a toy model (16 pieces, T = 3, U = 2) against
// central differences.
GradReport jeit_grad_check(std::uint64_t seed, double eps = 1e-5, double tolerance = 1e-4,
                           std::size_t coordinates = 256);

}  // namespace jeit
