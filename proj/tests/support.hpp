#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "jeit/model.hpp"
#include "jeit/tensor.hpp"

namespace testing {

inline jeit::Tensor random_tensor(jeit::Tensor::Shape shape, std::uint64_t seed, double sd = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, sd);
  jeit::Tensor t(std::move(shape));
  for (double& v : t.data()) v = n(rng);
  return t;
}

// Small dims that keep finite-difference checks fast.
inline jeit::ModelConfig toy_config(std::size_t vocab = 6) {
  jeit::ModelConfig c;
  c.vocab_size = vocab;
  c.feature_dim = 3;
  c.encoder_width = 5;
  c.encoder_dim = 4;
  c.embed_dim = 3;
  c.pred_dim = 4;
  c.joint_dim = 5;
  return c;
}

inline double sum(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s;
}

}  // namespace testing
