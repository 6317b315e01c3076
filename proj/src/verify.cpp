#include "jeit/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "jeit/errors.hpp"
#include "jeit/example.hpp"
#include "jeit/model.hpp"

namespace jeit {

double brute_force_nll(const PosteriorProvider& posterior, std::span<const int> labels,
                       std::size_t frames) {
  const std::size_t U = labels.size();
  if (frames < 1) throw ContractError("brute_force_nll needs at least one frame");
  // moves[i] is true for an emission. The final move is the terminal blank,
  // so enumerate the first frames-1+U moves.
  const std::size_t n = frames - 1 + U;
  double total = 0.0;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    if (static_cast<std::size_t>(std::popcount(mask)) != U) continue;
    double p = 1.0;
    std::size_t t = 0, u = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const auto post = posterior(t, u);
      if (mask >> i & 1) {
        p *= post[static_cast<std::size_t>(labels[u])];
        ++u;
      } else {
        p *= post[0];
        ++t;
      }
    }
    p *= posterior(t, u)[0];
    total += p;
  }
  return -std::log(total);
}

OracleReport oracle_check(std::size_t trials, std::uint64_t seed, double tolerance,
                          const TransducerNll& dp) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_T(1, 4), pick_U(0, 3), pick_V(1, 3);
  std::normal_distribution<double> logit(0.0, 1.5);
  OracleReport report;
  for (std::size_t trial = 0; trial < trials; ++trial) {
    const std::size_t T = pick_T(rng), U = pick_U(rng), V = pick_V(rng);
    std::vector<int> labels(U);
    for (int& y : labels) y = static_cast<int>(1 + rng() % V);
    std::vector<std::vector<double>> table(T * (U + 1));
    for (auto& p : table) {
      p.resize(V + 1);
      double z = 0.0;
      for (double& v : p) z += (v = std::exp(logit(rng)));
      for (double& v : p) v /= z;
    }
    const PosteriorProvider provider = [&](std::size_t t, std::size_t u) {
      return table.at(t * (U + 1) + u);
    };
    const double expected = brute_force_nll(provider, labels, T);
    const double got = dp(provider, labels, T);
    const double err = std::isfinite(got) ? std::abs(got - expected)
                                          : std::numeric_limits<double>::infinity();
    report.max_error = std::max(report.max_error, err);
    ++report.trials;
  }
  report.passed = report.max_error < tolerance;
  return report;
}

GradReport jeit_grad_check(std::uint64_t seed, double eps, double tolerance,
                           std::size_t coordinates) {
  ModelConfig mc;
  mc.vocab_size = 16;
  mc.feature_dim = 4;
  mc.encoder_width = 6;
  mc.encoder_dim = 5;
  mc.embed_dim = 4;
  mc.pred_dim = 5;
  mc.joint_dim = 6;
  const ModelParams params = ModelParams::init(mc, seed, 1.0);

  std::mt19937_64 rng(seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto token = [&] { return static_cast<TokenId>(1 + rng() % mc.vocab_size); };

  PairedExample ex;
  ex.id = "toy";
  std::vector<double> feats(3 * mc.feature_dim);
  for (double& v : feats) v = normal(rng);
  ex.features = Tensor({3, mc.feature_dim}, feats);
  ex.bundle.asr = {token(), token()};
  ex.bundle.cap = {CapTag::kCap, CapTag::kNonCap};
  ex.bundle.pause = {PauseTag::kPause, PauseTag::kEos};

  std::vector<LabelBundle> text(2);
  text[0].asr = {token(), token(), token()};
  text[0].cap = {CapTag::kNonCap, CapTag::kCap, CapTag::kNonCap};
  text[0].pause = {PauseTag::kNonPause, PauseTag::kNonPause, PauseTag::kEos};
  text[1].asr = {token(), token()};
  text[1].cap = {CapTag::kCap, CapTag::kCap};
  text[1].pause = {PauseTag::kNonPause, PauseTag::kEos};

  const JeitWeights weights;
  const TapeFunction f = [&](Tape& tape, std::span<const Var> vars) {
    ParamVars pv(params, std::vector<Var>(vars.begin(), vars.end()));
    const PairedExample* batch[] = {&ex};
    const LabelBundle* bundles[] = {&text[0], &text[1]};
    const TaskLosses e2e = e2e_losses(tape, pv, mc, batch);
    const TaskLosses ilm = ilm_losses(tape, pv, mc, bundles);
    return jeit_total(tape, e2e, ilm, weights);
  };
  GradReport r;
  r.result = grad_check(f, params.tensors(), eps, seed, coordinates);
  r.passed = r.result.max_rel_error < tolerance;
  return r;
}

}  // namespace jeit
