#include <cmath>
#include <limits>

#include "doctest.h"
#include "jeit/errors.hpp"
#include "jeit/train.hpp"
#include "support.hpp"

using namespace jeit;
using testing::random_tensor;
using testing::toy_config;

namespace {

const Vocab& toy_vocab() {
  static const Vocab v = Vocab::from_pieces({"_ab", "c", "_d", "_e", "_f", "_g"});
  return v;
}

struct ToyData {
  std::vector<PairedExample> paired;
  std::vector<UnpairedExample> unpaired;
};

ToyData toy_data(std::uint64_t seed = 1) {
  const std::vector<AnnotatedTranscript> texts = {
      {"Ab d", {{1, PauseKind::kEos}}},
      {"e Abc f", {{0, PauseKind::kPause}, {2, PauseKind::kEos}}},
      {"G", {{0, PauseKind::kEos}}},
      {"d e", {{1, PauseKind::kEos}}}};
  ToyData d;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    const LabelBundle b = factorize(texts[i], toy_vocab());
    d.paired.push_back({"p" + std::to_string(i), random_tensor({b.size() + 3, 3}, seed + i), b});
    d.unpaired.push_back({"u" + std::to_string(i), b});
  }
  return d;
}

template <typename T>
std::vector<const T*> pointers(const std::vector<T>& v) {
  std::vector<const T*> out;
  for (const T& x : v) out.push_back(&x);
  return out;
}

TrainConfig small_train(Regime r) {
  TrainConfig t;
  t.regime = r;
  t.steps = 20;
  t.paired_batch = 2;
  t.unpaired_batch = 2;
  t.learning_rate = 0.05;
  return t;
}

}  // namespace

TEST_CASE("train config validation and json") {
  TrainConfig t;
  t.validate();
  CHECK(parse_regime("jeit") == Regime::kJeit);
  CHECK(parse_regime("paired_only") == Regime::kPairedOnly);
  CHECK_THROWS_AS(parse_regime("both"), ConfigError);
  const nlohmann::json j = t;
  CHECK(nlohmann::json(j.get<TrainConfig>()) == j);
  nlohmann::json bad = j;
  bad["lr"] = 0.1;
  CHECK_THROWS_AS(bad.get<TrainConfig>(), ConfigError);
  t.learning_rate = 0.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.momentum = 1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.clip_norm = -1.0;
  CHECK_THROWS_AS(t.validate(), ConfigError);
  t = {};
  t.weights.beta = -0.5;
  CHECK_THROWS_AS(t.validate(), ConfigError);
}

TEST_CASE("jeit with beta zero reproduces the paired-only run bit for bit") {
  const ToyData d = toy_data();
  const ModelConfig mc = toy_config();
  TrainConfig base = small_train(Regime::kPairedOnly);
  TrainConfig jeit = small_train(Regime::kJeit);
  jeit.weights.beta = 0.0;
  std::vector<double> base_totals, jeit_totals;
  const TrainState a = run_training(mc, base, {d.paired, d.unpaired},
                                    [&](const StepResult& r, const TrainState&) {
                                      base_totals.push_back(r.tape_total);
                                    });
  const TrainState b = run_training(mc, jeit, {d.paired, d.unpaired},
                                    [&](const StepResult& r, const TrainState&) {
                                      jeit_totals.push_back(r.tape_total);
                                    });
  CHECK(a.params == b.params);
  CHECK(base_totals == jeit_totals);

  jeit.weights.beta = 0.2;
  const TrainState c = run_training(mc, jeit, {d.paired, d.unpaired});
  CHECK_FALSE(a.params == c.params);
}

TEST_CASE("training is deterministic in the seed") {
  const ToyData d = toy_data();
  const TrainConfig t = small_train(Regime::kJeit);
  const TrainState a = run_training(toy_config(), t, {d.paired, d.unpaired});
  const TrainState b = run_training(toy_config(), t, {d.paired, d.unpaired});
  CHECK(a.params == b.params);
  CHECK(a.step == 20);
  TrainConfig other = t;
  other.seed = 2;
  CHECK_FALSE(run_training(toy_config(), other, {d.paired, d.unpaired}).params == a.params);
}

TEST_CASE("a fixed batch is overfit") {
  const ToyData d = toy_data();
  const auto pb = pointers(d.paired);
  const auto ub = pointers(d.unpaired);
  TrainConfig t = small_train(Regime::kJeit);
  t.learning_rate = 0.05;
  TrainState s = TrainState::fresh(toy_config(), 4, 1.0);
  std::vector<double> totals;
  for (int i = 0; i < 150; ++i) {
    totals.push_back(train_step(s, pb, std::span<const UnpairedExample* const>(ub), t).report.total);
  }
  CHECK(totals.back() < 0.5 * totals.front());
  CHECK(totals[149] < totals[50]);
  CHECK(s.step == 150);
  CHECK(s.params.all_finite());
}

TEST_CASE("logged total is the recombination of the logged parts") {
  const ToyData d = toy_data();
  const auto pb = pointers(d.paired);
  const auto ub = pointers(d.unpaired);
  TrainConfig t = small_train(Regime::kJeit);
  t.weights = {0.7, 0.25, 0.4};
  TrainState s = TrainState::fresh(toy_config(), 2, 1.0);
  for (int i = 0; i < 5; ++i) {
    const StepResult r = train_step(s, pb, std::span<const UnpairedExample* const>(ub), t);
    const LossReport& l = r.report;
    const double recombined = l.asr_e2e + 0.7 * l.asr_ilm + 0.25 * (l.cap_e2e + 0.7 * l.cap_ilm) +
                              0.4 * (l.pause_e2e + 0.7 * l.pause_ilm);
    CHECK(std::abs(l.total - recombined) <= 1e-12);
    CHECK(std::abs(l.total - r.tape_total) <= 1e-12);
    CHECK(l.asr_jeit == doctest::Approx(l.asr_e2e + 0.7 * l.asr_ilm));
    CHECK(l.step == static_cast<std::size_t>(i));
    CHECK(r.grad_norm > 0.0);
  }
}

TEST_CASE("clip norm zero leaves the parameters untouched") {
  const ToyData d = toy_data();
  const auto pb = pointers(d.paired);
  TrainConfig t = small_train(Regime::kPairedOnly);
  t.clip_norm = 0.0;
  TrainState s = TrainState::fresh(toy_config(), 3, 1.0);
  const ModelParams before = s.params;
  const StepResult r = train_step(s, pb, std::nullopt, t);
  CHECK(s.params == before);
  CHECK(r.grad_norm > 0.0);
  CHECK(s.step == 1);
}

TEST_CASE("clipping bounds the update") {
  const ToyData d = toy_data();
  const auto pb = pointers(d.paired);
  TrainConfig t = small_train(Regime::kPairedOnly);
  t.clip_norm = 1e-3;
  t.learning_rate = 1.0;
  t.momentum = 0.0;
  TrainState s = TrainState::fresh(toy_config(), 3, 1.0);
  const ModelParams before = s.params;
  train_step(s, pb, std::nullopt, t);
  double sq = 0.0;
  for (std::size_t i = 0; i < before.tensors().size(); ++i) {
    const auto a = before.tensors()[i].second.data();
    const auto b = s.params.tensors()[i].second.data();
    for (std::size_t k = 0; k < a.size(); ++k) sq += (a[k] - b[k]) * (a[k] - b[k]);
  }
  CHECK(std::sqrt(sq) == doctest::Approx(1e-3).epsilon(1e-9));
}

TEST_CASE("regime and unpaired batch must agree") {
  const ToyData d = toy_data();
  const auto pb = pointers(d.paired);
  const auto ub = pointers(d.unpaired);
  TrainState s = TrainState::fresh(toy_config(), 1, 1.0);
  CHECK_THROWS_AS(train_step(s, pb, std::nullopt, small_train(Regime::kJeit)), ContractError);
  CHECK_THROWS_AS(train_step(s, pb, std::span<const UnpairedExample* const>(ub),
                             small_train(Regime::kPairedOnly)),
                  ContractError);
  CHECK(s.step == 0);
}

TEST_CASE("non-finite loss names the batch") {
  ToyData d = toy_data();
  d.paired[1].features.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
  const auto pb = pointers(d.paired);
  const auto ub = pointers(d.unpaired);
  TrainState s = TrainState::fresh(toy_config(), 1, 1.0);
  try {
    train_step(s, pb, std::span<const UnpairedExample* const>(ub), small_train(Regime::kJeit));
    FAIL("expected a numeric error");
  } catch (const NumericError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("p1") != std::string::npos);
    CHECK(msg.find("u3") != std::string::npos);
  }
}

TEST_CASE("ILM terms ignore the paired audio") {
  const ToyData d = toy_data();
  ToyData noisy = toy_data(99);
  const auto ub = pointers(d.unpaired);
  const TrainConfig t = small_train(Regime::kJeit);
  TrainState a = TrainState::fresh(toy_config(), 6, 1.0);
  TrainState b = a;
  const LossReport ra = train_step(a, pointers(d.paired), std::span<const UnpairedExample* const>(ub), t).report;
  const LossReport rb = train_step(b, pointers(noisy.paired), std::span<const UnpairedExample* const>(ub), t).report;
  CHECK(ra.asr_ilm == rb.asr_ilm);
  CHECK(ra.cap_ilm == rb.cap_ilm);
  CHECK(ra.pause_ilm == rb.pause_ilm);
  CHECK(ra.asr_e2e != rb.asr_e2e);
}

TEST_CASE("zero steps returns the initialization") {
  const ToyData d = toy_data();
  TrainConfig t = small_train(Regime::kJeit);
  t.steps = 0;
  int calls = 0;
  const TrainState s = run_training(toy_config(), t, {d.paired, d.unpaired},
                                    [&](const StepResult&, const TrainState&) { ++calls; });
  CHECK(calls == 0);
  CHECK(s.step == 0);
  CHECK(s.params == ModelParams::init(toy_config(), t.seed, t.init_scale));
  const EvalOutput e = evaluate(s.params, toy_vocab(), d.paired, DecodeOptions{});
  CHECK(e.records.size() == d.paired.size());
  CHECK(e.summary.utterances == d.paired.size());
  CHECK(e.records[0].at("reference") == "Ab d");
}

TEST_CASE("a trained toy model transcribes its training set") {
  const ToyData d = toy_data();
  TrainConfig t = small_train(Regime::kPairedOnly);
  t.steps = 600;
  t.paired_batch = 4;
  t.learning_rate = 0.05;
  ModelConfig mc = toy_config();
  mc.encoder_width = 12;
  mc.encoder_dim = 8;
  mc.pred_dim = 8;
  mc.joint_dim = 12;
  const TrainState s = run_training(mc, t, {d.paired, d.unpaired});
  const EvalOutput e = evaluate(s.params, toy_vocab(), d.paired, DecodeOptions{});
  CHECK(e.summary.wer() <= 0.25);
}
