#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "jeit/errors.hpp"
#include "jeit/model.hpp"
#include "support.hpp"

using namespace jeit;
using testing::random_tensor;
using testing::toy_config;
namespace fs = std::filesystem;

namespace {

Tensor random_logits(std::size_t n, std::mt19937_64& rng, double sd = 3.0) {
  std::normal_distribution<double> d(0.0, sd);
  Tensor t({n});
  for (double& v : t.data()) v = d(rng);
  return t;
}

}  // namespace

TEST_CASE("config validation") {
  ModelConfig c = toy_config();
  c.validate();
  c.vocab_size = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = toy_config();
  c.joint_dim = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(toy_config(6).head_outputs(Head::kAsr) == 7);
  CHECK(toy_config(6).head_outputs(Head::kCap) == 2);
  CHECK(toy_config(6).head_outputs(Head::kPause) == 4);
}

TEST_CASE("heads have disjoint joint parameters") {
  const auto names = parameter_names();
  for (Head h : kHeads) {
    for (Head o : kHeads) {
      if (h == o) continue;
      CHECK(head_param(h, "P") != head_param(o, "P"));
    }
  }
  const ModelParams p = ModelParams::init(toy_config(), 3);
  CHECK(p.tensors().size() == names.size());
  CHECK(p.get(head_param(Head::kCap, "A")).rows() == 2);
  CHECK(p.get(head_param(Head::kPause, "A")).rows() == 4);
  CHECK(p.get(head_param(Head::kAsr, "A")).rows() == 7);
}

TEST_CASE("encode") {
  const ModelConfig c = toy_config();
  const ModelParams p = ModelParams::init(c, 1);
  SUBCASE("one frame") {
    const Tensor f = encode(p, random_tensor({1, c.feature_dim}, 2));
    CHECK(f.shape() == Tensor::Shape{1, c.encoder_dim});
  }
  SUBCASE("causal") {
    Tensor x = random_tensor({6, c.feature_dim}, 3);
    const Tensor before = encode(p, x);
    for (std::size_t j = 0; j < c.feature_dim; ++j) x.at(4, j) += 1.5;
    const Tensor after = encode(p, x);
    for (std::size_t t = 0; t < 4; ++t) {
      for (std::size_t j = 0; j < c.encoder_dim; ++j) CHECK(before.at(t, j) == after.at(t, j));
    }
    bool changed = false;
    for (std::size_t j = 0; j < c.encoder_dim; ++j) changed |= before.at(4, j) != after.at(4, j);
    CHECK(changed);
  }
  SUBCASE("zeros through a zero encoder") {
    const Tensor f = encode(ModelParams::zeros(c), Tensor({3, c.feature_dim}));
    CHECK(f == Tensor({3, c.encoder_dim}));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(encode(p, Tensor({0, c.feature_dim})), ContractError);
    CHECK_THROWS_AS(encode(p, Tensor({2, c.feature_dim + 1})), DimensionError);
  }
  SUBCASE("tape path agrees") {
    const Tensor x = random_tensor({5, c.feature_dim}, 4);
    Tape tape;
    ParamVars pv(tape, p, false);
    const Tensor& taped = tape.value(encode(tape, pv, c, x));
    const Tensor plain = encode(p, x);
    for (std::size_t i = 0; i < plain.size(); ++i) CHECK(taped[i] == doctest::Approx(plain[i]));
  }
}

TEST_CASE("predict") {
  const ModelConfig c = toy_config();
  const ModelParams p = ModelParams::init(c, 0);
  SUBCASE("empty history is the sentinel output") {
    const Tensor g = predict(p, {});
    const Tensor E1 = p.get("pred.E1"), E2 = p.get("pred.E2");
    Tensor e({2 * c.embed_dim});
    for (std::size_t j = 0; j < c.embed_dim; ++j) {
      e[j] = E1.at(kSentinelId, j);
      e[c.embed_dim + j] = E2.at(kSentinelId, j);
    }
    CHECK(g == affine(e, p.get("pred.W"), p.get("pred.b")));
  }
  SUBCASE("only the last two tokens matter") {
    const std::vector<TokenId> a = {1, 4, 2, 5}, b = {3, 3, 2, 5};
    CHECK(predict(p, a) == predict(p, b));
  }
  SUBCASE("order matters") {
    const std::vector<TokenId> a = {3, 6}, b = {6, 3};
    CHECK_FALSE(predict(p, a) == predict(p, b));
  }
  SUBCASE("out-of-range ids") {
    CHECK_THROWS_AS(predict(p, std::vector<TokenId>{7}), ContractError);
    CHECK_THROWS_AS(predict(p, std::vector<TokenId>{0}), ContractError);
  }
  SUBCASE("tape rows match plain prediction of each prefix") {
    const std::vector<TokenId> y = {2, 5, 1, 6};
    Tape tape;
    ParamVars pv(tape, p, false);
    const Tensor& G = tape.value(predict_all(tape, pv, c, y));
    REQUIRE(G.rows() == y.size() + 1);
    for (std::size_t u = 0; u <= y.size(); ++u) {
      const Tensor g = predict(p, std::span<const TokenId>(y.data(), u));
      for (std::size_t j = 0; j < c.pred_dim; ++j) {
        CHECK(G.at(u, j) == doctest::Approx(g[j]).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("joint") {
  SUBCASE("all-zero params give zero logits") {
    const ModelConfig c = toy_config();
    const ModelParams z = ModelParams::zeros(c);
    for (Head h : kHeads) {
      const Tensor s = joint(z, random_tensor({c.encoder_dim}, 1), random_tensor({c.pred_dim}, 2), h);
      CHECK(s == Tensor({c.head_outputs(h)}));
    }
    CHECK_THROWS_AS(joint(z, Tensor({c.encoder_dim}), Tensor({c.pred_dim}), 3), ContractError);
  }
  SUBCASE("hand-sized 2x2 instance") {
    ModelConfig c = toy_config();
    c.encoder_dim = 2;
    c.pred_dim = 2;
    c.joint_dim = 2;
    ModelParams p = ModelParams::zeros(c);
    p.get(head_param(Head::kCap, "P")) = Tensor::matrix(2, 2, {1, 2, 3, 4});
    p.get(head_param(Head::kCap, "Q")) = Tensor::matrix(2, 2, {0.5, 0, 0, -1});
    p.get(head_param(Head::kCap, "bh")) = Tensor::vector({0, 0.5});
    p.get(head_param(Head::kCap, "A")) = Tensor::matrix(2, 2, {1, -1, 2, 0});
    p.get(head_param(Head::kCap, "bs")) = Tensor::vector({0.1, 0});
    // h = [1, 3] + [0, -1] + [0, 0.5] = [1, 2.5]
    const Tensor s = joint(p, Tensor::vector({1, 0}), Tensor::vector({0, 1}), Head::kCap);
    CHECK(s[0] == doctest::Approx(std::tanh(1.0) - std::tanh(2.5) + 0.1).epsilon(1e-15));
    CHECK(s[1] == doctest::Approx(2 * std::tanh(1.0)).epsilon(1e-15));
  }
  SUBCASE("zero encoder output leaves only the prediction path") {
    const ModelConfig c = toy_config();
    const ModelParams p = ModelParams::init(c, 5);
    ModelParams q = p;
    q.get(head_param(Head::kAsr, "P")) = random_tensor({c.joint_dim, c.encoder_dim}, 99);
    const Tensor g = predict(p, std::vector<TokenId>{2});
    const Tensor f({c.encoder_dim});
    CHECK(joint(p, f, g, Head::kAsr) == joint(q, f, g, Head::kAsr));
  }
}

TEST_CASE("posterior examples") {
  SUBCASE("zeros with four pieces") {
    const PosteriorSlice s = posterior(Tensor({5}), Tensor({2}), Tensor({4}));
    CHECK(s.asr == std::vector<double>{0.5, 0.125, 0.125, 0.125, 0.125});
    CHECK(s.cap == std::vector<double>{0.5, 0.25, 0.25});
    CHECK(s.pause[0] == 0.5);
    for (std::size_t i = 1; i < 4; ++i) CHECK(s.pause[i] == doctest::Approx(0.5 / 3));
  }
  SUBCASE("saturated emission") {
    Tensor a({5});
    a[0] = -40.0;
    const PosteriorSlice s = posterior(a, Tensor::vector({1.0, -2.0}), Tensor({4}));
    CHECK(s.asr[0] < 1e-17);
    CHECK(s.cap[1] + s.cap[2] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(posterior(Tensor({1}), Tensor({2}), Tensor({4})), DimensionError);
    CHECK_THROWS_AS(posterior(Tensor({5}), Tensor({3}), Tensor({4})), DimensionError);
    CHECK_THROWS_AS(posterior(Tensor({5}), Tensor({2}), Tensor({3})), DimensionError);
  }
}

TEST_CASE("posteriors normalize and share the blank over random logits") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t V = 1 + rng() % 20;
    const PosteriorSlice s =
        posterior(random_logits(V + 1, rng), random_logits(2, rng), random_logits(4, rng));
    CHECK(std::abs(testing::sum(s.asr) - 1.0) <= 1e-10);
    CHECK(std::abs(testing::sum(s.cap) - 1.0) <= 1e-10);
    CHECK(std::abs(testing::sum(s.pause) - 1.0) <= 1e-10);
    CHECK(s.asr[0] == s.cap[0]);
  }
}

TEST_CASE("ilm next-token distribution") {
  const ModelConfig c = toy_config(8);
  const ModelParams z = ModelParams::zeros(c);
  const auto asr = ilm_next_token_distribution(z, std::vector<TokenId>{3}, Head::kAsr);
  REQUIRE(asr.size() == 8);
  for (double v : asr) CHECK(v == doctest::Approx(1.0 / 8));
  const auto pause = ilm_next_token_distribution(z, {}, Head::kPause);
  REQUIRE(pause.size() == 3);
  for (double v : pause) CHECK(v == doctest::Approx(1.0 / 3));
  const auto cap = ilm_next_token_distribution(z, {}, Head::kCap);
  CHECK(cap == std::vector<double>{0.5, 0.5});

  const ModelParams p = ModelParams::init(c, 7);
  ModelParams other_audio = p;
  other_audio.get("encoder.W1") = random_tensor(p.get("encoder.W1").shape(), 12);
  other_audio.get("encoder.b2") = random_tensor(p.get("encoder.b2").shape(), 13);
  for (Head h : kHeads) {
    const std::vector<TokenId> hist = {4, 1};
    const auto d = ilm_next_token_distribution(p, hist, h);
    CHECK(std::abs(testing::sum(d) - 1.0) < 1e-12);
    CHECK(d == ilm_next_token_distribution(other_audio, hist, h));
  }
}

TEST_CASE("checkpoints") {
  const fs::path path = fs::temp_directory_path() / "jeit_model_test.ckpt";
  const ModelConfig c = toy_config();
  const ModelParams p = ModelParams::init(c, 11);
  save_checkpoint(path, p);
  CHECK(load_checkpoint(path) == p);
  CHECK(load_checkpoint(path, c) == p);
  CHECK_THROWS_AS(load_checkpoint(path, toy_config(9)), LoadError);
  {
    std::ofstream out(path, std::ios::binary);
    out << "not a checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path), LoadError);
  fs::remove(path);
  CHECK_THROWS_AS(load_checkpoint(path), LoadError);
}

TEST_CASE("init is deterministic and finite") {
  const ModelParams a = ModelParams::init(toy_config(), 4);
  const ModelParams b = ModelParams::init(toy_config(), 4);
  const ModelParams d = ModelParams::init(toy_config(), 5);
  CHECK(a == b);
  CHECK_FALSE(a == d);
  CHECK(a.all_finite());
  CHECK(a.get("pred.b") == Tensor({toy_config().pred_dim}));
}
