#include <functional>

#include "doctest.h"
#include "jeit/decode.hpp"
#include "jeit/errors.hpp"
#include "support.hpp"

using namespace jeit;
using testing::random_tensor;
using testing::toy_config;

namespace {

using History = std::span<const TokenId>;

// Posteriors from plain functions of (t, history).
class ScriptedScorer final : public DecodeScorer {
 public:
  std::size_t T = 1;
  std::size_t V = 4;
  std::function<std::size_t(std::size_t, History)> emit = [](std::size_t, History) {
    return std::size_t{0};
  };
  std::function<double(std::size_t, History)> cap_prob = [](std::size_t, History) {
    return 0.9;
  };
  std::function<std::size_t(std::size_t, History)> pause_choice = [](std::size_t, History) {
    return std::size_t{0};
  };

  std::size_t frames() const override { return T; }
  std::vector<double> asr(std::size_t t, History h) override {
    std::vector<double> p(V + 1, 0.1 / static_cast<double>(V));
    p[emit(t, h)] = 0.9;
    return p;
  }
  double cap(std::size_t t, History h) override { return cap_prob(t, h); }
  std::vector<double> pause(std::size_t t, History h) override {
    std::vector<double> p(4, 0.1);
    p[pause_choice(t, h)] = 0.7;
    return p;
  }
};

}  // namespace

TEST_CASE("options validation") {
  DecodeOptions o;
  CHECK(o.cap_threshold == 0.5);
  o.validate();
  o.cap_threshold = 0.0;
  o.validate();
  o.cap_threshold = 1.0;
  o.validate();
  o.cap_threshold = 1.5;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o.cap_threshold = -0.1;
  CHECK_THROWS_AS(o.validate(), ConfigError);
  o = {};
  o.max_emissions = 0;
  CHECK_THROWS_AS(o.validate(), ConfigError);
}

TEST_CASE("blank-saturated scorer gives nothing") {
  ScriptedScorer s;
  s.T = 6;
  const DecodeResult r = greedy_decode(s);
  CHECK(r.tokens.empty());
  CHECK(r.events.empty());
}

TEST_CASE("scripted emission at frame zero") {
  ScriptedScorer s;
  s.T = 3;
  s.emit = [](std::size_t t, History h) { return t == 0 && h.empty() ? std::size_t{3} : 0; };
  const DecodeResult r = greedy_decode(s);
  CHECK(r.tokens == std::vector<TokenId>{3});
  CHECK(r.cap == std::vector<bool>{true});
  CHECK(r.frames == std::vector<std::size_t>{0});
  CHECK(r.pause == std::vector<PauseTag>{PauseTag::kNonPause});
}

TEST_CASE("cap threshold is strict") {
  ScriptedScorer s;
  s.T = 2;
  s.emit = [](std::size_t t, History h) { return h.size() == t ? std::size_t{1} : 0; };
  s.cap_prob = [](std::size_t, History) { return 0.5; };
  CHECK(greedy_decode(s).cap == std::vector<bool>{false, false});

  s.cap_prob = [](std::size_t t, History) { return t == 0 ? 0.3 : 0.999; };
  DecodeOptions o;
  o.cap_threshold = 1.0;
  CHECK(greedy_decode(s, o).cap == std::vector<bool>{false, false});
  o.cap_threshold = 0.0;
  CHECK(greedy_decode(s, o).cap == std::vector<bool>{true, true});
  o.cap_threshold = 0.5;
  const DecodeResult r = greedy_decode(s, o);
  CHECK(r.cap == std::vector<bool>{false, true});
  CHECK(r.cap_tags() == std::vector<CapTag>{CapTag::kNonCap, CapTag::kCap});
}

TEST_CASE("emissions per frame are capped") {
  ScriptedScorer s;
  s.T = 2;
  s.emit = [](std::size_t, History) { return std::size_t{2}; };
  DecodeOptions o;
  o.max_emissions = 3;
  const DecodeResult r = greedy_decode(s, o);
  CHECK(r.tokens.size() == 6);
  CHECK(r.frames == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("pause events") {
  ScriptedScorer s;
  s.T = 5;
  // Tokens 1 and 2 at frames 0 and 2.
  s.emit = [](std::size_t t, History h) {
    if (t == 0 && h.empty()) return std::size_t{1};
    if (t == 2 && h.size() == 1) return std::size_t{2};
    return std::size_t{0};
  };
  // Pause after the first token at frame 1, eos after the second at frame 3.
  s.pause_choice = [](std::size_t t, History h) {
    if (h.empty() && t == 1) return std::size_t{2};
    if (h.size() == 1 && t == 3) return std::size_t{3};
    return std::size_t{0};
  };
  const DecodeResult r = greedy_decode(s);
  CHECK(r.tokens == std::vector<TokenId>{1, 2});
  CHECK(r.pause == std::vector<PauseTag>{PauseTag::kPause, PauseTag::kEos});
  REQUIRE(r.events.size() == 2);
  CHECK(r.events[0] == PauseEvent{1, PauseKind::kPause, 0});
  CHECK(r.events[1] == PauseEvent{3, PauseKind::kEos, 1});

  SUBCASE("no pause decision before the token exists") {
    ScriptedScorer q = s;
    q.pause_choice = [](std::size_t, History) { return std::size_t{3}; };
    const DecodeResult d = greedy_decode(q);
    for (const PauseEvent& e : d.events) CHECK(e.frame >= d.frames[e.token]);
  }
  SUBCASE("non-pause decisions advance without events") {
    ScriptedScorer q = s;
    q.pause_choice = [](std::size_t, History) { return std::size_t{1}; };
    const DecodeResult d = greedy_decode(q);
    CHECK(d.events.empty());
    CHECK(d.pause == std::vector<PauseTag>{PauseTag::kNonPause, PauseTag::kNonPause});
  }
}

TEST_CASE("model scorer agrees with the plain forward pass") {
  const ModelConfig c = toy_config();
  const ModelParams p = ModelParams::init(c, 3, 2.0);
  const Tensor x = random_tensor({4, c.feature_dim}, 5);
  ModelScorer s(p, x);
  CHECK(s.frames() == 4);
  const Tensor f = encode(p, x);
  const std::vector<TokenId> hist = {2, 4, 1};
  for (std::size_t t = 0; t < 4; ++t) {
    Tensor ft({c.encoder_dim});
    for (std::size_t j = 0; j < c.encoder_dim; ++j) ft[j] = f.at(t, j);
    for (std::size_t u = 0; u <= hist.size(); ++u) {
      const History h(hist.data(), u);
      const Tensor g = predict(p, h);
      const PosteriorSlice ps = posterior(joint(p, ft, g, Head::kAsr), joint(p, ft, g, Head::kCap),
                                          joint(p, ft, g, Head::kPause));
      const auto a = s.asr(t, h);
      const auto q = s.pause(t, h);
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(ps.asr[i]).epsilon(1e-12));
      for (std::size_t i = 0; i < q.size(); ++i) CHECK(q[i] == doctest::Approx(ps.pause[i]).epsilon(1e-12));
      CHECK(s.cap(t, h) == doctest::Approx(ps.cap[1] / (ps.cap[1] + ps.cap[2])).epsilon(1e-12));
    }
  }
}

TEST_CASE("decoding is streaming-consistent") {
  const ModelConfig c = toy_config();
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ModelParams p = ModelParams::init(c, seed, 3.0);
    const Tensor x = random_tensor({8, c.feature_dim}, seed + 100);
    ModelScorer full_scorer(p, x);
    const DecodeResult full = greedy_decode(full_scorer);
    for (std::size_t T = 1; T < 8; ++T) {
      Tensor head({T, c.feature_dim});
      std::copy_n(x.data().begin(), T * c.feature_dim, head.data().begin());
      ModelScorer sc(p, head);
      const DecodeResult part = greedy_decode(sc);
      std::vector<TokenId> prefix;
      for (std::size_t i = 0; i < full.tokens.size(); ++i) {
        if (full.frames[i] < T) prefix.push_back(full.tokens[i]);
      }
      CHECK(part.tokens == prefix);
      for (std::size_t i = 1; i < full.events.size(); ++i) {
        CHECK(full.events[i - 1].frame <= full.events[i].frame);
      }
      CHECK(full.cap.size() == full.tokens.size());
    }
  }
}

TEST_CASE("decode with a vocabulary") {
  const ModelConfig c = toy_config(3);
  const ModelParams p = ModelParams::init(c, 1);
  const Vocab v = Vocab::from_pieces({"_ab", "c", "_d"});
  const Tensor x = random_tensor({5, c.feature_dim}, 2);
  const DecodeResult r = greedy_decode(x, p, v);
  CHECK(r.cased_text == render(r.tokens, r.cap_tags(), v));
  const nlohmann::json j = decode_record("u1", r);
  CHECK(j.at("id") == "u1");
  CHECK(j.at("hypothesis") == r.cased_text);
  CHECK(j.at("events").size() == r.events.size());
  CHECK_THROWS_AS(greedy_decode(x, p, Vocab::from_pieces({"_a", "b"})), DimensionError);
}
