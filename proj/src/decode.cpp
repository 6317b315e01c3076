#include "jeit/decode.hpp"

#include <algorithm>
#include <cmath>

#include "jeit/errors.hpp"
#include "jeit/numerics.hpp"

namespace jeit {
namespace {

std::size_t argmax(const std::vector<double>& p) {
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

// [blank, (1-blank)·softmax(rest)] from raw logits.
std::vector<double> hat_posterior(const std::vector<double>& s) {
  std::vector<double> out(s.size());
  const double b = sigmoid(s[0]);
  log_softmax(std::span<const double>(s).subspan(1), std::span<double>(out).subspan(1));
  out[0] = b;
  for (std::size_t j = 1; j < out.size(); ++j) out[j] = (1.0 - b) * std::exp(out[j]);
  return out;
}

}  // namespace

ModelScorer::ModelScorer(const ModelParams& params, const Tensor& features)
    : params_(params) {
  const Tensor enc = encode(params, features);
  frames_ = enc.rows();
  const std::size_t Dh = params.config().joint_dim;
  for (Head h : kHeads) {
    const auto i = static_cast<std::size_t>(h);
    enc_proj_[i].resize(frames_ * Dh);
    matmul_nt(enc.ptr(), frames_, enc.cols(), params.get(head_param(h, "P")).ptr(), Dh,
              enc_proj_[i].data(), false);
    const Tensor& bh = params.get(head_param(h, "bh"));
    for (std::size_t t = 0; t < frames_; ++t) {
      for (std::size_t k = 0; k < Dh; ++k) enc_proj_[i][t * Dh + k] += bh[k];
    }
  }
}

std::vector<double> ModelScorer::logits(Head h, std::size_t t,
                                        std::span<const TokenId> history) {
  const std::size_t keep = std::min(history.size(), kContextSize);
  std::vector<TokenId> key(history.end() - static_cast<std::ptrdiff_t>(keep), history.end());
  auto it = pred_proj_.find(key);
  if (it == pred_proj_.end()) {
    const Tensor g = predict(params_, key);
    std::array<std::vector<double>, 3> proj;
    for (Head hh : kHeads) {
      const Tensor& Q = params_.get(head_param(hh, "Q"));
      auto& v = proj[static_cast<std::size_t>(hh)];
      v.resize(Q.rows());
      matmul_nt(g.ptr(), 1, g.size(), Q.ptr(), Q.rows(), v.data(), false);
    }
    it = pred_proj_.emplace(std::move(key), std::move(proj)).first;
  }
  const auto i = static_cast<std::size_t>(h);
  const std::vector<double>& qg = it->second[i];
  const std::size_t Dh = qg.size();
  std::vector<double> z(Dh);
  for (std::size_t k = 0; k < Dh; ++k) z[k] = std::tanh(enc_proj_[i][t * Dh + k] + qg[k]);
  const Tensor& A = params_.get(head_param(h, "A"));
  const Tensor& bs = params_.get(head_param(h, "bs"));
  std::vector<double> s(A.rows());
  matmul_nt(z.data(), 1, Dh, A.ptr(), A.rows(), s.data(), false);
  for (std::size_t j = 0; j < s.size(); ++j) s[j] += bs[j];
  return s;
}

std::vector<double> ModelScorer::asr(std::size_t t, std::span<const TokenId> history) {
  return hat_posterior(logits(Head::kAsr, t, history));
}

double ModelScorer::cap(std::size_t t, std::span<const TokenId> history) {
  const std::vector<double> s = logits(Head::kCap, t, history);
  return sigmoid(s[0] - s[1]);
}

std::vector<double> ModelScorer::pause(std::size_t t, std::span<const TokenId> history) {
  return hat_posterior(logits(Head::kPause, t, history));
}

void DecodeOptions::validate() const {
  if (!(cap_threshold >= 0.0 && cap_threshold <= 1.0)) {
    throw ConfigError("decode.cap_threshold must lie in [0, 1]");
  }
  if (max_emissions < 1) throw ConfigError("decode.max_emissions must be at least 1");
}

std::vector<CapTag> DecodeResult::cap_tags() const {
  std::vector<CapTag> out;
  out.reserve(cap.size());
  for (bool c : cap) out.push_back(c ? CapTag::kCap : CapTag::kNonCap);
  return out;
}

DecodeResult greedy_decode(DecodeScorer& scorer, const DecodeOptions& options) {
  options.validate();
  DecodeResult r;
  std::size_t next_pause = 0;  // first token without a pause decision
  for (std::size_t t = 0; t < scorer.frames(); ++t) {
    for (std::size_t n = 0; n < options.max_emissions; ++n) {
      const std::vector<double> p = scorer.asr(t, r.tokens);
      const std::size_t y = argmax(p);
      if (y == 0) break;
      // The cap head reads g_u, the state the token was emitted from.
      const double pc = scorer.cap(t, r.tokens);
      r.tokens.push_back(static_cast<TokenId>(y));
      r.frames.push_back(t);
      r.cap_prob.push_back(pc);
      r.cap.push_back(pc > options.cap_threshold);
      r.pause.push_back(PauseTag::kNonPause);
    }
    // Pause labels for token k come from g_k, so only emitted tokens qualify.
    for (std::size_t n = 0; n < options.max_emissions && next_pause < r.tokens.size(); ++n) {
      const auto history = std::span<const TokenId>(r.tokens).first(next_pause);
      const std::vector<double> p = scorer.pause(t, history);
      const std::size_t j = argmax(p);
      if (j == 0) break;
      const auto tag = static_cast<PauseTag>(j);
      r.pause[next_pause] = tag;
      if (tag == PauseTag::kPause || tag == PauseTag::kEos) {
        r.events.push_back({t, tag == PauseTag::kEos ? PauseKind::kEos : PauseKind::kPause,
                            next_pause});
      }
      ++next_pause;
    }
  }
  return r;
}

DecodeResult greedy_decode(const Tensor& features, const ModelParams& params,
                           const Vocab& vocab, const DecodeOptions& options) {
  if (vocab.size() != params.config().vocab_size) {
    throw DimensionError("decode: vocabulary has " + std::to_string(vocab.size()) +
                         " pieces, model expects " +
                         std::to_string(params.config().vocab_size));
  }
  ModelScorer scorer(params, features);
  DecodeResult r = greedy_decode(scorer, options);
  r.cased_text = render(r.tokens, r.cap_tags(), vocab);
  return r;
}

nlohmann::json decode_record(const std::string& id, const DecodeResult& r) {
  nlohmann::json events = nlohmann::json::array();
  for (const PauseEvent& e : r.events) {
    events.push_back({{"frame", e.frame}, {"kind", to_string(e.kind)}, {"token", e.token}});
  }
  return {{"id", id}, {"hypothesis", r.cased_text}, {"events", events}};
}

}  // namespace jeit
