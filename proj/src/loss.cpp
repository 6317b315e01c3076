#include "jeit/loss.hpp"

#include <cmath>
#include <limits>

#include "jeit/errors.hpp"
#include "jeit/json_util.hpp"
#include "jeit/numerics.hpp"

namespace jeit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Joint activations and logits of one head over a set of (t,u) cells.
struct HeadPass {
  std::size_t outputs = 0;
  std::vector<double> Z;  // cells × D_h, tanh(h)
  std::vector<double> S;  // cells × outputs
};

// Z[t*G+u] = tanh(P·enc[t] + b_h + Q·pred[u]), S = Z·Aᵀ + b_s.
HeadPass joint_grid(const Tensor& enc, const Tensor& pred, const Tensor& P, const Tensor& Q,
                    const Tensor& bh, const Tensor& A, const Tensor& bs) {
  const std::size_t T = enc.rows();
  const std::size_t G = pred.rows();
  const std::size_t Dh = P.rows();
  HeadPass out;
  out.outputs = A.rows();

  std::vector<double> PF(T * Dh), QG(G * Dh);
  matmul_nt(enc.ptr(), T, enc.cols(), P.ptr(), Dh, PF.data(), false);
  matmul_nt(pred.ptr(), G, pred.cols(), Q.ptr(), Dh, QG.data(), false);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < Dh; ++k) PF[t * Dh + k] += bh[k];
  }
  out.Z.resize(T * G * Dh);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < G; ++u) {
      double* z = &out.Z[(t * G + u) * Dh];
      const double* pf = &PF[t * Dh];
      const double* qg = &QG[u * Dh];
      for (std::size_t k = 0; k < Dh; ++k) z[k] = std::tanh(pf[k] + qg[k]);
    }
  }
  const std::size_t N = T * G;
  out.S.resize(N * out.outputs);
  matmul_nt(out.Z.data(), N, Dh, A.ptr(), out.outputs, out.S.data(), false);
  for (std::size_t n = 0; n < N; ++n) {
    double* s = &out.S[n * out.outputs];
    for (std::size_t j = 0; j < out.outputs; ++j) s[j] += bs[j];
  }
  return out;
}

// Chains dS (cells × outputs) back through one head. Input slots follow the
// layout [P, Q, bh, A, bs] starting at `first`.
void joint_grid_backward(Tape::Context& c, std::size_t first, const HeadPass& pass,
                         const std::vector<double>& dS, std::size_t enc_slot,
                         std::size_t pred_slot, bool enc_is_zero) {
  const Tensor& P = c.input(first + 0);
  const Tensor& Q = c.input(first + 1);
  const Tensor& A = c.input(first + 3);
  const std::size_t Dh = A.cols();
  const std::size_t O = pass.outputs;
  const std::size_t N = pass.Z.size() / Dh;

  if (Tensor* gA = c.grad(first + 3)) {
    matmul_tn(dS.data(), N, O, pass.Z.data(), Dh, gA->ptr(), true);
  }
  if (Tensor* gbs = c.grad(first + 4)) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t j = 0; j < O; ++j) (*gbs)[j] += dS[n * O + j];
    }
  }
  std::vector<double> dH(N * Dh);
  matmul_nn(dS.data(), N, O, A.ptr(), Dh, dH.data(), false);
  for (std::size_t i = 0; i < dH.size(); ++i) dH[i] *= 1.0 - pass.Z[i] * pass.Z[i];

  if (Tensor* gbh = c.grad(first + 2)) {
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < Dh; ++k) (*gbh)[k] += dH[n * Dh + k];
    }
  }

  const Tensor& pred = c.input(pred_slot);
  const std::size_t G = pred.rows();
  if (enc_is_zero) {
    // One cell per prediction row.
    if (Tensor* gQ = c.grad(first + 1)) {
      matmul_tn(dH.data(), G, Dh, pred.ptr(), pred.cols(), gQ->ptr(), true);
    }
    if (Tensor* gp = c.grad(pred_slot)) {
      matmul_nn(dH.data(), G, Dh, Q.ptr(), pred.cols(), gp->ptr(), true);
    }
    return;
  }

  const Tensor& enc = c.input(enc_slot);
  const std::size_t T = enc.rows();
  std::vector<double> dPF(T * Dh, 0.0), dQG(G * Dh, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < G; ++u) {
      const double* d = &dH[(t * G + u) * Dh];
      double* a = &dPF[t * Dh];
      double* b = &dQG[u * Dh];
      for (std::size_t k = 0; k < Dh; ++k) {
        a[k] += d[k];
        b[k] += d[k];
      }
    }
  }
  if (Tensor* gP = c.grad(first + 0)) {
    matmul_tn(dPF.data(), T, Dh, enc.ptr(), enc.cols(), gP->ptr(), true);
  }
  if (Tensor* ge = c.grad(enc_slot)) {
    matmul_nn(dPF.data(), T, Dh, P.ptr(), enc.cols(), ge->ptr(), true);
  }
  if (Tensor* gQ = c.grad(first + 1)) {
    matmul_tn(dQG.data(), G, Dh, pred.ptr(), pred.cols(), gQ->ptr(), true);
  }
  if (Tensor* gp = c.grad(pred_slot)) {
    matmul_nn(dQG.data(), G, Dh, Q.ptr(), pred.cols(), gp->ptr(), true);
  }
}

double log_sum_exp(const double* v, std::size_t n) {
  double mx = v[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, v[i]);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - mx);
  return mx + std::log(s);
}

}  // namespace

TransducerLattice transducer_lattice(std::size_t frames, std::size_t labels,
                                     std::span<const double> log_blank,
                                     std::span<const double> log_emit) {
  const std::size_t T = frames;
  const std::size_t U = labels;
  const std::size_t W = U + 1;
  if (T < 1) throw ContractError("transducer lattice needs at least one frame");
  if (log_blank.size() != T * W || log_emit.size() != T * U) {
    throw DimensionError("transducer lattice: expected " + std::to_string(T * W) +
                         " blank and " + std::to_string(T * U) + " emit scores, got " +
                         std::to_string(log_blank.size()) + " and " +
                         std::to_string(log_emit.size()));
  }
  TransducerLattice L;
  L.frames = T;
  L.labels = U;
  L.log_alpha.assign(T * W, kNegInf);
  L.log_beta.assign(T * W, kNegInf);
  auto lb = [&](std::size_t t, std::size_t u) { return log_blank[t * W + u]; };
  auto le = [&](std::size_t t, std::size_t u) { return log_emit[t * U + u]; };
  auto alpha = [&](std::size_t t, std::size_t u) -> double& { return L.log_alpha[t * W + u]; };
  auto beta = [&](std::size_t t, std::size_t u) -> double& { return L.log_beta[t * W + u]; };

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < W; ++u) {
      if (t == 0 && u == 0) {
        alpha(0, 0) = 0.0;
        continue;
      }
      double a = kNegInf;
      if (t > 0) a = alpha(t - 1, u) + lb(t - 1, u);
      if (u > 0) a = log_add_exp(a, alpha(t, u - 1) + le(t, u - 1));
      alpha(t, u) = a;
    }
  }
  L.log_likelihood = alpha(T - 1, U) + lb(T - 1, U);

  for (std::size_t t = T; t-- > 0;) {
    for (std::size_t u = W; u-- > 0;) {
      if (t == T - 1 && u == U) {
        beta(t, u) = lb(t, u);
        continue;
      }
      double b = kNegInf;
      if (t + 1 < T) b = lb(t, u) + beta(t + 1, u);
      if (u < U) b = log_add_exp(b, le(t, u) + beta(t, u + 1));
      beta(t, u) = b;
    }
  }

  const double ll = L.log_likelihood;
  L.grad_log_blank.assign(T * W, 0.0);
  L.grad_log_emit.assign(T * U, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < W; ++u) {
      if (t + 1 < T) {
        L.grad_log_blank[t * W + u] = -std::exp(alpha(t, u) + lb(t, u) + beta(t + 1, u) - ll);
      } else if (u == U) {
        L.grad_log_blank[t * W + u] = -std::exp(alpha(t, u) + lb(t, u) - ll);
      }
      if (u < U) {
        L.grad_log_emit[t * U + u] = -std::exp(alpha(t, u) + le(t, u) + beta(t, u + 1) - ll);
      }
    }
  }
  return L;
}

double rnnt_nll(const PosteriorProvider& posterior, std::span<const int> labels,
                std::size_t frames) {
  for (int y : labels) {
    if (y <= 0) throw ContractError("rnnt_nll: label " + std::to_string(y) +
                                    " is blank or negative");
  }
  const std::size_t U = labels.size();
  const std::size_t W = U + 1;
  if (frames < 1) throw ContractError("rnnt_nll needs at least one frame");
  std::vector<double> log_blank(frames * W), log_emit(frames * U);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t u = 0; u < W; ++u) {
      const std::vector<double> p = posterior(t, u);
      if (p.empty()) throw DimensionError("rnnt_nll: empty posterior");
      log_blank[t * W + u] = std::log(p[0]);
      if (u < U) {
        const auto y = static_cast<std::size_t>(labels[u]);
        if (y >= p.size()) {
          throw ContractError("rnnt_nll: label " + std::to_string(y) +
                              " outside posterior of size " + std::to_string(p.size()));
        }
        log_emit[t * U + u] = std::log(p[y]);
      }
    }
  }
  return transducer_lattice(frames, U, log_blank, log_emit).nll();
}

Heads head_vars(const ParamVars& p) {
  return {p.head(Head::kAsr), p.head(Head::kCap), p.head(Head::kPause)};
}

Var transducer_nll(Tape& tape, Var encoded, Var predicted, const Heads& heads,
                   const LabelBundle& bundle) {
  bundle.validate();
  const Tensor& enc = tape.value(encoded);
  const Tensor& pred = tape.value(predicted);
  const std::size_t T = enc.rows();
  const std::size_t U = bundle.size();
  const std::size_t G = U + 1;
  if (enc.rank() != 2 || T < 1) throw ContractError("transducer_nll: empty encoder output");
  if (pred.rank() != 2 || pred.rows() != G) {
    throw DimensionError("transducer_nll: expected " + std::to_string(G) +
                         " prediction rows, got " + pred.shape_str());
  }

  std::vector<Var> inputs = {encoded, predicted};
  for (const HeadVars& h : heads) inputs.insert(inputs.end(), {h.P, h.Q, h.bh, h.A, h.bs});
  auto in = [&](std::size_t i) -> const Tensor& { return tape.value(inputs[i]); };

  std::array<HeadPass, 3> pass;
  for (std::size_t h = 0; h < 3; ++h) {
    const std::size_t f = 2 + 5 * h;
    pass[h] = joint_grid(enc, pred, in(f), in(f + 1), in(f + 2), in(f + 3), in(f + 4));
  }
  const std::size_t Oa = pass[0].outputs;
  if (pass[1].outputs != ModelConfig::kCapOutputs ||
      pass[2].outputs != ModelConfig::kPauseOutputs) {
    throw DimensionError("transducer_nll: unexpected cap/pause head sizes");
  }
  for (TokenId y : bundle.asr) {
    if (y < 1 || static_cast<std::size_t>(y) >= Oa) {
      throw ContractError("transducer_nll: label " + std::to_string(y) + " outside vocabulary");
    }
  }

  const std::size_t N = T * G;
  std::vector<double> lse_asr(N), lse_pause(N);
  std::array<std::vector<double>, 3> log_blank, log_emit;
  for (auto& v : log_blank) v.resize(N);
  for (auto& v : log_emit) v.resize(T * U);

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t u = 0; u < G; ++u) {
      const std::size_t n = t * G + u;
      const double* sa = &pass[0].S[n * Oa];
      const double* sc = &pass[1].S[n * 2];
      const double* sp = &pass[2].S[n * 4];
      const double lb = log_sigmoid(sa[0]);
      const double lnb = log_sigmoid(-sa[0]);
      lse_asr[n] = log_sum_exp(sa + 1, Oa - 1);
      lse_pause[n] = log_sum_exp(sp + 1, 3);
      log_blank[0][n] = lb;
      log_blank[1][n] = lb;
      log_blank[2][n] = log_sigmoid(sp[0]);
      if (u < U) {
        const std::size_t e = t * U + u;
        log_emit[0][e] = lnb + sa[bundle.asr[u]] - lse_asr[n];
        const std::size_t ci = static_cast<std::size_t>(bundle.cap[u]) - 1;
        log_emit[1][e] = lnb + sc[ci] - log_sum_exp(sc, 2);
        log_emit[2][e] = log_sigmoid(-sp[0]) + sp[static_cast<std::size_t>(bundle.pause[u])] -
                         lse_pause[n];
      }
    }
  }

  std::array<TransducerLattice, 3> lattice;
  Tensor out({3});
  for (std::size_t h = 0; h < 3; ++h) {
    lattice[h] = transducer_lattice(T, U, log_blank[h], log_emit[h]);
    out[h] = lattice[h].nll();
  }

  return tape.record(
      "transducer_nll", std::move(inputs), std::move(out),
      [pass = std::move(pass), lattice = std::move(lattice), lse_asr = std::move(lse_asr),
       lse_pause = std::move(lse_pause), bundle, T, U, G, Oa](Tape::Context& c) {
        const Tensor& g = c.output_grad();
        const std::size_t N = T * G;
        std::array<std::vector<double>, 3> dS = {std::vector<double>(N * Oa, 0.0),
                                                 std::vector<double>(N * 2, 0.0),
                                                 std::vector<double>(N * 4, 0.0)};
        for (std::size_t t = 0; t < T; ++t) {
          for (std::size_t u = 0; u < G; ++u) {
            const std::size_t n = t * G + u;
            const std::size_t e = t * U + u;
            const bool emit = u < U;
            auto grad_b = [&](std::size_t h) { return lattice[h].grad_log_blank[n]; };
            auto grad_e = [&](std::size_t h) {
              return emit ? lattice[h].grad_log_emit[e] : 0.0;
            };

            // ASR logits: own blank and emission, plus the cap lattice's use
            // of the shared blank logit.
            const double* sa = &pass[0].S[n * Oa];
            double* da = &dS[0][n * Oa];
            const double b = sigmoid(sa[0]);
            da[0] = g[0] * (grad_b(0) * (1.0 - b) - grad_e(0) * b) +
                    g[1] * (grad_b(1) * (1.0 - b) - grad_e(1) * b);
            if (emit && grad_e(0) != 0.0) {
              const double w = g[0] * grad_e(0);
              for (std::size_t j = 1; j < Oa; ++j) da[j] = -w * std::exp(sa[j] - lse_asr[n]);
              da[bundle.asr[u]] += w;
            }

            if (emit) {
              const double* sc = &pass[1].S[n * 2];
              double* dc = &dS[1][n * 2];
              const double w = g[1] * grad_e(1);
              const double lz = log_sum_exp(sc, 2);
              dc[0] = -w * std::exp(sc[0] - lz);
              dc[1] = -w * std::exp(sc[1] - lz);
              dc[static_cast<std::size_t>(bundle.cap[u]) - 1] += w;
            }

            const double* sp = &pass[2].S[n * 4];
            double* dp = &dS[2][n * 4];
            const double bp = sigmoid(sp[0]);
            dp[0] = g[2] * (grad_b(2) * (1.0 - bp) - grad_e(2) * bp);
            if (emit) {
              const double w = g[2] * grad_e(2);
              for (std::size_t j = 1; j < 4; ++j) dp[j] = -w * std::exp(sp[j] - lse_pause[n]);
              dp[static_cast<std::size_t>(bundle.pause[u])] += w;
            }
          }
        }
        for (std::size_t h = 0; h < 3; ++h) {
          joint_grid_backward(c, 2 + 5 * h, pass[h], dS[h], 0, 1, false);
        }
      });
}

Var ilm_nll(Tape& tape, Var predicted, const Heads& heads, std::span<const TokenId> asr,
            std::span<const CapTag> cap, std::span<const PauseTag> pause) {
  const Tensor& pred = tape.value(predicted);
  const std::size_t N = asr.size();
  if (cap.size() != N || pause.size() != N || pred.rows() != N || pred.rank() != 2) {
    throw DimensionError("ilm_nll: target and prediction row counts differ");
  }
  std::vector<Var> inputs = {predicted};
  for (const HeadVars& h : heads) inputs.insert(inputs.end(), {h.Q, h.bh, h.A, h.bs});

  // Encoder output is zero, so h = Q·g + b_h; reuse the grid with T = 1 and
  // a zero encoder row, which leaves P out of the computation entirely.
  std::array<HeadPass, 3> pass;
  for (std::size_t h = 0; h < 3; ++h) {
    const Tensor& Q = tape.value(inputs[1 + 4 * h]);
    const Tensor zero_enc({1, 1});
    const Tensor zero_P({Q.rows(), 1});
    pass[h] = joint_grid(zero_enc, pred, zero_P, Q, tape.value(inputs[2 + 4 * h]),
                         tape.value(inputs[3 + 4 * h]), tape.value(inputs[4 + 4 * h]));
  }
  const std::size_t Oa = pass[0].outputs;
  std::vector<TokenId> asr_t(asr.begin(), asr.end());
  std::vector<CapTag> cap_t(cap.begin(), cap.end());
  std::vector<PauseTag> pause_t(pause.begin(), pause.end());
  for (TokenId y : asr_t) {
    if (y < 1 || static_cast<std::size_t>(y) >= Oa) {
      throw ContractError("ilm_nll: label " + std::to_string(y) + " outside vocabulary");
    }
  }

  Tensor out({3});
  for (std::size_t n = 0; n < N; ++n) {
    const double* sa = &pass[0].S[n * Oa];
    const double* sc = &pass[1].S[n * 2];
    const double* sp = &pass[2].S[n * 4];
    out[0] -= sa[asr_t[n]] - log_sum_exp(sa + 1, Oa - 1);
    out[1] -= sc[static_cast<std::size_t>(cap_t[n]) - 1] - log_sum_exp(sc, 2);
    out[2] -= sp[static_cast<std::size_t>(pause_t[n])] - log_sum_exp(sp + 1, 3);
  }

  return tape.record(
      "ilm_nll", std::move(inputs), std::move(out),
      [pass = std::move(pass), asr_t = std::move(asr_t), cap_t = std::move(cap_t),
       pause_t = std::move(pause_t), N, Oa](Tape::Context& c) {
        const Tensor& g = c.output_grad();
        std::array<std::vector<double>, 3> dS = {std::vector<double>(N * Oa, 0.0),
                                                 std::vector<double>(N * 2, 0.0),
                                                 std::vector<double>(N * 4, 0.0)};
        // Softmax over [first, outputs) minus the one-hot target.
        auto fill = [](const double* s, double* d, std::size_t first, std::size_t outputs,
                       std::size_t target, double w) {
          const double lz = log_sum_exp(s + first, outputs - first);
          for (std::size_t j = first; j < outputs; ++j) d[j] = w * std::exp(s[j] - lz);
          d[target] -= w;
        };
        for (std::size_t n = 0; n < N; ++n) {
          fill(&pass[0].S[n * Oa], &dS[0][n * Oa], 1, Oa,
               static_cast<std::size_t>(asr_t[n]), g[0]);
          fill(&pass[1].S[n * 2], &dS[1][n * 2], 0, 2,
               static_cast<std::size_t>(cap_t[n]) - 1, g[1]);
          fill(&pass[2].S[n * 4], &dS[2][n * 4], 1, 4,
               static_cast<std::size_t>(pause_t[n]), g[2]);
        }
        // Slots per head are [Q, bh, A, bs]; joint_grid_backward expects
        // [P, Q, bh, A, bs], so start one before Q and never touch P.
        for (std::size_t h = 0; h < 3; ++h) {
          joint_grid_backward(c, 4 * h, pass[h], dS[h], 0, 0, true);
        }
      });
}

TaskLosses e2e_losses(Tape& tape, const ParamVars& p, const ModelConfig& c,
                      std::span<const PairedExample* const> batch) {
  if (batch.empty()) throw ContractError("e2e_losses: empty batch");
  const Heads heads = head_vars(p);
  std::vector<Var> nll;
  nll.reserve(batch.size());
  for (const PairedExample* ex : batch) {
    Var enc = encode(tape, p, c, ex->features);
    Var pred = predict_all(tape, p, c, ex->bundle.asr);
    nll.push_back(transducer_nll(tape, enc, pred, heads, ex->bundle));
  }
  const std::vector<double> mean(batch.size(), 1.0 / static_cast<double>(batch.size()));
  std::array<Var, 3> out;
  for (std::size_t h = 0; h < 3; ++h) {
    std::vector<Var> terms;
    terms.reserve(nll.size());
    for (Var v : nll) terms.push_back(element(tape, v, h));
    out[h] = linear_combination(tape, terms, mean);
  }
  return {out[0], out[1], out[2]};
}

TaskLosses ilm_losses(Tape& tape, const ParamVars& p, const ModelConfig& c,
                      std::span<const LabelBundle* const> batch) {
  std::vector<Context> contexts;
  std::vector<TokenId> asr;
  std::vector<CapTag> cap;
  std::vector<PauseTag> pause;
  for (const LabelBundle* b : batch) {
    b->validate();
    const auto ctx = label_contexts(b->asr, b->size());
    contexts.insert(contexts.end(), ctx.begin(), ctx.end());
    asr.insert(asr.end(), b->asr.begin(), b->asr.end());
    cap.insert(cap.end(), b->cap.begin(), b->cap.end());
    pause.insert(pause.end(), b->pause.begin(), b->pause.end());
  }
  if (asr.empty()) {
    Var zero = tape.constant(Tensor::scalar(0.0));
    return {zero, zero, zero};
  }
  Var pred = predict_contexts(tape, p, c, contexts);
  Var sums = ilm_nll(tape, pred, head_vars(p), asr, cap, pause);
  const double scale = 1.0 / static_cast<double>(asr.size());
  std::array<Var, 3> out;
  for (std::size_t h = 0; h < 3; ++h) {
    const Var term = element(tape, sums, h);
    out[h] = linear_combination(tape, std::span<const Var>(&term, 1),
                                std::span<const double>(&scale, 1));
  }
  return {out[0], out[1], out[2]};
}

void JeitWeights::validate() const {
  if (!(beta >= 0.0) || !(alpha_cap >= 0.0) || !(alpha_pause >= 0.0)) {
    throw ConfigError("loss weights must be non-negative");
  }
}

LossReport jeit_total(const std::array<double, 3>& e2e, const std::array<double, 3>& ilm,
                      const JeitWeights& w) {
  w.validate();
  LossReport r;
  r.asr_e2e = e2e[0];
  r.cap_e2e = e2e[1];
  r.pause_e2e = e2e[2];
  r.asr_ilm = ilm[0];
  r.cap_ilm = ilm[1];
  r.pause_ilm = ilm[2];
  r.asr_jeit = r.asr_e2e + w.beta * r.asr_ilm;
  r.cap_jeit = r.cap_e2e + w.beta * r.cap_ilm;
  r.pause_jeit = r.pause_e2e + w.beta * r.pause_ilm;
  r.total = r.asr_jeit + w.alpha_cap * r.cap_jeit + w.alpha_pause * r.pause_jeit;
  return r;
}

Var jeit_total(Tape& tape, const TaskLosses& e2e, const std::optional<TaskLosses>& ilm,
               const JeitWeights& w) {
  w.validate();
  std::vector<Var> terms = {e2e.asr, e2e.cap, e2e.pause};
  std::vector<double> weights = {1.0, w.alpha_cap, w.alpha_pause};
  if (ilm && w.beta != 0.0) {
    terms.insert(terms.end(), {ilm->asr, ilm->cap, ilm->pause});
    weights.insert(weights.end(), {w.beta, w.alpha_cap * w.beta, w.alpha_pause * w.beta});
  }
  return linear_combination(tape, terms, weights);
}

void to_json(nlohmann::json& j, const LossReport& r) {
  j = nlohmann::json{{"step", r.step},          {"asr_e2e", r.asr_e2e},
                     {"cap_e2e", r.cap_e2e},    {"pause_e2e", r.pause_e2e},
                     {"asr_ilm", r.asr_ilm},    {"cap_ilm", r.cap_ilm},
                     {"pause_ilm", r.pause_ilm}, {"total", r.total}};
}

void from_json(const nlohmann::json& j, LossReport& r) {
  r.step = j.at("step").get<std::size_t>();
  r.asr_e2e = j.at("asr_e2e").get<double>();
  r.cap_e2e = j.at("cap_e2e").get<double>();
  r.pause_e2e = j.at("pause_e2e").get<double>();
  r.asr_ilm = j.at("asr_ilm").get<double>();
  r.cap_ilm = j.at("cap_ilm").get<double>();
  r.pause_ilm = j.at("pause_ilm").get<double>();
  r.total = j.at("total").get<double>();
}

}  // namespace jeit
