#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "jeit/example.hpp"
#include "jeit/model.hpp"
#include "jeit/tape.hpp"

namespace jeit {

// Forward-backward over the T×(U+1) transducer grid, in log space.
//
//   alpha(t,u) = logadd(alpha(t-1,u) + blank(t-1,u), alpha(t,u-1) + emit(t,u-1))
//   log P      = alpha(T-1,U) + blank(T-1,U)
//
// The terminal blank at (T-1,U) consumes the last frame.
struct TransducerLattice {
  std::size_t frames = 0;
  std::size_t labels = 0;
  std::vector<double> log_alpha;       // frames × (labels+1)
  std::vector<double> log_beta;        // frames × (labels+1)
  double log_likelihood = 0.0;
  std::vector<double> grad_log_blank;  // ∂NLL/∂blank(t,u), frames × (labels+1)
  std::vector<double> grad_log_emit;   // ∂NLL/∂emit(t,u),  frames × labels

  double nll() const { return -log_likelihood; }
  double alpha(std::size_t t, std::size_t u) const { return log_alpha[t * (labels + 1) + u]; }
};

// `log_blank` is frames×(labels+1); `log_emit[t,u]` is the log probability of
// emitting label u from (t,u), frames×labels.
TransducerLattice transducer_lattice(std::size_t frames, std::size_t labels,
                                     std::span<const double> log_blank,
                                     std::span<const double> log_emit);

// Posterior vector at (t,u), ordered [blank, symbols...].
using PosteriorProvider = std::function<std::vector<double>(std::size_t t, std::size_t u)>;

// Transducer negative log-likelihood of `labels` (symbol indices >= 1).
double rnnt_nll(const PosteriorProvider& posterior, std::span<const int> labels,
                std::size_t frames);

// ---------------------------------------------------------------------------
// Recorded losses.

using Heads = std::array<HeadVars, 3>;
Heads head_vars(const ParamVars& p);

// Per-utterance NLLs [asr, cap, pause] from encoder rows (T×D_a) and
// prediction rows ((U+1)×D_p). The cap lattice shares the ASR blank; the
// pause lattice has its own.
Var transducer_nll(Tape& tape, Var encoded, Var predicted, const Heads& heads,
                   const LabelBundle& bundle);

// Summed next-token NLLs [asr, cap, pause] over prediction rows with the
// encoder output fixed at zero. Row r predicts asr[r], cap[r], pause[r].
Var ilm_nll(Tape& tape, Var predicted, const Heads& heads, std::span<const TokenId> asr,
            std::span<const CapTag> cap, std::span<const PauseTag> pause);

struct TaskLosses {
  Var asr, cap, pause;
};

// Batch means of the three transducer NLLs.
TaskLosses e2e_losses(Tape& tape, const ParamVars& p, const ModelConfig& c,
                      std::span<const PairedExample* const> batch);
// Text-only losses, normalized by the number of tokens in the batch.
TaskLosses ilm_losses(Tape& tape, const ParamVars& p, const ModelConfig& c,
                      std::span<const LabelBundle* const> batch);

struct JeitWeights {
  double beta = 0.2;
  double alpha_cap = 0.1;
  double alpha_pause = 0.3;
  void validate() const;
};

struct LossReport {
  std::size_t step = 0;
  double asr_e2e = 0, cap_e2e = 0, pause_e2e = 0;
  double asr_ilm = 0, cap_ilm = 0, pause_ilm = 0;
  double asr_jeit = 0, cap_jeit = 0, pause_jeit = 0;
  double total = 0;
};

// total = L^ASR_E2E + β·L^ASR_ILM + α_Cap·(L^Cap_E2E + β·L^Cap_ILM)
//       + α_Pause·(L^Pause_E2E + β·L^Pause_ILM)
LossReport jeit_total(const std::array<double, 3>& e2e, const std::array<double, 3>& ilm,
                      const JeitWeights& w);
// The same combination on the tape. Absent ILM terms contribute nothing.
Var jeit_total(Tape& tape, const TaskLosses& e2e, const std::optional<TaskLosses>& ilm,
               const JeitWeights& w);

void to_json(nlohmann::json& j, const LossReport& r);
void from_json(const nlohmann::json& j, LossReport& r);

}  // namespace jeit
