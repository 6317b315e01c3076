#include "jeit/train.hpp"

#include <cmath>
#include <sstream>

#include "jeit/errors.hpp"
#include "jeit/json_util.hpp"

namespace jeit {
namespace {

std::string batch_ids(std::span<const PairedExample* const> paired,
                      std::optional<std::span<const UnpairedExample* const>> unpaired) {
  std::ostringstream o;
  o << "paired [";
  for (std::size_t i = 0; i < paired.size(); ++i) o << (i ? ", " : "") << paired[i]->id;
  o << "]";
  if (unpaired) {
    o << ", unpaired [";
    for (std::size_t i = 0; i < unpaired->size(); ++i) o << (i ? ", " : "") << (*unpaired)[i]->id;
    o << "]";
  }
  return o.str();
}

double scalar(const Tape& tape, Var v) { return tape.value(v).item(); }

}  // namespace

std::string_view to_string(Regime r) { return r == Regime::kJeit ? "jeit" : "paired_only"; }

Regime parse_regime(std::string_view s) {
  if (s == "jeit") return Regime::kJeit;
  if (s == "paired_only") return Regime::kPairedOnly;
  throw ConfigError("unknown regime '" + std::string(s) + "' (expected jeit or paired_only)");
}

void TrainConfig::validate() const {
  weights.validate();
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (paired_batch == 0 || unpaired_batch == 0) throw ConfigError("train batch sizes must be positive");
  if (!(clip_norm >= 0.0)) throw ConfigError("train.clip_norm must be non-negative");
  if (!(init_scale > 0.0)) throw ConfigError("train.init_scale must be positive");
}

void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"regime", to_string(c.regime)},
                     {"beta", c.weights.beta},
                     {"alpha_cap", c.weights.alpha_cap},
                     {"alpha_pause", c.weights.alpha_pause},
                     {"learning_rate", c.learning_rate},
                     {"momentum", c.momentum},
                     {"steps", c.steps},
                     {"paired_batch", c.paired_batch},
                     {"unpaired_batch", c.unpaired_batch},
                     {"seed", c.seed},
                     {"checkpoint_interval", c.checkpoint_interval},
                     {"clip_norm", c.clip_norm},
                     {"init_scale", c.init_scale}};
}

void from_json(const nlohmann::json& j, TrainConfig& c) {
  static constexpr const char* kSection = "train";
  reject_unknown_keys(j, kSection,
                      {"regime", "beta", "alpha_cap", "alpha_pause", "learning_rate", "momentum",
                       "steps", "paired_batch", "unpaired_batch", "seed",
                       "checkpoint_interval", "clip_norm", "init_scale"});
  std::string regime(to_string(c.regime));
  read_key(j, kSection, "regime", regime);
  c.regime = parse_regime(regime);
  read_key(j, kSection, "beta", c.weights.beta);
  read_key(j, kSection, "alpha_cap", c.weights.alpha_cap);
  read_key(j, kSection, "alpha_pause", c.weights.alpha_pause);
  read_key(j, kSection, "learning_rate", c.learning_rate);
  read_key(j, kSection, "momentum", c.momentum);
  read_key(j, kSection, "steps", c.steps);
  read_key(j, kSection, "paired_batch", c.paired_batch);
  read_key(j, kSection, "unpaired_batch", c.unpaired_batch);
  read_key(j, kSection, "seed", c.seed);
  read_key(j, kSection, "checkpoint_interval", c.checkpoint_interval);
  read_key(j, kSection, "clip_norm", c.clip_norm);
  read_key(j, kSection, "init_scale", c.init_scale);
}

TrainState TrainState::fresh(const ModelConfig& model, std::uint64_t seed, double init_scale) {
  TrainState s;
  s.params = ModelParams::init(model, seed, init_scale);
  for (const auto& [name, t] : s.params.tensors()) s.velocity.emplace_back(name, Tensor::zeros_like(t));
  return s;
}

StepResult train_step(TrainState& state, std::span<const PairedExample* const> paired,
                      std::optional<std::span<const UnpairedExample* const>> unpaired,
                      const TrainConfig& config) {
  config.validate();
  const bool jeit = config.regime == Regime::kJeit;
  if (jeit != unpaired.has_value()) {
    throw ContractError(jeit ? "jeit regime needs an unpaired batch"
                             : "paired_only regime takes no unpaired batch");
  }
  const ModelConfig& mc = state.params.config();

  Tape tape;
  ParamVars pv(tape, state.params, true);
  const TaskLosses e2e = e2e_losses(tape, pv, mc, paired);
  std::optional<TaskLosses> ilm;
  if (unpaired) {
    std::vector<const LabelBundle*> bundles;
    for (const UnpairedExample* u : *unpaired) bundles.push_back(&u->bundle);
    ilm = ilm_losses(tape, pv, mc, bundles);
  }
  const Var total = jeit_total(tape, e2e, ilm, config.weights);

  StepResult out;
  const std::array<double, 3> e2e_v = {scalar(tape, e2e.asr), scalar(tape, e2e.cap),
                                       scalar(tape, e2e.pause)};
  std::array<double, 3> ilm_v = {0.0, 0.0, 0.0};
  if (ilm) ilm_v = {scalar(tape, ilm->asr), scalar(tape, ilm->cap), scalar(tape, ilm->pause)};
  out.report = jeit_total(e2e_v, ilm_v, config.weights);
  out.report.step = state.step;
  out.tape_total = scalar(tape, total);

  const bool finite = std::isfinite(out.tape_total) && std::isfinite(out.report.total);
  if (!finite) {
    throw NumericError("non-finite loss at step " + std::to_string(state.step) + " on " +
                       batch_ids(paired, unpaired));
  }

  tape.backward(total);
  const auto vars = pv.all();
  std::vector<Tensor> grads;
  grads.reserve(vars.size());
  double sq = 0.0;
  for (Var v : vars) {
    grads.push_back(tape.grad(v));
    for (double g : grads.back().data()) sq += g * g;
  }
  out.grad_norm = std::sqrt(sq);
  if (!std::isfinite(out.grad_norm)) {
    throw NumericError("non-finite gradient at step " + std::to_string(state.step) + " on " +
                       batch_ids(paired, unpaired));
  }

  ++state.step;
  if (config.clip_norm == 0.0) return out;
  const double scale = out.grad_norm > config.clip_norm ? config.clip_norm / out.grad_norm : 1.0;
  auto& params = state.params.tensors();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto p = params[i].second.data();
    auto v = state.velocity[i].second.data();
    const auto g = grads[i].data();
    for (std::size_t k = 0; k < p.size(); ++k) {
      v[k] = config.momentum * v[k] + scale * g[k];
      p[k] -= config.learning_rate * v[k];
    }
  }
  return out;
}

TrainState run_training(const ModelConfig& model, const TrainConfig& config, TrainData data,
                        const StepCallback& on_step) {
  config.validate();
  model.validate();
  TrainState state = TrainState::fresh(model, config.seed, config.init_scale);
  if (config.steps == 0) return state;

  // Stream seeds depend on the run seed only, so both regimes see the same
  // paired batches.
  Batcher<PairedExample> paired(data.paired, config.paired_batch, config.seed * 2 + 1);
  std::optional<Batcher<UnpairedExample>> unpaired;
  if (config.regime == Regime::kJeit) {
    unpaired.emplace(data.unpaired, config.unpaired_batch, config.seed * 2 + 2);
  }
  for (std::size_t s = 0; s < config.steps; ++s) {
    const auto pb = paired.next();
    std::optional<std::vector<const UnpairedExample*>> ub;
    if (unpaired) ub = unpaired->next();
    std::optional<std::span<const UnpairedExample* const>> uspan;
    if (ub) uspan = std::span<const UnpairedExample* const>(*ub);
    const StepResult r = train_step(state, pb, uspan, config);
    if (on_step) on_step(r, state);
  }
  return state;
}

EvalOutput evaluate(const ModelParams& params, const Vocab& vocab,
                    std::span<const PairedExample> examples, const DecodeOptions& options) {
  EvalOutput out;
  std::vector<EvalItem> items;
  items.reserve(examples.size());
  for (const PairedExample& ex : examples) {
    const DecodeResult d = greedy_decode(ex.features, params, vocab, options);
    EvalItem it;
    it.ref_text = ex.bundle.transcript;
    it.hyp_text = d.cased_text;
    for (std::size_t u = 0; u < ex.bundle.size(); ++u) {
      it.ref_tokens.push_back(vocab.piece(ex.bundle.asr[u]));
      it.ref_eos.push_back(ex.bundle.pause[u] == PauseTag::kEos);
    }
    for (std::size_t u = 0; u < d.tokens.size(); ++u) {
      it.hyp_tokens.push_back(vocab.piece(d.tokens[u]));
      it.hyp_eos.push_back(d.pause[u] == PauseTag::kEos);
    }
    nlohmann::json rec = decode_record(ex.id, d);
    rec["reference"] = it.ref_text;
    out.records.push_back(std::move(rec));
    items.push_back(std::move(it));
  }
  out.summary = summarize(items);
  return out;
}

}  // namespace jeit
