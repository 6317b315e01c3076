#include "jeit/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <random>

#include "jeit/errors.hpp"
#include "jeit/json_util.hpp"

namespace jeit {
namespace {

constexpr std::array<std::string_view, 3> kHeadNames = {"asr", "cap", "pause"};
constexpr char kCheckpointMagic[] = "JEITCKPT1\n";

std::size_t head_index(Head h) {
  const auto i = static_cast<std::size_t>(h);
  if (i >= kHeadNames.size()) {
    throw ContractError("unknown head " + std::to_string(i));
  }
  return i;
}

std::uint64_t name_hash(std::string_view s) {
  // FNV-1a: stable across platforms, unlike std::hash.
  std::uint64_t h = 1469598103934665603ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ull;
  }
  return h;
}

struct ParamShape {
  std::string name;
  Tensor::Shape shape;
};

std::vector<ParamShape> layout(const ModelConfig& c) {
  const std::size_t V1 = c.vocab_size + 1;
  std::vector<ParamShape> out = {
      {"encoder.W1", {c.encoder_width, 2 * c.feature_dim}},
      {"encoder.b1", {c.encoder_width}},
      {"encoder.W2", {c.encoder_dim, c.encoder_width}},
      {"encoder.b2", {c.encoder_dim}},
      {"pred.E1", {V1, c.embed_dim}},
      {"pred.E2", {V1, c.embed_dim}},
      {"pred.W", {c.pred_dim, kContextSize * c.embed_dim}},
      {"pred.b", {c.pred_dim}},
  };
  for (Head h : kHeads) {
    const std::string n(kHeadNames[head_index(h)]);
    const std::size_t o = c.head_outputs(h);
    out.push_back({n + ".P", {c.joint_dim, c.encoder_dim}});
    out.push_back({n + ".Q", {c.joint_dim, c.pred_dim}});
    out.push_back({n + ".bh", {c.joint_dim}});
    out.push_back({n + ".A", {o, c.joint_dim}});
    out.push_back({n + ".bs", {o}});
  }
  return out;
}

void check_token(TokenId id, const ModelConfig& c) {
  if (id < 1 || static_cast<std::size_t>(id) > c.vocab_size) {
    throw ContractError("token id " + std::to_string(id) + " outside 1.." +
                        std::to_string(c.vocab_size));
  }
}

// Frame t of the window is [x_{t-1} | x_t] with x_{-1} = 0.
Tensor window_features(const Tensor& features, const ModelConfig& c) {
  if (features.rank() != 2 || features.rows() == 0) {
    throw ContractError("encode: features must be a non-empty T×F matrix, got " +
                        features.shape_str());
  }
  if (features.cols() != c.feature_dim) {
    throw DimensionError("encode: feature dim " + std::to_string(features.cols()) +
                         " does not match config " + std::to_string(c.feature_dim));
  }
  const std::size_t T = features.rows();
  const std::size_t F = c.feature_dim;
  Tensor w({T, 2 * F});
  for (std::size_t t = 0; t < T; ++t) {
    auto row = w.row(t);
    if (t > 0) std::copy_n(features.row(t - 1).begin(), F, row.begin());
    std::copy_n(features.row(t).begin(), F, row.begin() + F);
  }
  return w;
}

}  // namespace

std::string_view to_string(Head h) { return kHeadNames[head_index(h)]; }

std::size_t ModelConfig::head_outputs(Head h) const {
  switch (h) {
    case Head::kAsr: return vocab_size + 1;
    case Head::kCap: return kCapOutputs;
    case Head::kPause: return kPauseOutputs;
  }
  throw ContractError("unknown head");
}

void ModelConfig::validate() const {
  if (vocab_size < 2) throw ConfigError("model.vocab_size must be at least 2");
  for (std::size_t d : {feature_dim, encoder_width, encoder_dim, embed_dim, pred_dim, joint_dim}) {
    if (d < 1) throw ConfigError("model dimensions must be at least 1");
  }
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"vocab_size", c.vocab_size},       {"feature_dim", c.feature_dim},
                     {"encoder_width", c.encoder_width}, {"encoder_dim", c.encoder_dim},
                     {"embed_dim", c.embed_dim},         {"pred_dim", c.pred_dim},
                     {"joint_dim", c.joint_dim}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  reject_unknown_keys(j, "model",
                      {"vocab_size", "feature_dim", "encoder_width", "encoder_dim",
                       "embed_dim", "pred_dim", "joint_dim"});
  read_key(j, "model", "vocab_size", c.vocab_size);
  read_key(j, "model", "feature_dim", c.feature_dim);
  read_key(j, "model", "encoder_width", c.encoder_width);
  read_key(j, "model", "encoder_dim", c.encoder_dim);
  read_key(j, "model", "embed_dim", c.embed_dim);
  read_key(j, "model", "pred_dim", c.pred_dim);
  read_key(j, "model", "joint_dim", c.joint_dim);
}

std::vector<std::string> parameter_names() {
  std::vector<std::string> names;
  for (const auto& p : layout(ModelConfig{})) names.push_back(p.name);
  return names;
}

std::string head_param(Head h, std::string_view field) {
  return std::string(to_string(h)) + "." + std::string(field);
}

ModelParams ModelParams::zeros(const ModelConfig& config) {
  config.validate();
  ModelParams p;
  p.config_ = config;
  for (auto& [name, shape] : layout(config)) p.tensors_.emplace_back(name, Tensor(shape));
  return p;
}

ModelParams ModelParams::init(const ModelConfig& config, std::uint64_t seed, double scale) {
  ModelParams p = zeros(config);
  for (auto& [name, t] : p.tensors_) {
    if (t.rank() != 2) continue;
    std::mt19937_64 rng(seed ^ name_hash(name));
    std::normal_distribution<double> normal(0.0, 1.0);
    const bool embedding = name.rfind("pred.E", 0) == 0;
    const double std = embedding ? scale : scale / std::sqrt(static_cast<double>(t.cols()));
    for (double& v : t.data()) v = std * normal(rng);
  }
  return p;
}

std::size_t ModelParams::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].first == name) return i;
  }
  throw ContractError("unknown parameter '" + std::string(name) + "'");
}

Tensor& ModelParams::get(std::string_view name) { return tensors_[index_of(name)].second; }

const Tensor& ModelParams::get(std::string_view name) const {
  return tensors_[index_of(name)].second;
}

std::size_t ModelParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.second.size();
  return n;
}

bool ModelParams::all_finite() const {
  for (const auto& t : tensors_) {
    if (!t.second.all_finite()) return false;
  }
  return true;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  nlohmann::json header;
  header["config"] = params.config();
  for (const auto& [name, t] : params.tensors()) {
    header["tensors"].push_back({{"name", name}, {"shape", t.shape()}});
  }
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& [name, t] : params.tensors()) {
    out.write(reinterpret_cast<const char*>(t.ptr()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!out) throw LoadError("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic) - 1];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw LoadError(path.string() + " is not a checkpoint file");
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw LoadError("truncated checkpoint header in " + path.string());

  nlohmann::json header;
  ModelConfig config;
  try {
    header = nlohmann::json::parse(text);
    config = header.at("config").get<ModelConfig>();
  } catch (const std::exception& e) {
    throw LoadError("bad checkpoint header in " + path.string() + ": " + e.what());
  }
  ModelParams params = ModelParams::zeros(config);
  const auto& listed = header.at("tensors");
  if (listed.size() != params.tensors().size()) {
    throw LoadError("checkpoint " + path.string() + " lists an unexpected tensor set");
  }
  for (std::size_t i = 0; i < listed.size(); ++i) {
    auto& [name, t] = params.tensors()[i];
    if (listed[i].at("name") != name ||
        listed[i].at("shape").get<Tensor::Shape>() != t.shape()) {
      throw LoadError("checkpoint " + path.string() + " tensor " + std::to_string(i) +
                      " does not match the model layout");
    }
    in.read(reinterpret_cast<char*>(t.ptr()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  if (!in) throw LoadError("truncated checkpoint data in " + path.string());
  return params;
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& expected) {
  ModelParams p = load_checkpoint(path);
  if (!(p.config() == expected)) {
    throw LoadError("checkpoint " + path.string() + " was written for config " +
                    nlohmann::json(p.config()).dump() + " but " +
                    nlohmann::json(expected).dump() + " was requested");
  }
  return p;
}

// ---------------------------------------------------------------------------

ParamVars::ParamVars(Tape& tape, const ModelParams& params, bool trainable)
    : params_(&params) {
  vars_.reserve(params.tensors().size());
  for (const auto& [name, t] : params.tensors()) {
    vars_.push_back(trainable ? tape.parameter(t) : tape.constant(t));
  }
}

ParamVars::ParamVars(const ModelParams& params, std::vector<Var> vars)
    : params_(&params), vars_(std::move(vars)) {
  if (vars_.size() != params.tensors().size()) {
    throw DimensionError("ParamVars: expected " + std::to_string(params.tensors().size()) +
                         " variables, got " + std::to_string(vars_.size()));
  }
}

Var ParamVars::operator[](std::string_view name) const {
  return vars_[params_->index_of(name)];
}

HeadVars ParamVars::head(Head h) const {
  return HeadVars{(*this)[head_param(h, "P")], (*this)[head_param(h, "Q")],
                  (*this)[head_param(h, "bh")], (*this)[head_param(h, "A")],
                  (*this)[head_param(h, "bs")]};
}

Var encode(Tape& tape, const ParamVars& p, const ModelConfig& c, const Tensor& features) {
  Var x = tape.constant(window_features(features, c));
  Var h = tanh(tape, affine(tape, x, p["encoder.W1"], p["encoder.b1"]));
  return affine(tape, h, p["encoder.W2"], p["encoder.b2"]);
}

std::vector<Context> label_contexts(std::span<const TokenId> labels, std::size_t rows) {
  std::vector<Context> out(rows);
  for (std::size_t u = 0; u < rows; ++u) {
    out[u] = {u >= 1 ? labels[u - 1] : kSentinelId, u >= 2 ? labels[u - 2] : kSentinelId};
  }
  return out;
}

Var predict_contexts(Tape& tape, const ParamVars& p, const ModelConfig& c,
                     std::span<const Context> contexts) {
  std::vector<std::size_t> slot1(contexts.size()), slot2(contexts.size());
  for (std::size_t r = 0; r < contexts.size(); ++r) {
    for (TokenId id : contexts[r]) {
      if (id != kSentinelId) check_token(id, c);
    }
    slot1[r] = static_cast<std::size_t>(contexts[r][0]);
    slot2[r] = static_cast<std::size_t>(contexts[r][1]);
  }
  Var e1 = gather_rows(tape, p["pred.E1"], std::move(slot1));
  Var e2 = gather_rows(tape, p["pred.E2"], std::move(slot2));
  return affine(tape, concat_cols(tape, e1, e2), p["pred.W"], p["pred.b"]);
}

Var predict_all(Tape& tape, const ParamVars& p, const ModelConfig& c,
                std::span<const TokenId> labels) {
  for (TokenId id : labels) check_token(id, c);
  const auto contexts = label_contexts(labels, labels.size() + 1);
  return predict_contexts(tape, p, c, contexts);
}

Tensor encode(const ModelParams& params, const Tensor& features) {
  const ModelConfig& c = params.config();
  Tensor h = affine(window_features(features, c), params.get("encoder.W1"),
                    params.get("encoder.b1"));
  for (double& v : h.data()) v = std::tanh(v);
  return affine(h, params.get("encoder.W2"), params.get("encoder.b2"));
}

Tensor predict(const ModelParams& params, std::span<const TokenId> history) {
  const ModelConfig& c = params.config();
  for (TokenId id : history) check_token(id, c);
  const std::size_t n = history.size();
  const auto id1 = static_cast<std::size_t>(n >= 1 ? history[n - 1] : kSentinelId);
  const auto id2 = static_cast<std::size_t>(n >= 2 ? history[n - 2] : kSentinelId);
  const Tensor& E1 = params.get("pred.E1");
  const Tensor& E2 = params.get("pred.E2");
  Tensor e({2 * c.embed_dim});
  std::copy_n(E1.row(id1).begin(), c.embed_dim, e.data().begin());
  std::copy_n(E2.row(id2).begin(), c.embed_dim, e.data().begin() + c.embed_dim);
  return affine(e, params.get("pred.W"), params.get("pred.b"));
}

Tensor joint(const ModelParams& params, const Tensor& f, const Tensor& g, Head head) {
  head_index(head);
  Tensor h = affine(f, params.get(head_param(head, "P")), params.get(head_param(head, "bh")));
  h += affine(g, params.get(head_param(head, "Q")),
              Tensor({params.config().joint_dim}));
  for (double& v : h.data()) v = std::tanh(v);
  return affine(h, params.get(head_param(head, "A")), params.get(head_param(head, "bs")));
}

Tensor joint(const ModelParams& params, const Tensor& f, const Tensor& g, int head) {
  if (head < 0 || head > 2) throw ContractError("unknown head " + std::to_string(head));
  return joint(params, f, g, static_cast<Head>(head));
}

PosteriorSlice posterior(const Tensor& s_asr, const Tensor& s_cap, const Tensor& s_pause) {
  if (s_asr.rank() != 1 || s_asr.size() < 2) {
    throw DimensionError("posterior: ASR logits must be rank-1 with V+1 >= 2 entries, got " +
                         s_asr.shape_str());
  }
  if (s_cap.rank() != 1 || s_cap.size() != ModelConfig::kCapOutputs) {
    throw DimensionError("posterior: cap logits must have 2 entries, got " +
                         s_cap.shape_str());
  }
  if (s_pause.rank() != 1 || s_pause.size() != ModelConfig::kPauseOutputs) {
    throw DimensionError("posterior: pause logits must have 4 entries, got " +
                         s_pause.shape_str());
  }
  PosteriorSlice out;
  out.s_asr = s_asr;
  out.s_cap = s_cap;
  out.s_pause = s_pause;

  auto hat = [](const Tensor& s, double blank, std::vector<double>& dst) {
    std::vector<double> logp(s.size() - 1);
    log_softmax(s.data().subspan(1), logp);
    dst.resize(s.size());
    dst[0] = blank;
    for (std::size_t i = 0; i < logp.size(); ++i) dst[i + 1] = (1.0 - blank) * std::exp(logp[i]);
  };

  const double b = sigmoid(s_asr[0]);
  hat(s_asr, b, out.asr);

  std::vector<double> logc(2);
  log_softmax(s_cap.data(), logc);
  out.cap = {b, (1.0 - b) * std::exp(logc[0]), (1.0 - b) * std::exp(logc[1])};

  hat(s_pause, sigmoid(s_pause[0]), out.pause);
  return out;
}

std::vector<double> ilm_next_token_distribution(const ModelParams& params,
                                                std::span<const TokenId> history,
                                                Head head) {
  const Tensor g = predict(params, history);
  const Tensor f({params.config().encoder_dim});
  const Tensor s = joint(params, f, g, head);
  std::span<const double> logits = s.data();
  if (head != Head::kCap) logits = logits.subspan(1);
  std::vector<double> p(logits.size());
  log_softmax(logits, p);
  for (double& v : p) v = std::exp(v);
  return p;
}

}  // namespace jeit
