#include "jeit/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "jeit/errors.hpp"

namespace jeit {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  if (s.size() < width) s.append(width - s.size(), ' ');
  return s;
}

std::string lpad(std::string s, std::size_t width) {
  if (s.size() < width) s.insert(0, width - s.size(), ' ');
  return s;
}

const std::vector<Record>& split(const Corpus& c, std::string_view name) {
  auto it = c.splits.find(name);
  if (it == c.splits.end()) throw LoadError("corpus has no split " + std::string(name));
  return it->second;
}

}  // namespace

Prepared prepare(const Corpus& corpus) {
  Prepared p;
  p.vocab = corpus.vocab;
  p.paired = to_paired(split(corpus, "paired_train"), p.vocab);
  p.unpaired = to_unpaired(split(corpus, "unpaired_train"), p.vocab);
  p.head_eval = to_paired(split(corpus, "head_eval"), p.vocab);
  p.tail_eval = to_paired(split(corpus, "tail_eval"), p.vocab);
  p.pause_eval = to_paired(split(corpus, "pause_eval"), p.vocab);
  return p;
}

Prepared load_prepared(const std::filesystem::path& dir) {
  Corpus c;
  c.vocab = Vocab::load(dir / "vocab.txt");
  for (std::string_view s : kSplits) c.splits[std::string(s)] = load_split(dir, s);
  return prepare(c);
}

ModelConfig model_for(const ModelConfig& base, const Vocab& vocab) {
  ModelConfig m = base;
  m.vocab_size = vocab.size();
  return m;
}

void to_json(nlohmann::json& j, const SetScores& s) {
  j = nlohmann::json{{"head", s.head}, {"tail", s.tail}, {"pause", s.pause}};
}

SetScores score_sets(const ModelParams& params, const Prepared& data,
                     const DecodeOptions& options) {
  SetScores s;
  s.head = evaluate(params, data.vocab, data.head_eval, options).summary;
  s.tail = evaluate(params, data.vocab, data.tail_eval, options).summary;
  s.pause = evaluate(params, data.vocab, data.pause_eval, options).summary;
  return s;
}

std::string comparison_table(std::span<const std::pair<std::string, SetScores>> rows) {
  std::size_t name_w = 5;
  for (const auto& r : rows) name_w = std::max(name_w, r.first.size());
  std::ostringstream o;
  o << pad("model", name_w) << "  " << lpad("WER", 7) << "  " << lpad("Head UER", 9) << "  "
    << lpad("Tail UER", 9) << "  " << lpad("Precision", 9) << "  " << lpad("Recall", 7) << '\n';
  for (const auto& [name, s] : rows) {
    o << pad(name, name_w) << "  " << lpad(fixed(100 * s.head.wer(), 2), 7) << "  "
      << lpad(fixed(100 * s.head.uer(), 2), 9) << "  " << lpad(fixed(100 * s.tail.uer(), 2), 9)
      << "  " << lpad(fixed(100 * s.pause.eos.precision(), 2), 9) << "  "
      << lpad(fixed(100 * s.pause.eos.recall(), 2), 7) << '\n';
  }
  return o.str();
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

nlohmann::json run_experiment(const AppConfig& config, const Prepared& data,
                              const std::optional<std::filesystem::path>& out_dir) {
  const ModelConfig model = model_for(config.model, data.vocab);
  TrainData td{data.paired, data.unpaired};
  nlohmann::json runs = nlohmann::json::array();
  std::map<std::string, std::map<std::string, std::vector<double>>> per_regime;
  static constexpr std::array<std::string_view, 6> kColumns = {
      "head_wer", "head_uer", "tail_wer", "tail_uer", "eos_precision", "eos_recall"};

  for (std::uint64_t seed : config.experiment.seeds) {
    for (const std::string& regime_name : config.experiment.regimes) {
      TrainConfig tc = config.train;
      tc.regime = parse_regime(regime_name);
      tc.seed = seed;
      const std::string tag = regime_name + "-seed" + std::to_string(seed);

      std::optional<std::ofstream> log;
      std::filesystem::path run_dir;
      if (out_dir) {
        run_dir = *out_dir / tag;
        std::filesystem::create_directories(run_dir);
        log.emplace(run_dir / "train.log.jsonl", std::ios::binary);
      }
      double final_total = 0.0;
      const TrainState state =
          run_training(model, tc, td, [&](const StepResult& r, const TrainState& st) {
            final_total = r.report.total;
            if (log) *log << nlohmann::json(r.report).dump() << '\n';
            if (out_dir && tc.checkpoint_interval && st.step % tc.checkpoint_interval == 0) {
              save_checkpoint(run_dir / ("step-" + std::to_string(st.step) + ".ckpt"), st.params);
            }
          });
      if (out_dir) save_checkpoint(run_dir / "final.ckpt", state.params);

      const SetScores s = score_sets(state.params, data, config.decode);
      auto& cols = per_regime[regime_name];
      cols["head_wer"].push_back(s.head.wer());
      cols["head_uer"].push_back(s.head.uer());
      cols["tail_wer"].push_back(s.tail.wer());
      cols["tail_uer"].push_back(s.tail.uer());
      cols["eos_precision"].push_back(s.pause.eos.precision());
      cols["eos_recall"].push_back(s.pause.eos.recall());
      runs.push_back({{"regime", regime_name},
                      {"seed", seed},
                      {"steps", tc.steps},
                      {"final_total", final_total},
                      {"scores", s}});
    }
  }

  nlohmann::json medians = nlohmann::json::object();
  for (const std::string& regime_name : config.experiment.regimes) {
    nlohmann::json m = nlohmann::json::object();
    for (std::string_view col : kColumns) {
      m[std::string(col)] = median(per_regime[regime_name][std::string(col)]);
    }
    medians[regime_name] = m;
  }
  return {{"regimes", config.experiment.regimes},
          {"seeds", config.experiment.seeds},
          {"vocab_size", data.vocab.size()},
          {"config", to_json(config)},
          {"runs", runs},
          {"median", medians}};
}

std::string report_text(const nlohmann::json& report) {
  std::ostringstream o;
  o << "median over seeds";
  for (const auto& s : report.at("seeds")) o << ' ' << s.get<std::uint64_t>();
  o << "\n\n";
  std::size_t name_w = 6;
  for (const auto& r : report.at("regimes")) name_w = std::max(name_w, r.get<std::string>().size());
  o << pad("regime", name_w) << "  " << lpad("WER", 7) << "  " << lpad("Head UER", 9) << "  "
    << lpad("Tail UER", 9) << "  " << lpad("Tail WER", 9) << "  " << lpad("Precision", 9)
    << "  " << lpad("Recall", 7) << '\n';
  for (const auto& r : report.at("regimes")) {
    const std::string name = r.get<std::string>();
    const auto& m = report.at("median").at(name);
    auto pct = [&](const char* k, std::size_t w) {
      return lpad(fixed(100 * m.at(k).get<double>(), 2), w);
    };
    o << pad(name, name_w) << "  " << pct("head_wer", 7) << "  " << pct("head_uer", 9) << "  "
      << pct("tail_uer", 9) << "  " << pct("tail_wer", 9) << "  " << pct("eos_precision", 9)
      << "  " << pct("eos_recall", 7) << '\n';
  }
  o << "\nper run\n";
  for (const auto& run : report.at("runs")) {
    const auto& s = run.at("scores");
    o << pad(run.at("regime").get<std::string>(), name_w) << "  seed "
      << run.at("seed").get<std::uint64_t>() << "  WER "
      << fixed(100 * s.at("head").at("wer").get<double>(), 2) << "  head UER "
      << fixed(100 * s.at("head").at("uer").get<double>(), 2) << "  tail UER "
      << fixed(100 * s.at("tail").at("uer").get<double>(), 2) << "  P "
      << fixed(100 * s.at("pause").at("eos_precision").get<double>(), 2) << "  R "
      << fixed(100 * s.at("pause").at("eos_recall").get<double>(), 2) << '\n';
  }
  return o.str();
}

}  // namespace jeit
