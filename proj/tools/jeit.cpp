// jeit: corpus generation, training, decoding, evaluation and self-checks.
//
// Exit codes: 0 success, 2 usage or configuration problem, 3 numeric or
// runtime failure (including failed checks).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "jeit/config.hpp"
#include "jeit/errors.hpp"
#include "jeit/experiment.hpp"
#include "jeit/verify.hpp"

namespace fs = std::filesystem;
using namespace jeit;

namespace {

constexpr int kUsage = 2;
constexpr int kRuntime = 3;

struct CheckFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write " + path.string());
  out << text;
}

Prepared data_from(const AppConfig& cfg, const std::string& dir) {
  const fs::path d = dir.empty() ? fs::path(cfg.experiment.data_dir) : fs::path(dir);
  return load_prepared(d);
}

int gen_data(const AppConfig& cfg, const std::string& out_opt) {
  const fs::path out = out_opt.empty() ? fs::path(cfg.experiment.data_dir) : fs::path(out_opt);
  const Corpus corpus = generate_corpus(cfg.corpus);
  write_corpus(corpus, out);
  for (const auto& [name, records] : corpus.splits) {
    std::cout << name << ": " << records.size() << '\n';
  }
  std::cout << "vocab: " << corpus.vocab.size() << " pieces\n";
  return 0;
}

int train(const AppConfig& cfg, const std::string& data_dir, const std::string& out_opt) {
  const Prepared data = data_from(cfg, data_dir);
  const ModelConfig model = model_for(cfg.model, data.vocab);
  const fs::path out = out_opt.empty()
                           ? fs::path(cfg.experiment.out_dir) /
                                 (std::string(to_string(cfg.train.regime)) + "-seed" +
                                  std::to_string(cfg.train.seed))
                           : fs::path(out_opt);
  fs::create_directories(out);
  std::ofstream log(out / "train.log.jsonl", std::ios::binary);
  if (!log) throw LoadError("cannot write " + (out / "train.log.jsonl").string());
  LossReport last;
  const TrainState state = run_training(
      model, cfg.train, {data.paired, data.unpaired},
      [&](const StepResult& r, const TrainState& st) {
        last = r.report;
        log << nlohmann::json(r.report).dump() << '\n';
        if (cfg.train.checkpoint_interval && st.step % cfg.train.checkpoint_interval == 0) {
          save_checkpoint(out / ("step-" + std::to_string(st.step) + ".ckpt"), st.params);
        }
      });
  save_checkpoint(out / "final.ckpt", state.params);
  std::cout << "trained " << state.step << " steps (" << to_string(cfg.train.regime)
            << "), final total " << last.total << "\ncheckpoint: " << (out / "final.ckpt").string()
            << '\n';
  return 0;
}

int decode(const AppConfig& cfg, const std::string& data_dir, const std::string& checkpoint,
           const std::string& split, const std::string& out) {
  const Prepared data = data_from(cfg, data_dir);
  const ModelParams params = load_checkpoint(checkpoint, model_for(cfg.model, data.vocab));
  const std::vector<PairedExample>* set = nullptr;
  if (split == "head_eval") set = &data.head_eval;
  if (split == "tail_eval") set = &data.tail_eval;
  if (split == "pause_eval") set = &data.pause_eval;
  if (split == "paired_train") set = &data.paired;
  if (!set) throw ConfigError("cannot decode split '" + split + "'");
  const EvalOutput result = evaluate(params, data.vocab, *set, cfg.decode);
  std::string text;
  for (const auto& r : result.records) text += r.dump() + '\n';
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text(out, text);
  }
  return 0;
}

int eval(const AppConfig& cfg, const std::string& data_dir,
         const std::vector<std::string>& checkpoints, const std::string& json_out) {
  const Prepared data = data_from(cfg, data_dir);
  const ModelConfig model = model_for(cfg.model, data.vocab);
  std::vector<std::pair<std::string, SetScores>> rows;
  nlohmann::json doc = nlohmann::json::object();
  for (const std::string& spec : checkpoints) {
    const auto eq = spec.find('=');
    const std::string name = eq == std::string::npos ? fs::path(spec).stem().string()
                                                     : spec.substr(0, eq);
    const std::string path = eq == std::string::npos ? spec : spec.substr(eq + 1);
    const ModelParams params = load_checkpoint(path, model);
    rows.emplace_back(name, score_sets(params, data, cfg.decode));
    doc[name] = rows.back().second;
  }
  std::cout << comparison_table(rows);
  if (!json_out.empty()) write_text(json_out, doc.dump(2) + '\n');
  return 0;
}

int grad_check_cmd(std::uint64_t seed) {
  const GradReport r = jeit_grad_check(seed);
  std::cout << "grad-check: " << r.result.coordinates << " coordinates, max relative error "
            << r.result.max_rel_error << " at " << r.result.worst << '\n';
  if (!r.passed) throw CheckFailed("grad-check failed");
  std::cout << "grad-check: pass\n";
  return 0;
}

int oracle_check_cmd(std::size_t trials, std::uint64_t seed) {
  const OracleReport r = oracle_check(trials, seed);
  std::cout << "oracle-check: " << r.trials << " instances, max error " << r.max_error << '\n';
  if (!r.passed) throw CheckFailed("oracle-check failed");
  std::cout << "oracle-check: pass\n";
  return 0;
}

int report(const AppConfig& cfg, const std::string& data_dir, const std::string& out_opt) {
  const Prepared data =
      data_dir.empty() ? prepare(generate_corpus(cfg.corpus)) : load_prepared(data_dir);
  const fs::path out = out_opt.empty() ? fs::path(cfg.experiment.out_dir) : fs::path(out_opt);
  const nlohmann::json rep = run_experiment(cfg, data, out);
  const std::string text = report_text(rep);
  write_text(out / "report.json", rep.dump(2) + '\n');
  write_text(out / "report.txt", text);
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint E2E and internal-LM training for a multi-output transducer"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "JSON config file");
  app.add_option("--set", overrides, "Override a config key, e.g. train.steps=10");

  std::string data_dir, out, checkpoint, split = "tail_eval", json_out;
  std::vector<std::string> checkpoints;
  std::size_t trials = 200;
  std::uint64_t seed = 7;

  auto* gen = app.add_subcommand("gen-data", "Generate the synthetic corpus");
  gen->add_option("-o,--out", out, "Output directory (default experiment.data_dir)");
  gen->add_option("overrides", overrides, "key=value config overrides");

  auto* tr = app.add_subcommand("train", "Train one model");
  tr->add_option("-d,--data", data_dir, "Corpus directory");
  tr->add_option("-o,--out", out, "Run directory");
  tr->add_option("overrides", overrides, "key=value config overrides");

  auto* dec = app.add_subcommand("decode", "Decode a split with a checkpoint");
  dec->add_option("-d,--data", data_dir, "Corpus directory");
  dec->add_option("-k,--checkpoint", checkpoint, "Checkpoint file")->required();
  dec->add_option("-s,--split", split, "Split to decode");
  dec->add_option("-o,--out", out, "Output JSONL file (default stdout)");
  dec->add_option("overrides", overrides, "key=value config overrides");

  auto* ev = app.add_subcommand("eval", "Compare checkpoints on the evaluation sets");
  ev->add_option("-d,--data", data_dir, "Corpus directory");
  ev->add_option("-k,--checkpoint", checkpoints, "name=path or path; repeatable")->required();
  ev->add_option("--json", json_out, "Also write scores as JSON");
  ev->add_option("overrides", overrides, "key=value config overrides");

  auto* gc = app.add_subcommand("grad-check", "Finite-difference check of the full objective");
  gc->add_option("--seed", seed, "Toy model seed");
  gc->add_option("overrides", overrides, "key=value config overrides");

  auto* oc = app.add_subcommand("oracle-check", "Transducer loss against brute-force enumeration");
  oc->add_option("--trials", trials, "Random instances");
  oc->add_option("--seed", seed, "Instance seed");
  oc->add_option("overrides", overrides, "key=value config overrides");

  auto* rep = app.add_subcommand("report", "Multi-seed baseline vs JEIT experiment");
  rep->add_option("-d,--data", data_dir, "Corpus directory (default: generate in memory)");
  rep->add_option("-o,--out", out, "Output directory (default experiment.out_dir)");
  rep->add_option("overrides", overrides, "key=value config overrides");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    const std::optional<fs::path> path =
        config_path.empty() ? std::nullopt : std::optional<fs::path>(config_path);
    const AppConfig cfg = load_config(path, overrides);
    if (*gen) return gen_data(cfg, out);
    if (*tr) return train(cfg, data_dir, out);
    if (*dec) return decode(cfg, data_dir, checkpoint, split, out);
    if (*ev) return eval(cfg, data_dir, checkpoints, json_out);
    if (*gc) return grad_check_cmd(seed);
    if (*oc) return oracle_check_cmd(trials, seed);
    if (*rep) return report(cfg, data_dir, out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
  return kUsage;
}
