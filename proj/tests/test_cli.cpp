#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "jeit/config.hpp"
#include "jeit/errors.hpp"

namespace fs = std::filesystem;
using namespace jeit;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "jeit_cli_test.out";
  const std::string cmd = std::string(JEIT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(log);
  std::ostringstream o;
  o << in.rdbuf();
  r.out = o.str();
  return r;
}

const std::string kTiny =
    "corpus.head_entity_count=6 corpus.tail_entity_count=6 corpus.paired_train=30 "
    "corpus.unpaired_train=30 corpus.head_eval=5 corpus.tail_eval=5 corpus.pause_eval=5 "
    "corpus.vocab_size=80";

}  // namespace

TEST_CASE("config overrides") {
  const std::vector<std::string> ov = {"train.steps=12", "train.regime=paired_only",
                                       "decode.cap_threshold=0.7"};
  const AppConfig c = load_config(std::nullopt, ov);
  CHECK(c.train.steps == 12);
  CHECK(c.train.regime == Regime::kPairedOnly);
  CHECK(c.decode.cap_threshold == 0.7);
  nlohmann::json doc = to_json(AppConfig{});
  CHECK_THROWS_AS(apply_override(doc, "train.stepz=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(doc, "no_equals"), ConfigError);
  CHECK(app_config_from_json(to_json(c)).train.steps == 12);
  const std::vector<std::string> bad = {"decode.cap_threshold=2"};
  CHECK_THROWS_AS(load_config(std::nullopt, bad), ConfigError);
  CHECK_THROWS_AS(load_config(fs::path("/nonexistent/config.json")), ConfigError);
}

TEST_CASE("usage problems exit with 2") {
  CHECK(run("").code == 2);
  CHECK(run("frobnicate").code == 2);
  CHECK(run("train --set train.bogus=1").code == 2);
  CHECK(run("train train.learning_rate=-1").code == 2);
  const Run r = run("train -d /nonexistent/jeit_data");
  CHECK(r.code == 2);
  CHECK(r.out.find("/nonexistent/jeit_data") != std::string::npos);
  CHECK(run("--help").code == 0);
}

TEST_CASE("self-checks") {
  const Run o = run("oracle-check --trials 50");
  CHECK(o.code == 0);
  CHECK(o.out.find("oracle-check: pass") != std::string::npos);
  const Run g = run("grad-check --seed 3");
  CHECK(g.code == 0);
  CHECK(g.out.find("grad-check: pass") != std::string::npos);
}

TEST_CASE("generate, train, decode and evaluate") {
  const fs::path dir = fs::temp_directory_path() / "jeit_cli_pipeline";
  fs::remove_all(dir);
  const std::string data = (dir / "data").string();
  REQUIRE(run("gen-data -o " + data + " " + kTiny).code == 0);
  CHECK(fs::exists(dir / "data" / "vocab.txt"));
  CHECK(fs::exists(dir / "data" / "tail_eval.jsonl"));

  const std::string model = "model.encoder_width=8 model.encoder_dim=4 model.embed_dim=4 "
                            "model.pred_dim=4 model.joint_dim=8";
  const Run t = run("train -d " + data + " -o " + (dir / "run").string() + " " + model +
                    " train.steps=3 train.checkpoint_interval=2");
  REQUIRE(t.code == 0);
  CHECK(fs::exists(dir / "run" / "final.ckpt"));
  CHECK(fs::exists(dir / "run" / "step-2.ckpt"));
  std::ifstream log(dir / "run" / "train.log.jsonl");
  std::size_t lines = 0;
  for (std::string line; std::getline(log, line);) {
    CHECK(nlohmann::json::parse(line).contains("total"));
    ++lines;
  }
  CHECK(lines == 3);

  const std::string ckpt = (dir / "run" / "final.ckpt").string();
  const Run d = run("decode -d " + data + " -k " + ckpt + " -s head_eval -o " +
                    (dir / "dec.jsonl").string() + " " + model);
  CHECK(d.code == 0);
  std::ifstream dec(dir / "dec.jsonl");
  std::size_t n = 0;
  for (std::string line; std::getline(dec, line);) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j.contains("hypothesis"));
    CHECK(j.contains("events"));
    ++n;
  }
  CHECK(n == 5);

  const Run e = run("eval -d " + data + " -k base=" + ckpt + " --json " +
                    (dir / "scores.json").string() + " " + model);
  CHECK(e.code == 0);
  CHECK(e.out.find("base") != std::string::npos);
  std::ifstream sj(dir / "scores.json");
  const auto scores = nlohmann::json::parse(sj);
  CHECK(scores.at("base").contains("tail"));

  // Checkpoint shape must match the configured model.
  CHECK(run("eval -d " + data + " -k " + ckpt).code != 0);
  fs::remove_all(dir);
}
