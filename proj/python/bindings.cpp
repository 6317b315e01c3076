#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "jeit/config.hpp"
#include "jeit/errors.hpp"
#include "jeit/experiment.hpp"
#include "jeit/verify.hpp"

namespace py = pybind11;
using namespace jeit;

namespace {

Tensor vector_tensor(const std::vector<double>& v) {
  Tensor t({v.size()});
  std::copy(v.begin(), v.end(), t.data().begin());
  return t;
}

std::vector<PauseMark> marks_from(const std::vector<std::pair<std::size_t, std::string>>& marks) {
  std::vector<PauseMark> out;
  for (const auto& [word, kind] : marks) out.push_back({word, parse_pause_kind(kind)});
  return out;
}

py::dict bundle_dict(const LabelBundle& b, const Vocab& v) {
  std::vector<std::string> pieces, cap, pause;
  for (TokenId id : b.asr) pieces.push_back(v.piece(id));
  for (CapTag c : b.cap) cap.emplace_back(to_string(c));
  for (PauseTag p : b.pause) pause.emplace_back(to_string(p));
  py::dict d;
  d["asr"] = b.asr;
  d["pieces"] = pieces;
  d["cap"] = cap;
  d["pause"] = pause;
  return d;
}

py::dict rate_dict(const RateResult& r) {
  py::dict d;
  d["rate"] = r.rate;
  d["substitutions"] = r.counts.substitutions;
  d["insertions"] = r.counts.insertions;
  d["deletions"] = r.counts.deletions;
  d["reference"] = r.counts.reference;
  return d;
}

py::object as_python(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_jeit, m) {
  m.doc() = "Multi-output transducer with joint E2E and internal-LM training";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<LoadError>(m, "LoadError", PyExc_OSError);
  py::register_exception<AnnotationError>(m, "AnnotationError", PyExc_ValueError);
  py::register_exception<TokenizationError>(m, "TokenizationError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<Vocab>(m, "Vocab")
      .def_static("from_pieces", &Vocab::from_pieces, py::arg("pieces"))
      .def_static("load", &Vocab::load, py::arg("path"))
      .def("save", &Vocab::save, py::arg("path"))
      .def("__len__", &Vocab::size)
      .def("piece", &Vocab::piece, py::arg("id"))
      .def("find", &Vocab::find, py::arg("piece"))
      .def_property_readonly("pieces", [](const Vocab& v) {
        return std::vector<std::string>(v.pieces().begin(), v.pieces().end());
      });

  m.def("build_vocab",
        [](const std::vector<std::string>& texts, std::size_t size) { return build_vocab(texts, size); },
        py::arg("texts"), py::arg("target_size"));
  m.def("tokenize", [](const std::string& text, const Vocab& v) { return tokenize(text, v); },
        py::arg("text"), py::arg("vocab"));
  m.def("detokenize",
        [](const std::vector<TokenId>& ids, const Vocab& v) { return detokenize(ids, v); },
        py::arg("ids"), py::arg("vocab"));

  m.def(
      "factorize",
      [](const std::string& text, const std::vector<std::pair<std::size_t, std::string>>& marks,
         const Vocab& v) { return bundle_dict(factorize({text, marks_from(marks)}, v), v); },
      py::arg("text"), py::arg("marks"), py::arg("vocab"),
      "marks: (word index, 'pause' | 'eos') pairs");
  m.def(
      "render",
      [](const std::vector<TokenId>& ids, const std::vector<bool>& cap, const Vocab& v) {
        std::vector<CapTag> tags;
        for (bool c : cap) tags.push_back(c ? CapTag::kCap : CapTag::kNonCap);
        return render(ids, tags, v);
      },
      py::arg("ids"), py::arg("cap"), py::arg("vocab"));

  m.def(
      "posterior",
      [](const std::vector<double>& s_asr, const std::vector<double>& s_cap,
         const std::vector<double>& s_pause) {
        const PosteriorSlice p =
            posterior(vector_tensor(s_asr), vector_tensor(s_cap), vector_tensor(s_pause));
        return py::make_tuple(p.asr, p.cap, p.pause);
      },
      py::arg("s_asr"), py::arg("s_cap"), py::arg("s_pause"));

  m.def(
      "rnnt_nll",
      [](const std::vector<std::vector<std::vector<double>>>& post, const std::vector<int>& labels) {
        if (post.empty()) throw ContractError("need at least one frame");
        const PosteriorProvider provider = [&](std::size_t t, std::size_t u) { return post.at(t).at(u); };
        return rnnt_nll(provider, labels, post.size());
      },
      py::arg("posteriors"), py::arg("labels"),
      "posteriors[t][u] is the distribution over [blank, 1..V] at lattice node (t, u)");

  m.def("wer", [](const std::string& r, const std::string& h) { return rate_dict(wer(r, h)); },
        py::arg("ref"), py::arg("hyp"));
  m.def("uer", [](const std::string& r, const std::string& h) { return rate_dict(uer(r, h)); },
        py::arg("ref"), py::arg("hyp"));
  m.def("uppercase_residue", &uppercase_residue, py::arg("text"));

  m.def(
      "oracle_check",
      [](std::size_t trials, std::uint64_t seed) {
        const OracleReport r = oracle_check(trials, seed);
        return py::make_tuple(r.passed, r.max_error);
      },
      py::arg("trials") = 200, py::arg("seed") = 7);
  m.def(
      "grad_check",
      [](std::uint64_t seed) {
        const GradReport r = jeit_grad_check(seed);
        return py::make_tuple(r.passed, r.result.max_rel_error);
      },
      py::arg("seed") = 7);

  m.def(
      "default_config", [] { return as_python(to_json(AppConfig{})); },
      "The full default configuration as a dict");
  m.def(
      "run_experiment",
      [](const std::vector<std::string>& overrides) {
        const AppConfig cfg = load_config(std::nullopt, overrides);
        nlohmann::json report;
        {
          py::gil_scoped_release release;
          report = run_experiment(cfg, prepare(generate_corpus(cfg.corpus)));
        }
        return as_python(report);
      },
      py::arg("overrides") = std::vector<std::string>{},
      "Generates the corpus in memory, trains every (seed, regime) pair and returns the report");
}
