#include "jeit/metrics.hpp"

#include <algorithm>
#include <cctype>

#include "jeit/errors.hpp"

namespace jeit {
namespace {

std::string lowered(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

double EditCounts::rate() const {
  return static_cast<double>(errors()) / static_cast<double>(std::max<std::size_t>(reference, 1));
}

EditCounts& EditCounts::operator+=(const EditCounts& o) {
  substitutions += o.substitutions;
  insertions += o.insertions;
  deletions += o.deletions;
  reference += o.reference;
  return *this;
}

std::vector<AlignedPair> align(std::span<const std::string> ref,
                               std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::size_t> d((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return d[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }
  }
  std::vector<AlignedPair> path;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        at(i, j) == at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1)) {
      path.push_back({static_cast<long>(i - 1), static_cast<long>(j - 1)});
      --i;
      --j;
    } else if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      path.push_back({static_cast<long>(i - 1), -1});
      --i;
    } else {
      path.push_back({-1, static_cast<long>(j - 1)});
      --j;
    }
  }
  std::reverse(path.begin(), path.end());
  return path;
}

EditCounts edit_counts(std::span<const std::string> ref, std::span<const std::string> hyp) {
  EditCounts c;
  c.reference = ref.size();
  for (const AlignedPair& p : align(ref, hyp)) {
    if (p.ref < 0) {
      ++c.insertions;
    } else if (p.hyp < 0) {
      ++c.deletions;
    } else if (ref[static_cast<std::size_t>(p.ref)] != hyp[static_cast<std::size_t>(p.hyp)]) {
      ++c.substitutions;
    }
  }
  return c;
}

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

RateResult wer(std::span<const std::string> ref, std::span<const std::string> hyp) {
  RateResult r;
  r.counts = edit_counts(ref, hyp);
  r.rate = r.counts.rate();
  return r;
}

RateResult wer(std::string_view ref, std::string_view hyp) {
  const auto a = split_words(ref);
  const auto b = split_words(hyp);
  return wer(a, b);
}

std::vector<std::string> uppercase_residue(std::string_view text) {
  std::vector<std::string> out;
  for (const std::string& w : split_words(text)) {
    std::string kept;
    bool upper = false;
    for (char ch : w) {
      const auto u = static_cast<unsigned char>(ch);
      if (std::islower(u)) continue;
      upper = upper || std::isupper(u);
      kept.push_back(ch);
    }
    if (upper) out.push_back(std::move(kept));
  }
  return out;
}

RateResult uer(std::string_view ref, std::string_view hyp) {
  const auto a = uppercase_residue(ref);
  const auto b = uppercase_residue(hyp);
  return wer(a, b);
}

EosCounts& EosCounts::operator+=(const EosCounts& o) {
  tp += o.tp;
  fp += o.fp;
  fn += o.fn;
  return *this;
}

double EosCounts::precision() const {
  return tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double EosCounts::recall() const {
  return tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
}

EosCounts eos_counts(std::span<const std::string> ref_tokens, const std::vector<bool>& ref_eos,
                     std::span<const std::string> hyp_tokens, const std::vector<bool>& hyp_eos,
                     std::size_t window) {
  if (ref_tokens.size() != ref_eos.size() || hyp_tokens.size() != hyp_eos.size()) {
    throw DimensionError("eos_counts: token and flag sequences differ in length");
  }
  const auto path = align(ref_tokens, hyp_tokens);
  std::vector<std::size_t> ref_steps, hyp_steps;
  for (std::size_t s = 0; s < path.size(); ++s) {
    if (path[s].ref >= 0 && ref_eos[static_cast<std::size_t>(path[s].ref)]) ref_steps.push_back(s);
    if (path[s].hyp >= 0 && hyp_eos[static_cast<std::size_t>(path[s].hyp)]) hyp_steps.push_back(s);
  }
  EosCounts c;
  std::vector<bool> used(ref_steps.size(), false);
  for (std::size_t h : hyp_steps) {
    std::size_t best = ref_steps.size();
    std::size_t best_gap = window + 1;
    for (std::size_t k = 0; k < ref_steps.size(); ++k) {
      if (used[k]) continue;
      const std::size_t gap = h > ref_steps[k] ? h - ref_steps[k] : ref_steps[k] - h;
      if (gap < best_gap) {
        best_gap = gap;
        best = k;
      }
    }
    if (best < ref_steps.size()) {
      used[best] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  c.fn = ref_steps.size() - c.tp;
  return c;
}

EvalSummary summarize(std::span<const EvalItem> items, std::size_t eos_window) {
  EvalSummary s;
  s.utterances = items.size();
  double p_sum = 0.0, r_sum = 0.0;
  for (const EvalItem& it : items) {
    s.word += wer(lowered(it.ref_text), lowered(it.hyp_text)).counts;
    s.upper += uer(it.ref_text, it.hyp_text).counts;
    const EosCounts e = eos_counts(it.ref_tokens, it.ref_eos, it.hyp_tokens, it.hyp_eos,
                                   eos_window);
    s.eos += e;
    p_sum += e.precision();
    r_sum += e.recall();
  }
  if (!items.empty()) {
    s.eos_precision_macro = p_sum / static_cast<double>(items.size());
    s.eos_recall_macro = r_sum / static_cast<double>(items.size());
  }
  return s;
}

void to_json(nlohmann::json& j, const EvalSummary& s) {
  j = nlohmann::json{
      {"utterances", s.utterances},
      {"wer", s.wer()},
      {"uer", s.uer()},
      {"eos_precision", s.eos.precision()},
      {"eos_recall", s.eos.recall()},
      {"eos_precision_macro", s.eos_precision_macro},
      {"eos_recall_macro", s.eos_recall_macro},
      {"word", {{"substitutions", s.word.substitutions},
                {"insertions", s.word.insertions},
                {"deletions", s.word.deletions},
                {"reference", s.word.reference}}},
      {"upper", {{"substitutions", s.upper.substitutions},
                 {"insertions", s.upper.insertions},
                 {"deletions", s.upper.deletions},
                 {"reference", s.upper.reference}}},
      {"eos", {{"tp", s.eos.tp}, {"fp", s.eos.fp}, {"fn", s.eos.fn}}},
  };
}

void from_json(const nlohmann::json& j, EvalSummary& s) {
  auto counts = [](const nlohmann::json& c) {
    EditCounts e;
    e.substitutions = c.at("substitutions").get<std::size_t>();
    e.insertions = c.at("insertions").get<std::size_t>();
    e.deletions = c.at("deletions").get<std::size_t>();
    e.reference = c.at("reference").get<std::size_t>();
    return e;
  };
  s.utterances = j.at("utterances").get<std::size_t>();
  s.word = counts(j.at("word"));
  s.upper = counts(j.at("upper"));
  s.eos.tp = j.at("eos").at("tp").get<std::size_t>();
  s.eos.fp = j.at("eos").at("fp").get<std::size_t>();
  s.eos.fn = j.at("eos").at("fn").get<std::size_t>();
  s.eos_precision_macro = j.at("eos_precision_macro").get<double>();
  s.eos_recall_macro = j.at("eos_recall_macro").get<double>();
}

}  // namespace jeit
