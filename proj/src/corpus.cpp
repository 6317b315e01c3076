#include "jeit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "jeit/json_util.hpp"

namespace jeit {
namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  std::size_t below(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }
  // Box-Muller; one draw per call keeps the stream easy to reason about.
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
  std::mt19937_64& gen() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// Cycles through a shuffled copy so every item is used equally often.
class Deck {
 public:
  Deck(std::vector<std::string> items, Rng& rng) : items_(std::move(items)), rng_(rng) {}
  const std::string& draw() {
    if (pos_ == 0) {
      for (std::size_t i = items_.size(); i-- > 1;) std::swap(items_[i], items_[rng_.below(i + 1)]);
    }
    const std::string& out = items_[pos_];
    pos_ = (pos_ + 1) % items_.size();
    return out;
  }

 private:
  std::vector<std::string> items_;
  Rng& rng_;
  std::size_t pos_ = 0;
};

std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

// Two-word names from consonant-vowel syllables. `taken` collects every
// word used so far so pools never share a word.
std::vector<std::string> make_names(std::size_t count, Rng& rng, std::set<std::string>& taken) {
  static constexpr std::string_view kOnset = "bdfgklmnprstvz";
  static constexpr std::string_view kVowel = "aeiou";
  static constexpr std::string_view kCoda = "nrlsk";
  auto word = [&] {
    for (;;) {
      std::string w;
      const std::size_t syllables = 2;
      for (std::size_t s = 0; s < syllables; ++s) {
        w += kOnset[rng.below(kOnset.size())];
        w += kVowel[rng.below(kVowel.size())];
      }
      if (rng.uniform() < 0.5) w += kCoda[rng.below(kCoda.size())];
      if (taken.insert(w).second) return w;
    }
  };
  std::vector<std::string> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string a = word();
    const std::string b = word();
    out.push_back(capitalize(a) + " " + capitalize(b));
  }
  return out;
}

std::vector<std::string> words_of(std::span<const std::string> phrases) {
  std::vector<std::string> out;
  for (const std::string& p : phrases) {
    std::istringstream in(p);
    for (std::string w; in >> w;) out.push_back(w);
  }
  return out;
}

struct Filler {
  Deck* entities = nullptr;
  Deck* nouns = nullptr;
  double pause_probability = 0.0;
};

// Expands one template into text and pause marks; ⟨eos⟩ follows the last word.
AnnotatedTranscript expand(std::string_view tmpl, Filler& f, Rng& rng) {
  std::istringstream in{std::string(tmpl)};
  std::vector<std::string> words;
  std::vector<PauseMark> marks;
  for (std::string slot; in >> slot;) {
    if (slot == "{P}") {
      if (words.empty()) throw ConfigError("template '" + std::string(tmpl) + "' starts with {P}");
      if (rng.uniform() < f.pause_probability) marks.push_back({words.size() - 1, PauseKind::kPause});
      continue;
    }
    std::string text = slot;
    if (slot == "{E}") {
      if (!f.entities) throw ConfigError("template '" + std::string(tmpl) + "' needs entities");
      text = f.entities->draw();
    } else if (slot == "{N}") {
      if (!f.nouns) throw ConfigError("template '" + std::string(tmpl) + "' needs nouns");
      text = f.nouns->draw();
    }
    std::istringstream parts(text);
    for (std::string w; parts >> w;) words.push_back(w);
  }
  if (words.empty()) throw ConfigError("template '" + std::string(tmpl) + "' is empty");
  AnnotatedTranscript t;
  for (std::size_t i = 0; i < words.size(); ++i) t.cased_text += (i ? " " : "") + words[i];
  marks.push_back({words.size() - 1, PauseKind::kEos});
  t.marks = std::move(marks);
  return t;
}

std::string make_id(std::string_view split, std::size_t i) {
  std::ostringstream o;
  o << split << '-';
  o.width(5);
  o.fill('0');
  o << i;
  return o.str();
}

double quantize(double v) { return std::round(v * 1e4) / 1e4; }

}  // namespace

void CorpusSpec::validate() const {
  if (feature_dim == 0) throw ConfigError("corpus.feature_dim must be positive");
  if (min_frames_per_piece < 1 || max_frames_per_piece < min_frames_per_piece) {
    throw ConfigError("corpus frames-per-piece range must satisfy 1 <= min <= max");
  }
  if (eos_frames < 1) throw ConfigError("corpus.eos_frames must be at least 1");
  if (!(noise >= 0.0)) throw ConfigError("corpus.noise must be non-negative");
  for (double p : {pause_probability, entity_template_fraction, unpaired_tail_fraction}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("corpus probabilities must lie in [0, 1]");
  }
  if (entity_templates.empty() || noun_templates.empty() || query_templates.empty()) {
    throw ConfigError("corpus template lists must be nonempty");
  }
  if (paired_train == 0) throw ConfigError("corpus.paired_train must be positive");
  const std::set<std::string> head(head_entities.begin(), head_entities.end());
  for (const std::string& e : tail_entities) {
    if (head.count(e)) throw ConfigError("entity '" + e + "' is both head and tail");
  }
  if (head_entities.empty() && head_entity_count == 0) {
    throw ConfigError("corpus needs at least one head entity");
  }
  if (tail_entities.empty() && tail_entity_count == 0) {
    throw ConfigError("corpus needs at least one tail entity");
  }
}

void to_json(nlohmann::json& j, const CorpusSpec& s) {
  j = nlohmann::json{{"seed", s.seed},
                     {"head_entities", s.head_entities},
                     {"tail_entities", s.tail_entities},
                     {"head_entity_count", s.head_entity_count},
                     {"tail_entity_count", s.tail_entity_count},
                     {"generic_nouns", s.generic_nouns},
                     {"entity_templates", s.entity_templates},
                     {"noun_templates", s.noun_templates},
                     {"query_templates", s.query_templates},
                     {"pause_probability", s.pause_probability},
                     {"entity_template_fraction", s.entity_template_fraction},
                     {"unpaired_tail_fraction", s.unpaired_tail_fraction},
                     {"feature_dim", s.feature_dim},
                     {"min_frames_per_piece", s.min_frames_per_piece},
                     {"max_frames_per_piece", s.max_frames_per_piece},
                     {"pause_frames", s.pause_frames},
                     {"eos_frames", s.eos_frames},
                     {"noise", s.noise},
                     {"vocab_size", s.vocab_size},
                     {"paired_train", s.paired_train},
                     {"unpaired_train", s.unpaired_train},
                     {"head_eval", s.head_eval},
                     {"tail_eval", s.tail_eval},
                     {"pause_eval", s.pause_eval}};
}

void from_json(const nlohmann::json& j, CorpusSpec& s) {
  static constexpr const char* kSection = "corpus";
  reject_unknown_keys(j, kSection,
                      {"seed", "head_entities", "tail_entities", "head_entity_count",
                       "tail_entity_count", "generic_nouns", "entity_templates",
                       "noun_templates", "query_templates", "pause_probability",
                       "entity_template_fraction", "unpaired_tail_fraction", "feature_dim",
                       "min_frames_per_piece", "max_frames_per_piece", "pause_frames",
                       "eos_frames", "noise", "vocab_size", "paired_train", "unpaired_train",
                       "head_eval", "tail_eval", "pause_eval"});
  read_key(j, kSection, "seed", s.seed);
  read_key(j, kSection, "head_entities", s.head_entities);
  read_key(j, kSection, "tail_entities", s.tail_entities);
  read_key(j, kSection, "head_entity_count", s.head_entity_count);
  read_key(j, kSection, "tail_entity_count", s.tail_entity_count);
  read_key(j, kSection, "generic_nouns", s.generic_nouns);
  read_key(j, kSection, "entity_templates", s.entity_templates);
  read_key(j, kSection, "noun_templates", s.noun_templates);
  read_key(j, kSection, "query_templates", s.query_templates);
  read_key(j, kSection, "pause_probability", s.pause_probability);
  read_key(j, kSection, "entity_template_fraction", s.entity_template_fraction);
  read_key(j, kSection, "unpaired_tail_fraction", s.unpaired_tail_fraction);
  read_key(j, kSection, "feature_dim", s.feature_dim);
  read_key(j, kSection, "min_frames_per_piece", s.min_frames_per_piece);
  read_key(j, kSection, "max_frames_per_piece", s.max_frames_per_piece);
  read_key(j, kSection, "pause_frames", s.pause_frames);
  read_key(j, kSection, "eos_frames", s.eos_frames);
  read_key(j, kSection, "noise", s.noise);
  read_key(j, kSection, "vocab_size", s.vocab_size);
  read_key(j, kSection, "paired_train", s.paired_train);
  read_key(j, kSection, "unpaired_train", s.unpaired_train);
  read_key(j, kSection, "head_eval", s.head_eval);
  read_key(j, kSection, "tail_eval", s.tail_eval);
  read_key(j, kSection, "pause_eval", s.pause_eval);
}

Tensor synthesize_features(const LabelBundle& bundle, const CorpusSpec& spec,
                           std::uint64_t stream) {
  const std::size_t F = spec.feature_dim;
  Rng rng(spec.seed ^ (stream * 0x9E3779B97F4A7C15ULL));
  std::vector<double> data;
  auto frame = [&](const std::vector<double>* signature) {
    for (std::size_t k = 0; k < F; ++k) {
      const double base = signature ? (*signature)[k] : 0.0;
      data.push_back(quantize(base + spec.noise * rng.normal()));
    }
  };
  std::map<TokenId, std::vector<double>> signatures;
  auto signature = [&](TokenId id) -> const std::vector<double>& {
    auto it = signatures.find(id);
    if (it != signatures.end()) return it->second;
    Rng sig_rng(spec.seed * 1000003ULL + static_cast<std::uint64_t>(id) + 1);
    std::vector<double> v(F);
    for (double& x : v) x = sig_rng.normal();
    return signatures.emplace(id, std::move(v)).first->second;
  };

  const std::size_t span = spec.max_frames_per_piece - spec.min_frames_per_piece + 1;
  for (std::size_t u = 0; u < bundle.size(); ++u) {
    const std::size_t k = spec.min_frames_per_piece + rng.below(span);
    const auto& sig = signature(bundle.asr[u]);
    for (std::size_t i = 0; i < k; ++i) frame(&sig);
    if (bundle.pause[u] == PauseTag::kPause) {
      for (std::size_t i = 0; i < spec.pause_frames; ++i) frame(nullptr);
    } else if (bundle.pause[u] == PauseTag::kEos) {
      for (std::size_t i = 0; i < spec.eos_frames; ++i) frame(nullptr);
    }
  }
  // Keep room for a terminal blank after the last token.
  while (data.size() / F < bundle.size() + 1) frame(nullptr);
  const std::size_t T = data.size() / F;
  return Tensor({T, F}, std::move(data));
}

Corpus generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  Corpus c;
  Rng names(spec.seed);
  std::set<std::string> taken;
  for (const auto* list : {&spec.entity_templates, &spec.noun_templates, &spec.query_templates}) {
    for (const std::string& w : words_of(*list)) taken.insert(lower(w));
  }
  for (const std::string& w : spec.generic_nouns) taken.insert(lower(w));
  for (const std::string& w : words_of(spec.head_entities)) taken.insert(lower(w));
  for (const std::string& w : words_of(spec.tail_entities)) taken.insert(lower(w));

  c.head_entities = spec.head_entities.empty()
                        ? make_names(spec.head_entity_count, names, taken)
                        : spec.head_entities;
  c.tail_entities = spec.tail_entities.empty()
                        ? make_names(spec.tail_entity_count, names, taken)
                        : spec.tail_entities;
  {
    const std::set<std::string> head(c.head_entities.begin(), c.head_entities.end());
    for (const std::string& e : c.tail_entities) {
      if (head.count(e)) throw ConfigError("entity '" + e + "' is both head and tail");
    }
  }

  // Tail-entity words occur in paired speech only as lowercase nouns.
  std::vector<std::string> nouns = spec.generic_nouns;
  for (const std::string& w : words_of(c.tail_entities)) nouns.push_back(lower(w));

  auto split_rng = [&](std::size_t index) { return Rng(spec.seed * 7919ULL + 101 * (index + 1)); };

  std::map<std::string, std::vector<AnnotatedTranscript>, std::less<>> texts;

  {  // paired_train
    Rng rng = split_rng(0);
    Deck ents(c.head_entities, rng), noun_deck(nouns, rng);
    Filler f{&ents, &noun_deck, spec.pause_probability};
    auto& out = texts["paired_train"];
    for (std::size_t i = 0; i < spec.paired_train; ++i) {
      const bool entity = rng.uniform() < spec.entity_template_fraction;
      const auto& pool = entity ? spec.entity_templates : spec.noun_templates;
      out.push_back(expand(pool[rng.below(pool.size())], f, rng));
    }
  }
  {  // unpaired_train
    Rng rng = split_rng(1);
    Deck head(c.head_entities, rng), tail(c.tail_entities, rng);
    Filler fh{&head, nullptr, 0.0}, ft{&tail, nullptr, 0.0};
    auto& out = texts["unpaired_train"];
    for (std::size_t i = 0; i < spec.unpaired_train; ++i) {
      Filler& f = rng.uniform() < spec.unpaired_tail_fraction ? ft : fh;
      AnnotatedTranscript t =
          expand(spec.query_templates[rng.below(spec.query_templates.size())], f, rng);
      out.push_back(annotate_unpaired(t.cased_text));
    }
  }
  auto eval_split = [&](std::string_view name, std::size_t index, std::size_t count,
                        double tail_share, double pause_probability) {
    Rng rng = split_rng(index);
    Deck head(c.head_entities, rng), tail(c.tail_entities, rng);
    auto& out = texts[std::string(name)];
    for (std::size_t i = 0; i < count; ++i) {
      Filler f{rng.uniform() < tail_share ? &tail : &head, nullptr, pause_probability};
      out.push_back(expand(spec.entity_templates[rng.below(spec.entity_templates.size())], f, rng));
    }
  };
  eval_split("head_eval", 2, spec.head_eval, 0.0, spec.pause_probability);
  eval_split("tail_eval", 3, spec.tail_eval, 1.0, spec.pause_probability);
  eval_split("pause_eval", 4, spec.pause_eval, 0.5, 1.0);

  std::vector<std::string> vocab_corpus;
  for (const auto& t : texts["paired_train"]) vocab_corpus.push_back(t.cased_text);
  c.vocab = build_vocab(vocab_corpus, spec.vocab_size);

  for (std::size_t s = 0; s < kSplits.size(); ++s) {
    const std::string_view name = kSplits[s];
    auto& records = c.splits[std::string(name)];
    const auto& list = texts[std::string(name)];
    for (std::size_t i = 0; i < list.size(); ++i) {
      Record r;
      r.id = make_id(name, i);
      r.transcript = list[i];
      r.transcript.validate();
      if (name != "unpaired_train") {
        const LabelBundle b = factorize(r.transcript, c.vocab);
        r.features = synthesize_features(b, spec, fnv1a(r.id));
      }
      records.push_back(std::move(r));
    }
  }
  return c;
}

nlohmann::json record_to_json(const Record& r) {
  nlohmann::json marks = nlohmann::json::array();
  for (const PauseMark& m : r.transcript.marks) {
    marks.push_back({{"word", m.word}, {"kind", to_string(m.kind)}});
  }
  nlohmann::json j = {{"id", r.id}, {"cased_text", r.transcript.cased_text},
                      {"pause_marks", marks}};
  if (r.features) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < r.features->rows(); ++t) {
      const auto row = r.features->row(t);
      rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    j["features"] = std::move(rows);
  }
  return j;
}

Record record_from_json(const nlohmann::json& j) {
  Record r;
  r.id = j.at("id").get<std::string>();
  r.transcript.cased_text = j.at("cased_text").get<std::string>();
  for (const auto& m : j.at("pause_marks")) {
    r.transcript.marks.push_back(
        {m.at("word").get<std::size_t>(), parse_pause_kind(m.at("kind").get<std::string>())});
  }
  if (auto it = j.find("features"); it != j.end()) {
    const auto rows = it->get<std::vector<std::vector<double>>>();
    if (rows.empty() || rows[0].empty()) throw LoadError("record " + r.id + " has empty features");
    std::vector<double> data;
    for (const auto& row : rows) {
      if (row.size() != rows[0].size()) {
        throw LoadError("record " + r.id + " has ragged feature rows");
      }
      data.insert(data.end(), row.begin(), row.end());
    }
    r.features = Tensor({rows.size(), rows[0].size()}, std::move(data));
  }
  return r;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw LoadError("cannot create directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, records] : corpus.splits) {
    const auto path = dir / (name + ".jsonl");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LoadError("cannot write " + path.string());
    for (const Record& r : records) out << record_to_json(r).dump() << '\n';
    if (!out) throw LoadError("failed writing " + path.string());
  }
  corpus.vocab.save(dir / "vocab.txt");
  std::ofstream ents(dir / "entities.json", std::ios::binary);
  if (!ents) throw LoadError("cannot write " + (dir / "entities.json").string());
  ents << nlohmann::json{{"head", corpus.head_entities}, {"tail", corpus.tail_entities}}.dump(2)
       << '\n';
}

std::vector<Record> load_split(const std::filesystem::path& dir, std::string_view split) {
  const auto path = dir / (std::string(split) + ".jsonl");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open split file " + path.string());
  std::vector<Record> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const AnnotationError& e) {
      throw LoadError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<PairedExample> to_paired(std::span<const Record> records, const Vocab& vocab) {
  std::vector<PairedExample> out;
  out.reserve(records.size());
  for (const Record& r : records) {
    if (!r.features) throw LoadError("record " + r.id + " has no features");
    PairedExample ex{r.id, *r.features, factorize(r.transcript, vocab)};
    if (ex.features.rows() < ex.bundle.size() + 1) {
      throw LoadError("record " + r.id + " has fewer frames than tokens + 1");
    }
    out.push_back(std::move(ex));
  }
  return out;
}

std::vector<UnpairedExample> to_unpaired(std::span<const Record> records, const Vocab& vocab) {
  std::vector<UnpairedExample> out;
  out.reserve(records.size());
  for (const Record& r : records) out.push_back({r.id, factorize(r.transcript, vocab)});
  return out;
}

}  // namespace jeit
