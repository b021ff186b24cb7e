#include "rlab/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"
#include "rlab/io.hpp"
#include "rlab/rng.hpp"

namespace rlab {

std::vector<std::string> protected_words(const Example& ex) {
  std::vector<std::string> words;
  if (ex.query.has_value() && !ex.query->tokens.empty()) {
    const auto& toks = ex.query->tokens;
    for (const auto& t : toks) {
      if (t.tag == Tag::Noun) {
        words.push_back(t.text);
        break;
      }
    }
    if (words.empty()) words.push_back(toks.front().text);
    return words;
  }
  if (ex.gold_mask.has_value() && ex.granularity == Granularity::Token) {
    // Target aspect noun inside the gold phrase; fall back to the second
    // token of the phrase ("the ASPECT looks ADJ").
    int unit = 0;
    std::vector<const Token*> gold_tokens;
    for (const auto& s : ex.context)
      for (const auto& t : s.tokens) {
        if ((*ex.gold_mask)[static_cast<size_t>(unit)] == 1) gold_tokens.push_back(&t);
        ++unit;
      }
    for (const auto* t : gold_tokens)
      if (t->tag == Tag::Noun) return {t->text};
    if (gold_tokens.size() >= 2) return {gold_tokens[1]->text};
  }
  return words;
}

void validate_example(const Example& ex, int num_labels) {
  if (ex.id.empty()) throw std::invalid_argument("example: empty id");
  if (ex.context.empty()) throw std::invalid_argument("example " + ex.id + ": empty context");
  auto check_sentence = [&](const Sentence& s) {
    if (s.tokens.empty())
      throw std::invalid_argument("example " + ex.id + ": empty sentence");
    for (const auto& t : s.tokens) {
      if (t.text.empty() || t.text.find_first_of(" \t\n") != std::string::npos)
        throw std::invalid_argument("example " + ex.id + ": bad token text");
    }
  };
  for (const auto& s : ex.context) check_sentence(s);
  if (ex.query.has_value()) check_sentence(*ex.query);
  if (ex.label < 0 || ex.label >= num_labels)
    throw std::invalid_argument("example " + ex.id + ": label out of range");
  if (ex.gold_mask.has_value()) {
    int L = units_of(ex);
    if (static_cast<int>(ex.gold_mask->size()) != L)
      throw std::invalid_argument("example " + ex.id + ": gold_mask length " +
                                  std::to_string(ex.gold_mask->size()) +
                                  " does not match unit count " + std::to_string(L));
    int ones = 0;
    for (int v : *ex.gold_mask) {
      if (v != 0 && v != 1)
        throw std::invalid_argument("example " + ex.id + ": gold_mask entries must be 0/1");
      ones += v;
    }
    if (ones == 0)
      throw std::invalid_argument("example " + ex.id + ": gold_mask has no selected unit");
  }
}

}  // namespace rlab

namespace rlab::corpus {

namespace {

using nlohmann::ordered_json;

const char* kDistractorVerbs[] = {"owns", "misses", "sees", "keeps"};

std::string entity_name(int i) { return "e" + std::to_string(i); }
std::string attribute_name(int i) { return "a" + std::to_string(i); }

// Evidence positions lean toward the front of the context, the way leading
// sentences carry the key fact in encyclopedia-style passages. This is what
// makes position sweeps informative.
int sample_skewed_position(Rng& rng, int T) {
  double total = 0.0;
  double w = 1.0;
  std::vector<double> weights(static_cast<size_t>(T));
  for (int i = 0; i < T; ++i) {
    weights[static_cast<size_t>(i)] = w;
    total += w;
    w *= 0.82;
  }
  double u = rand_u01(rng) * total;
  double acc = 0.0;
  for (int i = 0; i < T; ++i) {
    acc += weights[static_cast<size_t>(i)];
    if (u < acc) return i;
  }
  return T - 1;
}

std::vector<int> balanced_labels(Rng& rng, int n) {
  std::vector<int> labels(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = i % 2;
  shuffle_vec(labels, rng);
  return labels;
}

void validate_config(const SynthConfig& c) {
  if (c.context_len < 2) throw std::invalid_argument("config: context_len must be >= 2");
  if (c.num_entities <= 0 || c.num_attributes <= 0 || c.train_examples <= 0 ||
      c.dev_examples <= 0 || c.test_examples <= 0)
    throw std::invalid_argument("config: counts must be positive");
}

Dataset make_fact_split(const SynthConfig& c, const std::string& split_name, int n,
                        Rng& rng) {
  Dataset ds;
  ds.granularity = Granularity::Sentence;
  ds.label_names = {"refutes", "supports"};
  const int kSupports = 1;
  const int T = c.context_len;
  std::vector<int> labels = balanced_labels(rng, n);
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.id = "sf-" + split_name + "-" + std::to_string(i);
    ex.granularity = Granularity::Sentence;
    ex.label = labels[static_cast<size_t>(i)];
    int entity = rand_index(rng, c.num_entities);
    int attribute = rand_index(rng, c.num_attributes);
    bool has = ex.label == kSupports;

    Sentence query;
    query.tokens = {{entity_name(entity), Tag::Noun},
                    {"has", Tag::Verb},
                    {attribute_name(attribute), Tag::Noun}};
    ex.query = query;

    Sentence evidence;
    evidence.tokens = {{entity_name(entity), Tag::Noun},
                       {has ? "has" : "lacks", Tag::Verb},
                       {attribute_name(attribute), Tag::Noun}};

    int evidence_pos = sample_skewed_position(rng, T);
    ex.context.resize(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) {
      if (t == evidence_pos) {
        ex.context[static_cast<size_t>(t)] = evidence;
        continue;
      }
      int other = rand_index(rng, c.num_entities - 1);
      if (other >= entity) ++other;  // distractors never mention the query entity
      Sentence s;
      if (rand_u01(rng) < 0.05) {
        // Occasional decoy about another entity that reuses the query
        // attribute and the negative polarity verb. Harmless for the label
        // (evidence is unique by entity) but it keeps "lacks" from being an
        // evidence-only surface cue.
        s.tokens = {{entity_name(other), Tag::Noun},
                    {"lacks", Tag::Verb},
                    {attribute_name(attribute), Tag::Noun}};
      } else {
        s.tokens = {{entity_name(other), Tag::Noun},
                    {kDistractorVerbs[rand_index(rng, 4)], Tag::Verb},
                    {attribute_name(rand_index(rng, c.num_attributes)), Tag::Noun}};
      }
      ex.context[static_cast<size_t>(t)] = s;
    }
    std::vector<int> mask(static_cast<size_t>(T), 0);
    mask[static_cast<size_t>(evidence_pos)] = 1;
    ex.gold_mask = mask;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

const std::vector<std::string>& aspect_pool() {
  static const std::vector<std::string> kAspects = {
      "appearance", "aroma", "taste",   "texture", "finish", "foam",
      "color",      "balance", "body",  "clarity", "head",   "hue"};
  return kAspects;
}

std::string aspect_name(int i) {
  const auto& pool = aspect_pool();
  if (i < static_cast<int>(pool.size())) return pool[static_cast<size_t>(i)];
  return "aspect" + std::to_string(i);
}

Dataset make_review_split(const SynthConfig& c, const std::string& split_name, int n,
                          Rng& rng) {
  Dataset ds;
  ds.granularity = Granularity::Token;
  ds.label_names = {"negative", "positive"};
  const int kPositive = 1;
  const int T = c.context_len;
  const auto& pairs = review_adjective_pairs();
  std::vector<int> labels = balanced_labels(rng, n);
  for (int i = 0; i < n; ++i) {
    Example ex;
    ex.id = "sr-" + split_name + "-" + std::to_string(i);
    ex.granularity = Granularity::Token;
    ex.label = labels[static_cast<size_t>(i)];

    auto make_phrase = [&](const std::string& aspect, bool positive) {
      const auto& pair = pairs[static_cast<size_t>(rand_index(rng, static_cast<int>(pairs.size())))];
      Sentence s;
      s.tokens = {{"the", Tag::Other},
                  {aspect, Tag::Noun},
                  {"looks", Tag::Verb},
                  {positive ? pair.first : pair.second, Tag::Adj}};
      return s;
    };

    // Target aspect plus T-1 distinct other aspects, in shuffled order.
    std::vector<int> others;
    for (int a = 1; a < c.num_attributes; ++a) others.push_back(a);
    shuffle_vec(others, rng);
    std::vector<Sentence> phrases;
    phrases.push_back(make_phrase(aspect_name(0), ex.label == kPositive));
    for (int t = 0; t < T - 1; ++t) {
      bool positive = rand_index(rng, 2) == 1;
      phrases.push_back(make_phrase(aspect_name(others[static_cast<size_t>(t)]), positive));
    }
    std::vector<int> order(static_cast<size_t>(T));
    for (int t = 0; t < T; ++t) order[static_cast<size_t>(t)] = t;
    shuffle_vec(order, rng);
    ex.context.resize(static_cast<size_t>(T));
    int target_pos = 0;
    for (int t = 0; t < T; ++t) {
      ex.context[static_cast<size_t>(t)] = phrases[static_cast<size_t>(order[static_cast<size_t>(t)])];
      if (order[static_cast<size_t>(t)] == 0) target_pos = t;
    }
    std::vector<int> mask(static_cast<size_t>(units_of(ex)), 0);
    int off = sentence_unit_offset(ex, target_pos);
    for (int k = 0; k < 4; ++k) mask[static_cast<size_t>(off + k)] = 1;
    ex.gold_mask = mask;
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

std::string tag_name(Tag t) {
  switch (t) {
    case Tag::Noun: return "NOUN";
    case Tag::Adj: return "ADJ";
    case Tag::Verb: return "VERB";
    case Tag::Other: return "OTHER";
  }
  return "OTHER";
}

Tag tag_from(const std::string& s) {
  if (s == "NOUN") return Tag::Noun;
  if (s == "ADJ") return Tag::Adj;
  if (s == "VERB") return Tag::Verb;
  if (s == "OTHER") return Tag::Other;
  throw std::invalid_argument("unknown tag '" + s + "'");
}

std::string attack_kind_name(AttackKind k) {
  switch (k) {
    case AttackKind::Rand: return "rand";
    case AttackKind::Wiki: return "wiki";
    case AttackKind::Adv: return "adv";
  }
  return "rand";
}

AttackKind attack_kind_from(const std::string& s) {
  if (s == "rand") return AttackKind::Rand;
  if (s == "wiki") return AttackKind::Wiki;
  if (s == "adv") return AttackKind::Adv;
  throw std::invalid_argument("unknown attack kind '" + s + "'");
}

}  // namespace

SplitDataset generate_synthfact(const SynthConfig& c) {
  validate_config(c);
  if (c.num_entities < 2)
    throw std::invalid_argument(
        "config: num_entities must be >= 2 so distractors can avoid the query entity");
  Rng rng = make_rng(c.seed, "synthfact");
  SplitDataset out;
  out.train = make_fact_split(c, "train", c.train_examples, rng);
  out.dev = make_fact_split(c, "dev", c.dev_examples, rng);
  out.test = make_fact_split(c, "test", c.test_examples, rng);
  return out;
}

SplitDataset generate_synthreview(const SynthConfig& c) {
  validate_config(c);
  if (c.num_attributes < c.context_len)
    throw std::invalid_argument(
        "config: num_attributes must be >= context_len for distinct aspects");
  Rng rng = make_rng(c.seed, "synthreview");
  SplitDataset out;
  out.train = make_review_split(c, "train", c.train_examples, rng);
  out.dev = make_review_split(c, "dev", c.dev_examples, rng);
  out.test = make_review_split(c, "test", c.test_examples, rng);
  return out;
}

const std::vector<std::pair<std::string, std::string>>& review_adjective_pairs() {
  static const std::vector<std::pair<std::string, std::string>> kPairs = {
      {"great", "awful"},   {"clean", "filthy"},      {"new", "old"},
      {"pretty", "disgusting"}, {"good", "bad"},      {"beautiful", "ugly"},
      {"fresh", "stale"},   {"bright", "dull"}};
  return kPairs;
}

std::vector<Token> dataset_vocab(const Dataset& dataset) {
  std::map<std::string, Tag> seen;
  auto visit = [&](const Sentence& s) {
    for (const auto& t : s.tokens) seen.emplace(t.text, t.tag);
  };
  for (const auto& ex : dataset.examples) {
    if (ex.query.has_value()) visit(*ex.query);
    for (const auto& s : ex.context) visit(s);
  }
  std::vector<Token> vocab;
  vocab.reserve(seen.size());
  for (const auto& [text, tag] : seen) vocab.push_back({text, tag});
  return vocab;
}

void save_jsonl(const Dataset& dataset, const std::string& path) {
  std::ostringstream out;
  for (const auto& ex : dataset.examples) {
    ordered_json j;
    j["id"] = ex.id;
    if (ex.query.has_value()) {
      std::vector<std::string> q;
      for (const auto& t : ex.query->tokens) q.push_back(t.text);
      j["query"] = q;
    } else {
      j["query"] = nullptr;
    }
    std::vector<std::vector<std::string>> ctx, tags;
    for (const auto& s : ex.context) {
      std::vector<std::string> words, ts;
      for (const auto& t : s.tokens) {
        words.push_back(t.text);
        ts.push_back(tag_name(t.tag));
      }
      ctx.push_back(std::move(words));
      tags.push_back(std::move(ts));
    }
    j["context"] = ctx;
    j["label"] = dataset.label_names.at(static_cast<size_t>(ex.label));
    j["granularity"] = ex.granularity == Granularity::Sentence ? "sentence" : "token";
    if (ex.gold_mask.has_value())
      j["gold_mask"] = *ex.gold_mask;
    else
      j["gold_mask"] = nullptr;
    j["tags"] = tags;
    if (ex.attack.has_value()) {
      ordered_json a;
      a["kind"] = attack_kind_name(ex.attack->kind);
      a["index"] = ex.attack->inserted_index;
      std::vector<std::string> atoks;
      for (const auto& t : ex.attack->tokens) atoks.push_back(t.text);
      a["tokens"] = atoks;
      j["attack"] = a;
    }
    out << j.dump() << "\n";
  }
  io::atomic_write(path, out.str());
}

Dataset load_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_jsonl: cannot open " + path);
  Dataset ds;
  std::set<std::string> label_set;
  struct Raw {
    Example ex;
    std::string label;
    int line;
  };
  std::vector<Raw> raws;
  std::string line;
  int lineno = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto fail = [&](const std::string& what) -> std::runtime_error {
      return std::runtime_error("load_jsonl: " + path + ":" + std::to_string(lineno) +
                                ": " + what);
    };
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw fail(std::string("malformed json: ") + e.what());
    }
    for (const char* field : {"id", "query", "context", "label", "granularity",
                              "gold_mask", "tags"}) {
      if (!j.contains(field)) throw fail(std::string("missing field '") + field + "'");
    }
    Raw raw;
    raw.line = lineno;
    try {
      raw.ex.id = j["id"].get<std::string>();
    } catch (const std::exception&) {
      throw fail("field 'id' must be a string");
    }
    if (!j["context"].is_array() || j["context"].empty())
      throw fail("field 'context' must be a non-empty array of sentences");
    if (!j["tags"].is_array() || j["tags"].size() != j["context"].size())
      throw fail("field 'tags' must parallel 'context'");
    for (size_t s = 0; s < j["context"].size(); ++s) {
      const auto& sj = j["context"][s];
      const auto& tj = j["tags"][s];
      if (!sj.is_array() || sj.empty()) throw fail("empty sentence in 'context'");
      if (!tj.is_array() || tj.size() != sj.size())
        throw fail("field 'tags' must parallel 'context'");
      Sentence sent;
      for (size_t t = 0; t < sj.size(); ++t) {
        Token tok;
        try {
          tok.text = sj[t].get<std::string>();
          tok.tag = tag_from(tj[t].get<std::string>());
        } catch (const std::exception& e) {
          throw fail(std::string("bad token or tag: ") + e.what());
        }
        sent.tokens.push_back(std::move(tok));
      }
      raw.ex.context.push_back(std::move(sent));
    }
    if (!j["query"].is_null()) {
      if (!j["query"].is_array() || j["query"].empty())
        throw fail("field 'query' must be null or a non-empty token array");
      Sentence q;
      for (const auto& w : j["query"]) {
        Token tok;
        try {
          tok.text = w.get<std::string>();
        } catch (const std::exception&) {
          throw fail("field 'query' must contain strings");
        }
        q.tokens.push_back(std::move(tok));
      }
      // Query template is ENTITY [predicate] ATTRIBUTE; mark nouns so
      // label-preservation checks can find the entity.
      if (!q.tokens.empty()) q.tokens.front().tag = Tag::Noun;
      raw.ex.query = std::move(q);
    }
    try {
      raw.label = j["label"].get<std::string>();
    } catch (const std::exception&) {
      throw fail("field 'label' must be a string");
    }
    std::string gran;
    try {
      gran = j["granularity"].get<std::string>();
    } catch (const std::exception&) {
      throw fail("field 'granularity' must be a string");
    }
    if (gran == "sentence")
      raw.ex.granularity = Granularity::Sentence;
    else if (gran == "token")
      raw.ex.granularity = Granularity::Token;
    else
      throw fail("field 'granularity' must be 'sentence' or 'token'");
    if (!j["gold_mask"].is_null()) {
      std::vector<int> mask;
      if (!j["gold_mask"].is_array()) throw fail("field 'gold_mask' must be null or an array");
      for (const auto& v : j["gold_mask"]) {
        if (!v.is_number_integer()) throw fail("field 'gold_mask' must contain integers");
        mask.push_back(v.get<int>());
      }
      raw.ex.gold_mask = std::move(mask);
    }
    if (j.contains("attack") && !j["attack"].is_null()) {
      const auto& a = j["attack"];
      AttackRecord rec;
      try {
        rec.kind = attack_kind_from(a.at("kind").get<std::string>());
        rec.inserted_index = a.at("index").get<int>();
        for (const auto& w : a.at("tokens"))
          rec.tokens.push_back({w.get<std::string>(), Tag::Other});
      } catch (const std::exception& e) {
        throw fail(std::string("bad 'attack' record: ") + e.what());
      }
      if (rec.inserted_index < 0 ||
          rec.inserted_index >= static_cast<int>(raw.ex.context.size()))
        throw fail("'attack.index' out of range");
      if (rec.tokens.empty()) throw fail("'attack.tokens' must be non-empty");
      if (raw.ex.granularity == Granularity::Sentence) {
        rec.unit_begin = rec.inserted_index;
        rec.unit_count = 1;
      } else {
        rec.unit_begin = sentence_unit_offset(raw.ex, rec.inserted_index);
        rec.unit_count = static_cast<int>(rec.tokens.size());
      }
      raw.ex.attack = std::move(rec);
    }
    if (first) {
      ds.granularity = raw.ex.granularity;
      first = false;
    } else if (raw.ex.granularity != ds.granularity) {
      throw fail("mixed granularities in one dataset");
    }
    label_set.insert(raw.label);
    raws.push_back(std::move(raw));
  }
  ds.label_names.assign(label_set.begin(), label_set.end());
  auto label_id = [&](const std::string& name) {
    return static_cast<int>(std::lower_bound(ds.label_names.begin(), ds.label_names.end(),
                                             name) -
                            ds.label_names.begin());
  };
  for (auto& raw : raws) {
    raw.ex.label = label_id(raw.label);
    try {
      validate_example(raw.ex, static_cast<int>(ds.label_names.size()));
    } catch (const std::exception& e) {
      throw std::runtime_error("load_jsonl: " + path + ":" + std::to_string(raw.line) +
                               ": " + e.what());
    }
    ds.examples.push_back(std::move(raw.ex));
  }
  return ds;
}

std::array<Dataset, 3> split(const Dataset& dataset, const std::array<double, 3>& ratios,
                             std::uint64_t seed) {
  double total = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("split: ratios must sum to 1");
  for (double r : ratios)
    if (r < 0.0) throw std::invalid_argument("split: ratios must be non-negative");
  const int n = static_cast<int>(dataset.examples.size());
  std::vector<int> idx(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
  Rng rng = make_rng(seed, "split");
  shuffle_vec(idx, rng);
  int c1 = static_cast<int>(std::lround(ratios[0] * n));
  int c2 = static_cast<int>(std::lround((ratios[0] + ratios[1]) * n));
  c1 = std::clamp(c1, 0, n);
  c2 = std::clamp(c2, c1, n);
  std::array<Dataset, 3> out;
  for (auto& d : out) {
    d.granularity = dataset.granularity;
    d.label_names = dataset.label_names;
  }
  for (int i = 0; i < n; ++i) {
    const Example& ex = dataset.examples[static_cast<size_t>(idx[static_cast<size_t>(i)])];
    if (i < c1)
      out[0].examples.push_back(ex);
    else if (i < c2)
      out[1].examples.push_back(ex);
    else
      out[2].examples.push_back(ex);
  }
  return out;
}

}  // namespace rlab::corpus
