#include "rlab/attack.hpp"

#include <algorithm>
#include <sstream>

#include "rlab/io.hpp"

namespace rlab::attack {

namespace {

bool mentions(const std::vector<Token>& tokens, const std::vector<std::string>& words) {
  for (const auto& t : tokens)
    for (const auto& w : words)
      if (t.text == w) return true;
  return false;
}

int resolve_position(InsertPosition pos, int T, Rng& rng) {
  switch (pos.kind) {
    case InsertPosition::First: return 0;
    case InsertPosition::Last: return T;
    case InsertPosition::Index:
      if (pos.index < 0 || pos.index > T)
        throw std::invalid_argument("insert position " + std::to_string(pos.index) +
                                    " out of range [0, " + std::to_string(T) + "]");
      return pos.index;
    case InsertPosition::Random: return rand_index(rng, T + 1);
  }
  return 0;
}

}  // namespace

InsertPosition parse_position(const std::string& spec) {
  if (spec == "first") return InsertPosition::first();
  if (spec == "last") return InsertPosition::last();
  if (spec == "random") return InsertPosition::random();
  if (spec.rfind("index:", 0) == 0) {
    try {
      return InsertPosition::at(std::stoi(spec.substr(6)));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad position spec '" + spec + "'");
    }
  }
  throw std::invalid_argument("bad position spec '" + spec +
                              "' (expected first|last|random|index:N)");
}

AntonymLexicon AntonymLexicon::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs,
    std::vector<std::string> noun_pool) {
  AntonymLexicon lex;
  for (const auto& [a, b] : pairs) {
    if (a == b)
      throw std::invalid_argument("lexicon: word '" + a + "' maps to itself");
    lex.map_[a] = b;
    lex.map_[b] = a;  // symmetric closure
  }
  lex.nouns_ = std::move(noun_pool);
  return lex;
}

AntonymLexicon AntonymLexicon::load(const std::string& tsv_path,
                                    const std::string& noun_pool_path) {
  std::vector<std::pair<std::string, std::string>> pairs;
  int lineno = 0;
  for (const auto& line : io::read_lines(tsv_path)) {
    ++lineno;
    if (line[0] == '#') continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size())
      throw std::runtime_error("lexicon: " + tsv_path + ":" + std::to_string(lineno) +
                               ": expected word<TAB>antonym");
    pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
  }
  std::vector<std::string> nouns = io::read_lines(noun_pool_path);
  if (nouns.empty())
    throw std::runtime_error("lexicon: empty noun pool " + noun_pool_path);
  return from_pairs(pairs, std::move(nouns));
}

const std::string* AntonymLexicon::antonym(const std::string& word) const {
  auto it = map_.find(word);
  return it == map_.end() ? nullptr : &it->second;
}

AttackedExample insert_sentence(const Example& ex, const Sentence& sentence,
                                AttackKind kind, InsertPosition pos, std::uint64_t seed) {
  if (sentence.tokens.empty())
    throw std::invalid_argument("insert_sentence: empty attack sentence");
  const int T = static_cast<int>(ex.context.size());
  Rng rng = make_rng(seed, "insert");
  const int at = resolve_position(pos, T, rng);

  AttackedExample out;
  out.example = ex;
  Sentence attacked = sentence;
  attacked.origin = Origin::Attack;
  out.example.context.insert(out.example.context.begin() + at, attacked);

  AttackRecord rec;
  rec.kind = kind;
  rec.inserted_index = at;
  rec.tokens = sentence.tokens;
  if (ex.granularity == Granularity::Sentence) {
    rec.unit_begin = at;
    rec.unit_count = 1;
    if (ex.gold_mask.has_value()) {
      auto mask = *ex.gold_mask;
      mask.insert(mask.begin() + at, 0);
      out.example.gold_mask = std::move(mask);
    }
  } else {
    rec.unit_begin = sentence_unit_offset(out.example, at);
    rec.unit_count = static_cast<int>(sentence.tokens.size());
    if (ex.gold_mask.has_value()) {
      auto mask = *ex.gold_mask;
      mask.insert(mask.begin() + rec.unit_begin, static_cast<size_t>(rec.unit_count), 0);
      out.example.gold_mask = std::move(mask);
    }
  }
  out.record = rec;
  out.example.attack = rec;
  return out;
}

AttackedExample attack_rand(const Example& ex, int length, const std::vector<Token>& vocab,
                            InsertPosition pos, std::uint64_t seed) {
  if (length < 1) throw std::invalid_argument("attack_rand: length must be >= 1");
  if (vocab.empty()) throw std::invalid_argument("attack_rand: empty vocabulary");
  const auto prot = protected_words(ex);
  std::vector<const Token*> safe;
  safe.reserve(vocab.size());
  for (const auto& t : vocab) {
    bool protected_word = false;
    for (const auto& w : prot) protected_word = protected_word || t.text == w;
    if (!protected_word) safe.push_back(&t);
  }
  if (safe.empty())
    throw std::invalid_argument("attack_rand: vocabulary has only protected words");
  Rng rng = make_rng(seed, "attack_rand/" + ex.id);
  Sentence s;
  for (int i = 0; i < length; ++i)
    s.tokens.push_back(*safe[static_cast<size_t>(rand_index(rng, static_cast<int>(safe.size())))]);
  return insert_sentence(ex, s, AttackKind::Rand, pos, rng());
}

AttackedExample attack_wiki(const Example& ex, const std::vector<Sentence>& pool,
                            InsertPosition pos, std::uint64_t seed) {
  if (pool.empty()) throw std::invalid_argument("attack_wiki: empty sentence pool");
  Rng rng = make_rng(seed, "attack_wiki/" + ex.id);
  const auto prot = protected_words(ex);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Sentence& cand = pool[static_cast<size_t>(rand_index(rng, static_cast<int>(pool.size())))];
    if (mentions(cand.tokens, prot)) continue;
    return insert_sentence(ex, cand, AttackKind::Wiki, pos, rng());
  }
  throw std::runtime_error("attack_wiki: no label-preserving pool sentence after 100 draws for " +
                           ex.id);
}

Sentence make_review_attack_sentence(const std::string& subject,
                                     const std::string& adjective) {
  Sentence s;
  s.tokens = {{"the", Tag::Other},
              {subject, Tag::Noun},
              {"looks", Tag::Verb},
              {adjective, Tag::Adj}};
  return s;
}

AttackedExample attack_adv(const Example& ex, const AntonymLexicon& lexicon,
                           InsertPosition pos, std::uint64_t seed) {
  Rng rng = make_rng(seed, "attack_adv/" + ex.id);
  const auto prot = protected_words(ex);

  auto pick_noun = [&]() -> std::string {
    std::vector<const std::string*> safe;
    for (const auto& n : lexicon.noun_pool()) {
      bool is_protected = false;
      for (const auto& w : prot) is_protected = is_protected || n == w;
      if (!is_protected) safe.push_back(&n);
    }
    if (safe.empty())
      throw std::runtime_error("attack_adv: noun pool has no off-target noun for " + ex.id);
    return *safe[static_cast<size_t>(rand_index(rng, static_cast<int>(safe.size())))];
  };

  Sentence adv;
  if (ex.query.has_value()) {
    // Copy the query, replace the entity noun, antonymize the predicate.
    adv.tokens = ex.query->tokens;
    if (adv.tokens.size() < 2)
      throw std::invalid_argument("attack_adv: query of " + ex.id + " is too short");
    size_t entity_at = 0;
    for (size_t i = 0; i < adv.tokens.size(); ++i)
      if (adv.tokens[i].tag == Tag::Noun) {
        entity_at = i;
        break;
      }
    size_t predicate_at = entity_at + 1 < adv.tokens.size() ? entity_at + 1 : 1;
    for (size_t i = entity_at + 1; i < adv.tokens.size(); ++i)
      if (adv.tokens[i].tag == Tag::Verb || adv.tokens[i].tag == Tag::Adj) {
        predicate_at = i;
        break;
      }
    const std::string& pred = adv.tokens[predicate_at].text;
    const std::string* ant = lexicon.antonym(pred);
    if (ant == nullptr)
      throw std::runtime_error("attack_adv: no antonym for token '" + pred + "' in " +
                               ex.id);
    adv.tokens[entity_at] = {pick_noun(), Tag::Noun};
    adv.tokens[predicate_at].text = *ant;
  } else {
    if (!ex.gold_mask.has_value() || ex.granularity != Granularity::Token)
      throw std::invalid_argument(
          "attack_adv: example needs a query or a token-level target phrase");
    // Locate the target adjective inside the gold phrase and flip it.
    const Token* target_adj = nullptr;
    int unit = 0;
    for (const auto& s : ex.context)
      for (const auto& t : s.tokens) {
        if ((*ex.gold_mask)[static_cast<size_t>(unit)] == 1 && t.tag == Tag::Adj)
          target_adj = &t;
        ++unit;
      }
    if (target_adj == nullptr)
      throw std::runtime_error("attack_adv: no adjective in the gold phrase of " + ex.id);
    const std::string* ant = lexicon.antonym(target_adj->text);
    if (ant == nullptr)
      throw std::runtime_error("attack_adv: no antonym for token '" + target_adj->text +
                               "' in " + ex.id);
    adv = make_review_attack_sentence(pick_noun(), *ant);
  }

  AttackedExample out = insert_sentence(ex, adv, AttackKind::Adv, pos, rng());
  if (!verify_label_preserving(ex, out.record))
    throw std::runtime_error("attack_adv: generated attack is not label-preserving for " +
                             ex.id);
  return out;
}

bool verify_label_preserving(const Example& original, const AttackRecord& record) {
  return !mentions(record.tokens, protected_words(original));
}

std::vector<Sentence> load_sentence_pool(const std::string& path) {
  std::vector<Sentence> pool;
  for (const auto& line : io::read_lines(path)) {
    if (line[0] == '#') continue;
    Sentence s;
    std::istringstream words(line);
    std::string w;
    while (words >> w) s.tokens.push_back({w, Tag::Other});
    if (!s.tokens.empty()) pool.push_back(std::move(s));
  }
  if (pool.empty()) throw std::runtime_error("sentence pool " + path + " is empty");
  return pool;
}

}  // namespace rlab::attack
