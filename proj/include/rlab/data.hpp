#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace rlab {

// Coarse POS marker assigned at generation time from the template slot.
enum class Tag { Noun, Adj, Verb, Other };

struct Token {
  std::string text;  // lowercased word form, non-empty, no whitespace
  Tag tag = Tag::Other;

  // Tags are generation-time annotation; identity is the word form.
  bool operator==(const Token& o) const { return text == o.text; }
};

enum class Origin { Natural, Attack, Pseudo };

struct Sentence {
  std::vector<Token> tokens;  // at least one
  Origin origin = Origin::Natural;

  bool operator==(const Sentence& o) const { return tokens == o.tokens; }
};

enum class Granularity { Sentence, Token };

enum class AttackKind { Rand, Wiki, Adv };

// Bookkeeping for one inserted attack sentence. unit_begin/unit_count locate
// the insertion in mask space: the sentence index (count 1) at sentence
// granularity, the token span at token granularity.
struct AttackRecord {
  AttackKind kind = AttackKind::Rand;
  int inserted_index = 0;  // sentence index in the attacked context
  std::vector<Token> tokens;
  int unit_begin = 0;
  int unit_count = 1;
};

struct Example {
  std::string id;
  std::optional<Sentence> query;
  std::vector<Sentence> context;  // length T
  int label = 0;
  Granularity granularity = Granularity::Sentence;
  std::optional<std::vector<int>> gold_mask;  // 0/1 per unit, at least one 1
  std::optional<AttackRecord> attack;

  bool operator==(const Example& o) const {
    return id == o.id && query == o.query && context == o.context &&
           label == o.label && granularity == o.granularity && gold_mask == o.gold_mask;
  }
};

struct Dataset {
  std::vector<Example> examples;
  Granularity granularity = Granularity::Sentence;
  std::vector<std::string> label_names;

  bool operator==(const Dataset& o) const {
    return examples == o.examples && granularity == o.granularity &&
           label_names == o.label_names;
  }
};

// Number of maskable units: T at sentence granularity, total token count at
// token granularity. The query is never a maskable unit.
inline int units_of(const Example& ex) {
  if (ex.granularity == Granularity::Sentence) return static_cast<int>(ex.context.size());
  int n = 0;
  for (const auto& s : ex.context) n += static_cast<int>(s.tokens.size());
  return n;
}

// First token index of sentence t in the flattened token-unit space.
inline int sentence_unit_offset(const Example& ex, int sentence_index) {
  int off = 0;
  for (int i = 0; i < sentence_index; ++i)
    off += static_cast<int>(ex.context[static_cast<size_t>(i)].tokens.size());
  return off;
}

// Words an attack sentence must not mention to preserve the label: the query
// entity (first noun of the query) when a query exists, otherwise the target
// aspect noun inside the gold rationale.
std::vector<std::string> protected_words(const Example& ex);

// Throws std::invalid_argument if the example breaks a data-model invariant
// (empty sentences, bad mask length, all-zero mask, bad label).
void validate_example(const Example& ex, int num_labels);

}  // namespace rlab
