#pragma once

#include <cstdint>
#include <map>

#include "rlab/data.hpp"
#include "rlab/rng.hpp"

namespace rlab::attack {

// Where to insert the attack sentence. Index(i) with 0 <= i <= T; Random
// draws uniformly from {0..T}.
struct InsertPosition {
  enum Kind { First, Last, Index, Random } kind = First;
  int index = 0;

  static InsertPosition first() { return {First, 0}; }
  static InsertPosition last() { return {Last, 0}; }
  static InsertPosition at(int i) { return {Index, i}; }
  static InsertPosition random() { return {Random, 0}; }
};

InsertPosition parse_position(const std::string& spec);

// Word -> antonym mapping with symmetric closure, plus a replacement-noun
// pool for building adversarial sentences.
class AntonymLexicon {
 public:
  // TSV rows `word<TAB>antonym`; closure is applied so lookups work both
  // ways. A word mapping to itself is rejected.
  static AntonymLexicon load(const std::string& tsv_path,
                             const std::string& noun_pool_path);
  static AntonymLexicon from_pairs(
      const std::vector<std::pair<std::string, std::string>>& pairs,
      std::vector<std::string> noun_pool);

  const std::string* antonym(const std::string& word) const;
  const std::vector<std::string>& noun_pool() const { return nouns_; }

 private:
  std::map<std::string, std::string> map_;
  std::vector<std::string> nouns_;
};

struct AttackedExample {
  Example example;  // carries the record in example.attack as well
  AttackRecord record;
};

// One sentence of `length` tokens sampled uniformly from `vocab`, excluding
// the example's protected words so the label is preserved by construction.
AttackedExample attack_rand(const Example& ex, int length, const std::vector<Token>& vocab,
                            InsertPosition pos, std::uint64_t seed);

// One sentence sampled from an out-of-domain pool; sentences that fail the
// label-preservation check are resampled, erroring after 100 rejections.
AttackedExample attack_wiki(const Example& ex, const std::vector<Sentence>& pool,
                            InsertPosition pos, std::uint64_t seed);

// Query-derived adversarial sentence with high lexical overlap:
//   - with a query: copy it, swap the entity noun for a pool noun and the
//     predicate for its antonym ("e3 has a7" -> "e9 lacks a7");
//   - token-level reviews: "the SUBJECT looks ADJ" with an off-target subject
//     and an adjective of polarity opposite to the label.
AttackedExample attack_adv(const Example& ex, const AntonymLexicon& lexicon,
                           InsertPosition pos, std::uint64_t seed);

// Review-style adversarial sentence with explicit lexical choices, used by
// the lexical sensitivity sweep.
Sentence make_review_attack_sentence(const std::string& subject, const std::string& adjective);

// Inserts `sentence` into the context at the resolved position, shifting the
// gold mask so existing units keep their identity. The attacked example has
// T+1 sentences.
AttackedExample insert_sentence(const Example& ex, const Sentence& sentence,
                                AttackKind kind, InsertPosition pos, std::uint64_t seed);

// True iff the attack sentence mentions neither the query entity nor the
// target aspect word of the original example.
bool verify_label_preserving(const Example& original, const AttackRecord& record);

// Loads the bundled out-of-domain sentence pool (one sentence per line).
std::vector<Sentence> load_sentence_pool(const std::string& path);

}  // namespace rlab::attack
