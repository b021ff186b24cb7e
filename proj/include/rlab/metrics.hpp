#pragma once

#include <array>
#include <optional>

#include "rlab/attack.hpp"
#include "rlab/data.hpp"
#include "rlab/model.hpp"

namespace rlab::metrics {

// Quadrants of the gold-selected x attack-selected breakdown.
enum Quadrant { kGoldYesAttackYes = 0, kGoldYesAttackNo = 1,
                kGoldNoAttackYes = 2, kGoldNoAttackNo = 3 };

struct EvalRecord {
  std::string id;
  int predicted = 0;
  bool correct = false;
  std::vector<int> pred_mask;                 // hard 0/1 rationale over units
  std::optional<std::vector<int>> gold_mask;  // over the same units
  std::optional<AttackRecord> attack;
  Granularity granularity = Granularity::Sentence;
  std::optional<double> gr;
  std::optional<double> ar;
  std::optional<double> iou;
  std::optional<Quadrant> quadrant;  // only attacked examples with a gold mask
};

// Fills gr/ar/iou/quadrant from the masks present on the record.
void annotate(EvalRecord& rec);

double task_score(const std::vector<EvalRecord>& records);  // mean accuracy

// Mean original score minus mean attacked score, paired over example ids.
double delta(const std::vector<EvalRecord>& original,
             const std::vector<EvalRecord>& attacked);

// Set F1 over selected unit indices; 0 when exactly one side is empty.
double gold_rationale_f1(const std::vector<int>& pred_mask,
                         const std::vector<int>& gold_mask);

// Sentence level: 1 if the inserted sentence is selected; token level:
// selected attack tokens / total attack tokens.
double attack_capture_rate(const std::vector<int>& pred_mask, const AttackRecord& attack,
                           Granularity granularity);

double iou(const std::vector<int>& pred_mask, const std::vector<int>& gold_mask);

double mean_gr(const std::vector<EvalRecord>& records);
double mean_ar(const std::vector<EvalRecord>& records);

struct QuadrantCell {
  int count = 0;
  double accuracy = 0.0;    // in [0,1]; 0 when the cell is empty
  double population = 0.0;  // fraction of attacked records in [0,1]
};

struct QuadrantTable {
  std::array<QuadrantCell, 4> cells;
  int total = 0;
};

QuadrantTable quadrant_breakdown(const std::vector<EvalRecord>& records);

struct SweepPoint {
  int position = 0;
  double score = 0.0;
  double ar = 0.0;
};

struct AttackInputs {
  AttackKind kind = AttackKind::Adv;
  int rand_length = 8;
  std::vector<Token> vocab;                       // Rand
  std::vector<Sentence> pool;                     // Wiki
  const attack::AntonymLexicon* lexicon = nullptr;  // Adv
};

attack::AttackedExample build_attack(const Example& ex, const AttackInputs& inputs,
                                     attack::InsertPosition pos, std::uint64_t seed);

// Runs inference and fills a fully annotated record.
EvalRecord evaluate_example(const Example& ex, const model::ModelParams& params);

// Evaluates the frozen model with the attack inserted at every index 0..T,
// returning (position, task score, attack capture rate) per index.
std::vector<SweepPoint> position_sweep(const model::ModelParams& params,
                                       const Dataset& clean_test,
                                       const AttackInputs& inputs, std::uint64_t seed);

struct LexicalPoint {
  std::string adjective;
  double selection_rate = 0.0;
};

// For each adjective, the fraction of attacked examples where the attack
// enters the rationale (the adjective token at token granularity, the attack
// sentence at sentence granularity). Attacks use "the SUBJECT looks ADJ" with
// an off-target subject, inserted at the start and at the end.
std::vector<LexicalPoint> lexical_sweep(const model::ModelParams& params,
                                        const Dataset& clean_test,
                                        const std::vector<std::string>& adjectives,
                                        const std::vector<std::string>& subjects,
                                        std::uint64_t seed);

std::string sweep_csv(const std::vector<SweepPoint>& curve);
std::string lexical_csv(const std::vector<LexicalPoint>& points);

}  // namespace rlab::metrics
