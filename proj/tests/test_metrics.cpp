#include <cmath>

#include "doctest.h"
#include "oracles.hpp"
#include "rlab/metrics.hpp"

using rlab::AttackRecord;
using rlab::Granularity;
using rlab::metrics::EvalRecord;

namespace {

std::vector<int> random_mask(rlab::Rng& rng, int L, double density) {
  std::vector<int> m(static_cast<size_t>(L), 0);
  for (auto& v : m) v = rlab::rand_u01(rng) < density ? 1 : 0;
  return m;
}

std::vector<int> random_nonempty_mask(rlab::Rng& rng, int L, double density) {
  std::vector<int> m = random_mask(rng, L, density);
  m[static_cast<size_t>(rlab::rand_index(rng, L))] = 1;
  return m;
}

}  // namespace

TEST_CASE("metric unit facts") {
  CHECK(rlab::metrics::gold_rationale_f1({1, 0, 1}, {1, 0, 1}) == doctest::Approx(1.0));
  CHECK(rlab::metrics::gold_rationale_f1({1, 0, 0}, {0, 0, 1}) == doctest::Approx(0.0));
  // pred {0,1}, gold {1,2}: precision 0.5, recall 0.5, F1 0.5
  CHECK(rlab::metrics::gold_rationale_f1({1, 1, 0}, {0, 1, 1}) == doctest::Approx(0.5));
  CHECK(rlab::metrics::gold_rationale_f1({0, 0, 0}, {0, 1, 0}) == doctest::Approx(0.0));

  CHECK(rlab::metrics::iou({0, 1, 1}, {0, 1, 1}) == doctest::Approx(1.0));
  // pred {1,2}, gold {2,3} -> 1/3
  CHECK(rlab::metrics::iou({0, 1, 1, 0}, {0, 0, 1, 1}) == doctest::Approx(1.0 / 3.0));
  CHECK(rlab::metrics::iou({1, 0, 0}, {0, 0, 1}) == doctest::Approx(0.0));

  AttackRecord rec;
  rec.unit_begin = 2;
  rec.unit_count = 1;
  CHECK(rlab::metrics::attack_capture_rate({1, 1, 0, 0}, rec, Granularity::Sentence) == 0.0);
  CHECK(rlab::metrics::attack_capture_rate({0, 0, 1, 0}, rec, Granularity::Sentence) == 1.0);
  rec.unit_begin = 1;
  rec.unit_count = 5;
  CHECK(rlab::metrics::attack_capture_rate({0, 1, 0, 1, 0, 0, 1}, rec, Granularity::Token) ==
        doctest::Approx(0.4));
}

TEST_CASE("delta facts") {
  auto rec = [](const std::string& id, bool correct) {
    EvalRecord r;
    r.id = id;
    r.correct = correct;
    return r;
  };
  std::vector<EvalRecord> orig = {rec("a", true), rec("b", true), rec("c", true),
                                  rec("d", true)};
  std::vector<EvalRecord> same = orig;
  CHECK(rlab::metrics::delta(orig, same) == doctest::Approx(0.0));

  std::vector<EvalRecord> half = {rec("a", true), rec("b", false), rec("c", true),
                                  rec("d", false)};
  CHECK(rlab::metrics::delta(orig, half) == doctest::Approx(0.5));
  // Antisymmetric under swapping the reports.
  CHECK(rlab::metrics::delta(half, orig) == doctest::Approx(-0.5));
}

TEST_CASE("quadrant examples") {
  auto make = [](std::vector<int> pred, std::vector<int> gold, int attack_idx,
                 bool correct) {
    EvalRecord r;
    r.id = "q";
    r.correct = correct;
    r.pred_mask = std::move(pred);
    r.gold_mask = std::move(gold);
    AttackRecord rec;
    rec.unit_begin = attack_idx;
    rec.unit_count = 1;
    rec.inserted_index = attack_idx;
    rec.tokens = {{"x", rlab::Tag::Other}};
    r.attack = rec;
    r.granularity = Granularity::Sentence;
    rlab::metrics::annotate(r);
    return r;
  };
  // Selecting exactly the gold sentence and not the attack: all mass in G yes A no.
  auto r = make({0, 1, 0}, {0, 1, 0}, 2, true);
  REQUIRE(r.quadrant.has_value());
  CHECK(*r.quadrant == rlab::metrics::kGoldYesAttackNo);

  std::vector<EvalRecord> records = {make({0, 1, 0}, {0, 1, 0}, 2, true),
                                     make({0, 1, 1}, {0, 1, 0}, 2, false),
                                     make({1, 0, 0}, {0, 1, 0}, 0, true),
                                     make({0, 0, 1}, {0, 1, 0}, 0, false)};
  auto table = rlab::metrics::quadrant_breakdown(records);
  CHECK(table.total == 4);
  double pop = 0.0;
  for (const auto& cell : table.cells) pop += cell.population;
  CHECK(pop == doctest::Approx(1.0));
  CHECK(table.cells[rlab::metrics::kGoldYesAttackNo].count == 1);
  CHECK(table.cells[rlab::metrics::kGoldYesAttackYes].count == 1);
  CHECK(table.cells[rlab::metrics::kGoldNoAttackYes].count == 1);
  CHECK(table.cells[rlab::metrics::kGoldNoAttackNo].count == 1);
  CHECK(table.cells[rlab::metrics::kGoldYesAttackNo].accuracy == doctest::Approx(1.0));
}

TEST_CASE("metrics match the naive oracle exactly on random pairs") {
  rlab::Rng rng(2718);
  for (int trial = 0; trial < 1000; ++trial) {
    bool sentence_level = trial % 2 == 0;
    int L = 4 + rlab::rand_index(rng, 20);
    auto pred = random_mask(rng, L, 0.3);
    auto gold = random_nonempty_mask(rng, L, 0.2);
    CHECK(rlab::metrics::gold_rationale_f1(pred, gold) == oracles::set_f1(pred, gold));
    CHECK(rlab::metrics::iou(pred, gold) == oracles::set_iou(pred, gold));

    AttackRecord rec;
    if (sentence_level) {
      rec.unit_begin = rlab::rand_index(rng, L);
      rec.unit_count = 1;
    } else {
      rec.unit_begin = rlab::rand_index(rng, L - 2);
      rec.unit_count = 1 + rlab::rand_index(rng, L - rec.unit_begin - 1);
    }
    double ar = rlab::metrics::attack_capture_rate(
        pred, rec, sentence_level ? Granularity::Sentence : Granularity::Token);
    CHECK(ar == oracles::capture_rate(pred, rec.unit_begin, rec.unit_count, sentence_level));

    EvalRecord r;
    r.id = "t";
    r.correct = rlab::rand_index(rng, 2) == 1;
    r.pred_mask = pred;
    r.gold_mask = gold;
    rec.tokens = {{"x", rlab::Tag::Other}};
    r.attack = rec;
    r.granularity = sentence_level ? Granularity::Sentence : Granularity::Token;
    rlab::metrics::annotate(r);
    REQUIRE(r.quadrant.has_value());
    CHECK(static_cast<int>(*r.quadrant) ==
          oracles::quadrant_of(pred, gold, rec.unit_begin, rec.unit_count, sentence_level));
  }
}

TEST_CASE("gr bounds and iou dominance properties") {
  rlab::Rng rng(999);
  for (int trial = 0; trial < 300; ++trial) {
    int L = 3 + rlab::rand_index(rng, 12);
    auto pred = random_nonempty_mask(rng, L, 0.4);
    auto gold = random_nonempty_mask(rng, L, 0.3);
    double f1 = rlab::metrics::gold_rationale_f1(pred, gold);
    double j = rlab::metrics::iou(pred, gold);
    CHECK(f1 >= 0.0);
    CHECK(f1 <= 1.0);
    CHECK(j >= 0.0);
    CHECK(j <= 1.0);
    // GR is 1 exactly when the sets match.
    bool equal_sets = oracles::mask_to_set(pred) == oracles::mask_to_set(gold);
    CHECK((f1 == 1.0) == equal_sets);
    // IOU is dominated by precision and recall.
    int inter = 0, np = 0, ng = 0;
    for (int i = 0; i < L; ++i) {
      np += pred[static_cast<size_t>(i)];
      ng += gold[static_cast<size_t>(i)];
      inter += pred[static_cast<size_t>(i)] * gold[static_cast<size_t>(i)];
    }
    double precision = np ? static_cast<double>(inter) / np : 0.0;
    double recall = ng ? static_cast<double>(inter) / ng : 0.0;
    CHECK(j <= precision + 1e-12);
    CHECK(j <= recall + 1e-12);
  }
}

TEST_CASE("csv emitters") {
  std::vector<rlab::metrics::SweepPoint> curve = {{0, 0.9, 0.2}, {1, 0.85, 0.1}};
  std::string csv = rlab::metrics::sweep_csv(curve);
  CHECK(csv.find("position,score,ar\n") == 0);
  CHECK(csv.find("0,0.9,0.2") != std::string::npos);
  std::vector<rlab::metrics::LexicalPoint> pts = {{"clean", 0.75}};
  CHECK(rlab::metrics::lexical_csv(pts).find("clean,0.75") != std::string::npos);
}
