#include "rlab/metrics.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace rlab::metrics {

namespace {

int count_selected(const std::vector<int>& mask) {
  int n = 0;
  for (int v : mask) n += v != 0 ? 1 : 0;
  return n;
}

int count_intersection(const std::vector<int>& a, const std::vector<int>& b) {
  int n = 0;
  for (size_t i = 0; i < a.size() && i < b.size(); ++i)
    n += (a[i] != 0 && b[i] != 0) ? 1 : 0;
  return n;
}

}  // namespace

double gold_rationale_f1(const std::vector<int>& pred_mask,
                         const std::vector<int>& gold_mask) {
  if (pred_mask.size() != gold_mask.size())
    throw std::invalid_argument("gold_rationale_f1: mask length mismatch");
  int np = count_selected(pred_mask);
  int ng = count_selected(gold_mask);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;
  int inter = count_intersection(pred_mask, gold_mask);
  if (inter == 0) return 0.0;
  double precision = static_cast<double>(inter) / static_cast<double>(np);
  double recall = static_cast<double>(inter) / static_cast<double>(ng);
  return 2.0 * precision * recall / (precision + recall);
}

double attack_capture_rate(const std::vector<int>& pred_mask, const AttackRecord& attack,
                           Granularity granularity) {
  if (granularity == Granularity::Sentence) {
    int idx = attack.unit_begin;
    if (idx < 0 || idx >= static_cast<int>(pred_mask.size()))
      throw std::invalid_argument("attack_capture_rate: attack index out of range");
    return pred_mask[static_cast<size_t>(idx)] != 0 ? 1.0 : 0.0;
  }
  if (attack.unit_count <= 0 ||
      attack.unit_begin + attack.unit_count > static_cast<int>(pred_mask.size()))
    throw std::invalid_argument("attack_capture_rate: attack span out of range");
  int captured = 0;
  for (int i = 0; i < attack.unit_count; ++i)
    captured += pred_mask[static_cast<size_t>(attack.unit_begin + i)] != 0 ? 1 : 0;
  return static_cast<double>(captured) / static_cast<double>(attack.unit_count);
}

double iou(const std::vector<int>& pred_mask, const std::vector<int>& gold_mask) {
  if (pred_mask.size() != gold_mask.size())
    throw std::invalid_argument("iou: mask length mismatch");
  int inter = count_intersection(pred_mask, gold_mask);
  int uni = count_selected(pred_mask) + count_selected(gold_mask) - inter;
  if (uni == 0) return 1.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

void annotate(EvalRecord& rec) {
  if (rec.gold_mask.has_value() && !rec.pred_mask.empty()) {
    rec.gr = gold_rationale_f1(rec.pred_mask, *rec.gold_mask);
    rec.iou = iou(rec.pred_mask, *rec.gold_mask);
  }
  if (rec.attack.has_value() && !rec.pred_mask.empty())
    rec.ar = attack_capture_rate(rec.pred_mask, *rec.attack, rec.granularity);
  if (rec.gold_mask.has_value() && rec.attack.has_value() && !rec.pred_mask.empty()) {
    // Gold covered iff every gold unit is selected.
    bool gold_covered = true;
    for (size_t i = 0; i < rec.pred_mask.size(); ++i)
      if ((*rec.gold_mask)[i] != 0 && rec.pred_mask[i] == 0) gold_covered = false;
    bool attack_selected = *rec.ar > 0.0;
    if (gold_covered)
      rec.quadrant = attack_selected ? kGoldYesAttackYes : kGoldYesAttackNo;
    else
      rec.quadrant = attack_selected ? kGoldNoAttackYes : kGoldNoAttackNo;
  }
}

double task_score(const std::vector<EvalRecord>& records) {
  if (records.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : records) acc += r.correct ? 1.0 : 0.0;
  return acc / static_cast<double>(records.size());
}

double delta(const std::vector<EvalRecord>& original,
             const std::vector<EvalRecord>& attacked) {
  std::map<std::string, bool> orig;
  for (const auto& r : original) orig[r.id] = r.correct;
  double orig_sum = 0.0, att_sum = 0.0;
  int n = 0;
  for (const auto& r : attacked) {
    auto it = orig.find(r.id);
    if (it == orig.end()) continue;
    orig_sum += it->second ? 1.0 : 0.0;
    att_sum += r.correct ? 1.0 : 0.0;
    ++n;
  }
  if (n == 0) return 0.0;
  return (orig_sum - att_sum) / static_cast<double>(n);
}

double mean_gr(const std::vector<EvalRecord>& records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records)
    if (r.gr.has_value()) {
      sum += *r.gr;
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double mean_ar(const std::vector<EvalRecord>& records) {
  double sum = 0.0;
  int n = 0;
  for (const auto& r : records)
    if (r.ar.has_value()) {
      sum += *r.ar;
      ++n;
    }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

QuadrantTable quadrant_breakdown(const std::vector<EvalRecord>& records) {
  QuadrantTable table;
  std::array<int, 4> correct = {0, 0, 0, 0};
  for (const auto& r : records) {
    if (!r.quadrant.has_value()) continue;
    int q = *r.quadrant;
    ++table.cells[static_cast<size_t>(q)].count;
    correct[static_cast<size_t>(q)] += r.correct ? 1 : 0;
    ++table.total;
  }
  for (size_t q = 0; q < 4; ++q) {
    auto& cell = table.cells[q];
    cell.accuracy = cell.count == 0
                        ? 0.0
                        : static_cast<double>(correct[q]) / static_cast<double>(cell.count);
    cell.population = table.total == 0
                          ? 0.0
                          : static_cast<double>(cell.count) / static_cast<double>(table.total);
  }
  return table;
}

attack::AttackedExample build_attack(const Example& ex, const AttackInputs& inputs,
                                     attack::InsertPosition pos, std::uint64_t seed) {
  switch (inputs.kind) {
    case AttackKind::Rand:
      return attack::attack_rand(ex, inputs.rand_length, inputs.vocab, pos, seed);
    case AttackKind::Wiki:
      return attack::attack_wiki(ex, inputs.pool, pos, seed);
    case AttackKind::Adv:
      if (inputs.lexicon == nullptr)
        throw std::invalid_argument("build_attack: adv attack needs a lexicon");
      return attack::attack_adv(ex, *inputs.lexicon, pos, seed);
  }
  throw std::logic_error("unreachable");
}

EvalRecord evaluate_example(const Example& ex, const model::ModelParams& params) {
  model::Inference inf = model::infer(ex, params);
  EvalRecord rec;
  rec.id = ex.id;
  rec.predicted = inf.predicted;
  rec.correct = inf.predicted == ex.label;
  rec.granularity = ex.granularity;
  for (double v : inf.rationale_mask) rec.pred_mask.push_back(v > 0.5 ? 1 : 0);
  rec.gold_mask = ex.gold_mask;
  rec.attack = ex.attack;
  annotate(rec);
  return rec;
}

std::vector<SweepPoint> position_sweep(const model::ModelParams& params,
                                       const Dataset& clean_test,
                                       const AttackInputs& inputs, std::uint64_t seed) {
  if (clean_test.examples.empty())
    throw std::invalid_argument("position_sweep: empty dataset");
  int T = static_cast<int>(clean_test.examples.front().context.size());
  for (const auto& ex : clean_test.examples)
    T = std::min(T, static_cast<int>(ex.context.size()));
  std::vector<SweepPoint> curve;
  for (int pos = 0; pos <= T; ++pos) {
    std::vector<EvalRecord> records;
    records.reserve(clean_test.examples.size());
    for (size_t i = 0; i < clean_test.examples.size(); ++i) {
      auto attacked = build_attack(clean_test.examples[i], inputs,
                                   attack::InsertPosition::at(pos),
                                   derive_seed(seed, "sweep", i));
      records.push_back(evaluate_example(attacked.example, params));
    }
    SweepPoint pt;
    pt.position = pos;
    pt.score = task_score(records);
    pt.ar = mean_ar(records);
    curve.push_back(pt);
  }
  return curve;
}

std::vector<LexicalPoint> lexical_sweep(const model::ModelParams& params,
                                        const Dataset& clean_test,
                                        const std::vector<std::string>& adjectives,
                                        const std::vector<std::string>& subjects,
                                        std::uint64_t seed) {
  if (subjects.empty()) throw std::invalid_argument("lexical_sweep: no subjects");
  std::vector<LexicalPoint> points;
  for (const auto& adj : adjectives) {
    double selected = 0.0;
    int n = 0;
    for (size_t i = 0; i < clean_test.examples.size(); ++i) {
      const Example& ex = clean_test.examples[i];
      const auto prot = protected_words(ex);
      // Off-target subject, deterministic per example.
      Rng rng = make_rng(derive_seed(seed, "lex", i), adj);
      std::string subject;
      for (int attempt = 0; attempt < 100; ++attempt) {
        subject = subjects[static_cast<size_t>(rand_index(rng, static_cast<int>(subjects.size())))];
        bool ok = true;
        for (const auto& w : prot) ok = ok && subject != w;
        if (ok) break;
      }
      Sentence adv = attack::make_review_attack_sentence(subject, adj);
      for (auto pos : {attack::InsertPosition::first(), attack::InsertPosition::last()}) {
        auto attacked = attack::insert_sentence(ex, adv, AttackKind::Adv, pos, rng());
        model::Inference inf = model::infer(attacked.example, params);
        if (ex.granularity == Granularity::Sentence) {
          selected += inf.rationale_mask[static_cast<size_t>(attacked.record.unit_begin)] > 0.5
                          ? 1.0
                          : 0.0;
        } else {
          // The adjective is the last token of the template.
          int adj_unit = attacked.record.unit_begin + attacked.record.unit_count - 1;
          selected += inf.rationale_mask[static_cast<size_t>(adj_unit)] > 0.5 ? 1.0 : 0.0;
        }
        ++n;
      }
    }
    LexicalPoint pt;
    pt.adjective = adj;
    pt.selection_rate = n == 0 ? 0.0 : selected / static_cast<double>(n);
    points.push_back(pt);
  }
  return points;
}

std::string sweep_csv(const std::vector<SweepPoint>& curve) {
  std::ostringstream out;
  out << "position,score,ar\n";
  for (const auto& p : curve)
    out << p.position << "," << p.score << "," << p.ar << "\n";
  return out.str();
}

std::string lexical_csv(const std::vector<LexicalPoint>& points) {
  std::ostringstream out;
  out << "adjective,selection_rate\n";
  for (const auto& p : points) out << p.adjective << "," << p.selection_rate << "\n";
  return out.str();
}

}  // namespace rlab::metrics
