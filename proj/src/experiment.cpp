#include "rlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>

#include "rlab/io.hpp"

namespace rlab::exp {

namespace {

using metrics::EvalRecord;
using model::ModelKind;
using nlohmann::ordered_json;

double pct(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

metrics::AttackInputs attack_inputs_for(AttackKind kind, const Dataset& test,
                                        const LoadedResources& res) {
  metrics::AttackInputs in;
  in.kind = kind;
  switch (kind) {
    case AttackKind::Rand: in.vocab = corpus::dataset_vocab(test); break;
    case AttackKind::Wiki: in.pool = res.pool; break;
    case AttackKind::Adv: in.lexicon = &res.lexicon; break;
  }
  return in;
}

std::vector<EvalRecord> eval_records(const Dataset& ds, const model::ModelParams& params) {
  std::vector<EvalRecord> records;
  records.reserve(ds.examples.size());
  for (const auto& ex : ds.examples)
    records.push_back(metrics::evaluate_example(ex, params));
  return records;
}

std::vector<EvalRecord> attacked_records(const Dataset& test,
                                         const model::ModelParams& params,
                                         const metrics::AttackInputs& inputs,
                                         attack::InsertPosition pos, std::uint64_t seed) {
  std::vector<EvalRecord> records;
  records.reserve(test.examples.size());
  for (size_t i = 0; i < test.examples.size(); ++i) {
    auto attacked = metrics::build_attack(test.examples[i], inputs, pos,
                                          derive_seed(seed, "atk", i));
    records.push_back(metrics::evaluate_example(attacked.example, params));
  }
  return records;
}

ordered_json quadrant_json(const metrics::QuadrantTable& q) {
  static const char* kNames[4] = {"gold_yes_attack_yes", "gold_yes_attack_no",
                                  "gold_no_attack_yes", "gold_no_attack_no"};
  ordered_json j;
  for (int i = 0; i < 4; ++i) {
    ordered_json cell;
    cell["accuracy"] = pct(q.cells[static_cast<size_t>(i)].accuracy);
    cell["population"] = pct(q.cells[static_cast<size_t>(i)].population);
    cell["count"] = q.cells[static_cast<size_t>(i)].count;
    j[kNames[i]] = cell;
  }
  return j;
}

}  // namespace

AttackResources AttackResources::defaults() {
  AttackResources r;
  r.lexicon_path = std::string(RLAB_DATA_DIR) + "/antonyms.tsv";
  r.noun_pool_path = std::string(RLAB_DATA_DIR) + "/replacement_nouns.txt";
  r.sentence_pool_path = std::string(RLAB_DATA_DIR) + "/distractor_pool.txt";
  return r;
}

LoadedResources load_resources(const AttackResources& paths) {
  LoadedResources res;
  res.lexicon = attack::AntonymLexicon::load(paths.lexicon_path, paths.noun_pool_path);
  res.pool = attack::load_sentence_pool(paths.sentence_pool_path);
  return res;
}

std::string attack_kind_key(AttackKind kind) {
  switch (kind) {
    case AttackKind::Rand: return "rand";
    case AttackKind::Wiki: return "wiki";
    case AttackKind::Adv: return "adv";
  }
  return "rand";
}

ModelEval evaluate_model(const model::ModelParams& params, const Dataset& test,
                         const std::vector<AttackKind>& kinds,
                         const LoadedResources& res, std::uint64_t seed) {
  ModelEval eval;
  std::vector<EvalRecord> clean = eval_records(test, params);
  eval.clean_score = metrics::task_score(clean);
  eval.gr_clean = metrics::mean_gr(clean);
  for (AttackKind kind : kinds) {
    metrics::AttackInputs inputs = attack_inputs_for(kind, test, res);
    std::uint64_t kseed = derive_seed(seed, attack_kind_key(kind));
    auto first = attacked_records(test, params, inputs, attack::InsertPosition::first(),
                                  derive_seed(kseed, "first"));
    auto last = attacked_records(test, params, inputs, attack::InsertPosition::last(),
                                 derive_seed(kseed, "last"));
    AttackEval a;
    a.attacked_score = 0.5 * (metrics::task_score(first) + metrics::task_score(last));
    a.delta = eval.clean_score - a.attacked_score;
    a.gr_attacked = 0.5 * (metrics::mean_gr(first) + metrics::mean_gr(last));
    a.ar = 0.5 * (metrics::mean_ar(first) + metrics::mean_ar(last));
    a.quadrant_first = metrics::quadrant_breakdown(first);
    eval.attacks[attack_kind_key(kind)] = a;
  }
  return eval;
}

ordered_json eval_report_json(const ModelEval& eval) {
  ordered_json j;
  j["original_score"] = pct(eval.clean_score);
  j["gr_original"] = pct(eval.gr_clean);
  ordered_json attacks;
  for (const auto& [kind, a] : eval.attacks) {
    ordered_json aj;
    aj["attacked_score"] = pct(a.attacked_score);
    aj["delta"] = pct(a.delta);
    aj["gr_attacked"] = pct(a.gr_attacked);
    aj["ar"] = pct(a.ar);
    aj["quadrant_first"] = quadrant_json(a.quadrant_first);
    attacks[kind] = aj;
  }
  j["attacks"] = attacks;
  return j;
}

RunResult run_one(const RunSpec& spec, const LoadedResources& res) {
  corpus::SplitDataset data = spec.model.granularity == Granularity::Sentence
                                  ? corpus::generate_synthfact(spec.data)
                                  : corpus::generate_synthreview(spec.data);
  train::TrainConfig tc = spec.train;
  tc.art_enabled = spec.art;
  RunResult out;
  out.trained = train::train(data.train, data.dev, spec.model, tc,
                             spec.art ? &res.pool : nullptr);
  out.eval = evaluate_model(out.trained.params, data.test,
                            {AttackKind::Rand, AttackKind::Wiki, AttackKind::Adv}, res,
                            derive_seed(tc.seed, "eval"));
  return out;
}

namespace {

struct VariantSpec {
  ModelKind kind;
  bool art;
};

RunSpec make_run_spec(ModelKind kind, bool art, std::uint64_t seed) {
  RunSpec spec;
  spec.data.seed = seed;
  spec.model.kind = kind;
  spec.model.granularity = Granularity::Sentence;
  spec.train.seed = seed;
  spec.art = art;
  return spec;
}

std::string variant_name(ModelKind kind, bool art) {
  return model::kind_name(kind) + (art ? "+art" : "");
}

}  // namespace

ordered_json repro(std::uint64_t root_seed, const AttackResources& paths,
                   const std::string& out_dir, bool quiet) {
  LoadedResources res = load_resources(paths);
  const std::vector<VariantSpec> variants = {
      {ModelKind::FC, false},     {ModelKind::VIB, false},   {ModelKind::SPECTRA, false},
      {ModelKind::FCsup, false},  {ModelKind::VIBsup, false},
      {ModelKind::VIB, true},     {ModelKind::VIBsup, true}, {ModelKind::FCsup, true},
      {ModelKind::SPECTRA, true}};
  const std::vector<std::uint64_t> seeds = {root_seed, root_seed + 1, root_seed + 2};

  ordered_json runs = ordered_json::object();
  // variant -> metric -> per-seed values (full precision for the checks)
  std::map<std::string, std::map<std::string, std::vector<double>>> raw;
  std::map<std::string, std::vector<metrics::QuadrantTable>> quadrants;
  std::vector<metrics::SweepPoint> vib_position_curve;

  for (const auto& v : variants) {
    const std::string name = variant_name(v.kind, v.art);
    ordered_json per_seed = ordered_json::object();
    for (std::uint64_t seed : seeds) {
      if (!quiet)
        std::cerr << "[repro] " << name << " seed " << seed << "\n";
      RunSpec spec = make_run_spec(v.kind, v.art, seed);
      RunResult run = run_one(spec, res);
      per_seed["seed" + std::to_string(seed)] = eval_report_json(run.eval);

      auto& m = raw[name];
      m["clean"].push_back(run.eval.clean_score * 100.0);
      m["gr_clean"].push_back(run.eval.gr_clean * 100.0);
      for (const auto& [kind, a] : run.eval.attacks) {
        m["delta_" + kind].push_back(a.delta * 100.0);
        m["ar_" + kind].push_back(a.ar * 100.0);
        m["gr_" + kind].push_back(a.gr_attacked * 100.0);
      }
      if (v.kind == ModelKind::VIB)
        quadrants[name].push_back(run.eval.attacks.at("adv").quadrant_first);
      if (v.kind == ModelKind::VIB && !v.art && seed == seeds.front()) {
        metrics::AttackInputs inputs;
        inputs.kind = AttackKind::Adv;
        inputs.lexicon = &res.lexicon;
        corpus::SplitDataset data = corpus::generate_synthfact(spec.data);
        vib_position_curve = metrics::position_sweep(run.trained.params, data.test, inputs,
                                                     derive_seed(seed, "possweep"));
      }
    }
    runs[name] = per_seed;
  }

  auto mean_of = [&](const std::string& variant, const std::string& key) {
    const auto& v = raw.at(variant).at(key);
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
  };

  ordered_json trends = ordered_json::array();
  auto add_trend = [&](const std::string& name, double value, double threshold,
                       bool pass) {
    ordered_json t;
    t["name"] = name;
    t["value"] = std::round(value * 1000.0) / 1000.0;
    t["threshold"] = threshold;
    t["pass"] = pass;
    trends.push_back(t);
  };

  // Full-context models degrade more than rationale models under the
  // adversarial attack.
  double gap_vib = mean_of("fc", "delta_adv") - mean_of("vib", "delta_adv");
  add_trend("delta_adv(fc) - delta_adv(vib) >= 5", gap_vib, 5.0, gap_vib >= 5.0);
  double gap_spectra = mean_of("fc", "delta_adv") - mean_of("spectra", "delta_adv");
  add_trend("delta_adv(fc) - delta_adv(spectra) >= 5", gap_spectra, 5.0,
            gap_spectra >= 5.0);
  for (const char* m : {"fc", "vib", "spectra", "fcsup", "vibsup"}) {
    double clean = mean_of(m, "clean");
    add_trend(std::string("clean(") + m + ") >= 85", clean, 85.0, clean >= 85.0);
  }
  // Random and out-of-domain insertions barely move any model.
  for (const char* m : {"fc", "vib", "spectra", "fcsup", "vibsup"}) {
    for (const char* k : {"rand", "wiki"}) {
      double d = mean_of(m, std::string("delta_") + k);
      add_trend(std::string("delta_") + k + "(" + m + ") <= 3", d, 3.0, d <= 3.0);
    }
  }
  // Rationale supervision: better gold rationales, worse attack capture.
  double gr_gap = mean_of("vibsup", "gr_clean") - mean_of("vib", "gr_clean");
  add_trend("gr_clean(vibsup) > gr_clean(vib)", gr_gap, 0.0, gr_gap > 0.0);
  double ar_gap = mean_of("vibsup", "ar_adv") - mean_of("vib", "ar_adv");
  add_trend("ar_adv(vibsup) > ar_adv(vib)", ar_gap, 0.0, ar_gap > 0.0);
  // Augmented rationale training helps, per-seed majority.
  {
    const auto& d_vib = raw.at("vib").at("delta_adv");
    const auto& d_art = raw.at("vib+art").at("delta_adv");
    const auto& ar_vib = raw.at("vib").at("ar_adv");
    const auto& ar_art = raw.at("vib+art").at("ar_adv");
    int delta_wins = 0, ar_wins = 0, pop_wins = 0;
    for (size_t i = 0; i < seeds.size(); ++i) {
      if (d_vib[i] - d_art[i] >= 2.0) ++delta_wins;
      if (ar_vib[i] - ar_art[i] >= 10.0) ++ar_wins;
      double pop_vib = quadrants["vib"][i].cells[metrics::kGoldYesAttackNo].population;
      double pop_art = quadrants["vib+art"][i].cells[metrics::kGoldYesAttackNo].population;
      if (pop_art > pop_vib) ++pop_wins;
    }
    int majority = static_cast<int>(seeds.size()) / 2 + 1;
    add_trend("art: delta_adv(vib) drops by >= 2 (seed majority)",
              static_cast<double>(delta_wins), majority, delta_wins >= majority);
    add_trend("art: ar_adv(vib) drops by >= 10 (seed majority)",
              static_cast<double>(ar_wins), majority, ar_wins >= majority);
    add_trend("art: gold-yes/attack-no population grows (seed majority)",
              static_cast<double>(pop_wins), majority, pop_wins >= majority);
  }
  // Position sensitivity: first vs last insertion score differs.
  {
    double first_score = vib_position_curve.front().score * 100.0;
    double last_score = vib_position_curve.back().score * 100.0;
    double diff = first_score - last_score;
    add_trend("position: |score(first) - score(last)| > 0 for vib", diff, 0.0,
              std::abs(diff) > 0.0);
  }

  ordered_json report;
  report["root_seed"] = root_seed;
  report["seeds"] = seeds;
  ordered_json means = ordered_json::object();
  for (const auto& [variant, table] : raw) {
    ordered_json m;
    for (const auto& [key, values] : table)
      m[key] = std::round(mean_of(variant, key) * 10.0) / 10.0;
    means[variant] = m;
  }
  report["means"] = means;
  report["trends"] = trends;
  report["runs"] = runs;
  ordered_json curve = ordered_json::array();
  for (const auto& p : vib_position_curve) {
    ordered_json pj;
    pj["position"] = p.position;
    pj["score"] = pct(p.score);
    pj["ar"] = pct(p.ar);
    curve.push_back(pj);
  }
  report["vib_position_curve"] = curve;

  io::atomic_write(out_dir + "/consolidated_report.json", report.dump(2) + "\n");
  io::atomic_write(out_dir + "/vib_position_sweep.csv",
                   metrics::sweep_csv(vib_position_curve));
  return report;
}

}  // namespace rlab::exp
