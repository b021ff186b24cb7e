#pragma once

#include <map>

#include "json.hpp"
#include "rlab/corpus.hpp"
#include "rlab/metrics.hpp"
#include "rlab/training.hpp"

namespace rlab::exp {

// File inputs for attack construction: the antonym lexicon, the replacement
// noun pool and the out-of-domain sentence pool.
struct AttackResources {
  std::string lexicon_path;
  std::string noun_pool_path;
  std::string sentence_pool_path;

  static AttackResources defaults();  // files bundled under data/
};

struct LoadedResources {
  attack::AntonymLexicon lexicon;
  std::vector<Sentence> pool;
};

LoadedResources load_resources(const AttackResources& paths);

// Evaluation of one model against one attack kind; attacked numbers average
// insertion at the start and at the end of the context.
struct AttackEval {
  double attacked_score = 0.0;
  double delta = 0.0;
  double gr_attacked = 0.0;
  double ar = 0.0;
  metrics::QuadrantTable quadrant_first;  // attack at the beginning
};

struct ModelEval {
  double clean_score = 0.0;
  double gr_clean = 0.0;
  std::map<std::string, AttackEval> attacks;  // keyed by attack kind name
};

std::string attack_kind_key(AttackKind kind);

// Evaluates params on the clean test set and on its attacked variants for the
// requested kinds.
ModelEval evaluate_model(const model::ModelParams& params, const Dataset& test,
                         const std::vector<AttackKind>& kinds,
                         const LoadedResources& res, std::uint64_t seed);

nlohmann::ordered_json eval_report_json(const ModelEval& eval);

// One seeded end-to-end run: generate data, train, evaluate.
struct RunSpec {
  corpus::SynthConfig data;
  model::ModelConfig model;
  train::TrainConfig train;
  bool art = false;
};

struct RunResult {
  ModelEval eval;
  train::TrainResult trained;
};

RunResult run_one(const RunSpec& spec, const LoadedResources& res);

// Trend checks over the five model variants (plus ART variants) across the
// given seeds; writes consolidated_report.json plus the position sweep CSV
// into out_dir and returns the consolidated report.
nlohmann::ordered_json repro(std::uint64_t root_seed, const AttackResources& paths,
                             const std::string& out_dir, bool quiet = false);

}  // namespace rlab::exp
