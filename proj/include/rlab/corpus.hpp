#pragma once

#include <array>
#include <cstdint>

#include "rlab/data.hpp"

namespace rlab::corpus {

struct SynthConfig {
  int num_entities = 300;
  int num_attributes = 30;
  int context_len = 8;  // T
  int train_examples = 2000;
  int dev_examples = 400;
  int test_examples = 600;
  std::uint64_t seed = 1;
};

struct SplitDataset {
  Dataset train;
  Dataset dev;
  Dataset test;
};

// Fact-verification style corpus at sentence granularity. Each example has a
// query "ENTITY has ATTRIBUTE", exactly one evidence sentence about that
// entity, T-1 distractor sentences about other entities, and a label
// determined by the evidence polarity (has -> supports, lacks -> refutes).
// Classes are balanced 50/50 per split and everything is deterministic under
// the config seed.
SplitDataset generate_synthfact(const SynthConfig& config);

// Review-style corpus at token granularity. Each example is T aspect phrases
// "the ASPECT looks ADJ"; the label is the polarity of the target aspect's
// adjective and the gold mask covers the target phrase's tokens. No query.
SplitDataset generate_synthreview(const SynthConfig& config);

Dataset load_jsonl(const std::string& path);
void save_jsonl(const Dataset& dataset, const std::string& path);

// Disjoint, exhaustive, seed-deterministic partition. Ratios must sum to 1
// within 1e-9.
std::array<Dataset, 3> split(const Dataset& dataset, const std::array<double, 3>& ratios,
                             std::uint64_t seed);

// Vocabulary words of the review generator's adjective pairs, used by the
// adversarial attack and the lexical sweep.
const std::vector<std::pair<std::string, std::string>>& review_adjective_pairs();

// All distinct token strings in the dataset, sorted.
std::vector<Token> dataset_vocab(const Dataset& dataset);

}  // namespace rlab::corpus
