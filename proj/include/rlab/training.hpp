#pragma once

#include <cstdint>

#include "rlab/model.hpp"

namespace rlab::train {

struct TrainConfig {
  int epochs = 20;
  double lr = 5e-3;
  int batch_size = 32;
  std::uint64_t seed = 1;
  bool art_enabled = false;
  double art_weight = 1.0;  // lambda
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// Marks the two pseudo sentences inserted by ART in the augmented context.
struct PseudoLabelVector {
  std::vector<double> v;  // exactly two ones when ART fired
};

struct ArtAugmented {
  Example example;
  PseudoLabelVector pseudo;
};

// Inserts two pool sentences at independent uniform positions with
// origin=pseudo, re-indexing the gold mask. Sentences mentioning the
// example's protected words are resampled so the label is preserved.
ArtAugmented art_augment(const Example& ex, const std::vector<Sentence>& pool,
                         std::uint64_t seed);

// Loss functions. Each builds a fresh graph over the shared parameter leaves;
// config comes from params.config.
num::Value loss_vib(const Example& ex, const model::ModelParams& params, Rng& rng);
num::Value loss_vib_sup(const Example& ex, const model::ModelParams& params, Rng& rng);
num::Value loss_spectra(const Example& ex, const model::ModelParams& params);
num::Value loss_fc(const Example& ex, const model::ModelParams& params);
num::Value loss_fc_sup(const Example& ex, const model::ModelParams& params);

// lambda * sum_t pseudo_t * (-log(1 - sigmoid(logit_t))): binary cross
// entropy toward target 0 on the pseudo units, pushing the rationalizer away
// from selecting them.
num::Value loss_art(const num::Value& mask_logits, const PseudoLabelVector& pseudo,
                    double lambda);

// Dispatches on params.config.kind; applies ART augmentation + auxiliary loss
// when enabled. art_pool may be null when ART is off.
num::Value example_loss(const Example& ex, const model::ModelParams& params,
                        const TrainConfig& tc, const std::vector<Sentence>* art_pool,
                        std::uint64_t noise_seed);

struct TrainingDiverged : std::runtime_error {
  TrainingDiverged(int epoch, int batch)
      : std::runtime_error("training diverged (loss is not finite) at epoch " +
                           std::to_string(epoch) + ", batch " + std::to_string(batch)),
        epoch(epoch),
        batch(batch) {}
  int epoch;
  int batch;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_accuracy = 0.0;
};

struct TrainResult {
  model::ModelParams params;  // dev-best checkpoint
  std::vector<EpochStats> history;
  int best_epoch = 0;
};

// Mini-batch Adam over the training split, selecting the epoch with the
// highest dev accuracy. Attacks are never part of training data; ART inserts
// only pool sentences.
TrainResult train(const Dataset& train_data, const Dataset& dev_data,
                  const model::ModelConfig& mc, const TrainConfig& tc,
                  const std::vector<Sentence>* art_pool = nullptr);

void save_history_jsonl(const std::vector<EpochStats>& history, std::uint64_t seed,
                        const std::string& path);

}  // namespace rlab::train
