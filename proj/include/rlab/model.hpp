#pragma once

#include <cstdint>
#include <map>
#include <optional>

#include "rlab/autodiff.hpp"
#include "rlab/data.hpp"
#include "rlab/mask_ops.hpp"

namespace rlab::model {

enum class ModelKind { FC, FCsup, VIB, VIBsup, SPECTRA };

std::string kind_name(ModelKind k);
ModelKind kind_from(const std::string& name);

struct ModelConfig {
  ModelKind kind = ModelKind::VIB;
  double pi = 0.25;    // target fraction of units selected
  double beta = 0.1;   // KL weight toward the sparsity prior
  double gamma = 1.0;  // rationale supervision weight
  double tau = 0.5;    // relaxation temperature
  Granularity granularity = Granularity::Sentence;
  int embed_dim = 64;
  int max_positions = 16;
  int num_labels = 2;

  bool supervised() const { return kind == ModelKind::FCsup || kind == ModelKind::VIBsup; }
  bool has_scorer() const { return kind != ModelKind::FC && kind != ModelKind::FCsup; }
  void validate() const;
};

// Token ids; id 0 is reserved for out-of-vocabulary words.
class Vocab {
 public:
  static Vocab build(const Dataset& dataset);
  static Vocab from_words(std::vector<std::string> words_in_id_order);

  int id(const std::string& word) const;
  int size() const { return static_cast<int>(words_.size()); }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::map<std::string, int> ids_;
  std::vector<std::string> words_;
};

struct EncoderParams {
  num::Value token_emb;  // V x d
  num::Value pos_emb;    // max_positions x d
  num::Value scorer_w;   // 2d
  num::Value scorer_b;   // 1
};

struct PredictorParams {
  num::Value W;  // C x 3d  (pooled 2d ++ query d)
  num::Value b;  // C
};

struct AuxHeadParams {
  num::Value w;  // 2d
  num::Value b;  // 1
};

struct ModelParams {
  ModelConfig config;
  Vocab vocab;
  EncoderParams enc;
  PredictorParams pred;
  std::optional<AuxHeadParams> aux;  // FC-sup only

  static ModelParams init(const ModelConfig& config, const Vocab& vocab,
                          std::uint64_t seed);
  // Trainable leaves in a stable order.
  std::vector<num::Value> trainable() const;
  // Deep copy (fresh leaves with the same data).
  ModelParams clone() const;

  void save(const std::string& path) const;
  static ModelParams load(const std::string& path);
};

// Per-example forward-pass features.
struct Encoded {
  std::vector<num::Value> unit_reps;     // h_t, 2d each
  std::vector<num::Value> scorer_feats;  // query-modulated content ++ position
  num::Value query_rep;                  // d; zeros when the example has no query
  int L = 0;
};

// Unit representation: [content ; position embedding]. Content is the mean
// token embedding of the sentence at sentence granularity; at token
// granularity it is the token embedding averaged with its sentence's mean so
// units within one phrase can be scored coherently. Scorer features multiply
// the content half elementwise with the mean query embedding (identity when
// no query), which is what lets the rationalizer rank query-relevant units.
Encoded encode(const Example& ex, const ModelParams& params);

// s_t = w . g_t + b over the scorer features.
num::Value score_units(const Encoded& enc, const ModelParams& params);

// Per-unit mask logits from the auxiliary head (FC-sup).
num::Value aux_mask_logits(const Encoded& enc, const ModelParams& params);

// Mask-weighted mean of unit reps (normalized, eps-guarded), concatenated
// with the query rep, through the linear classifier head.
num::Value predict(const Encoded& enc, const num::Value& mask, const ModelParams& params);

// k = max(1, round(pi * L)).
int infer_k(const ModelConfig& config, int L);

// Test-time hard mask: top-k scores for VIB kinds, top-k of the relaxed
// budget solution for SPECTRA, all ones for FC kinds.
std::vector<double> rationalize_infer(const std::vector<double>& scores,
                                      const ModelConfig& config);

struct Inference {
  int predicted = 0;
  std::vector<double> task_mask;       // what the predictor pooled over
  std::vector<double> rationale_mask;  // reported rationale; empty for plain FC
  std::vector<double> scores;          // unit logits; empty for plain FC
  std::vector<double> logits;
};

// Full test-time pass. FC-sup predicts over the whole input but reports the
// top-k of its auxiliary mask logits as its rationale, selecting the same
// amount of text as the rationale models.
Inference infer(const Example& ex, const ModelParams& params);

}  // namespace rlab::model
