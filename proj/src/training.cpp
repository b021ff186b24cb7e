#include "rlab/training.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "rlab/io.hpp"

namespace rlab::train {

namespace {

using model::Encoded;
using model::ModelKind;
using model::ModelParams;
using num::Array;
using num::Value;

std::vector<double> gold_as_doubles(const Example& ex) {
  if (!ex.gold_mask.has_value())
    throw std::invalid_argument("supervised loss needs gold_mask on example " + ex.id);
  std::vector<double> z(ex.gold_mask->begin(), ex.gold_mask->end());
  return z;
}

// gamma * sum_t -z*_t log sigmoid(s_t)
Value supervision_term(const Value& mask_logits, const std::vector<double>& gold,
                       double gamma) {
  std::vector<double> targets(gold.size(), 1.0);
  Value term = num::weighted_bce_with_logits(mask_logits, targets, gold);
  return num::mul(term, Value::scalar(gamma));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs <= 0) throw std::invalid_argument("train config: epochs must be positive");
  if (!(lr > 0.0)) throw std::invalid_argument("train config: lr must be positive");
  if (batch_size <= 0)
    throw std::invalid_argument("train config: batch_size must be positive");
  if (art_weight < 0.0)
    throw std::invalid_argument("train config: art_weight must be >= 0");
}

ArtAugmented art_augment(const Example& ex, const std::vector<Sentence>& pool,
                         std::uint64_t seed) {
  if (ex.granularity != Granularity::Sentence)
    throw std::invalid_argument("art_augment: defined for sentence granularity only");
  if (pool.empty()) throw std::invalid_argument("art_augment: empty pool");
  Rng rng = make_rng(seed, "art/" + ex.id);
  const auto prot = protected_words(ex);

  auto draw_sentence = [&]() -> const Sentence& {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const Sentence& cand =
          pool[static_cast<size_t>(rand_index(rng, static_cast<int>(pool.size())))];
      bool ok = true;
      for (const auto& t : cand.tokens)
        for (const auto& w : prot) ok = ok && t.text != w;
      if (ok) return cand;
    }
    throw std::runtime_error("art_augment: no label-preserving pool sentence for " + ex.id);
  };

  ArtAugmented out;
  out.example = ex;
  std::vector<int> inserted;
  for (int k = 0; k < 2; ++k) {
    int T = static_cast<int>(out.example.context.size());
    int at = rand_index(rng, T + 1);
    Sentence s = draw_sentence();
    s.origin = Origin::Pseudo;
    out.example.context.insert(out.example.context.begin() + at, s);
    if (out.example.gold_mask.has_value())
      out.example.gold_mask->insert(out.example.gold_mask->begin() + at, 0);
    for (auto& idx : inserted)
      if (idx >= at) ++idx;
    inserted.push_back(at);
  }
  out.pseudo.v.assign(out.example.context.size(), 0.0);
  for (int idx : inserted) out.pseudo.v[static_cast<size_t>(idx)] = 1.0;
  return out;
}

Value loss_art(const Value& mask_logits, const PseudoLabelVector& pseudo, double lambda) {
  if (static_cast<int>(pseudo.v.size()) != mask_logits.size())
    throw std::invalid_argument("loss_art: pseudo label length mismatch");
  std::vector<double> targets(pseudo.v.size(), 0.0);
  Value term = num::weighted_bce_with_logits(mask_logits, targets, pseudo.v);
  return num::mul(term, Value::scalar(lambda));
}

Value loss_vib(const Example& ex, const ModelParams& params, Rng& rng) {
  Encoded enc = model::encode(ex, params);
  Value s = model::score_units(enc, params);
  num::RelaxedMask mask = num::gumbel_mask(s, params.config.tau, rng);
  Value task = num::softmax_cross_entropy(model::predict(enc, mask.soft, params), ex.label);
  if (params.config.beta == 0.0) return task;
  Value kl = num::kl_bernoulli(num::sigmoid(s), params.config.pi);
  return num::add(task, num::mul(kl, Value::scalar(params.config.beta)));
}

Value loss_vib_sup(const Example& ex, const ModelParams& params, Rng& rng) {
  Encoded enc = model::encode(ex, params);
  Value s = model::score_units(enc, params);
  num::RelaxedMask mask = num::gumbel_mask(s, params.config.tau, rng);
  Value task = num::softmax_cross_entropy(model::predict(enc, mask.soft, params), ex.label);
  Value kl = num::kl_bernoulli(num::sigmoid(s), params.config.pi);
  Value loss = num::add(task, num::mul(kl, Value::scalar(params.config.beta)));
  return num::add(loss, supervision_term(s, gold_as_doubles(ex), params.config.gamma));
}

Value loss_spectra(const Example& ex, const ModelParams& params) {
  Encoded enc = model::encode(ex, params);
  Value s = model::score_units(enc, params);
  Value z = num::project_capped_simplex(s, params.config.pi * enc.L);
  return num::softmax_cross_entropy(model::predict(enc, z, params), ex.label);
}

Value loss_fc(const Example& ex, const ModelParams& params) {
  Encoded enc = model::encode(ex, params);
  Value ones(Array::vec(enc.L, 1.0));
  return num::softmax_cross_entropy(model::predict(enc, ones, params), ex.label);
}

Value loss_fc_sup(const Example& ex, const ModelParams& params) {
  Encoded enc = model::encode(ex, params);
  Value ones(Array::vec(enc.L, 1.0));
  Value task = num::softmax_cross_entropy(model::predict(enc, ones, params), ex.label);
  Value aux = model::aux_mask_logits(enc, params);
  return num::add(task, supervision_term(aux, gold_as_doubles(ex), params.config.gamma));
}

Value example_loss(const Example& ex, const ModelParams& params, const TrainConfig& tc,
                   const std::vector<Sentence>* art_pool, std::uint64_t noise_seed) {
  const ModelKind kind = params.config.kind;
  Rng rng = make_rng(noise_seed, "gumbel/" + ex.id);

  const bool art = tc.art_enabled && tc.art_weight > 0.0;
  if (!art) {
    switch (kind) {
      case ModelKind::FC: return loss_fc(ex, params);
      case ModelKind::FCsup: return loss_fc_sup(ex, params);
      case ModelKind::VIB: return loss_vib(ex, params, rng);
      case ModelKind::VIBsup: return loss_vib_sup(ex, params, rng);
      case ModelKind::SPECTRA: return loss_spectra(ex, params);
    }
  }
  if (kind == ModelKind::FC)
    throw std::invalid_argument("ART needs a model with unit mask logits; fc has none");
  if (art_pool == nullptr)
    throw std::invalid_argument("ART is enabled but no augmentation pool was provided");

  ArtAugmented aug = art_augment(ex, *art_pool, noise_seed);
  const Example& aex = aug.example;
  Encoded enc = model::encode(aex, params);
  Value s = kind == ModelKind::FCsup ? model::aux_mask_logits(enc, params)
                                     : model::score_units(enc, params);
  Value base;
  switch (kind) {
    case ModelKind::VIB:
    case ModelKind::VIBsup: {
      num::RelaxedMask mask = num::gumbel_mask(s, params.config.tau, rng);
      Value task =
          num::softmax_cross_entropy(model::predict(enc, mask.soft, params), aex.label);
      Value kl = num::kl_bernoulli(num::sigmoid(s), params.config.pi);
      base = num::add(task, num::mul(kl, Value::scalar(params.config.beta)));
      if (kind == ModelKind::VIBsup)
        base = num::add(base,
                        supervision_term(s, gold_as_doubles(aex), params.config.gamma));
      break;
    }
    case ModelKind::SPECTRA: {
      Value z = num::project_capped_simplex(s, params.config.pi * enc.L);
      base = num::softmax_cross_entropy(model::predict(enc, z, params), aex.label);
      break;
    }
    case ModelKind::FCsup: {
      Value ones(Array::vec(enc.L, 1.0));
      Value task = num::softmax_cross_entropy(model::predict(enc, ones, params), aex.label);
      base = num::add(task, supervision_term(s, gold_as_doubles(aex), params.config.gamma));
      break;
    }
    default: throw std::logic_error("unreachable");
  }
  return num::add(base, loss_art(s, aug.pseudo, tc.art_weight));
}

namespace {

class Adam {
 public:
  Adam(const std::vector<Value>& params, const TrainConfig& tc) : tc_(tc) {
    for (const auto& p : params) {
      m_.push_back(p.data().zeros_like());
      v_.push_back(p.data().zeros_like());
    }
  }

  void step(const std::vector<Value>& params) {
    ++t_;
    double bc1 = 1.0 - std::pow(tc_.adam_beta1, t_);
    double bc2 = 1.0 - std::pow(tc_.adam_beta2, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      Array& data = params[i].node()->data;
      const Array& grad = params[i].node()->grad;
      Array& m = m_[i];
      Array& v = v_[i];
      for (int k = 0; k < data.size(); ++k) {
        double g = grad[k];
        m[k] = tc_.adam_beta1 * m[k] + (1.0 - tc_.adam_beta1) * g;
        v[k] = tc_.adam_beta2 * v[k] + (1.0 - tc_.adam_beta2) * g * g;
        double mhat = m[k] / bc1;
        double vhat = v[k] / bc2;
        data[k] -= tc_.lr * mhat / (std::sqrt(vhat) + tc_.adam_eps);
      }
    }
  }

 private:
  TrainConfig tc_;
  std::vector<Array> m_, v_;
  long t_ = 0;
};

double dev_accuracy(const Dataset& dev, const ModelParams& params) {
  if (dev.examples.empty()) return 0.0;
  int correct = 0;
  for (const auto& ex : dev.examples)
    if (model::infer(ex, params).predicted == ex.label) ++correct;
  return static_cast<double>(correct) / static_cast<double>(dev.examples.size());
}

}  // namespace

TrainResult train(const Dataset& train_data, const Dataset& dev_data,
                  const model::ModelConfig& mc, const TrainConfig& tc,
                  const std::vector<Sentence>* art_pool) {
  mc.validate();
  tc.validate();
  if (train_data.examples.empty())
    throw std::invalid_argument("train: empty training split");
  if (mc.supervised()) {
    for (const auto& ex : train_data.examples)
      if (!ex.gold_mask.has_value())
        throw std::invalid_argument("train: supervised model needs gold_mask on every "
                                    "training example (missing on " + ex.id + ")");
  }
  if (tc.art_enabled && tc.art_weight > 0.0) {
    if (mc.kind == ModelKind::FC)
      throw std::invalid_argument("ART needs a model with unit mask logits; fc has none");
    if (mc.granularity != Granularity::Sentence)
      throw std::invalid_argument("ART is defined for sentence granularity only");
    if (art_pool == nullptr || art_pool->empty())
      throw std::invalid_argument("ART is enabled but the augmentation pool is empty");
  }

  model::Vocab vocab = model::Vocab::build(train_data);
  ModelParams params = ModelParams::init(mc, vocab, derive_seed(tc.seed, "init"));
  std::vector<Value> leaves = params.trainable();
  Adam adam(leaves, tc);

  const int n = static_cast<int>(train_data.examples.size());
  std::vector<int> order(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;

  TrainResult result;
  result.params = params.clone();
  double best_dev = -1.0;

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    Rng shuffle_rng = make_rng(derive_seed(tc.seed, "epoch", static_cast<std::uint64_t>(epoch)),
                               "shuffle");
    shuffle_vec(order, shuffle_rng);
    double loss_sum = 0.0;
    int batch_index = 0;
    for (int start = 0; start < n; start += tc.batch_size, ++batch_index) {
      int end = std::min(n, start + tc.batch_size);
      std::vector<Value> losses;
      losses.reserve(static_cast<size_t>(end - start));
      for (int i = start; i < end; ++i) {
        const Example& ex = train_data.examples[static_cast<size_t>(order[static_cast<size_t>(i)])];
        std::uint64_t noise_seed =
            derive_seed(tc.seed, "noise",
                        static_cast<std::uint64_t>(epoch) * 1000003ULL +
                            static_cast<std::uint64_t>(order[static_cast<size_t>(i)]));
        losses.push_back(example_loss(ex, params, tc, art_pool, noise_seed));
      }
      Value batch_loss = num::mean(num::concat(losses));
      double loss_value = batch_loss.data()[0];
      if (!std::isfinite(loss_value)) throw TrainingDiverged(epoch, batch_index);
      loss_sum += loss_value * static_cast<double>(end - start);
      num::backward(batch_loss);
      adam.step(leaves);
      for (const auto& p : leaves) p.node()->grad = p.data().zeros_like();
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.train_loss = loss_sum / static_cast<double>(n);
    stats.dev_accuracy = dev_accuracy(dev_data, params);
    result.history.push_back(stats);
    if (stats.dev_accuracy > best_dev) {
      best_dev = stats.dev_accuracy;
      result.params = params.clone();
      result.best_epoch = epoch;
    }
  }
  return result;
}

void save_history_jsonl(const std::vector<EpochStats>& history, std::uint64_t seed,
                        const std::string& path) {
  std::ostringstream out;
  for (const auto& h : history) {
    nlohmann::ordered_json j;
    j["epoch"] = h.epoch;
    j["train_loss"] = h.train_loss;
    j["dev_accuracy"] = h.dev_accuracy;
    j["seed"] = seed;
    out << j.dump() << "\n";
  }
  io::atomic_write(path, out.str());
}

}  // namespace rlab::train
