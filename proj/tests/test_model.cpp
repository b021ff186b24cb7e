#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "rlab/corpus.hpp"
#include "rlab/io.hpp"
#include "rlab/model.hpp"

using rlab::Example;
using rlab::Granularity;
using rlab::Sentence;
using rlab::Tag;
using rlab::model::ModelConfig;
using rlab::model::ModelKind;
using rlab::model::ModelParams;
using rlab::model::Vocab;
using rlab::num::Array;
using rlab::num::Value;

namespace {

rlab::corpus::SynthConfig tiny_data() {
  rlab::corpus::SynthConfig c;
  c.num_entities = 12;
  c.num_attributes = 8;
  c.context_len = 5;
  c.train_examples = 20;
  c.dev_examples = 6;
  c.test_examples = 6;
  c.seed = 2;
  return c;
}

ModelConfig tiny_config(ModelKind kind) {
  ModelConfig mc;
  mc.kind = kind;
  mc.embed_dim = 8;
  mc.pi = 0.2;
  mc.max_positions = 12;
  return mc;
}

ModelParams tiny_model(ModelKind kind, const rlab::Dataset& data, std::uint64_t seed = 3) {
  return ModelParams::init(tiny_config(kind), Vocab::build(data), seed);
}

}  // namespace

TEST_CASE("k selection rule") {
  ModelConfig mc = tiny_config(ModelKind::VIB);
  mc.pi = 0.4;
  CHECK(rlab::model::infer_k(mc, 5) == 2);
  mc.pi = 0.125;
  CHECK(rlab::model::infer_k(mc, 8) == 1);
  mc.pi = 0.01;
  CHECK(rlab::model::infer_k(mc, 5) == 1);  // clamped to 1
  mc.pi = 0.9;
  CHECK(rlab::model::infer_k(mc, 10) == 9);
}

TEST_CASE("inference masks per model kind") {
  ModelConfig mc = tiny_config(ModelKind::VIB);
  mc.pi = 0.4;
  std::vector<double> s = {3.0, 1.0, 2.0, -1.0, 0.0};
  auto mask = rlab::model::rationalize_infer(s, mc);
  CHECK(mask == std::vector<double>({1.0, 0.0, 1.0, 0.0, 0.0}));

  mc.kind = ModelKind::FC;
  CHECK(rlab::model::rationalize_infer(s, mc) == std::vector<double>(5, 1.0));

  mc.kind = ModelKind::SPECTRA;
  mc.pi = 0.95;  // budget 4.75 >= clipped mass: relaxed solution is clip(s,0,1)
  auto relaxed = rlab::num::project_capped_simplex_raw(s, mc.pi * 5);
  CHECK_FALSE(relaxed.budget_active);
  for (size_t i = 0; i < s.size(); ++i)
    CHECK(relaxed.z[i] == doctest::Approx(std::clamp(s[i], 0.0, 1.0)));
  auto smask = rlab::model::rationalize_infer(s, mc);
  int ones = 0;
  for (double v : smask) ones += v > 0.5 ? 1 : 0;
  CHECK(ones == rlab::model::infer_k(mc, 5));
}

TEST_CASE("spectra relaxed mask respects the budget") {
  rlab::Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    int L = 2 + rlab::rand_index(rng, 12);
    std::vector<double> s(static_cast<size_t>(L));
    for (auto& v : s) v = 3.0 * rlab::rand_normal(rng);
    double pi = 0.1 + 0.5 * rlab::rand_u01(rng);
    auto sol = rlab::num::project_capped_simplex_raw(s, pi * L);
    double mass = 0.0;
    for (double z : sol.z) mass += z;
    CHECK(mass <= pi * L + 1e-8);
  }
}

TEST_CASE("hard-mask predictions depend only on selected units") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams params = tiny_model(ModelKind::VIB, data.train);
  Example ex = data.train.examples[0];
  auto enc = rlab::model::encode(ex, params);

  std::vector<double> mask(static_cast<size_t>(enc.L), 0.0);
  mask[1] = 1.0;
  mask[3] = 1.0;
  Value logits = rlab::model::predict(enc, Value(Array::from(mask)), params);

  // Replace an unselected sentence with arbitrary tokens: bit-identical logits.
  Example altered = ex;
  altered.context[0].tokens = {{"zzz", Tag::Noun}, {"qqq", Tag::Verb}};
  auto enc2 = rlab::model::encode(altered, params);
  Value logits2 = rlab::model::predict(enc2, Value(Array::from(mask)), params);
  CHECK(logits.data().raw() == logits2.data().raw());

  // A one-hot mask pools exactly that unit's representation.
  std::vector<double> onehot(static_cast<size_t>(enc.L), 0.0);
  onehot[2] = 1.0;
  Value pooled_logits = rlab::model::predict(enc, Value(Array::from(onehot)), params);
  CHECK(pooled_logits.data().size() == 2);
}

TEST_CASE("all-ones mask equals the plain mean (FC behavior)") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams params = tiny_model(ModelKind::FC, data.train);
  // Seed the predictor with nonzero weights so the check is non-trivial.
  rlab::Rng rng(9);
  for (int i = 0; i < params.pred.W.size(); ++i)
    params.pred.W.data()[i] = rlab::rand_normal(rng);
  Example ex = data.train.examples[1];
  auto enc = rlab::model::encode(ex, params);
  Value ones(Array::vec(enc.L, 1.0));
  Value logits = rlab::model::predict(enc, ones, params);

  // Hand-computed mean pooling through the same parameters.
  int d2 = params.config.embed_dim * 2;
  std::vector<double> pooled(static_cast<size_t>(d2), 0.0);
  for (const auto& h : enc.unit_reps)
    for (int i = 0; i < d2; ++i) pooled[static_cast<size_t>(i)] += h.data()[i];
  for (auto& v : pooled) v /= static_cast<double>(enc.L);
  std::vector<double> pin = pooled;
  for (int i = 0; i < params.config.embed_dim; ++i)
    pin.push_back(enc.query_rep.data()[i]);
  for (int c = 0; c < 2; ++c) {
    double acc = params.pred.b.data()[c];
    for (size_t i = 0; i < pin.size(); ++i)
      acc += params.pred.W.data().at(c, static_cast<int>(i)) * pin[i];
    CHECK(logits.data()[c] == doctest::Approx(acc).epsilon(1e-12));
  }
}

TEST_CASE("permuting masked-out units never changes the logits") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams params = tiny_model(ModelKind::VIB, data.train);
  Example ex = data.train.examples[2];
  auto enc = rlab::model::encode(ex, params);
  std::vector<double> mask(static_cast<size_t>(enc.L), 0.0);
  mask[2] = 1.0;
  Value logits = rlab::model::predict(enc, Value(Array::from(mask)), params);

  Example swapped = ex;
  std::swap(swapped.context[0], swapped.context[4]);
  auto enc2 = rlab::model::encode(swapped, params);
  Value logits2 = rlab::model::predict(enc2, Value(Array::from(mask)), params);
  CHECK(logits.data().raw() == logits2.data().raw());
}

TEST_CASE("fc and fcsup produce identical task logits at init") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams fc = tiny_model(ModelKind::FC, data.train, 11);
  ModelParams fcsup = tiny_model(ModelKind::FCsup, data.train, 11);
  // Same init seed: shared parameter shapes match; aux head is zero-init and
  // does not touch the task path.
  Example ex = data.train.examples[3];
  auto e1 = rlab::model::encode(ex, fc);
  auto e2 = rlab::model::encode(ex, fcsup);
  Value ones(Array::vec(e1.L, 1.0));
  CHECK(rlab::model::predict(e1, ones, fc).data().raw() ==
        rlab::model::predict(e2, ones, fcsup).data().raw());
  Value aux = rlab::model::aux_mask_logits(e2, fcsup);
  for (int i = 0; i < aux.size(); ++i) CHECK(aux.data()[i] == 0.0);
}

TEST_CASE("vib inference mask has exactly k ones") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams params = tiny_model(ModelKind::VIB, data.train);
  for (const auto& ex : data.test.examples) {
    auto inf = rlab::model::infer(ex, params);
    int ones = 0;
    for (double v : inf.rationale_mask) ones += v > 0.5 ? 1 : 0;
    CHECK(ones == rlab::model::infer_k(params.config, rlab::units_of(ex)));
  }
}

TEST_CASE("checkpoint round trip") {
  auto data = rlab::corpus::generate_synthfact(tiny_data());
  ModelParams params = tiny_model(ModelKind::FCsup, data.train, 21);
  std::string path =
      (std::filesystem::temp_directory_path() / "rlab_ckpt.json").string();
  params.save(path);
  ModelParams loaded = ModelParams::load(path);
  CHECK(loaded.config.kind == ModelKind::FCsup);
  CHECK(loaded.vocab.words() == params.vocab.words());
  CHECK(loaded.enc.token_emb.data().raw() == params.enc.token_emb.data().raw());
  CHECK(loaded.pred.W.data().raw() == params.pred.W.data().raw());
  REQUIRE(loaded.aux.has_value());
  CHECK(loaded.aux->w.data().raw() == params.aux->w.data().raw());

  Example ex = data.test.examples[0];
  auto a = rlab::model::infer(ex, params);
  auto b = rlab::model::infer(ex, loaded);
  CHECK(a.predicted == b.predicted);
  CHECK(a.logits == b.logits);

  // Version field is required.
  rlab::io::atomic_write(path, "{\"config\": {}}");
  CHECK_THROWS_WITH_AS(ModelParams::load(path), doctest::Contains("version"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("model config validation") {
  ModelConfig mc = tiny_config(ModelKind::VIB);
  mc.pi = 0.0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = tiny_config(ModelKind::VIB);
  mc.tau = 0.0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
  mc = tiny_config(ModelKind::VIB);
  mc.beta = -1.0;
  CHECK_THROWS_AS(mc.validate(), std::invalid_argument);
}
