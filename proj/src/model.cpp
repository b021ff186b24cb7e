#include "rlab/model.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "rlab/io.hpp"
#include "rlab/rng.hpp"

namespace rlab::model {

namespace {

using nlohmann::ordered_json;
using num::Array;
using num::Value;

constexpr int kCheckpointVersion = 1;

Array random_array(int rows, int cols, bool matrix, double stddev, Rng& rng) {
  Array a = matrix ? Array::mat(rows, cols) : Array::vec(rows);
  for (int i = 0; i < a.size(); ++i) a[i] = stddev * rand_normal(rng);
  return a;
}

}  // namespace

std::string kind_name(ModelKind k) {
  switch (k) {
    case ModelKind::FC: return "fc";
    case ModelKind::FCsup: return "fcsup";
    case ModelKind::VIB: return "vib";
    case ModelKind::VIBsup: return "vibsup";
    case ModelKind::SPECTRA: return "spectra";
  }
  return "fc";
}

ModelKind kind_from(const std::string& name) {
  if (name == "fc") return ModelKind::FC;
  if (name == "fcsup") return ModelKind::FCsup;
  if (name == "vib") return ModelKind::VIB;
  if (name == "vibsup") return ModelKind::VIBsup;
  if (name == "spectra") return ModelKind::SPECTRA;
  throw std::invalid_argument("unknown model kind '" + name +
                              "' (expected fc|fcsup|vib|vibsup|spectra)");
}

void ModelConfig::validate() const {
  if (pi <= 0.0 || pi >= 1.0)
    throw std::invalid_argument("model config: pi must be in (0,1)");
  if (tau <= 0.0) throw std::invalid_argument("model config: tau must be > 0");
  if (beta < 0.0 || gamma < 0.0)
    throw std::invalid_argument("model config: beta and gamma must be >= 0");
  if (embed_dim <= 0 || max_positions <= 0 || num_labels < 2)
    throw std::invalid_argument("model config: bad dimensions");
}

Vocab Vocab::build(const Dataset& dataset) {
  std::map<std::string, int> ids;
  std::vector<std::string> words = {"<oov>"};
  auto visit = [&](const Sentence& s) {
    for (const auto& t : s.tokens)
      if (ids.emplace(t.text, static_cast<int>(words.size())).second)
        words.push_back(t.text);
  };
  for (const auto& ex : dataset.examples) {
    if (ex.query.has_value()) visit(*ex.query);
    for (const auto& s : ex.context) visit(s);
  }
  Vocab v;
  v.ids_ = std::move(ids);
  v.words_ = std::move(words);
  return v;
}

Vocab Vocab::from_words(std::vector<std::string> words) {
  if (words.empty() || words[0] != "<oov>")
    throw std::invalid_argument("vocab: word list must start with <oov>");
  Vocab v;
  for (size_t i = 1; i < words.size(); ++i)
    v.ids_[words[i]] = static_cast<int>(i);
  v.words_ = std::move(words);
  return v;
}

int Vocab::id(const std::string& word) const {
  auto it = ids_.find(word);
  return it == ids_.end() ? 0 : it->second;
}

ModelParams ModelParams::init(const ModelConfig& config, const Vocab& vocab,
                              std::uint64_t seed) {
  config.validate();
  Rng rng = make_rng(seed, "model_init");
  const int d = config.embed_dim;
  ModelParams p;
  p.config = config;
  p.vocab = vocab;
  Array tok = random_array(vocab.size(), d, true, 0.5, rng);
  for (int c = 0; c < d; ++c) tok.at(0, c) = 0.0;  // OOV starts silent
  p.enc.token_emb = Value(std::move(tok));
  p.enc.pos_emb = Value(random_array(config.max_positions, d, true, 0.5, rng));
  p.enc.scorer_w = Value(Array::vec(2 * d));
  // A positive initial score keeps the budget constraint active from the
  // first step; an all-zero relaxed mask is a gradient dead zone.
  p.enc.scorer_b = Value(Array::vec(1, 0.5));
  p.pred.W = Value(Array::mat(config.num_labels, 3 * d));
  p.pred.b = Value(Array::vec(config.num_labels));
  if (config.kind == ModelKind::FCsup) {
    AuxHeadParams aux;
    aux.w = Value(Array::vec(2 * d));  // zero-init
    aux.b = Value(Array::vec(1));
    p.aux = aux;
  }
  return p;
}

std::vector<Value> ModelParams::trainable() const {
  std::vector<Value> out = {enc.token_emb, enc.pos_emb, enc.scorer_w, enc.scorer_b,
                            pred.W, pred.b};
  if (aux.has_value()) {
    out.push_back(aux->w);
    out.push_back(aux->b);
  }
  return out;
}

ModelParams ModelParams::clone() const {
  ModelParams p;
  p.config = config;
  p.vocab = vocab;
  p.enc.token_emb = Value(enc.token_emb.data());
  p.enc.pos_emb = Value(enc.pos_emb.data());
  p.enc.scorer_w = Value(enc.scorer_w.data());
  p.enc.scorer_b = Value(enc.scorer_b.data());
  p.pred.W = Value(pred.W.data());
  p.pred.b = Value(pred.b.data());
  if (aux.has_value()) {
    AuxHeadParams a;
    a.w = Value(aux->w.data());
    a.b = Value(aux->b.data());
    p.aux = a;
  }
  return p;
}

Encoded encode(const Example& ex, const ModelParams& params) {
  const int d = params.config.embed_dim;
  const int maxP = params.config.max_positions;
  Encoded enc;

  auto ids_of = [&](const Sentence& s) {
    std::vector<int> ids;
    ids.reserve(s.tokens.size());
    for (const auto& t : s.tokens) ids.push_back(params.vocab.id(t.text));
    return ids;
  };

  bool has_query = ex.query.has_value() && !ex.query->tokens.empty();
  if (has_query)
    enc.query_rep = num::rows_mean(params.enc.token_emb, ids_of(*ex.query));
  else
    enc.query_rep = Value(Array::vec(d));

  const Value half = Value::scalar(0.5);
  for (size_t t = 0; t < ex.context.size(); ++t) {
    int pos_row = std::min(static_cast<int>(t), maxP - 1);
    Value pos = num::rows_mean(params.enc.pos_emb, {pos_row});
    if (ex.granularity == Granularity::Sentence) {
      Value content = num::rows_mean(params.enc.token_emb, ids_of(ex.context[t]));
      enc.unit_reps.push_back(num::concat({content, pos}));
      Value scored = has_query ? num::mul(content, enc.query_rep) : content;
      enc.scorer_feats.push_back(num::concat({scored, pos}));
    } else {
      Value sent_mean = num::rows_mean(params.enc.token_emb, ids_of(ex.context[t]));
      for (const auto& tok : ex.context[t].tokens) {
        Value tok_emb = num::rows_mean(params.enc.token_emb, {params.vocab.id(tok.text)});
        Value content = num::mul(num::add(tok_emb, sent_mean), half);
        enc.unit_reps.push_back(num::concat({content, pos}));
        Value scored = has_query ? num::mul(content, enc.query_rep) : content;
        enc.scorer_feats.push_back(num::concat({scored, pos}));
      }
    }
  }
  enc.L = static_cast<int>(enc.unit_reps.size());
  return enc;
}

num::Value score_units(const Encoded& enc, const ModelParams& params) {
  Value G = num::stack_rows(enc.scorer_feats);
  return num::add(num::matmul(G, params.enc.scorer_w), params.enc.scorer_b);
}

num::Value aux_mask_logits(const Encoded& enc, const ModelParams& params) {
  if (!params.aux.has_value())
    throw std::logic_error("aux_mask_logits: model has no auxiliary head");
  Value G = num::stack_rows(enc.scorer_feats);
  return num::add(num::matmul(G, params.aux->w), params.aux->b);
}

num::Value predict(const Encoded& enc, const num::Value& mask, const ModelParams& params) {
  if (mask.size() != enc.L)
    throw std::invalid_argument("predict: mask length " + std::to_string(mask.size()) +
                                " does not match unit count " + std::to_string(enc.L));
  Value H = num::stack_rows(enc.unit_reps);
  Value weighted = num::matmul(mask, H);
  Value inv = num::recip_clamped(num::sum(mask), 1e-6);
  Value pooled = num::mul(weighted, inv);
  Value pin = num::concat({pooled, enc.query_rep});
  return num::add(num::matmul(params.pred.W, pin), params.pred.b);
}

int infer_k(const ModelConfig& config, int L) {
  return std::max(1, static_cast<int>(std::lround(config.pi * L)));
}

std::vector<double> rationalize_infer(const std::vector<double>& scores,
                                      const ModelConfig& config) {
  const int L = static_cast<int>(scores.size());
  switch (config.kind) {
    case ModelKind::FC:
    case ModelKind::FCsup:
      return std::vector<double>(scores.size(), 1.0);
    case ModelKind::VIB:
    case ModelKind::VIBsup:
      return num::topk_mask(scores, infer_k(config, L));
    case ModelKind::SPECTRA: {
      auto relaxed = num::project_capped_simplex_raw(scores, config.pi * L);
      return num::topk_mask(relaxed.z, infer_k(config, L));
    }
  }
  return std::vector<double>(scores.size(), 1.0);
}

Inference infer(const Example& ex, const ModelParams& params) {
  Encoded enc = encode(ex, params);
  Inference out;
  if (params.config.has_scorer()) {
    Value s = score_units(enc, params);
    out.scores = s.data().raw();
    out.task_mask = rationalize_infer(out.scores, params.config);
    out.rationale_mask = out.task_mask;
  } else {
    out.task_mask.assign(static_cast<size_t>(enc.L), 1.0);
    if (params.config.kind == ModelKind::FCsup) {
      Value s = aux_mask_logits(enc, params);
      out.scores = s.data().raw();
      out.rationale_mask = num::topk_mask(out.scores, infer_k(params.config, enc.L));
    }
  }
  Value logits = predict(enc, Value(Array::from(out.task_mask)), params);
  out.logits = logits.data().raw();
  out.predicted = static_cast<int>(std::max_element(out.logits.begin(), out.logits.end()) -
                                   out.logits.begin());
  return out;
}

namespace {

ordered_json array_to_json(const Array& a) {
  ordered_json j;
  j["rows"] = a.rows();
  j["cols"] = a.cols();
  j["matrix"] = a.is_matrix();
  j["data"] = a.raw();
  return j;
}

Array array_from_json(const ordered_json& j) {
  int rows = j.at("rows").get<int>();
  int cols = j.at("cols").get<int>();
  bool matrix = j.at("matrix").get<bool>();
  std::vector<double> data = j.at("data").get<std::vector<double>>();
  if (static_cast<int>(data.size()) != rows * cols)
    throw std::runtime_error("checkpoint: array size mismatch");
  if (!matrix) {
    if (cols != 1) throw std::runtime_error("checkpoint: bad vector shape");
    return Array::from(std::move(data));
  }
  Array a = Array::mat(rows, cols);
  a.raw() = std::move(data);
  return a;
}

}  // namespace

void ModelParams::save(const std::string& path) const {
  ordered_json j;
  j["version"] = kCheckpointVersion;
  ordered_json cfg;
  cfg["kind"] = kind_name(config.kind);
  cfg["pi"] = config.pi;
  cfg["beta"] = config.beta;
  cfg["gamma"] = config.gamma;
  cfg["tau"] = config.tau;
  cfg["granularity"] = config.granularity == Granularity::Sentence ? "sentence" : "token";
  cfg["embed_dim"] = config.embed_dim;
  cfg["max_positions"] = config.max_positions;
  cfg["num_labels"] = config.num_labels;
  j["config"] = cfg;
  j["vocab"] = vocab.words();
  ordered_json arrays;
  arrays["token_emb"] = array_to_json(enc.token_emb.data());
  arrays["pos_emb"] = array_to_json(enc.pos_emb.data());
  arrays["scorer_w"] = array_to_json(enc.scorer_w.data());
  arrays["scorer_b"] = array_to_json(enc.scorer_b.data());
  arrays["pred_W"] = array_to_json(pred.W.data());
  arrays["pred_b"] = array_to_json(pred.b.data());
  if (aux.has_value()) {
    arrays["aux_w"] = array_to_json(aux->w.data());
    arrays["aux_b"] = array_to_json(aux->b.data());
  }
  j["params"] = arrays;
  io::atomic_write(path, j.dump());
}

ModelParams ModelParams::load(const std::string& path) {
  ordered_json j;
  try {
    j = ordered_json::parse(io::read_file(path));
  } catch (const std::exception& e) {
    throw std::runtime_error("checkpoint: cannot parse " + path + ": " + e.what());
  }
  if (!j.contains("version") || j["version"].get<int>() != kCheckpointVersion)
    throw std::runtime_error("checkpoint: missing or unsupported version in " + path);
  const auto& cfg = j.at("config");
  ModelConfig config;
  config.kind = kind_from(cfg.at("kind").get<std::string>());
  config.pi = cfg.at("pi").get<double>();
  config.beta = cfg.at("beta").get<double>();
  config.gamma = cfg.at("gamma").get<double>();
  config.tau = cfg.at("tau").get<double>();
  config.granularity = cfg.at("granularity").get<std::string>() == "token"
                           ? Granularity::Token
                           : Granularity::Sentence;
  config.embed_dim = cfg.at("embed_dim").get<int>();
  config.max_positions = cfg.at("max_positions").get<int>();
  config.num_labels = cfg.at("num_labels").get<int>();
  config.validate();

  ModelParams p;
  p.config = config;
  p.vocab = Vocab::from_words(j.at("vocab").get<std::vector<std::string>>());
  const auto& arrays = j.at("params");
  p.enc.token_emb = Value(array_from_json(arrays.at("token_emb")));
  p.enc.pos_emb = Value(array_from_json(arrays.at("pos_emb")));
  p.enc.scorer_w = Value(array_from_json(arrays.at("scorer_w")));
  p.enc.scorer_b = Value(array_from_json(arrays.at("scorer_b")));
  p.pred.W = Value(array_from_json(arrays.at("pred_W")));
  p.pred.b = Value(array_from_json(arrays.at("pred_b")));
  if (config.kind == ModelKind::FCsup) {
    AuxHeadParams aux;
    aux.w = Value(array_from_json(arrays.at("aux_w")));
    aux.b = Value(array_from_json(arrays.at("aux_b")));
    p.aux = aux;
  }
  return p;
}

}  // namespace rlab::model
