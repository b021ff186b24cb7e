// Experiment runner: data generation, AddText attacks, training, robustness
// evaluation and the seeded end-to-end reproduction pipeline.

#include <algorithm>
#include <cmath>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "rlab/experiment.hpp"
#include "rlab/io.hpp"
#include "rlab/kvconfig.hpp"

namespace {

using nlohmann::ordered_json;
using rlab::AttackKind;
using rlab::Dataset;
using rlab::Granularity;
using rlab::cli::KvConfig;

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::string seed, out, attack, position, model;
  bool art = false;
};

KvConfig resolve_config(const GlobalArgs& g) {
  KvConfig cfg;
  if (!g.config_path.empty()) cfg = KvConfig::parse_file(g.config_path);
  for (const auto& kv : g.sets) {
    auto eq = kv.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (!g.seed.empty()) cfg.set("seed", g.seed);
  if (!g.out.empty()) cfg.set("out", g.out);
  if (!g.attack.empty()) cfg.set("attack.kind", g.attack);
  if (!g.position.empty()) cfg.set("attack.position", g.position);
  if (!g.model.empty()) cfg.set("model.kind", g.model);
  if (g.art) cfg.set("train.art", "true");
  return cfg;
}

std::string require(const KvConfig& cfg, const std::string& key) {
  auto v = cfg.get(key);
  if (!v.has_value() || v->empty())
    throw std::runtime_error("config: missing required key '" + key + "'");
  return *v;
}

rlab::corpus::SynthConfig data_config(const KvConfig& cfg) {
  rlab::corpus::SynthConfig c;
  c.num_entities = cfg.get_int("data.num_entities", c.num_entities);
  c.num_attributes = cfg.get_int("data.num_attributes", c.num_attributes);
  c.context_len = cfg.get_int("data.context_len", c.context_len);
  c.train_examples = cfg.get_int("data.train_examples", c.train_examples);
  c.dev_examples = cfg.get_int("data.dev_examples", c.dev_examples);
  c.test_examples = cfg.get_int("data.test_examples", c.test_examples);
  c.seed = cfg.get_u64("seed", 1);
  return c;
}

rlab::model::ModelConfig model_config(const KvConfig& cfg, Granularity granularity) {
  rlab::model::ModelConfig mc;
  mc.kind = rlab::model::kind_from(cfg.get_or("model.kind", "vib"));
  mc.granularity = granularity;
  mc.pi = cfg.get_double("model.pi", mc.pi);
  mc.beta = cfg.get_double("model.beta", mc.beta);
  mc.gamma = cfg.get_double("model.gamma", mc.gamma);
  mc.tau = cfg.get_double("model.tau", mc.tau);
  mc.embed_dim = cfg.get_int("model.embed_dim", mc.embed_dim);
  mc.max_positions = cfg.get_int("model.max_positions", mc.max_positions);
  mc.validate();
  return mc;
}

rlab::train::TrainConfig train_config(const KvConfig& cfg) {
  rlab::train::TrainConfig tc;
  tc.epochs = cfg.get_int("train.epochs", tc.epochs);
  tc.lr = cfg.get_double("train.lr", tc.lr);
  tc.batch_size = cfg.get_int("train.batch_size", tc.batch_size);
  tc.seed = cfg.get_u64("seed", 1);
  tc.art_enabled = cfg.get_bool("train.art", false);
  tc.art_weight = cfg.get_double("train.art_weight", tc.art_weight);
  tc.validate();
  return tc;
}

rlab::exp::AttackResources attack_resources(const KvConfig& cfg) {
  auto r = rlab::exp::AttackResources::defaults();
  r.lexicon_path = cfg.get_or("attack.lexicon", r.lexicon_path);
  r.noun_pool_path = cfg.get_or("attack.nouns", r.noun_pool_path);
  r.sentence_pool_path = cfg.get_or("attack.pool", r.sentence_pool_path);
  return r;
}

AttackKind parse_kind(const std::string& s) {
  if (s == "rand") return AttackKind::Rand;
  if (s == "wiki") return AttackKind::Wiki;
  if (s == "adv") return AttackKind::Adv;
  throw std::runtime_error("config: attack.kind must be rand|wiki|adv, got '" + s + "'");
}

// Either generate the configured corpus or load JSONL paths.
rlab::corpus::SplitDataset load_data(const KvConfig& cfg) {
  std::string gen = cfg.get_or("data.generator", "synthfact");
  if (gen == "synthfact") return rlab::corpus::generate_synthfact(data_config(cfg));
  if (gen == "synthreview") return rlab::corpus::generate_synthreview(data_config(cfg));
  if (gen == "none") {
    rlab::corpus::SplitDataset ds;
    ds.train = rlab::corpus::load_jsonl(require(cfg, "data.train_path"));
    ds.dev = rlab::corpus::load_jsonl(require(cfg, "data.dev_path"));
    ds.test = rlab::corpus::load_jsonl(require(cfg, "data.test_path"));
    return ds;
  }
  throw std::runtime_error("config: data.generator must be synthfact|synthreview|none");
}

int cmd_gen_data(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  auto ds = load_data(cfg);
  rlab::corpus::save_jsonl(ds.train, out + "/train.jsonl");
  rlab::corpus::save_jsonl(ds.dev, out + "/dev.jsonl");
  rlab::corpus::save_jsonl(ds.test, out + "/test.jsonl");
  std::cout << "wrote " << ds.train.examples.size() << "/" << ds.dev.examples.size()
            << "/" << ds.test.examples.size() << " examples to " << out << "\n";
  return 0;
}

int cmd_attack(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  std::string input = require(cfg, "attack.input");
  AttackKind kind = parse_kind(cfg.get_or("attack.kind", "adv"));
  std::string pos_spec = cfg.get_or("attack.position", "first");
  auto pos = rlab::attack::parse_position(pos_spec);
  std::uint64_t seed = cfg.get_u64("seed", 1);

  Dataset ds = rlab::corpus::load_jsonl(input);
  auto res = rlab::exp::load_resources(attack_resources(cfg));
  rlab::metrics::AttackInputs inputs;
  inputs.kind = kind;
  inputs.rand_length = cfg.get_int("attack.rand_len", 8);
  inputs.vocab = rlab::corpus::dataset_vocab(ds);
  inputs.pool = res.pool;
  inputs.lexicon = &res.lexicon;

  Dataset attacked;
  attacked.granularity = ds.granularity;
  attacked.label_names = ds.label_names;
  for (size_t i = 0; i < ds.examples.size(); ++i) {
    auto a = rlab::metrics::build_attack(ds.examples[i], inputs, pos,
                                         rlab::derive_seed(seed, "attack-cmd", i));
    attacked.examples.push_back(a.example);
  }
  std::string name = "attacked_" + rlab::exp::attack_kind_key(kind) + "_" + pos_spec;
  std::replace(name.begin(), name.end(), ':', '_');
  rlab::corpus::save_jsonl(attacked, out + "/" + name + ".jsonl");
  std::cout << "wrote " << attacked.examples.size() << " attacked examples to " << out
            << "/" << name << ".jsonl\n";
  return 0;
}

int cmd_train(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  auto data = load_data(cfg);
  auto mc = model_config(cfg, data.train.granularity);
  auto tc = train_config(cfg);
  auto res = rlab::exp::load_resources(attack_resources(cfg));
  auto result = rlab::train::train(data.train, data.dev, mc, tc,
                                   tc.art_enabled ? &res.pool : nullptr);
  result.params.save(out + "/checkpoint.json");
  rlab::train::save_history_jsonl(result.history, tc.seed, out + "/history.jsonl");
  std::cout << "best dev accuracy "
            << result.history[static_cast<size_t>(result.best_epoch)].dev_accuracy
            << " at epoch " << result.best_epoch << "; checkpoint written to " << out
            << "/checkpoint.json\n";
  return 0;
}

std::vector<AttackKind> parse_kinds(const std::string& csv) {
  std::vector<AttackKind> kinds;
  std::istringstream in(csv);
  std::string item;
  while (std::getline(in, item, ',')) kinds.push_back(parse_kind(item));
  if (kinds.empty()) throw std::runtime_error("config: no attack kinds given");
  return kinds;
}

int cmd_eval(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  std::string ckpt = cfg.get_or("eval.checkpoint", out + "/checkpoint.json");
  auto params = rlab::model::ModelParams::load(ckpt);
  auto data = load_data(cfg);
  auto res = rlab::exp::load_resources(attack_resources(cfg));
  auto kinds = parse_kinds(cfg.get_or("attack.kind", "rand,wiki,adv"));
  auto eval = rlab::exp::evaluate_model(params, data.test, kinds, res,
                                        rlab::derive_seed(cfg.get_u64("seed", 1), "eval"));
  rlab::io::atomic_write(out + "/eval_report.json",
                         rlab::exp::eval_report_json(eval).dump(2) + "\n");
  std::cout << "clean " << eval.clean_score * 100.0 << "%";
  for (const auto& [k, a] : eval.attacks)
    std::cout << "  " << k << ": att " << a.attacked_score * 100.0 << "% delta "
              << a.delta * 100.0;
  std::cout << "\nreport written to " << out << "/eval_report.json\n";
  return 0;
}

int cmd_breakdown(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  std::string ckpt = cfg.get_or("eval.checkpoint", out + "/checkpoint.json");
  auto params = rlab::model::ModelParams::load(ckpt);
  auto data = load_data(cfg);
  auto res = rlab::exp::load_resources(attack_resources(cfg));
  AttackKind kind = parse_kind(cfg.get_or("attack.kind", "adv"));
  auto eval = rlab::exp::evaluate_model(params, data.test, {kind}, res,
                                        rlab::derive_seed(cfg.get_u64("seed", 1), "eval"));
  const auto& q = eval.attacks.at(rlab::exp::attack_kind_key(kind)).quadrant_first;
  ordered_json j;
  j["attack"] = rlab::exp::attack_kind_key(kind);
  j["position"] = "first";
  static const char* kNames[4] = {"gold_yes_attack_yes", "gold_yes_attack_no",
                                  "gold_no_attack_yes", "gold_no_attack_no"};
  for (int i = 0; i < 4; ++i) {
    ordered_json cell;
    cell["accuracy"] = std::round(q.cells[static_cast<size_t>(i)].accuracy * 1000.0) / 10.0;
    cell["population"] =
        std::round(q.cells[static_cast<size_t>(i)].population * 1000.0) / 10.0;
    cell["count"] = q.cells[static_cast<size_t>(i)].count;
    j[kNames[i]] = cell;
  }
  rlab::io::atomic_write(out + "/breakdown.json", j.dump(2) + "\n");
  std::cout << "breakdown written to " << out << "/breakdown.json\n";
  return 0;
}

int cmd_sweep(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  std::string mode = cfg.get_or("sweep.mode", "position");
  std::string ckpt = cfg.get_or("eval.checkpoint", out + "/checkpoint.json");
  auto params = rlab::model::ModelParams::load(ckpt);
  auto data = load_data(cfg);
  auto res = rlab::exp::load_resources(attack_resources(cfg));
  std::uint64_t seed = cfg.get_u64("seed", 1);

  if (mode == "position") {
    rlab::metrics::AttackInputs inputs;
    inputs.kind = parse_kind(cfg.get_or("attack.kind", "adv"));
    inputs.rand_length = cfg.get_int("attack.rand_len", 8);
    inputs.vocab = rlab::corpus::dataset_vocab(data.test);
    inputs.pool = res.pool;
    inputs.lexicon = &res.lexicon;
    auto curve = rlab::metrics::position_sweep(params, data.test, inputs,
                                               rlab::derive_seed(seed, "possweep"));
    rlab::io::atomic_write(out + "/position_sweep.csv", rlab::metrics::sweep_csv(curve));
    std::cout << "position sweep written to " << out << "/position_sweep.csv\n";
    return 0;
  }
  if (mode == "lexical") {
    std::vector<std::string> adjectives;
    std::string csv = cfg.get_or("sweep.adjectives", "");
    if (csv.empty()) {
      for (const auto& [pos, neg] : rlab::corpus::review_adjective_pairs()) {
        adjectives.push_back(pos);
        adjectives.push_back(neg);
      }
    } else {
      std::istringstream in(csv);
      std::string item;
      while (std::getline(in, item, ',')) adjectives.push_back(item);
    }
    auto points = rlab::metrics::lexical_sweep(params, data.test, adjectives,
                                               res.lexicon.noun_pool(),
                                               rlab::derive_seed(seed, "lexsweep"));
    rlab::io::atomic_write(out + "/lexical_sweep.csv", rlab::metrics::lexical_csv(points));
    std::cout << "lexical sweep written to " << out << "/lexical_sweep.csv\n";
    return 0;
  }
  throw std::runtime_error("config: sweep.mode must be position|lexical");
}

int cmd_repro(const KvConfig& cfg) {
  std::string out = require(cfg, "out");
  std::uint64_t seed = cfg.get_u64("seed", 1);
  auto report = rlab::exp::repro(seed, attack_resources(cfg), out);
  int passed = 0, total = 0;
  for (const auto& t : report["trends"]) {
    ++total;
    passed += t["pass"].get<bool>() ? 1 : 0;
  }
  std::cout << "repro: " << passed << "/" << total << " trend checks passed; report at "
            << out << "/consolidated_report.json\n";
  return passed == total ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rationale robustness workbench"};
  app.require_subcommand(1);

  GlobalArgs g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--seed", g.seed, "root seed (overrides config)");
  app.add_option("--out", g.out, "output directory (overrides config)");
  app.add_option("--attack", g.attack, "attack kind: rand|wiki|adv");
  app.add_option("--position", g.position, "insert position: first|last|random|index:N");
  app.add_option("--model", g.model, "model kind: fc|fcsup|vib|vibsup|spectra");
  app.add_flag("--art", g.art, "enable augmented rationale training");
  app.add_option("--set", g.sets, "override any config key, e.g. --set train.epochs=5");

  auto* gen = app.add_subcommand("gen-data", "generate synthetic corpora as JSONL");
  auto* atk = app.add_subcommand("attack", "write attacked variants of a dataset");
  auto* trn = app.add_subcommand("train", "train one model variant");
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on clean + attacked sets");
  auto* brk = app.add_subcommand("breakdown", "gold x attack quadrant table");
  auto* swp = app.add_subcommand("sweep", "position or lexical sweep, CSV output");
  auto* rep = app.add_subcommand("repro", "full seeded pipeline with trend checks");

  CLI11_PARSE(app, argc, argv);

  try {
    KvConfig cfg = resolve_config(g);
    if (gen->parsed()) return cmd_gen_data(cfg);
    if (atk->parsed()) return cmd_attack(cfg);
    if (trn->parsed()) return cmd_train(cfg);
    if (evl->parsed()) return cmd_eval(cfg);
    if (brk->parsed()) return cmd_breakdown(cfg);
    if (swp->parsed()) return cmd_sweep(cfg);
    if (rep->parsed()) return cmd_repro(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
