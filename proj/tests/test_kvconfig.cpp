#include <stdexcept>

#include "doctest.h"
#include "rlab/kvconfig.hpp"

using rlab::cli::KvConfig;

TEST_CASE("kv config parsing and overrides") {
  KvConfig cfg = KvConfig::parse_string(
      "# comment\n"
      "model.kind = vib\n"
      "model.pi=0.2\n"
      "train.epochs = 10\n"
      "train.art = true\n"
      "\n"
      "seed = 42\n");
  CHECK(cfg.get_or("model.kind", "") == "vib");
  CHECK(cfg.get_double("model.pi", 0.0) == doctest::Approx(0.2));
  CHECK(cfg.get_int("train.epochs", 0) == 10);
  CHECK(cfg.get_bool("train.art", false));
  CHECK(cfg.get_u64("seed", 0) == 42);
  CHECK(cfg.get_int("missing", 7) == 7);

  cfg.set("model.kind", "spectra");  // flag override wins
  CHECK(cfg.get_or("model.kind", "") == "spectra");
}

TEST_CASE("kv config errors carry location and type") {
  CHECK_THROWS_WITH_AS(KvConfig::parse_string("foo\n", "cfg"),
                       doctest::Contains("cfg:1"), std::runtime_error);
  KvConfig cfg = KvConfig::parse_string("x = notanint\ny = 1.5z\nz = maybe\n");
  CHECK_THROWS_WITH_AS(cfg.get_int("x", 0), doctest::Contains("'x'"), std::runtime_error);
  CHECK_THROWS_AS(cfg.get_double("y", 0.0), std::runtime_error);
  CHECK_THROWS_AS(cfg.get_bool("z", false), std::runtime_error);
}
