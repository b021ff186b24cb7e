#include <filesystem>
#include <algorithm>
#include <set>

#include "doctest.h"
#include "rlab/corpus.hpp"
#include "rlab/io.hpp"

using rlab::Dataset;
using rlab::Example;
using rlab::Granularity;
using rlab::Tag;
using rlab::corpus::SynthConfig;

namespace {

SynthConfig small_config(std::uint64_t seed = 1) {
  SynthConfig c;
  c.num_entities = 20;
  c.num_attributes = 8;
  c.context_len = 6;
  c.train_examples = 40;
  c.dev_examples = 10;
  c.test_examples = 10;
  c.seed = seed;
  return c;
}

std::string tmp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

const rlab::Sentence& evidence_of(const Example& ex) {
  int idx = 0;
  for (size_t i = 0; i < ex.gold_mask->size(); ++i)
    if ((*ex.gold_mask)[i] == 1) idx = static_cast<int>(i);
  return ex.context[static_cast<size_t>(idx)];
}

}  // namespace

TEST_CASE("synthfact labels follow evidence polarity") {
  auto ds = rlab::corpus::generate_synthfact(small_config());
  int supports = static_cast<int>(std::find(ds.train.label_names.begin(),
                                            ds.train.label_names.end(),
                                            "supports") -
                                  ds.train.label_names.begin());
  for (const auto& ex : ds.train.examples) {
    REQUIRE(ex.query.has_value());
    REQUIRE(ex.gold_mask.has_value());
    const auto& ev = evidence_of(ex);
    // Evidence mentions the query entity and attribute; polarity decides.
    CHECK(ev.tokens[0].text == ex.query->tokens[0].text);
    CHECK(ev.tokens[2].text == ex.query->tokens[2].text);
    if (ev.tokens[1].text == "has")
      CHECK(ex.label == supports);
    else {
      CHECK(ev.tokens[1].text == "lacks");
      CHECK(ex.label != supports);
    }
    // Exactly one evidence sentence, and distractors never mention the entity.
    int ones = 0;
    for (int v : *ex.gold_mask) ones += v;
    CHECK(ones == 1);
    for (size_t t = 0; t < ex.context.size(); ++t) {
      if ((*ex.gold_mask)[t] == 1) continue;
      for (const auto& tok : ex.context[t].tokens)
        CHECK(tok.text != ex.query->tokens[0].text);
    }
  }
}

TEST_CASE("synthfact is deterministic and balanced") {
  auto a = rlab::corpus::generate_synthfact(small_config(7));
  auto b = rlab::corpus::generate_synthfact(small_config(7));
  CHECK(a.train == b.train);
  CHECK(a.dev == b.dev);
  CHECK(a.test == b.test);
  auto c = rlab::corpus::generate_synthfact(small_config(8));
  CHECK_FALSE(a.train == c.train);

  for (const Dataset* split : {&a.train, &a.dev, &a.test}) {
    int pos = 0;
    for (const auto& ex : split->examples) pos += ex.label;
    CHECK(pos * 2 == static_cast<int>(split->examples.size()));
  }
}

TEST_CASE("synthfact rejects too-small entity pools") {
  auto c = small_config();
  c.num_entities = 1;
  CHECK_THROWS_AS(rlab::corpus::generate_synthfact(c), std::invalid_argument);
  c = small_config();
  c.context_len = 1;
  CHECK_THROWS_AS(rlab::corpus::generate_synthfact(c), std::invalid_argument);
}

TEST_CASE("synthreview marks the target phrase and its polarity") {
  auto ds = rlab::corpus::generate_synthreview(small_config());
  int positive = static_cast<int>(std::find(ds.train.label_names.begin(),
                                            ds.train.label_names.end(),
                                            "positive") -
                                  ds.train.label_names.begin());
  const auto& pairs = rlab::corpus::review_adjective_pairs();
  for (const auto& ex : ds.train.examples) {
    CHECK_FALSE(ex.query.has_value());
    CHECK(ex.granularity == Granularity::Token);
    REQUIRE(ex.gold_mask.has_value());
    int ones = 0;
    int first = -1;
    for (size_t i = 0; i < ex.gold_mask->size(); ++i)
      if ((*ex.gold_mask)[i] == 1) {
        ++ones;
        if (first < 0) first = static_cast<int>(i);
      }
    CHECK(ones == 4);  // contiguous "the ASPECT looks ADJ"
    // Locate the phrase and check the adjective's polarity equals the label.
    int unit = 0;
    for (const auto& s : ex.context) {
      if (unit == first) {
        CHECK(s.tokens[1].text == "appearance");
        bool is_positive = false;
        for (const auto& [p, n] : pairs) is_positive = is_positive || s.tokens[3].text == p;
        CHECK(is_positive == (ex.label == positive));
      }
      unit += static_cast<int>(s.tokens.size());
    }
  }
  auto again = rlab::corpus::generate_synthreview(small_config());
  CHECK(again.train == ds.train);
}

TEST_CASE("jsonl round trip preserves datasets") {
  auto ds = rlab::corpus::generate_synthfact(small_config(3));
  std::string path = tmp_path("rlab_corpus_roundtrip.jsonl");
  rlab::corpus::save_jsonl(ds.train, path);
  Dataset loaded = rlab::corpus::load_jsonl(path);
  CHECK(loaded == ds.train);

  auto rv = rlab::corpus::generate_synthreview(small_config(3));
  rlab::corpus::save_jsonl(rv.test, path);
  CHECK(rlab::corpus::load_jsonl(path) == rv.test);
  std::filesystem::remove(path);
}

TEST_CASE("jsonl tags round trip") {
  auto ds = rlab::corpus::generate_synthreview(small_config(4));
  std::string path = tmp_path("rlab_corpus_tags.jsonl");
  rlab::corpus::save_jsonl(ds.dev, path);
  Dataset loaded = rlab::corpus::load_jsonl(path);
  const auto& s = loaded.examples[0].context[0];
  CHECK(s.tokens[0].tag == Tag::Other);
  CHECK(s.tokens[1].tag == Tag::Noun);
  CHECK(s.tokens[2].tag == Tag::Verb);
  CHECK(s.tokens[3].tag == Tag::Adj);
  std::filesystem::remove(path);
}

TEST_CASE("jsonl loader reports the offending line and field") {
  std::string good =
      R"({"id": "x-0", "query": null, "context": [["a"],["b"]], "label": "yes", "granularity": "sentence", "gold_mask": [1,0], "tags": [["OTHER"],["OTHER"]]})";
  std::string missing_label =
      R"({"id": "x-1", "query": null, "context": [["a"]], "granularity": "sentence", "gold_mask": [1], "tags": [["OTHER"]]})";
  std::string path = tmp_path("rlab_corpus_bad.jsonl");

  rlab::io::atomic_write(path, good + "\n" + missing_label + "\n");
  CHECK_THROWS_WITH_AS(rlab::corpus::load_jsonl(path),
                       doctest::Contains(":2: missing field 'label'"), std::runtime_error);

  std::string bad_mask =
      R"({"id": "x-2", "query": null, "context": [["a"],["b"],["c"]], "label": "yes", "granularity": "sentence", "gold_mask": [1,0], "tags": [["OTHER"],["OTHER"],["OTHER"]]})";
  rlab::io::atomic_write(path, bad_mask + "\n");
  CHECK_THROWS_WITH_AS(rlab::corpus::load_jsonl(path),
                       doctest::Contains("gold_mask length 2 does not match unit count 3"),
                       std::runtime_error);

  rlab::io::atomic_write(path, "{not json}\n");
  CHECK_THROWS_WITH_AS(rlab::corpus::load_jsonl(path), doctest::Contains(":1: malformed json"),
                       std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("split partitions the dataset deterministically") {
  auto ds = rlab::corpus::generate_synthfact(small_config(5));
  Dataset all = ds.train;
  auto parts = rlab::corpus::split(all, {0.5, 0.25, 0.25}, 9);
  CHECK(parts[0].examples.size() + parts[1].examples.size() + parts[2].examples.size() ==
        all.examples.size());
  std::set<std::string> seen;
  for (const auto& p : parts)
    for (const auto& ex : p.examples) CHECK(seen.insert(ex.id).second);
  auto parts2 = rlab::corpus::split(all, {0.5, 0.25, 0.25}, 9);
  CHECK(parts[0] == parts2[0]);
  CHECK(parts[1] == parts2[1]);
  CHECK(parts[2] == parts2[2]);

  CHECK_THROWS_AS(rlab::corpus::split(all, {0.5, 0.25, 0.35}, 9), std::invalid_argument);
}

TEST_CASE("label is invariant to distractor permutation") {
  auto ds = rlab::corpus::generate_synthfact(small_config(6));
  // The label is a pure function of the gold-rationale sentence: rebuild each
  // example with distractors reversed and re-derive the label from evidence.
  for (const auto& ex : ds.test.examples) {
    const auto& ev = evidence_of(ex);
    bool has = ev.tokens[1].text == "has";
    int supports = static_cast<int>(std::find(ds.test.label_names.begin(),
                                              ds.test.label_names.end(),
                                              "supports") -
                                    ds.test.label_names.begin());
    CHECK((ex.label == supports) == has);
  }
}
