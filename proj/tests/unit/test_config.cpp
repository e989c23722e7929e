#include <doctest.h>

#include "gcnrn/config.hpp"

using namespace gcnrn;

TEST_SUITE("config") {
  TEST_CASE("dump and parse round trip") {
    RunConfig c;
    c.model.relation = RelationKind::kVanilla;
    c.model.epochs = 7;
    c.synthetic.centroid_distance = 0.5;
    c.sweep.methods = {"gcnn", "knn"};
    const std::string text = c.dump();
    const auto back = RunConfig::parse(text);
    CHECK(back.dump() == text);
    CHECK(back.model.relation == RelationKind::kVanilla);
    CHECK(back.model.epochs == 7);
  }

  TEST_CASE("partial config keeps defaults") {
    const auto c = RunConfig::parse(R"({"model": {"epochs": 3}})");
    CHECK(c.model.epochs == 3);
    CHECK(c.model.batch_size == 64);
    CHECK(c.cv.splits == 20);
  }

  TEST_CASE("unknown keys and sections are rejected") {
    CHECK_THROWS_AS(RunConfig::parse(R"({"model": {"epoch": 3}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"trainer": {}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"model": {"epochs": "many"}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"model": {"relation": "lstm"}})"), ConfigError);
    CHECK_THROWS_AS(RunConfig::parse(R"({"cv": {"splits": 0}})"), ConfigError);
  }

  TEST_CASE("malformed JSON reports line and column") {
    try {
      RunConfig::parse("{\n  \"model\": {\n    \"epochs\": 3,\n  }\n}");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
  }

  TEST_CASE("overrides") {
    RunConfig c;
    c.apply_override("model.epochs=12");
    c.apply_override("model.relation=none");
    c.apply_override("model.conv_filters=[8,8]");
    c.apply_override("output.dir=123");
    c.apply_override("synthetic.centroid_distance=1.5");
    CHECK(c.model.epochs == 12);
    CHECK(c.model.relation == RelationKind::kNone);
    CHECK(c.model.conv_filters == std::vector<index_t>{8, 8});
    CHECK(c.output_dir == "123");
    CHECK(c.synthetic.centroid_distance == 1.5);
    CHECK_THROWS_AS(c.apply_override("model.epochs"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("model.nothing=1"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("model.batch_size=1"), ConfigError);
    CHECK_THROWS_AS(c.apply_override("model.cheb_order=[3]"), ConfigError);
  }

  TEST_CASE("load reports missing files") {
    CHECK_THROWS_AS(RunConfig::load("/nonexistent/config.json"), ConfigError);
  }
}
