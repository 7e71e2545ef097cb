#include <doctest.h>

#include <filesystem>
#include <numeric>

#include "test_support.hpp"
#include "tif/config.hpp"
#include "tif/serialize.hpp"

using namespace tif;
namespace fs = std::filesystem;

namespace {

TifConfig tiny_config() {
  TifConfig cfg;
  cfg.levels = 2;
  cfg.branches = 2;
  cfg.hidden = 8;
  cfg.feature_dim = 4;
  cfg.classes = 3;
  cfg.k_max = 8;
  cfg.router_hidden = 8;
  cfg.seed = 13;
  return cfg;
}

}  // namespace

TEST_CASE("checkpoint round-trips config and every parameter exactly") {
  TifModel m = TifModel::create(tiny_config());
  fs::path path = fs::temp_directory_path() / "tif_ckpt_test.ckpt";
  save_checkpoint(m, path);
  TifModel loaded = load_checkpoint(path);

  CHECK(loaded.config.levels == m.config.levels);
  CHECK(loaded.config.classes == m.config.classes);
  CHECK(loaded.config.seed == m.config.seed);
  REQUIRE(loaded.params.size() == m.params.size());
  for (int p = 0; p < m.params.size(); ++p) {
    CHECK(loaded.params[p].name == m.params[p].name);
    CHECK(loaded.params[p].trainable == m.params[p].trainable);
    CHECK(loaded.params[p].value.data == m.params[p].value.data);
  }

  // identical inference after reload
  Rng rng(5);
  Graph g = test::random_graph(rng, 7, 4);
  CHECK(m.explain(g).path_id() == loaded.explain(g).path_id());
  fs::remove(path);
}

TEST_CASE("checkpoint rejects a bad header") {
  fs::path path = fs::temp_directory_path() / "tif_ckpt_bad.ckpt";
  write_text(path, "NOPE\n{}\n0\n");
  CHECK_THROWS_AS(load_checkpoint(path), std::runtime_error);
  fs::remove(path);
}

TEST_CASE("trace json carries the declared schema") {
  TifModel m = TifModel::create(tiny_config());
  Rng rng(6);
  Graph g = test::random_graph(rng, 8, 4);
  TreeTrace t = m.explain(g);
  json j = trace_to_json(t);

  REQUIRE(j.contains("levels"));
  REQUIRE(j.contains("pred"));
  REQUIRE(j.contains("probs"));
  CHECK(j["levels"].size() == 2);
  for (const auto& lvl : j["levels"]) {
    REQUIRE(lvl.contains("selected"));
    REQUIRE(lvl.contains("probs"));
    REQUIRE(lvl.contains("graph"));
    int n = lvl["graph"]["n"];
    CHECK(lvl["graph"]["adj"].size() == static_cast<size_t>(n));
    CHECK(lvl["graph"]["feat"].size() == static_cast<size_t>(n));
  }
  CHECK(j["probs"].size() == 3);
}

TEST_CASE("dot export is a digraph with one bold edge per level") {
  TifModel m = TifModel::create(tiny_config());
  Rng rng(7);
  TreeTrace t = m.explain(test::random_graph(rng, 8, 4));
  std::string dot = trace_to_dot(t, m.config.branches);
  CHECK(dot.rfind("digraph", 0) == 0);
  CHECK(dot.find("}") != std::string::npos);
  size_t bold = 0, pos = 0;
  while ((pos = dot.find("style=bold", pos)) != std::string::npos) {
    ++bold;
    ++pos;
  }
  CHECK(bold == t.levels.size());
  CHECK(dot.find("\"0:" + std::to_string(t.levels[0].selected) + "\"") != std::string::npos);
}

TEST_CASE("config text parsing and precedence") {
  RunConfig rc;
  parse_config_text(rc,
                    "# comment\n"
                    "[model]\n"
                    "levels = 3\n"
                    "q = 0.3\n"
                    "variant = bitree\n"
                    "[dataset]\n"
                    "path = /tmp/data\n"
                    "[output]\n"
                    "dir = /tmp/out\n");
  CHECK(rc.model.levels == 3);
  CHECK(rc.model.q == doctest::Approx(0.3));
  CHECK(rc.model.profile == VariantProfile::BiTree);
  CHECK(rc.dataset_path == "/tmp/data");
  CHECK(rc.out_dir == "/tmp/out");
  CHECK(rc.model.branches == 4);  // untouched default

  RunConfig bad;
  CHECK_THROWS_AS(parse_config_text(bad, "[model]\nnot_a_key = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(bad, "key_outside_section = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_config_text(bad, "[model]\nrouter = quantum\n"), std::invalid_argument);
}

TEST_CASE("resolved config echo re-parses to the same values") {
  RunConfig rc;
  rc.model.levels = 3;
  rc.model.q = 0.35;
  rc.model.perturb_space = PerturbSpace::Simplex;
  rc.metric_noise = 0.07;
  rc.dataset_path = "somewhere";
  std::string echo = resolved_config_text(rc);

  RunConfig back;
  parse_config_text(back, echo);
  CHECK(back.model.levels == 3);
  CHECK(back.model.q == doctest::Approx(0.35));
  CHECK(back.model.perturb_space == PerturbSpace::Simplex);
  CHECK(back.metric_noise == doctest::Approx(0.07));
  CHECK(back.dataset_path == "somewhere");
  // every key present: echo mentions each section
  for (const char* section : {"[dataset]", "[model]", "[metrics]", "[output]"})
    CHECK(echo.find(section) != std::string::npos);
}

TEST_CASE("manifest checksum is stable and shape-sensitive") {
  SynthSpec spec;
  spec.kind = SynthKind::GraphCycle;
  spec.count = 6;
  spec.scale = 0.1;
  spec.seed = 5;
  DatasetBundle a = gen_graphcycle(spec);
  DatasetBundle b = gen_graphcycle(spec);
  json ma = bundle_manifest(a);
  CHECK(ma["checksum"] == bundle_manifest(b)["checksum"]);
  CHECK(ma["graphs"] == 6);
  CHECK(ma["classes"] == 2);

  spec.seed = 6;
  DatasetBundle c = gen_graphcycle(spec);
  CHECK(ma["checksum"] != bundle_manifest(c)["checksum"]);
}

TEST_CASE("ground truth sidecar round-trips") {
  SynthSpec spec;
  spec.kind = SynthKind::GraphCycle;
  spec.count = 4;
  spec.scale = 0.1;
  spec.seed = 9;
  DatasetBundle b = gen_graphcycle(spec);
  fs::path path = fs::temp_directory_path() / "tif_gt_test.json";
  save_ground_truth(b, path);

  DatasetBundle other = b;
  other.ground_truth.clear();
  load_ground_truth(other, path, spec.feature_dim);
  REQUIRE(other.ground_truth.size() == b.ground_truth.size());
  for (size_t i = 0; i < b.ground_truth.size(); ++i) {
    CHECK(other.ground_truth[i].adjacency.data == b.ground_truth[i].adjacency.data);
    CHECK(other.ground_truth[i].label == b.ground_truth[i].label);
  }
  fs::remove(path);
}
