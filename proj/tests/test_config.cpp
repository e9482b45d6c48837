#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "advdn/errors.hpp"
#include "advdn/experiment.hpp"
#include "support.hpp"

using namespace advdn;

namespace {

const char* kValid = R"({
  "seed": 3,
  "run_id": "unit",
  "dataset": {"train": "d/train/manifest.json", "test": "d/test/manifest.json"},
  "models": [
    {"id": "a", "kind": "residual-cnn", "depth": 3, "width": 8, "train": {"epochs": 1, "sigma": 25}},
    {"id": "tv", "kind": "tv-classical"}
  ],
  "attack": {"model": "a", "pgd": {"epsilon": 0.02, "steps": 2}}
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto at = s.find(from);
  EXPECT_NE(at, std::string::npos) << from;
  return s.replace(at, from.size(), to);
}

}  // namespace

TEST(Config, ParsesAndRoundTrips) {
  const ExperimentConfig c = parse_config(kValid, "unit.json", "/base");
  EXPECT_EQ(c.seed, 3u);
  ASSERT_EQ(c.models.size(), 2u);
  EXPECT_EQ(c.models[1].spec.kind, DenoiserKind::TvClassical);
  ASSERT_TRUE(c.attack);
  EXPECT_DOUBLE_EQ(c.attack->modes.at("pgd").epsilon, 0.02);
  EXPECT_EQ(c.resolve("x/y"), std::filesystem::path("/base/x/y"));
  EXPECT_NE(c.find_model("a"), nullptr);
  EXPECT_EQ(c.find_model("zzz"), nullptr);

  const std::string dumped = nlohmann::json(c).dump(2);
  const ExperimentConfig back = parse_config(dumped, "dump.json", "/base");
  EXPECT_EQ(back.hash(), c.hash());
  EXPECT_EQ(nlohmann::json(back), nlohmann::json(c));
}

TEST(Config, SchemaErrorsCarryLineAndPointer) {
  const std::string bad = replace(kValid, "\"depth\": 3", "\"depth\": \"deep\"");
  const auto issues = validate_config_text(bad);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].line, 6);
  EXPECT_EQ(issues[0].pointer, "/models/0/depth");

  const auto extra = validate_config_text(replace(kValid, "\"run_id\": \"unit\",", "\"run_id\": \"unit\", \"colour\": 1,"));
  ASSERT_EQ(extra.size(), 1u);
  EXPECT_EQ(extra[0].line, 3);
  EXPECT_EQ(extra[0].pointer, "/colour");

  const auto missing = validate_config_text(replace(kValid, "\"seed\": 3,", ""));
  ASSERT_EQ(missing.size(), 1u);
  EXPECT_NE(missing[0].message.find("seed"), std::string::npos);

  const auto syntax = validate_config_text("{\n  \"seed\": 1,\n  \"dataset\": {,\n}");
  ASSERT_EQ(syntax.size(), 1u);
  EXPECT_EQ(syntax[0].line, 3);

  try {
    parse_config(bad, "bad.json", ".");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad.json:6: /models/0/depth: ", 0), 0u) << e.what();
  }
}

TEST(Config, SemanticErrorsAreConfigErrors) {
  EXPECT_THROW(parse_config(replace(kValid, "\"id\": \"tv\"", "\"id\": \"a\""), "dup.json", "."), ConfigError);
}

TEST(Config, Overrides) {
  nlohmann::json doc = nlohmann::json::parse(kValid);
  apply_override(doc, "attack.pgd.epsilon=0");
  EXPECT_EQ(doc["attack"]["pgd"]["epsilon"], 0);
  apply_override(doc, "models.0.width=16");
  EXPECT_EQ(doc["models"][0]["width"], 16);
  apply_override(doc, "run_id=other");
  EXPECT_EQ(doc["run_id"], "other");
  EXPECT_THROW(apply_override(doc, "models.5.width=1"), ConfigError);
  EXPECT_THROW(apply_override(doc, "attack={\"model\":\"a\"}"), ConfigError);
  EXPECT_THROW(apply_override(doc, "noequals"), ConfigError);
  EXPECT_THROW(apply_override(doc, "seed.x=1"), ConfigError);

  support::TempDir dir("cfg");
  const auto path = dir.path() / "exp.json";
  std::ofstream(path) << kValid;
  const ExperimentConfig c = load_config(path, {"attack.pgd.steps=4", "seed=9"});
  EXPECT_EQ(c.attack->modes.at("pgd").steps, 4);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.base_dir, dir.path());
  EXPECT_THROW(load_config(path, {"attack.pgd.steps=-1"}), ConfigError);
  EXPECT_THROW(load_config(dir.path() / "missing.json"), ResolutionError);
}

TEST(Store, AppendOnly) {
  support::TempDir dir("store");
  ArtifactStore store(dir.path() / "run");
  store.write("a/b.txt", "hello");
  EXPECT_NO_THROW(store.write("a/b.txt", "hello"));
  EXPECT_THROW(store.write("a/b.txt", "other"), ArtifactConflict);
  EXPECT_EQ(store.read("a/b.txt"), "hello");
  store.write("manifest.json", "{}");
  store.write("manifest.json", "{\"x\": 1}");
  const auto sums = store.checksums();
  EXPECT_EQ(sums.size(), 1u);
  EXPECT_TRUE(sums.count("a/b.txt"));
  EXPECT_THROW(store.read("nope"), ResolutionError);
}

TEST(Store, OutputDirectoryResolution) {
  ExperimentConfig c = parse_config(kValid, "unit.json", "/base");
  EXPECT_EQ(resolve_output_dir(c, std::string("explicit")), std::filesystem::path("explicit"));
  ::unsetenv("ADVDN_OUTPUT_ROOT");
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), std::filesystem::path("runs/unit"));
  ::setenv("ADVDN_OUTPUT_ROOT", "/tmp/advdn-root", 1);
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), std::filesystem::path("/tmp/advdn-root/unit"));
  c.output = "out";
  EXPECT_EQ(resolve_output_dir(c, std::nullopt), std::filesystem::path("/base/out"));
  ::unsetenv("ADVDN_OUTPUT_ROOT");
}
