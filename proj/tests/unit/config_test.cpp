#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "mqg/config.hpp"
#include "mqg/error.hpp"

namespace mqg {
namespace {

TEST(RunConfig, Parse) {
  const auto c = RunConfig::parse("# comment\nbeta = 1.5\nseed: 7  # trailing\n\nname = a b\nbeta=2\n");
  EXPECT_DOUBLE_EQ(c.get_double("beta"), 2.0);
  EXPECT_EQ(c.get_int("seed"), 7);
  EXPECT_EQ(c.get_string("name"), "a b");
  EXPECT_EQ(c.get_string("missing", "fb"), "fb");
  EXPECT_THROW(c.get_string("missing"), Error);
  EXPECT_THROW(c.get_int("name"), Error);
  EXPECT_THROW(c.get_double("name"), Error);
}

TEST(RunConfig, ParseErrorsNameLine) {
  try {
    RunConfig::parse("a = 1\nno separator\n", "run.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("run.cfg:2"), std::string::npos);
  }
  EXPECT_THROW(RunConfig::parse("= 3"), Error);
}

TEST(RunConfig, Precedence) {
  auto c = RunConfig::parse("seed = 3\nbeta = 1\n");
  c.set("beta", "0.5");       // flag override
  c.set_default("seed", "0");  // default never clobbers
  c.set_default("folds", "3");
  EXPECT_EQ(c.get_int("seed"), 3);
  EXPECT_DOUBLE_EQ(c.get_double("beta"), 0.5);
  EXPECT_EQ(c.get_int("folds"), 3);
}

TEST(RunConfig, HashIsStableAndOrderFree) {
  const auto a = RunConfig::parse("x = 1\ny = 2\n");
  const auto b = RunConfig::parse("y = 2\nx = 1\n");
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  EXPECT_NE(a.hash(), RunConfig::parse("x = 1\ny = 3\n").hash());
  // Field boundaries matter.
  EXPECT_NE(RunConfig::parse("ab = c\n").hash(), RunConfig::parse("a = bc\n").hash());
}

TEST(RunConfig, LoadFromFile) {
  const auto p = std::filesystem::temp_directory_path() / "mqg_config_test.cfg";
  std::ofstream(p) << "beta = 0.25\n";
  EXPECT_DOUBLE_EQ(RunConfig::load(p).get_double("beta"), 0.25);
  std::filesystem::remove(p);
  EXPECT_THROW(RunConfig::load(p), Error);
}

TEST(RunManifest, Json) {
  RunManifest m;
  m.command = "generate";
  m.config_hash = "00ff";
  m.config = {{"seed", "4"}};
  m.inputs = {"a.jsonl"};
  m.outputs = {"generated.jsonl"};
  m.seed = 4;
  m.started_at = utc_timestamp();
  const auto j = m.to_json();
  for (const char* k : {"command", "config_hash", "config", "inputs", "outputs", "seed",
                        "started_at", "finished_at", "versions"}) {
    EXPECT_TRUE(j.contains(k)) << k;
  }
  EXPECT_EQ(j["seed"], 4);
  EXPECT_EQ(m.started_at.size(), 20u);  // YYYY-MM-DDTHH:MM:SSZ
}

}  // namespace
}  // namespace mqg
