#include "ceri/cli.hpp"
#include "ceri/scenario.hpp"

#include "support.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace ceri {
namespace {

namespace fs = std::filesystem;

const fs::path kScenarios = CERI_SCENARIO_DIR;

struct Invocation {
  int code = 0;
  std::string out;
  std::string err;
};

Invocation run(const std::vector<std::string>& args, const fs::path& base = kScenarios) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_command(args, out, err, {base});
  return {code, out.str(), err.str()};
}

ScenarioError scenario_error(const std::string& text) {
  try {
    parse_scenario_text(text, "inline");
  } catch (const ScenarioError& err) {
    return err;
  }
  ADD_FAILURE() << "scenario parsed";
  return ScenarioError(ErrorCode::kInvalidInput, "", {});
}

bool same_economy(const Economy& a, const Economy& b) {
  if (a.goods != b.goods || a.capacities != b.capacities || a.agents.size() != b.agents.size()) return false;
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    const auto& x = a.agents[i].ranked;
    const auto& y = b.agents[i].ranked;
    if (x.size() != y.size()) return false;
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (!same_bundle(x[k], y[k])) return false;
    }
  }
  return true;
}

TEST(ParseScenario, TwoAgentExample) {
  const Scenario s = parse_scenario((kScenarios / "two_agents.json").string());
  EXPECT_TRUE(same_economy(s.economy, testing::two_agents_economy()));
  ASSERT_EQ(s.budgets.size(), 2u);
  EXPECT_EQ(s.budgets[0], testing::two_agents_budget());
  EXPECT_EQ(s.seed, 1u);
  ASSERT_TRUE(s.prices.has_value());
  EXPECT_EQ(*s.prices, Eigen::Vector2d(2, 1));
}

TEST(ParseScenario, FourAgentExample) {
  const Scenario s = parse_scenario((kScenarios / "four_agents.json").string());
  EXPECT_TRUE(same_economy(s.economy, testing::four_agents_economy()));
  EXPECT_EQ(s.budgets[3], BudgetDistribution::uniform(0, 1));
}

TEST(ParseScenario, EmptyAgentsIsAValidationError) {
  const ScenarioError err = scenario_error("{\n  \"goods\": [{\"name\": \"a\", \"capacity\": 1}],\n  \"agents\": []\n}\n");
  EXPECT_EQ(err.code(), ErrorCode::kValidationError);
  ASSERT_FALSE(err.issues().empty());
  EXPECT_EQ(err.issues()[0].path, "/agents");
  EXPECT_EQ(err.issues()[0].line, 3);
}

TEST(ParseScenario, MalformedTextIsAParseError) {
  const ScenarioError err = scenario_error("{\n  \"goods\": [\n    {\"name\": \"a\",, \"capacity\": 1}\n  ]\n}\n");
  EXPECT_EQ(err.code(), ErrorCode::kParseError);
  ASSERT_EQ(err.issues().size(), 1u);
  EXPECT_EQ(err.issues()[0].line, 3);
  EXPECT_GT(err.issues()[0].column, 0);
}

TEST(ParseScenario, UnknownKeysAndBadValuesAreLocated) {
  const std::string base = R"({"goods": [{"name": "a", "capacity": 1}], "agents": [{"name": "1", "ranked_bundles": [{"a": 1}]}])";
  EXPECT_NO_THROW(parse_scenario_text(base + "}"));
  const ScenarioError unknown = scenario_error(base + ",\n\"colour\": 3}");
  EXPECT_EQ(unknown.code(), ErrorCode::kValidationError);
  EXPECT_EQ(unknown.issues()[0].path, "/colour");
  EXPECT_EQ(unknown.issues()[0].line, 2);
  const ScenarioError good = scenario_error(
      R"({"goods": [{"name": "a", "capacity": 1}], "agents": [{"name": "1", "ranked_bundles": [{"z": 1}]}]})");
  EXPECT_EQ(good.code(), ErrorCode::kValidationError);
  const ScenarioError budget = scenario_error(base + R"(, "budgets": {"identical": {"uniform": [2, 1]}}})");
  EXPECT_EQ(budget.code(), ErrorCode::kValidationError);
}

TEST(ParseScenario, MissingFile) {
  EXPECT_THROW(parse_scenario((kScenarios / "no_such_file.json").string()), Error);
}

TEST(ParseScenario, ShippedScenariosRoundTrip) {
  for (const auto& entry : fs::directory_iterator(kScenarios)) {
    if (entry.path().extension() != ".json" || entry.path().filename() == "corpus.json") continue;
    const Scenario s = parse_scenario(entry.path().string());
    const std::string text = emit_scenario(s);
    EXPECT_EQ(emit_scenario(parse_scenario_text(text)), text) << entry.path();
  }
}

TEST(ParseScenario, RandomScenariosRoundTrip) {
  Rng rng(71);
  testing::EconomyShape shape;
  shape.multi_unit = true;
  for (int trial = 0; trial < 200; ++trial) {
    Scenario s;
    s.economy = testing::random_economy(rng, shape);
    for (int i = 0; i < s.economy.num_agents(); ++i) s.budgets.push_back(testing::random_budget(rng));
    s.seed = rng();
    if (trial % 2 == 0) s.solver.tol = 1e-7;
    const std::string text = emit_scenario(s);
    const Scenario back = parse_scenario_text(text);
    EXPECT_TRUE(same_economy(back.economy, s.economy));
    EXPECT_EQ(back.budgets, s.budgets);
    EXPECT_EQ(back.seed, s.seed);
    EXPECT_EQ(emit_scenario(back), text);
  }
}

TEST(RunCommand, InefficientAllocationExitsTwo) {
  const Invocation r = run({"verify", "--checks", "efficiency", "four_agents_rsd_allocation.json"});
  EXPECT_EQ(r.code, kExitVerification);
  const Json report = Json::parse(r.out);
  EXPECT_NE(r.out.find("\"INEFFICIENT\""), std::string::npos);
  EXPECT_EQ(report["exit_code"], 2);
}

TEST(RunCommand, SmallSupportMechanismOnComplements) {
  const Invocation r = run({"run", "--mechanism", "ceri-s", "--scenario", "complements.json", "--epsilon", "0.1", "--seed", "7"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  const Json report = Json::parse(r.out);
  EXPECT_EQ(report["seed"], 7);
  EXPECT_EQ(report["seed_source"], "command line");
  const auto& lotteries = report["outcome"]["lotteries"];
  ASSERT_EQ(lotteries.size(), 2u);
  for (const auto& l : lotteries) {
    ASSERT_EQ(l["outcomes"].size(), 1u);
    EXPECT_NEAR(l["outcomes"][0]["prob"].get<double>(), 1.0, 1e-6);
  }
}

TEST(RunCommand, HelpAndUsageErrors) {
  const Invocation help = run({"--help"});
  EXPECT_EQ(help.code, kExitOk);
  EXPECT_NE((help.out + help.err).find("Usage"), std::string::npos);
  EXPECT_EQ(run({"run", "--mechanism", "nope", "--scenario", "complements.json"}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"solve-ceri", "--scenario", "missing.json"}).code, kExitUsage);
}

TEST(RunCommand, NonConvergenceExitsThree) {
  const Invocation r = run({"solve-ceri", "--scenario", "four_agents.json", "--max-iters", "1"});
  EXPECT_EQ(r.code, kExitNotConverged);
}

TEST(RunCommand, ByteIdenticalReruns) {
  const std::vector<std::vector<std::string>> commands{
      {"run", "--mechanism", "ceri-l", "--scenario", "four_agents.json", "--seed", "3"},
      {"run", "--mechanism", "ceri-s", "--scenario", "four_agents.json", "--seed", "3"},
      {"implement", "--scenario", "two_agents.json", "--seed", "9"},
      {"grid-stats", "--lambda", "20", "--tau", "2", "--trials", "500", "--seed", "1"},
  };
  for (const auto& args : commands) {
    const Invocation a = run(args);
    const Invocation b = run(args);
    EXPECT_EQ(a.code, kExitOk) << a.err;
    EXPECT_EQ(a.out, b.out);
  }
}

TEST(RunCommand, GeneratedSeedIsReported) {
  const fs::path dir = fs::temp_directory_path() / "ceri_cli_seed";
  fs::create_directories(dir);
  Scenario s = parse_scenario((kScenarios / "four_agents.json").string());
  s.seed.reset();
  std::ofstream(dir / "noseed.json") << emit_scenario(s);
  const Invocation r = run({"run", "--mechanism", "rsd", "--scenario", "noseed.json"}, dir);
  EXPECT_EQ(r.code, kExitOk);
  const Json report = Json::parse(r.out);
  EXPECT_EQ(report["seed_source"], "generated");
  EXPECT_TRUE(report["seed"].is_number_unsigned());
  fs::remove_all(dir);
}

TEST(Corpus, ShippedCorpusPasses) {
  const Invocation r = run({"corpus", "--dir", kScenarios.string()});
  EXPECT_EQ(r.code, kExitOk) << r.out;
}

TEST(Corpus, CorruptedExpectationFailsWithDiff) {
  const fs::path dir = fs::temp_directory_path() / "ceri_cli_corpus";
  fs::remove_all(dir);
  fs::create_directories(dir / "expected");
  fs::copy_file(kScenarios / "two_agents.json", dir / "two_agents.json");
  std::ofstream(dir / "corpus.json") << R"({"entries": [{"name": "two_agents_solve", "args": ["solve-ceri", "--scenario", "two_agents.json"], "exit": 0, "expected": "expected/two_agents_solve.json"}]})";
  std::ifstream in(kScenarios / "expected" / "two_agents_solve.json");
  std::stringstream text;
  text << in.rdbuf();
  std::string corrupted = text.str();
  const auto at = corrupted.find("\"converged\"");
  ASSERT_NE(at, std::string::npos);
  corrupted.replace(at, 11, "\"diverged\"");
  std::ofstream(dir / "expected" / "two_agents_solve.json") << corrupted;

  const Invocation r = run({"corpus", "--dir", dir.string()});
  EXPECT_NE(r.code, kExitOk);
  const Json report = Json::parse(r.out);
  ASSERT_EQ(report["results"].size(), 1u);
  EXPECT_EQ(report["results"][0]["status"], "fail");
  EXPECT_NE(report["results"][0]["diff"].get<std::string>().find("diverged"), std::string::npos);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace ceri
