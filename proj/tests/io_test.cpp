#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "cascade/io.hpp"
#include "fixtures.hpp"

namespace cascade {
namespace {

using io::json;

std::string scenario_path(const std::string& name) { return std::string(CASCADE_SCENARIO_DIR) + "/" + name; }

json minimal() {
  return json::parse(R"({"edges": [{"id": "e1", "tail": 0, "head": 1, "capacity": 2}], "lambda": 1})");
}

ErrorCode parse_error(const json& j) {
  try {
    io::parse_scenario(j);
  } catch (const CascadeError& e) {
    return e.code();
  }
  ADD_FAILURE() << "scenario parsed: " << j.dump();
  return ErrorCode::SchemaError;
}

TEST(Scenario, Example1MatchesFixture) {
  auto s = io::load_scenario(scenario_path("example1.json"));
  const auto ref = fixtures::example1();
  ASSERT_EQ(s.network.link_count(), ref.link_count());
  for (LinkIndex e = 0; e < ref.link_count(); ++e) {
    EXPECT_EQ(s.network.link(e).id, ref.link(e).id);
    EXPECT_EQ(s.network.link(e).tail, ref.link(e).tail);
    EXPECT_EQ(s.network.link(e).head, ref.link(e).head);
    EXPECT_DOUBLE_EQ(s.network.capacity(e), ref.capacity(e));
  }
  EXPECT_DOUBLE_EQ(s.network.inflow(), 4.0);
  EXPECT_EQ(s.routing.kind, PolicyKind::Proportional);
  EXPECT_NEAR(s.schedule.magnitude(), 0.55, 1e-12);
}

TEST(Scenario, NamedNodesMapOriginAndDestination) {
  auto s = io::load_scenario(scenario_path("two_link.json"));
  EXPECT_EQ(s.node_names, (std::vector<std::string>{"s", "d"}));
  EXPECT_EQ(s.routing.kind, PolicyKind::Bpa);
  EXPECT_EQ(s.adversary, AttackKind::BpaGuided);
}

TEST(Scenario, RoundTripIsLossless) {
  for (const char* name : {"example1.json", "example2.json", "two_link.json", "single_link.json"}) {
    auto s = io::load_scenario(scenario_path(name));
    const json once = io::scenario_json(s);
    const json twice = io::scenario_json(io::parse_scenario(once));
    EXPECT_EQ(once.dump(), twice.dump()) << name;
  }
}

TEST(Scenario, TableRoutingRoundTrip) {
  auto j = json::parse(R"({
    "edges": [{"id": "a", "tail": 0, "head": 1, "capacity": 2}, {"id": "b", "tail": 0, "head": 1, "capacity": 2}],
    "lambda": 1,
    "routing": {"type": "table", "entries": [
      {"node": 0, "links": ["a", "b"], "points": [{"mu": 1, "split": [0.25, 0.75]}]},
      {"node": 0, "links": ["a"], "points": [{"mu": 1, "split": [1]}]},
      {"node": 0, "links": ["b"], "points": [{"mu": 1, "split": [1]}]}]}})");
  auto s = io::parse_scenario(j);
  auto policy = io::build_policy(s).policy;
  EXPECT_DOUBLE_EQ(policy->split(0, 0b11, 2.0)[1], 1.5);
  EXPECT_EQ(io::scenario_json(io::parse_scenario(io::scenario_json(s))).dump(), io::scenario_json(s).dump());
}

TEST(Scenario, SchemaErrors) {
  auto no_cap = minimal();
  no_cap["edges"][0].erase("capacity");
  EXPECT_EQ(parse_error(no_cap), ErrorCode::SchemaError);
  auto no_lambda = minimal();
  no_lambda.erase("lambda");
  EXPECT_EQ(parse_error(no_lambda), ErrorCode::SchemaError);
  auto bad_routing = minimal();
  bad_routing["routing"] = {{"type", "random"}};
  EXPECT_EQ(parse_error(bad_routing), ErrorCode::SchemaError);
  auto unknown_link = minimal();
  unknown_link["disturbance"] = {{"schedule", {{{"t", 1}, {"link", "zz"}, {"amount", 0.1}}}}};
  EXPECT_EQ(parse_error(unknown_link), ErrorCode::SchemaError);
  auto both = minimal();
  both["disturbance"] = {{"schedule", json::array()}, {"adversary", "brute"}};
  EXPECT_EQ(parse_error(both), ErrorCode::SchemaError);
  auto bad_adversary = minimal();
  bad_adversary["disturbance"] = {{"adversary", "random"}};
  EXPECT_EQ(parse_error(bad_adversary), ErrorCode::SchemaError);
  auto string_cap = minimal();
  string_cap["edges"][0]["capacity"] = "2";
  EXPECT_EQ(parse_error(string_cap), ErrorCode::SchemaError);
  EXPECT_THROW(io::load_scenario(scenario_path("no_such_file.json")), CascadeError);
}

TEST(Scenario, DefaultsAreEchoed) {
  auto j = io::scenario_json(io::parse_scenario(minimal()));
  EXPECT_EQ(j["routing"]["type"], "proportional");
  EXPECT_DOUBLE_EQ(j["options"]["tol"].get<double>(), 1e-9);
  EXPECT_EQ(j["options"]["brute_force_links"], kDefaultBruteForceLinks);
}

TEST(Output, FlowsCsvHasOneRowPerStepAndLink) {
  auto s = io::load_scenario(scenario_path("example1.json"));
  auto trace = run(s.network, *io::build_policy(s).policy, s.schedule);
  const auto csv = io::flows_csv(s.network, trace);
  std::size_t rows = 0;
  for (char c : csv) rows += c == '\n';
  EXPECT_EQ(rows, 1 + trace.steps.size() * s.network.link_count());
  EXPECT_EQ(csv.rfind("t,link,active,flow,residual\n", 0), 0u);
  auto j = io::trace_json(s.network, trace);
  EXPECT_EQ(j["summary"]["transferring"], false);
  EXPECT_EQ(j["summary"]["inactivation_order"].front(), "e5");
}

TEST(Output, WriteFileReplacesContent) {
  const std::string path = ::testing::TempDir() + "cascade_io_test.txt";
  io::write_file(path, "first");
  io::write_file(path, "second");
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "second");
  std::remove(path.c_str());
}

// ---------------------------------------------------------------------------
// Command-line front end

struct CommandResult {
  int exit_code = -1;
  std::string out;
};

CommandResult cli(const std::string& args) {
  const std::string cmd = std::string(CASCADE_CLI) + " " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

TEST(Cli, ValidateExitCodes) {
  auto ok = cli("validate " + scenario_path("example1.json"));
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_TRUE(json::parse(ok.out)["valid"].get<bool>());
  auto cyclic = cli("validate " + scenario_path("cyclic.json"));
  EXPECT_EQ(cyclic.exit_code, 1);
  EXPECT_NE(cyclic.out.find("CyclicGraph"), std::string::npos);
}

TEST(Cli, SimulateExample1) {
  auto r = cli("simulate " + scenario_path("example1.json"));
  ASSERT_EQ(r.exit_code, 0);
  auto j = json::parse(r.out);
  EXPECT_FALSE(j["transferring"].get<bool>());
  EXPECT_EQ(j["inactivation_order"].size(), 10u);
}

TEST(Cli, BoundsSingleLinkAllEqual) {
  auto r = cli("bounds " + scenario_path("single_link.json"));
  ASSERT_EQ(r.exit_code, 0);
  auto j = json::parse(r.out);
  for (const char* key : {"lower", "upper_cut", "upper_centralized", "upper_bpa"}) {
    EXPECT_NEAR(j[key].get<double>(), 1.0, 1e-7) << key;
  }
}

TEST(Cli, BoundsTwoLink) {
  auto j = json::parse(cli("bounds " + scenario_path("two_link.json")).out);
  EXPECT_NEAR(j["upper_bpa"].get<double>(), 18.0, 1e-3);
  EXPECT_NEAR(j["upper_centralized"].get<double>(), 18.0, 1e-6);
}

TEST(Cli, AttackPlanReplays) {
  auto r = cli("attack " + scenario_path("example1.json") + " --mode centralized");
  ASSERT_EQ(r.exit_code, 0);
  auto plan = json::parse(r.out);
  EXPECT_FALSE(plan["transferring"].get<bool>());
  // feed the emitted disturbance back through the simulator
  auto scenario = io::read_json_file(scenario_path("example1.json"));
  scenario["disturbance"] = plan["disturbance"];
  auto s = io::parse_scenario(scenario);
  auto trace = run(s.network, *io::build_policy(s).policy, s.schedule);
  EXPECT_FALSE(trace.transferring);
  EXPECT_NEAR(s.schedule.magnitude(), plan["predicted_magnitude"].get<double>(), 1e-6);
}

TEST(Cli, SweepSingleLinkIsStraightLine) {
  auto r = cli("sweep " + scenario_path("single_link.json") + " --node 0 --points 5");
  ASSERT_EQ(r.exit_code, 0);
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "mu,S");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    const double mu = std::stod(line.substr(0, comma)), s = std::stod(line.substr(comma + 1));
    EXPECT_NEAR(s, std::max(2.0 - mu, 0.0), 1e-9) << line;
    ++rows;
  }
  EXPECT_EQ(rows, 5u);
}

TEST(Cli, OutputsAreDeterministic) {
  for (const std::string& args : {"bounds " + scenario_path("example2.json"),
                                 "simulate " + scenario_path("example1.json"),
                                 "attack " + scenario_path("two_link.json") + " --mode bpa",
                                 "sweep " + scenario_path("example2.json") + " --policy-split 1 --points 41"}) {
    auto a = cli(args), b = cli(args);
    EXPECT_EQ(a.exit_code, 0) << args;
    EXPECT_EQ(a.out, b.out) << args;
  }
}

TEST(Cli, RuntimeErrorsExitTwo) {
  const std::string path = ::testing::TempDir() + "cascade_overloaded.json";
  io::write_file(path, R"({"edges": [{"id": "e1", "tail": 0, "head": 1, "capacity": 2}], "lambda": 1,
                           "options": {"step_cap": 0},
                           "disturbance": {"schedule": [{"t": 1, "link": "e1", "amount": 1.5}]}})");
  EXPECT_EQ(cli("simulate " + path).exit_code, 2);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace cascade
