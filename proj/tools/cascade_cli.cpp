#include <cstdlib>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <unistd.h>

#include "cascade/adversary.hpp"
#include "cascade/audit.hpp"
#include "cascade/centralized.hpp"
#include "cascade/io.hpp"
#include "cascade/properties.hpp"
#include "cascade/structural.hpp"

namespace {

using namespace cascade;
using io::json;

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kRuntime = 2;

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::CyclicGraph:
    case ErrorCode::MultipleOrigins:
    case ErrorCode::MultipleDestinations:
    case ErrorCode::NonpositiveCapacity:
    case ErrorCode::DisconnectedIntermediate:
    case ErrorCode::MalformedLink:
    case ErrorCode::DuplicateLinkId:
    case ErrorCode::InfeasibleInitialFlow:
    case ErrorCode::CumulativeCapExceeded:
    case ErrorCode::MissingPolicyEntry:
    case ErrorCode::SchemaError:
      return true;
    default:
      return false;
  }
}

json error_json(ErrorCode code, const std::string& message) {
  return {{"error", {{"code", std::string(to_string(code))}, {"message", message}}}};
}

/// Reads a scenario; CASCADE_TOL supplies the tolerance when the file has none.
io::Scenario load(const std::string& path) {
  auto j = io::read_json_file(path);
  if (const char* env = std::getenv("CASCADE_TOL")) {
    const bool has_tol = j.is_object() && j.contains("options") && j.at("options").contains("tol");
    if (!has_tol) {
      try {
        j["options"]["tol"] = std::stod(env);
      } catch (const std::exception&) {
        throw CascadeError(ErrorCode::SchemaError, "CASCADE_TOL is not a number");
      }
    }
  }
  return io::parse_scenario(j);
}

void emit(const json& j) { std::cout << j.dump(2) << '\n'; }

json metadata(const io::Scenario& s) {
  return {{"routing", io::routing_json(s.routing, s.network)}, {"options", io::options_json(s.options)}};
}

NodeId parse_node(const io::Scenario& s, const std::string& text) {
  for (std::size_t v = 0; v < s.node_names.size(); ++v) {
    if (s.node_names[v] == text) return v;
  }
  std::size_t pos = 0;
  NodeId v = 0;
  try {
    v = std::stoul(text, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != text.size() || v >= s.network.destination()) {
    throw CascadeError(ErrorCode::SchemaError, "'" + text + "' is not a non-destination node");
  }
  return v;
}

AttackPlan make_attack(const io::Scenario& s, const io::PolicyBundle& p, AttackKind kind) {
  const auto dyn = s.dynamics();
  switch (kind) {
    case AttackKind::Centralized: return centralized_attack(s.network, *p.policy, dyn);
    case AttackKind::BpaGuided: return bpa_guided_attack(s.network, *p.policy, s.bpa(), dyn);
    case AttackKind::BruteForce: return brute_force_margin(s.network, *p.policy, s.options.brute_force_links, dyn).plan;
  }
  throw CascadeError(ErrorCode::SchemaError, "unknown attack mode");
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& path) {
  io::Scenario s;
  try {
    s = load(path);
  } catch (const CascadeError& e) {
    json out = {{"valid", false}};
    out.update(error_json(e.code(), e.what()));
    emit(out);
    return kInvalid;
  }
  auto report = validate(s.network);
  json out = io::validation_json(report);
  if (report.ok()) {
    const auto [cut, residual] = min_residual_cut(s.network);
    out["feasible"] = residual > 0.0;
    out["tree"] = is_tree(s.network);
    out["metadata"] = metadata(s);
  }
  emit(out);
  return report.ok() ? kOk : kInvalid;
}

int cmd_simulate(const std::string& path, const std::string& trace_path, const std::string& flows_path) {
  auto s = load(path);
  require_valid(s.network);
  auto p = io::build_policy(s);
  DisturbanceSchedule schedule = s.schedule;
  json attack = nullptr;
  if (s.adversary) {
    auto plan = make_attack(s, p, *s.adversary);
    schedule = plan.schedule;
    attack = io::attack_json(s.network, plan);
  }
  auto trace = run(s.network, *p.policy, schedule, s.dynamics());
  if (!trace_path.empty()) io::write_file(trace_path, io::trace_json(s.network, trace).dump(2) + "\n");
  if (!flows_path.empty()) io::write_file(flows_path, io::flows_csv(s.network, trace));
  json order = json::array();
  for (LinkIndex e : trace.link_inactivation_order()) order.push_back(s.network.link(e).id);
  json out = {{"transferring", trace.transferring},
              {"T", trace.termination_time},
              {"outflow", trace.final_outflow},
              {"magnitude", schedule.magnitude()},
              {"inactivation_order", order}};
  if (!attack.is_null()) out["attack"] = attack;
  out["metadata"] = metadata(s);
  emit(out);
  return kOk;
}

int cmd_bounds(const std::string& path) {
  auto s = load(path);
  require_valid(s.network);
  auto p = io::build_policy(s);
  auto b = simple_bounds(s.network, *p.policy, s.dynamics());
  auto oracle = p.oracle ? p.oracle : bpa_compute(s.network, s.bpa());
  json cut = json::array();
  for (NodeId v : b.cut.members) cut.push_back(io::node_json(s, v));
  json out = {{"lower", b.lower},
              {"lower_link", s.network.link(b.lower_link).id},
              {"upper_cut", b.upper},
              {"cut", cut}};
  if (s.network.link_count() <= kMaxCentralizedLinks) {
    out["upper_centralized"] = centralized_upper_bound(s.network);
  } else {
    out["upper_centralized"] = nullptr;
  }
  out["upper_bpa"] = oracle->s_star();
  out["bpa_optimality_guaranteed"] = oracle->optimality_guaranteed();
  out["metadata"] = metadata(s);
  emit(out);
  return kOk;
}

int cmd_attack(const std::string& path, const std::string& mode) {
  auto s = load(path);
  require_valid(s.network);
  std::optional<AttackKind> kind = s.adversary;
  if (!mode.empty()) kind = io::parse_attack_kind(mode);
  if (!kind) throw CascadeError(ErrorCode::SchemaError, "unknown attack mode '" + mode + "'");
  auto p = io::build_policy(s);
  auto plan = make_attack(s, p, *kind);
  auto replay = run(s.network, *p.policy, plan.schedule, s.dynamics());
  json out = io::attack_json(s.network, plan);
  out["replay"] = {{"transferring", replay.transferring}, {"magnitude", plan.schedule.magnitude()}};
  out["metadata"] = metadata(s);
  emit(out);
  return kOk;
}

int cmd_sweep(const std::string& path, const std::string& node, const std::string& split_node, std::size_t points,
              std::optional<double> from, std::optional<double> to) {
  auto s = load(path);
  require_valid(s.network);
  if (node.empty() == split_node.empty()) {
    throw CascadeError(ErrorCode::SchemaError, "give exactly one of --node and --policy-split");
  }
  if (points < 2) throw CascadeError(ErrorCode::SchemaError, "--points must be at least 2");
  auto oracle = bpa_compute(s.network, s.bpa());
  const NodeId v = parse_node(s, node.empty() ? split_node : node);
  double total = 0.0;
  for (LinkIndex e : s.network.out_links(v)) total += s.network.capacity(e);
  const double lo = from.value_or(0.0), hi = to.value_or(total);
  std::ostringstream out;
  out.precision(12);
  if (!node.empty()) {
    out << "mu,S\n";
    for (std::size_t i = 0; i < points; ++i) {
      const double mu = lo + (hi - lo) * double(i) / double(points - 1);
      out << mu << ',' << oracle->node_curve(v)(mu) << '\n';
    }
  } else {
    BpaPolicy policy(oracle);
    auto links = s.network.out_links(v);
    out << "mu";
    for (LinkIndex e : links) out << ',' << s.network.link(e).id;
    out << '\n';
    for (std::size_t i = 0; i < points; ++i) {
      const double mu = lo + (hi - lo) * double(i) / double(points - 1);
      auto x = policy.full_split(v, mu);
      out << mu;
      for (double xi : x) out << ',' << xi;
      out << '\n';
    }
  }
  std::cout << out.str();
  return kOk;
}

json witnesses_json(const io::Scenario& s, const MonotonicityReport& r, std::size_t limit) {
  json list = json::array();
  for (std::size_t i = 0; i < r.witnesses.size() && i < limit; ++i) {
    const auto& w = r.witnesses[i];
    const auto out = s.network.out_links(w.node);
    list.push_back({{"node", io::node_json(s, w.node)},
                    {"link", s.network.link(out[w.link]).id},
                    {"larger_set", w.larger_set},
                    {"smaller_set", w.smaller_set},
                    {"mu_low", w.mu_low},
                    {"mu_high", w.mu_high},
                    {"value_low", w.value_expected_low},
                    {"value_high", w.value_expected_high}});
  }
  return {{"passed", r.passed()}, {"witness_count", r.witnesses.size()}, {"witnesses", list}};
}

int cmd_check(const std::string& path, std::uint64_t seed, std::size_t trials, std::size_t points) {
  auto s = load(path);
  require_valid(s.network);
  auto p = io::build_policy(s);
  GridOptions grid;
  grid.points = points;
  auto link = check_link_monotonicity(*p.policy, s.network, grid);
  auto flow = check_flow_monotonicity(*p.policy, s.network, grid);
  json out = {{"policy", to_string(p.policy->kind())},
              {"link_monotonicity", witnesses_json(s, link, 10)},
              {"flow_monotonicity", witnesses_json(s, flow, 10)}};
  auto oracle = p.oracle ? p.oracle : bpa_compute(s.network, s.bpa());
  if (is_tree(s.network)) {
    auto report = structural_flow_monotonicity(s.network, *oracle);
    json nodes = json::array();
    for (const auto& n : report.nodes) {
      nodes.push_back({{"node", io::node_json(s, n.node)}, {"verdict", to_string(n.verdict)}, {"pattern", n.pattern}});
    }
    out["structural"] = {{"below_origin_proven", report.below_origin_proven()}, {"nodes", nodes}};
  } else {
    out["structural"] = nullptr;
  }
  auto props = check_s_properties(*oracle, trials, seed);
  json failures = json::array();
  for (const auto& f : props.failures) {
    failures.push_back({{"property", to_string(f.property)}, {"trial", f.trial}, {"node", io::node_json(s, f.node)},
                        {"set", f.set}, {"mu", f.mu}, {"lhs", f.lhs}, {"rhs", f.rhs}});
  }
  out["s_properties"] = {{"seed", props.seed},       {"assertions", props.assertions}, {"skipped", props.skipped},
                         {"tolerance", props.tolerance}, {"passed", props.passed()}, {"failures", failures}};
  out["metadata"] = metadata(s);
  emit(out);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  cascade::audit::install("cascade_cli_" + std::to_string(getpid()));
  CLI::App app{"Cascading failures in flow networks: simulation, resilience bounds and attacks"};
  app.require_subcommand(1);

  std::string file, trace_path, flows_path, mode, node, split_node;
  std::uint64_t seed = 1;
  std::size_t trials = 200, points = 401, grid_points = 201;
  std::optional<double> from, to;

  auto* validate_cmd = app.add_subcommand("validate", "check a scenario's network invariants");
  validate_cmd->add_option("scenario", file, "scenario JSON file")->required();

  auto* simulate_cmd = app.add_subcommand("simulate", "run the cascade dynamics");
  simulate_cmd->add_option("scenario", file, "scenario JSON file")->required();
  simulate_cmd->add_option("--trace", trace_path, "write the per-step trace as JSON");
  simulate_cmd->add_option("--flows", flows_path, "write the flow history as CSV");

  auto* bounds_cmd = app.add_subcommand("bounds", "simple, centralized and backward-propagation bounds");
  bounds_cmd->add_option("scenario", file, "scenario JSON file")->required();

  auto* attack_cmd = app.add_subcommand("attack", "synthesize a disturbance that stops the transfer");
  attack_cmd->add_option("scenario", file, "scenario JSON file")->required();
  attack_cmd->add_option("--mode", mode, "centralized | bpa | brute")
      ->check(CLI::IsMember({"centralized", "bpa", "bpa-guided", "brute", "brute-force"}));

  auto* sweep_cmd = app.add_subcommand("sweep", "tabulate a node curve or its split against the inflow");
  sweep_cmd->add_option("scenario", file, "scenario JSON file")->required();
  sweep_cmd->add_option("--node", node, "emit mu,S for this node's curve");
  sweep_cmd->add_option("--policy-split", split_node, "emit the full-set split at this node");
  sweep_cmd->add_option("--points", points, "number of inflow samples");
  sweep_cmd->add_option("--from", from, "first inflow (default 0)");
  sweep_cmd->add_option("--to", to, "last inflow (default: total outgoing capacity)");

  auto* check_cmd = app.add_subcommand("check", "monotonicity checks and value-function property suite");
  check_cmd->add_option("scenario", file, "scenario JSON file")->required();
  check_cmd->add_option("--seed", seed, "seed of the randomized property suite");
  check_cmd->add_option("--trials", trials, "randomized property assertions");
  check_cmd->add_option("--grid", grid_points, "inflow samples per node for the monotonicity checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) return cmd_validate(file);
    if (*simulate_cmd) return cmd_simulate(file, trace_path, flows_path);
    if (*bounds_cmd) return cmd_bounds(file);
    if (*attack_cmd) return cmd_attack(file, mode);
    if (*sweep_cmd) return cmd_sweep(file, node, split_node, points, from, to);
    if (*check_cmd) return cmd_check(file, seed, trials, grid_points);
  } catch (const CascadeError& e) {
    std::cerr << error_json(e.code(), e.what()).dump(2) << '\n';
    return is_validation_error(e.code()) ? kInvalid : kRuntime;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", {{"code", "Internal"}, {"message", e.what()}}}}.dump(2) << '\n';
    return kRuntime;
  }
  return kRuntime;
}
