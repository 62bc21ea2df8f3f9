#pragma once

#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cascade/adversary.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/network.hpp"
#include "cascade/resilience.hpp"
#include "cascade/routing.hpp"

namespace cascade::io {

using json = nlohmann::ordered_json;

struct RoutingSpec {
  PolicyKind kind = PolicyKind::Proportional;
  std::size_t grid = 400;  // μ-cells of each node curve (bpa)
  std::vector<TableEntry> entries;
};

struct ScenarioOptions {
  double tol = 1e-9;
  std::size_t grid = 400;
  std::optional<std::size_t> step_cap;
  std::size_t brute_force_links = kDefaultBruteForceLinks;
  bool strict_overload = false;
};

struct Scenario {
  FlowNetwork network;
  std::vector<std::string> node_names;  // empty when the file used integer labels
  RoutingSpec routing;
  DisturbanceSchedule schedule;
  std::optional<AttackKind> adversary;
  ScenarioOptions options;

  DynamicsOptions dynamics() const {
    DynamicsOptions d;
    d.tol = options.tol;
    d.step_cap = options.step_cap;
    d.strict_overload = options.strict_overload;
    return d;
  }

  BpaOptions bpa() const {
    BpaOptions b;
    b.curve_points = routing.kind == PolicyKind::Bpa ? routing.grid + 1 : options.grid + 1;
    return b;
  }
};

/// Routing policy named by a scenario. The oracle is shared with BPA routing
/// and is null for the other kinds.
struct PolicyBundle {
  PolicyPtr policy;
  OraclePtr oracle;
};

inline PolicyBundle build_policy(const Scenario& s) {
  switch (s.routing.kind) {
    case PolicyKind::Proportional: return {proportional_policy(s.network), nullptr};
    case PolicyKind::Bpa: {
      auto oracle = bpa_compute(s.network, s.bpa());
      return {bpa_policy(oracle), oracle};
    }
    case PolicyKind::Table: return {std::make_shared<TablePolicy>(s.network, s.routing.entries), nullptr};
  }
  throw CascadeError(ErrorCode::SchemaError, "unknown routing kind");
}

namespace detail {

inline CascadeError schema(const std::string& what) { return CascadeError(ErrorCode::SchemaError, what); }

template <typename T>
T required(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw schema(where + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw schema(where + ": field '" + key + "' has the wrong type");
  }
}

inline double number(const json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw schema(where + ": missing field '" + key + "'");
  if (!j.at(key).is_number()) throw schema(where + ": field '" + key + "' must be a number");
  return j.at(key).get<double>();
}

// Maps string node names to labels: the unique node without incoming links
// becomes 0, the unique node without outgoing links becomes n, the rest keep
// their order of first appearance.
inline std::vector<std::string> label_names(const json& edges, std::map<std::string, NodeId>& label) {
  std::vector<std::string> order;
  std::map<std::string, int> in, out;
  for (const auto& e : edges) {
    for (const char* k : {"tail", "head"}) {
      const auto name = e.at(k).get<std::string>();
      if (!in.count(name)) {
        order.push_back(name);
        in[name] = 0;
        out[name] = 0;
      }
    }
    ++out[e.at("tail").get<std::string>()];
    ++in[e.at("head").get<std::string>()];
  }
  std::vector<std::string> sources, sinks;
  for (const auto& name : order) {
    if (in[name] == 0) sources.push_back(name);
    if (out[name] == 0) sinks.push_back(name);
  }
  if (sources.size() != 1) throw CascadeError(ErrorCode::MultipleOrigins, "expected exactly one node without incoming links");
  if (sinks.size() != 1) {
    throw CascadeError(ErrorCode::MultipleDestinations, "expected exactly one node without outgoing links");
  }
  std::vector<std::string> names{sources[0]};
  for (const auto& name : order) {
    if (name != sources[0] && name != sinks[0]) names.push_back(name);
  }
  names.push_back(sinks[0]);
  for (std::size_t i = 0; i < names.size(); ++i) label[names[i]] = i;
  return names;
}

}  // namespace detail

inline FlowNetwork parse_network(const json& j, std::vector<std::string>* names = nullptr) {
  if (!j.is_object()) throw detail::schema("scenario must be a JSON object");
  if (!j.contains("edges") || !j.at("edges").is_array()) throw detail::schema("missing 'edges' array");
  const double lambda = detail::number(j, "lambda", "scenario");
  if (lambda < 0) throw detail::schema("'lambda' must be nonnegative");
  const auto& edges = j.at("edges");
  bool named = false;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto where = "edge " + std::to_string(i);
    if (!edges[i].is_object()) throw detail::schema(where + " must be an object");
    for (const char* k : {"id", "tail", "head", "capacity"}) {
      if (!edges[i].contains(k)) throw detail::schema(where + ": missing field '" + k + "'");
    }
    if (edges[i].at("tail").is_string() || edges[i].at("head").is_string()) named = true;
  }
  std::map<std::string, NodeId> label;
  std::vector<std::string> node_names;
  if (named) node_names = detail::label_names(edges, label);
  std::vector<Link> links;
  NodeId max_node = 0;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const auto& e = edges[i];
    const auto where = "edge " + std::to_string(i);
    Link l;
    l.id = detail::required<std::string>(e, "id", where);
    auto node = [&](const char* k) -> NodeId {
      const auto& v = e.at(k);
      if (named) {
        if (!v.is_string()) throw detail::schema(where + ": mix of named and numbered nodes");
        return label.at(v.get<std::string>());
      }
      if (!v.is_number_unsigned()) throw detail::schema(where + ": '" + k + "' must be a nonnegative integer");
      return v.get<NodeId>();
    };
    l.tail = node("tail");
    l.head = node("head");
    l.capacity = detail::number(e, "capacity", where);
    if (l.tail == l.head) throw CascadeError(ErrorCode::MalformedLink, "link '" + l.id + "' is a self-loop");
    max_node = std::max({max_node, l.tail, l.head});
    links.push_back(std::move(l));
  }
  if (names) *names = node_names;
  return FlowNetwork(max_node + 1, std::move(links), lambda);
}

inline RoutingSpec parse_routing(const json& j, const FlowNetwork& net) {
  RoutingSpec r;
  if (!j.contains("routing")) return r;
  const auto& spec = j.at("routing");
  const auto type = detail::required<std::string>(spec, "type", "routing");
  if (type == "proportional") {
    r.kind = PolicyKind::Proportional;
  } else if (type == "bpa") {
    r.kind = PolicyKind::Bpa;
    if (spec.contains("grid")) r.grid = detail::required<std::size_t>(spec, "grid", "routing");
    if (r.grid < 2) throw detail::schema("routing: 'grid' must be at least 2");
  } else if (type == "table") {
    r.kind = PolicyKind::Table;
    if (!spec.contains("entries") || !spec.at("entries").is_array()) throw detail::schema("routing: missing 'entries'");
    for (const auto& e : spec.at("entries")) {
      TableEntry entry;
      entry.node = detail::required<NodeId>(e, "node", "table entry");
      entry.links = detail::required<std::vector<std::string>>(e, "links", "table entry");
      if (!e.contains("points") || !e.at("points").is_array()) throw detail::schema("table entry: missing 'points'");
      for (const auto& p : e.at("points")) {
        entry.points.emplace_back(detail::number(p, "mu", "table point"),
                                  detail::required<std::vector<double>>(p, "split", "table point"));
      }
      for (const auto& id : entry.links) {
        if (!net.find_link(id)) throw detail::schema("table entry: unknown link '" + id + "'");
      }
      r.entries.push_back(std::move(entry));
    }
  } else {
    throw detail::schema("routing: unknown type '" + type + "'");
  }
  return r;
}

inline std::optional<AttackKind> parse_attack_kind(const std::string& s) {
  if (s == "centralized") return AttackKind::Centralized;
  if (s == "bpa" || s == "bpa-guided") return AttackKind::BpaGuided;
  if (s == "brute" || s == "brute-force") return AttackKind::BruteForce;
  return std::nullopt;
}

inline Scenario parse_scenario(const json& j) {
  Scenario s;
  s.network = parse_network(j, &s.node_names);
  s.routing = parse_routing(j, s.network);
  if (j.contains("disturbance")) {
    const auto& d = j.at("disturbance");
    if (d.contains("schedule")) {
      if (!d.at("schedule").is_array()) throw detail::schema("disturbance: 'schedule' must be an array");
      for (const auto& entry : d.at("schedule")) {
        const auto t = detail::required<std::size_t>(entry, "t", "disturbance entry");
        const auto id = detail::required<std::string>(entry, "link", "disturbance entry");
        auto e = s.network.find_link(id);
        if (!e) throw detail::schema("disturbance entry: unknown link '" + id + "'");
        s.schedule.add(t, *e, detail::number(entry, "amount", "disturbance entry"));
      }
    }
    if (d.contains("adversary")) {
      if (d.contains("schedule")) throw detail::schema("disturbance: give either 'schedule' or 'adversary', not both");
      auto kind = parse_attack_kind(detail::required<std::string>(d, "adversary", "disturbance"));
      if (!kind) throw detail::schema("disturbance: unknown adversary");
      s.adversary = kind;
    }
  }
  if (j.contains("options")) {
    const auto& o = j.at("options");
    if (o.contains("tol")) s.options.tol = detail::number(o, "tol", "options");
    if (o.contains("grid")) s.options.grid = detail::required<std::size_t>(o, "grid", "options");
    if (o.contains("step_cap")) s.options.step_cap = detail::required<std::size_t>(o, "step_cap", "options");
    if (o.contains("brute_force_links")) {
      s.options.brute_force_links = detail::required<std::size_t>(o, "brute_force_links", "options");
    }
    if (o.contains("strict_overload")) s.options.strict_overload = detail::required<bool>(o, "strict_overload", "options");
  }
  return s;
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw detail::schema("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw detail::schema("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

// ---------------------------------------------------------------------------
// Serialization

inline json node_json(const Scenario& s, NodeId v) {
  if (s.node_names.empty()) return v;
  return s.node_names[v];
}

inline json network_json(const Scenario& s) {
  json edges = json::array();
  for (const auto& l : s.network.links()) {
    edges.push_back({{"id", l.id}, {"tail", node_json(s, l.tail)}, {"head", node_json(s, l.head)}, {"capacity", l.capacity}});
  }
  return edges;
}

inline json schedule_json(const FlowNetwork& net, const DisturbanceSchedule& schedule) {
  json entries = json::array();
  for (const auto& [t, row] : schedule.entries()) {
    for (const auto& [e, amount] : row) entries.push_back({{"t", t}, {"link", net.link(e).id}, {"amount", amount}});
  }
  return entries;
}

inline json routing_json(const RoutingSpec& r, const FlowNetwork& net) {
  json out = {{"type", to_string(r.kind)}};
  if (r.kind == PolicyKind::Bpa) out["grid"] = r.grid;
  if (r.kind == PolicyKind::Table) {
    json entries = json::array();
    for (const auto& e : r.entries) {
      json points = json::array();
      for (const auto& [mu, split] : e.points) points.push_back({{"mu", mu}, {"split", split}});
      entries.push_back({{"node", e.node}, {"links", e.links}, {"points", points}});
    }
    out["entries"] = entries;
  }
  (void)net;
  return out;
}

inline json options_json(const ScenarioOptions& o) {
  json out = {{"tol", o.tol}, {"grid", o.grid}};
  if (o.step_cap) out["step_cap"] = *o.step_cap;
  out["brute_force_links"] = o.brute_force_links;
  out["strict_overload"] = o.strict_overload;
  return out;
}

/// Full scenario with every default made explicit; parses back to an equal scenario.
inline json scenario_json(const Scenario& s) {
  json out;
  out["edges"] = network_json(s);
  out["lambda"] = s.network.inflow();
  out["routing"] = routing_json(s.routing, s.network);
  json d = json::object();
  if (s.adversary) {
    d["adversary"] = to_string(*s.adversary);
  } else {
    d["schedule"] = schedule_json(s.network, s.schedule);
  }
  out["disturbance"] = d;
  out["options"] = options_json(s.options);
  return out;
}

inline json trace_json(const FlowNetwork& net, const CascadeTrace& trace) {
  json steps = json::array();
  for (const auto& st : trace.steps) {
    json links = json::array(), nodes = json::array(), flows = json::object(), residual = json::object();
    for (const auto& ev : st.inactivated_links) links.push_back({{"link", net.link(ev.link).id}, {"cause", to_string(ev.cause)}});
    for (const auto& ev : st.inactivated_nodes) nodes.push_back({{"node", ev.node}, {"cause", to_string(ev.cause)}});
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      flows[net.link(e).id] = st.state.flow[e];
      residual[net.link(e).id] = st.state.residual[e];
    }
    steps.push_back({{"t", st.state.time}, {"inactivated_links", links}, {"inactivated_nodes", nodes}, {"flows", flows},
                     {"residual", residual}});
  }
  json order = json::array();
  for (LinkIndex e : trace.link_inactivation_order()) order.push_back(net.link(e).id);
  return {{"steps", steps},
          {"summary",
           {{"T", trace.termination_time},
            {"transferring", trace.transferring},
            {"outflow", trace.final_outflow},
            {"inactivation_order", order}}}};
}

/// One row per (t, link): t,link,active,flow,residual.
inline std::string flows_csv(const FlowNetwork& net, const CascadeTrace& trace) {
  std::ostringstream out;
  out << std::setprecision(12) << "t,link,active,flow,residual\n";
  for (const auto& st : trace.steps) {
    for (LinkIndex e = 0; e < net.link_count(); ++e) {
      out << st.state.time << ',' << net.link(e).id << ',' << int(st.state.link_active[e]) << ',' << st.state.flow[e]
          << ',' << st.state.residual[e] << '\n';
    }
  }
  return out.str();
}

inline json attack_json(const FlowNetwork& net, const AttackPlan& plan) {
  json steps = json::array();
  for (const auto& st : plan.steps) {
    json kills = json::array();
    for (std::size_t i = 0; i < st.links.size(); ++i) {
      kills.push_back({{"link", net.link(st.links[i]).id}, {"amount", st.amounts[i]}});
    }
    steps.push_back({{"t", st.time}, {"kills", kills}});
  }
  return {{"construction", to_string(plan.construction)},
          {"predicted_magnitude", plan.predicted_magnitude},
          {"bound", plan.bound},
          {"transferring", plan.transferring},
          {"steps", steps},
          {"disturbance", {{"schedule", schedule_json(net, plan.schedule)}}}};
}

inline json validation_json(const ValidationReport& r) {
  json checks = json::array();
  for (const auto& c : r.checks) {
    json item = {{"check", std::string(to_string(c.code))}, {"passed", c.passed}};
    if (!c.passed) item["detail"] = c.detail;
    checks.push_back(item);
  }
  json out = {{"valid", r.ok()}, {"checks", checks}};
  if (r.ok()) out["topological_order"] = r.topological_order;
  return out;
}

/// Writes via a temporary file and rename so readers never see partial output.
inline void write_file(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw CascadeError(ErrorCode::SchemaError, "cannot write '" + path + "'");
    out << content;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw CascadeError(ErrorCode::SchemaError, "cannot move output into '" + path + "'");
  }
}

}  // namespace cascade::io
