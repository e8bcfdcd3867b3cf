#include "flatmu/io.hpp"

#include <sstream>
#include <stdexcept>

namespace flatmu {

namespace {

Json node_list(const NodeSet& s) {
  Json a = Json::array();
  for (auto u : s) a.push_back(u);
  return a;
}

Json defect_json(const Network& n, const Defect& d) {
  Json j;
  j["kind"] = to_string(d.kind);
  j["node"] = d.node;
  if (d.kind == Defect::Kind::Mu) {
    j["deferral"] = d.deferral;
    j["formula"] = print(n.sigma().at(n.context().deferrals().at(d.deferral).inst));
  }
  return j;
}

}  // namespace

Json model_to_json(const KripkeModel& m) {
  Json j;
  j["states"] = m.size();
  Json edges = Json::array();
  for (const auto& [a, b] : m.frame.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  Json val = Json::object();
  for (const auto& [p, set] : m.valuation) {
    Json states = Json::array();
    for (std::size_t s = 0; s < set.size(); ++s)
      if (set.test(s)) states.push_back(s);
    val[p] = std::move(states);
  }
  j["valuation"] = std::move(val);
  return j;
}

KripkeModel model_from_json(const nlohmann::json& j) {
  const std::size_t n = j.at("states").get<std::size_t>();
  if (n == 0) throw std::runtime_error("model needs at least one state");
  KripkeModel m{Frame(n)};
  const auto edges = j.value("edges", nlohmann::json::array());
  for (const auto& e : edges) {
    auto a = e.at(0).get<std::size_t>(), b = e.at(1).get<std::size_t>();
    if (a >= n || b >= n) throw std::runtime_error("edge endpoint out of range");
    m.frame.add_edge(a, b);
  }
  const auto valuation = j.value("valuation", nlohmann::json::object());
  for (const auto& [p, states] : valuation.items()) {
    m.valuation[p] = TruthSet(n);
    for (const auto& s : states) {
      auto i = s.get<std::size_t>();
      if (i >= n) throw std::runtime_error("valuation state out of range");
      m.set(p, i);
    }
  }
  return m;
}

Json network_to_json(const Network& n) {
  Json j;
  j["formula"] = print(n.context().root());
  Json nodes = Json::array();
  for (const auto& [u, l] : n.labels()) {
    Json node;
    node["id"] = u;
    node["atom"] = members(l);
    nodes.push_back(std::move(node));
  }
  j["nodes"] = std::move(nodes);
  Json edges = Json::array();
  for (const auto& [a, b] : n.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["satF"] = node_list(n.saturated(Dir::F));
  j["satP"] = node_list(n.saturated(Dir::B));
  return j;
}

Network network_from_json(const nlohmann::json& j, const ConnectiveTable& table) {
  auto ctx = make_context(parse(j.at("formula").get<std::string>(), table));
  Network n(ctx);
  const std::size_t size = ctx->sigma().size();
  for (const auto& node : j.at("nodes")) {
    Atom a(size);
    for (const auto& i : node.at("atom")) {
      auto k = i.get<std::size_t>();
      if (k >= size) throw std::runtime_error("atom index " + std::to_string(k) + " outside the closure");
      a.set(k);
    }
    n.add_node(node.at("id").get<NodeId>(), std::move(a));
  }
  const auto edges = j.value("edges", nlohmann::json::array());
  for (const auto& e : edges) {
    auto a = e.at(0).get<NodeId>(), b = e.at(1).get<NodeId>();
    if (!n.contains(a) || !n.contains(b)) throw std::runtime_error("edge mentions an unknown node");
    n.add_edge(a, b);
  }
  for (const char* key : {"satF", "satP"})
    for (const auto& u : j.value(key, nlohmann::json::array())) {
      auto id = u.get<NodeId>();
      if (!n.contains(id)) throw std::runtime_error(std::string(key) + " mentions an unknown node");
      n.mark_saturated(id, key[3] == 'F' ? Dir::F : Dir::B);
    }
  return n;
}

Json closure_to_json(const ClosureSet& sigma) {
  Json a = Json::array();
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    Json e;
    e["index"] = i;
    e["formula"] = print(sigma.at(i));
    e["complement"] = sigma.entry(i).comp;
    a.push_back(std::move(e));
  }
  return a;
}

Json deferrals_to_json(const Network& n) {
  Json a = Json::array();
  const auto& dt = n.context().deferrals();
  for (std::size_t i = 0; i < dt.size(); ++i) {
    const auto& d = dt.at(i);
    Json e;
    e["id"] = i;
    e["host"] = d.host;
    e["body"] = print(d.body);
    e["formula"] = print(n.sigma().at(d.inst));
    a.push_back(std::move(e));
  }
  return a;
}

Json timeouts_to_json(const Network& n, const TimeoutTable& t) {
  Json a = Json::array();
  for (const auto& [key, k] : t) {
    Json e;
    e["node"] = key.first;
    e["deferral"] = key.second;
    e["formula"] = print(n.sigma().at(n.context().deferrals().at(key.second).inst));
    if (k)
      e["timeout"] = *k;
    else
      e["timeout"] = nullptr;
    a.push_back(std::move(e));
  }
  return a;
}

Json defects_to_json(const Network& n, const std::vector<Defect>& defects) {
  Json a = Json::array();
  for (const auto& d : defects) a.push_back(defect_json(n, d));
  return a;
}

Json violations_to_json(const std::vector<Violation>& v) {
  Json a = Json::array();
  for (const auto& x : v) {
    Json e;
    e["kind"] = to_string(x.kind);
    e["node"] = x.node;
    e["message"] = x.message;
    a.push_back(std::move(e));
  }
  return a;
}

Json report_to_json(const ConstructionReport& r) {
  const Network& n = r.network;
  Json j;
  j["formula"] = print(n.context().root());
  j["atom"] = members(r.atom);
  j["verdict"] = to_string(r.verdict);
  if (r.verdict == ConstructionReport::Verdict::PerfectUpToRadius) j["radius"] = r.radius;
  if (r.stuck_defect) {
    Json s;
    s["reason"] = to_string(*r.stuck_reason);
    s["defect"] = defect_json(n, *r.stuck_defect);
    s["message"] = r.stuck_message;
    j["stuck"] = std::move(s);
  }
  j["rounds_completed"] = r.rounds_completed;
  j["radius_history"] = r.radius_history;
  Json repairs = Json::array();
  for (const auto& rec : r.repairs) {
    Json e;
    e["round"] = rec.round;
    e["defect"] = defect_json(n, rec.defect);
    e["nodes_after"] = rec.nodes_after;
    repairs.push_back(std::move(e));
  }
  j["repairs"] = std::move(repairs);
  Json residual = Json::array();
  for (const auto& d : r.residual) {
    Json e = defect_json(n, d.defect);
    e["distance"] = d.distance;
    residual.push_back(std::move(e));
  }
  j["residual_defects"] = std::move(residual);
  j["network"] = network_to_json(n);
  return j;
}

namespace {

std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

std::string to_dot(const Network& n, const std::string& name) {
  const auto tt = compute_timeouts(n);
  const auto& dt = n.context().deferrals();
  std::ostringstream os;
  os << "digraph \"" << dot_escape(name) << "\" {\n  node [shape=box];\n";
  for (const auto& [u, l] : n.labels()) {
    std::string label = std::to_string(u);
    for (const auto& [key, k] : tt) {
      if (key.first != u || k || dt.at(key.second).kind != ViewNode::Kind::X) continue;
      label += "\\nunfinished " + dot_escape(print(n.sigma().at(dt.at(key.second).inst)));
    }
    os << "  n" << u << " [label=\"" << label << "\"";
    if (n.is_saturated(u, Dir::F)) os << ", peripheries=2";
    if (n.is_saturated(u, Dir::B)) os << ", style=filled, fillcolor=lightgrey";
    os << "];\n";
  }
  for (const auto& [a, b] : n.edges()) os << "  n" << a << " -> n" << b << ";\n";
  os << "}\n";
  return os.str();
}

}  // namespace flatmu
