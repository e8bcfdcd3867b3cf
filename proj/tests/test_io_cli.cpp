#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "flatmu/cli.hpp"
#include "flatmu/io.hpp"
#include "oracles.hpp"

using namespace flatmu;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run_cli(std::vector<std::string> args) {
  std::ostringstream o, e;
  int c = cli::run(args, o, e);
  return {c, o.str(), e.str()};
}

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("flatmu-test-" + std::to_string(std::random_device{}()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string write(const std::string& name, const std::string& text) const {
    std::ofstream(path / name) << text;
    return (path / name).string();
  }
};

const char* kDefs = R"([{"name": "reach", "arity": 1, "body": "q1 | <F>x"},
  {"name": "chi1", "arity": 1, "body": "[F]x | q1"},
  {"name": "loose", "arity": 1, "body": "x | q1"}])";

}  // namespace

TEST_CASE("model json round-trip") {
  KripkeModel m(Frame(3));
  m.frame.add_edge(0, 1);
  m.frame.add_edge(2, 1);
  m.set("p", 1);
  m.set("q", 0);
  Json j = model_to_json(m);
  KripkeModel back = model_from_json(nlohmann::json::parse(j.dump()));
  CHECK(model_to_json(back) == j);
  CHECK(j["states"] == 3);
}

TEST_CASE("network json round-trip") {
  ConnectiveTable t;
  t.add(make_connective("reach", 1, parse("q1 | <F>x")));
  auto ctx = make_context(parse("#reach(p) & <B>q", t));
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20; ++i) {
    Network n = oracle::random_forest(ctx, 6, rng);
    Json j = network_to_json(n);
    Network back = network_from_json(nlohmann::json::parse(j.dump()), t);
    CHECK(back.labels() == n.labels());
    CHECK(back.edges() == n.edges());
    CHECK(back.saturated(Dir::F) == n.saturated(Dir::F));
    CHECK(back.saturated(Dir::B) == n.saturated(Dir::B));
  }
}

TEST_CASE("dot output marks saturation") {
  auto ctx = make_context(var("p"));
  Network n(ctx);
  n.add_node(0, ctx->atoms().front());
  n.add_node(1, ctx->atoms().front());
  n.add_edge(0, 1);
  n.mark_saturated(0, Dir::F);
  n.mark_saturated(1, Dir::B);
  std::string dot = to_dot(n, "g");
  CHECK(dot.find("digraph \"g\"") != std::string::npos);
  CHECK(dot.find("peripheries=2") != std::string::npos);
  CHECK(dot.find("n0 -> n1") != std::string::npos);
}

TEST_CASE("cli check and sat") {
  TempDir d;
  auto model = d.write("m.json", R"({"states": 2, "edges": [[0, 1]], "valuation": {"p": [1]}})");
  auto r = run_cli({"check", model, "0", "p | ~p"});
  CHECK(r.code == 0);
  CHECK(r.out == "true\n");
  CHECK(run_cli({"check", model, "1", "<F>p"}).code == 2);
  CHECK(run_cli({"check", model, "0", "<F>p"}).code == 0);
  auto s = run_cli({"sat", "--max-states", "3", "_|_"});
  CHECK(s.code == 2);
  CHECK(s.out.rfind("none", 0) == 0);
  auto w = run_cli({"sat", "<F>p"});
  CHECK(w.code == 0);
  auto j = nlohmann::json::parse(w.out);
  CHECK(j["state"] == 0);
  CHECK(j["states"] == 1);
}

TEST_CASE("cli parse, closure, atoms") {
  CHECK(run_cli({"parse", "p & q"}).out == "p & q\n");
  auto bad = run_cli({"parse", "p &"});
  CHECK(bad.code == 1);
  CHECK(bad.err.find("parse error at position") != std::string::npos);
  auto c = run_cli({"closure", "--format", "json", "<F>p"});
  CHECK(c.code == 0);
  CHECK(nlohmann::json::parse(c.out).is_array());
  auto a = run_cli({"atoms", "--containing", "<F>p"});
  CHECK(a.code == 0);
  std::istringstream lines(a.out);
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line); ++n) CHECK(nlohmann::json::parse(line).is_array());
  CHECK(n > 0);
}

TEST_CASE("cli connectives") {
  TempDir d;
  auto defs = d.write("defs.json", kDefs);
  auto g = run_cli({"guardify", defs, "chi1"});
  CHECK(g.code == 0);
  CHECK(g.out.find("gamma1: ") != std::string::npos);
  CHECK(g.out.find("gamma2: ") != std::string::npos);
  CHECK(g.out.find("equivalence: ") != std::string::npos);
  auto c = run_cli({"classify", defs});
  CHECK(c.code == 0);
  CHECK(c.out.find("loose") != std::string::npos);
  CHECK(run_cli({"--defs", defs, "parse", "#reach(p)"}).code == 0);
  CHECK(run_cli({"parse", "#reach(p)"}).code == 1);
}

TEST_CASE("cli build and net") {
  TempDir d;
  auto defs = d.write("defs.json", kDefs);
  auto b = run_cli({"--defs", defs, "build", "--dot-dir", d.path.string(), "<F>p & [F]q"});
  CHECK(b.code == 0);
  auto j = nlohmann::json::parse(b.out);
  CHECK(j["result"] == "perfect");
  bool any_dot = false;
  for (const auto& e : std::filesystem::directory_iterator(d.path)) any_dot = any_dot || e.path().extension() == ".dot";
  CHECK(any_dot);
  // unguarded connectives are guardified before the construction
  auto u = run_cli({"--defs", defs, "build", "--max-rounds", "2", "#loose(p)"});
  CHECK(u.code != 1);
  CHECK(nlohmann::json::parse(u.out)["guarded"].is_string());

  auto net_json = j["runs"].back()["network"].dump();
  auto net = d.write("net.json", net_json);
  CHECK(run_cli({"net", "validate", net}).code == 0);
  CHECK(run_cli({"net", "defects", net}).code == 0);
  CHECK(run_cli({"net", "timeouts", net}).code == 0);
  CHECK(run_cli({"net", "dot", net}).out.find("digraph") != std::string::npos);
}

TEST_CASE("cli usage errors") {
  CHECK(run_cli({}).code == 1);
  CHECK(run_cli({"frobnicate"}).code == 1);
  CHECK(run_cli({"--seed", "4", "parse", "p"}).code == 1);
  CHECK(run_cli({"sat", "--max-states", "9", "p"}).code == 1);
  CHECK(run_cli({"--help"}).code == 0);
}
