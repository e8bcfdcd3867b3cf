#include "flatmu/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "criteria.hpp"
#include "flatmu/construct.hpp"
#include "flatmu/io.hpp"
#include "flatmu/semantics.hpp"
#include "flatmu/syntax.hpp"

namespace flatmu::cli {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const std::string& path) {
  try {
    return nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError(path + ": " + e.what());
  }
}

// "@path" reads the formula from a file.
std::string formula_text(const std::string& arg) {
  if (!arg.empty() && arg[0] == '@') {
    std::string s = read_file(arg.substr(1));
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
  }
  return arg;
}

struct Common {
  std::string defs;
  ConnectiveTable table() const { return defs.empty() ? ConnectiveTable{} : load_connectives_file(defs); }
};

Formula read_formula(const std::string& arg, const Common& c) { return parse(formula_text(arg), c.table()); }

void print_json(std::ostream& out, const Json& j) { out << j.dump(2) << "\n"; }

int cmd_parse(const std::string& f, const Common& c, std::ostream& out) {
  out << print(read_formula(f, c)) << "\n";
  return 0;
}

int cmd_closure(const std::string& f, const Common& c, const std::string& format, std::ostream& out) {
  ClosureSet sigma(read_formula(f, c));
  if (format == "json") {
    print_json(out, closure_to_json(sigma));
  } else {
    for (std::size_t i = 0; i < sigma.size(); ++i) out << i << "\t" << print(sigma.at(i)) << "\n";
  }
  return 0;
}

int cmd_atoms(const std::string& f, const Common& c, bool containing, std::ostream& out) {
  Formula phi = read_formula(f, c);
  ClosureSet sigma(phi);
  const std::size_t root = sigma.index(phi);
  for (const Atom& a : enumerate_atoms(sigma)) {
    if (containing && !a.test(root)) continue;
    out << Json(members(a)).dump() << "\n";
  }
  return 0;
}

int cmd_check(const std::string& model_path, std::size_t state, const std::string& f, const Common& c,
              std::ostream& out) {
  KripkeModel m = model_from_json(read_json(model_path));
  if (state >= m.size()) throw UsageError("state " + std::to_string(state) + " out of range");
  bool v = eval(read_formula(f, c), m).test(state);
  out << (v ? "true" : "false") << "\n";
  return v ? 0 : 2;
}

int cmd_sat(std::size_t max_states, const std::string& f, const Common& c, std::ostream& out) {
  auto w = brute_force_sat(read_formula(f, c), max_states);
  if (!w) {
    out << "none ≤ " << max_states << "\n";
    return 2;
  }
  Json j = model_to_json(w->model);
  j["state"] = w->state;
  print_json(out, j);
  return 0;
}

std::shared_ptr<const Connective> find_connective(const Common& c, const std::string& name) {
  if (c.defs.empty()) throw UsageError("a connective definitions file is required");
  auto table = c.table();
  auto conn = table.find(name);
  if (!conn) throw UsageError("no connective named " + name + " in " + c.defs);
  return conn;
}

int cmd_guardify(const Common& c, const std::string& name, const std::string& format, std::ostream& out) {
  auto conn = find_connective(c, name);
  auto g = guardify(*conn);
  if (format == "json") {
    Json j;
    j["connective"] = conn->name;
    j["gamma1"] = print(g.gamma1);
    j["gamma2"] = {{"name", g.gamma2->name}, {"arity", g.gamma2->arity}, {"body", print(g.gamma2->body)}};
    j["equivalence"] = print(g.equivalence);
    print_json(out, j);
  } else {
    out << "gamma1: " << print(g.gamma1) << "\n";
    out << "gamma2: " << g.gamma2->name << " := " << print(g.gamma2->body) << "\n";
    out << "equivalence: " << print(g.equivalence) << "\n";
  }
  return 0;
}

int cmd_classify(const Common& c, std::ostream& out) {
  if (c.defs.empty()) throw UsageError("a connective definitions file is required");
  Json a = Json::array();
  for (const auto& [name, conn] : c.table().all()) {
    Json j;
    j["name"] = name;
    j["arity"] = conn->arity;
    j["body"] = print(conn->body);
    j["guarded"] = conn->guarded;
    j["disjunctive"] = to_string(conn->disjunctive);
    a.push_back(std::move(j));
  }
  print_json(out, a);
  return 0;
}

int cmd_net(const std::string& what, const std::string& path, const Common& c, std::ostream& out) {
  Network n = network_from_json(read_json(path), c.table());
  if (what == "validate") {
    auto v = validate(n);
    Json j;
    j["network"] = v.empty();
    j["anticonfluent"] = is_anticonfluent(n);
    j["violations"] = violations_to_json(v);
    print_json(out, j);
    return v.empty() ? 0 : 2;
  }
  if (what == "defects") {
    auto d = find_defects(n);
    print_json(out, defects_to_json(n, d));
    return d.empty() ? 0 : 2;
  }
  if (what == "timeouts") {
    Json j;
    j["deferrals"] = deferrals_to_json(n);
    j["timeouts"] = timeouts_to_json(n, compute_timeouts(n));
    print_json(out, j);
    return 0;
  }
  out << to_dot(n);
  return 0;
}

int cmd_build(const std::string& f, const Common& c, const Budget& budget, const std::string& dot_dir,
              std::ostream& out) {
  const Formula input = read_formula(f, c);
  // The construction needs guarded connectives.
  const Formula phi = translate_guarded(input, guard_map_for(input));
  auto ctx = make_context(phi);
  const std::size_t root = ctx->sigma().index(phi);
  if (!dot_dir.empty()) std::filesystem::create_directories(dot_dir);

  Json j;
  j["formula"] = print(input);
  j["guarded"] = print(phi);
  j["budget"] = {{"max_nodes", budget.max_nodes}, {"max_depth", budget.max_depth}, {"max_rounds", budget.max_rounds}};
  j["closure_size"] = ctx->sigma().size();
  j["deferrals"] = ctx->deferrals().size();
  j["copies"] = ctx->copies();
  Json runs = Json::array();
  bool perfect = false;
  std::size_t k = 0;
  for (const Atom& a : ctx->atoms()) {
    if (!a.test(root)) continue;
    ConstructionReport r = build(ctx, a, budget);
    if (!dot_dir.empty()) {
      auto write = [&](const Network& n, const std::string& tag) {
        std::string name = "atom" + std::to_string(k) + "_" + tag;
        std::ofstream os(std::filesystem::path(dot_dir) / (name + ".dot"));
        if (!os) throw UsageError("cannot write into " + dot_dir);
        os << to_dot(n, name);
      };
      for (std::size_t i = 0; i < r.snapshots.size(); ++i) write(r.snapshots[i], "round" + std::to_string(i + 1));
      write(r.network, "final");
    }
    Json rj = report_to_json(r);
    rj["run"] = k++;
    runs.push_back(std::move(rj));
    if (r.verdict == ConstructionReport::Verdict::Perfect) {
      perfect = true;
      break;
    }
  }
  j["atoms_tried"] = k;
  j["result"] = perfect ? "perfect" : (k == 0 ? "no-atom" : "none-perfect");
  j["runs"] = std::move(runs);
  print_json(out, j);
  return perfect ? 0 : 2;
}

int cmd_selftest(bool mutate, const std::vector<int>& only, std::ostream& out) {
  acceptance::Options opt;
  opt.mutate_axiom = mutate;
  opt.only = only;
  opt.cli = run;
  bool all = true;
  acceptance::run_all(opt, [&](const acceptance::Outcome& o) {
    acceptance::print_outcome(out, o);
    out.flush();
    all = all && o.pass;
  });
  return all ? 0 : 2;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Flat modal fixpoint logic with converse: parsing, model checking and network construction", "flatmu"};
  app.require_subcommand(1);
  Common common;
  app.add_option("--defs", common.defs, "connective definitions (JSON)")->check(CLI::ExistingFile);
  std::string seed;
  app.add_option("--seed", seed, "reserved; rejected")->group("");

  std::string formula, format = "text", path, name;
  std::size_t state = 0, max_states = 3;
  auto fmt = [&](CLI::App* s) { s->add_option("--format", format)->check(CLI::IsMember({"text", "json"})); };

  auto* p_parse = app.add_subcommand("parse", "parse and print a formula in primitive form");
  p_parse->add_option("formula", formula)->required();
  auto* p_closure = app.add_subcommand("closure", "print the closure with indices");
  p_closure->add_option("formula", formula)->required();
  fmt(p_closure);
  bool containing = false;
  auto* p_atoms = app.add_subcommand("atoms", "stream atoms as JSON arrays of closure indices");
  p_atoms->add_option("formula", formula)->required();
  p_atoms->add_flag("--containing", containing, "only atoms containing the formula");
  auto* p_check = app.add_subcommand("check", "evaluate a formula at a state of a model");
  p_check->add_option("model", path)->required()->check(CLI::ExistingFile);
  p_check->add_option("state", state)->required();
  p_check->add_option("formula", formula)->required();
  auto* p_sat = app.add_subcommand("sat", "search for a model of at most --max-states states");
  p_sat->add_option("--max-states", max_states)->check(CLI::Range(1, 6));
  p_sat->add_option("formula", formula)->required();
  auto* p_guard = app.add_subcommand("guardify", "split a connective into x & gamma1 | gamma2");
  p_guard->add_option("defs", common.defs)->required()->check(CLI::ExistingFile);
  p_guard->add_option("name", name)->required();
  fmt(p_guard);
  auto* p_classify = app.add_subcommand("classify", "guardedness and disjunctivity of every connective");
  p_classify->add_option("defs", common.defs)->required()->check(CLI::ExistingFile);
  std::string net_what;
  auto* p_net = app.add_subcommand("net", "inspect a network file");
  p_net->add_option("action", net_what)->required()->check(CLI::IsMember({"validate", "defects", "timeouts", "dot"}));
  p_net->add_option("network", path)->required()->check(CLI::ExistingFile);
  Budget budget;
  std::string dot_dir;
  auto* p_build = app.add_subcommand("build", "construct networks for the atoms containing a formula");
  p_build->add_option("--max-nodes", budget.max_nodes);
  p_build->add_option("--max-depth", budget.max_depth);
  p_build->add_option("--max-rounds", budget.max_rounds);
  p_build->add_option("--dot-dir", dot_dir, "write one DOT file per round");
  p_build->add_option("formula", formula)->required();
  std::string mutate;
  std::vector<int> only;
  auto* p_self = app.add_subcommand("selftest", "run the acceptance checks");
  p_self->add_option("--mutate", mutate)->check(CLI::IsMember({"axiom"}));
  p_self->add_option("--only", only, "criterion numbers");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    app.exit(e, out, err);
    return 1;
  }
  if (!seed.empty()) {
    err << "error: --seed is not supported; every procedure is deterministic\n";
    return 1;
  }

  try {
    if (p_parse->parsed()) return cmd_parse(formula, common, out);
    if (p_closure->parsed()) return cmd_closure(formula, common, format, out);
    if (p_atoms->parsed()) return cmd_atoms(formula, common, containing, out);
    if (p_check->parsed()) return cmd_check(path, state, formula, common, out);
    if (p_sat->parsed()) return cmd_sat(max_states, formula, common, out);
    if (p_guard->parsed()) return cmd_guardify(common, name, format, out);
    if (p_classify->parsed()) return cmd_classify(common, out);
    if (p_net->parsed()) return cmd_net(net_what, path, common, out);
    if (p_build->parsed()) return cmd_build(formula, common, budget, dot_dir, out);
    if (p_self->parsed()) return cmd_selftest(!mutate.empty(), only, out);
  } catch (const SyntaxError& e) {
    err << "error: parse error at position " << e.position() << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  err << app.help();
  return 1;
}

}  // namespace flatmu::cli
