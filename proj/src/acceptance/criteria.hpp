#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

namespace flatmu::acceptance {

using CliRunner = std::function<int(const std::vector<std::string>&, std::ostream&, std::ostream&)>;

struct Options {
  // Replaces one axiom instance by a non-valid formula; criterion 2 must then fail.
  bool mutate_axiom = false;
  std::vector<int> only;  // empty = all
  CliRunner cli;          // needed by the determinism check
};

struct Outcome {
  int id = 0;
  std::string title;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

const std::vector<std::pair<int, std::string>>& criteria();
Outcome run_criterion(int id, const Options& opt);
std::vector<Outcome> run_all(const Options& opt, const std::function<void(const Outcome&)>& on_done = {});
void print_outcome(std::ostream& os, const Outcome& o);

}  // namespace flatmu::acceptance
