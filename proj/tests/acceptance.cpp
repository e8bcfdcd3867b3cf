// One line per acceptance criterion; exit status 0 iff all pass.
#include <iostream>

#include "criteria.hpp"
#include "flatmu/cli.hpp"

int main(int argc, char** argv) {
  flatmu::acceptance::Options opt;
  opt.cli = flatmu::cli::run;
  for (int i = 1; i < argc; ++i) opt.only.push_back(std::stoi(argv[i]));
  bool all = true;
  flatmu::acceptance::run_all(opt, [&](const flatmu::acceptance::Outcome& o) {
    flatmu::acceptance::print_outcome(std::cout, o);
    std::cout.flush();
    all = all && o.pass;
  });
  return all ? 0 : 1;
}
