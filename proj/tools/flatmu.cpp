#include <iostream>

#include "flatmu/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return flatmu::cli::run(args, std::cout, std::cerr);
}
